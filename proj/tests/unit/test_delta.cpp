#include <doctest.h>

#include <cmath>

#include "mgst/delta.hpp"
#include "mgst/errors.hpp"
#include "mgst/normal.hpp"
#include "mgst/simpson.hpp"

using namespace mgst;

namespace {

DesignSpec paper_spec(int K, std::shared_ptr<const SummaryStatistic> stat) {
  DesignSpec spec;
  spec.p = 2;
  spec.K = K;
  spec.alpha = 0.025;
  spec.beta = 0.1;
  spec.theta0 = {0.0, 0.0};
  spec.thetaA = {1.625, 1.625};
  spec.nuisance = CovMatrix(2, {40.0, 10.0, 10.0, 40.0});
  spec.statistic = std::move(stat);
  spec.alpha_spending = SpendingFunction::power(0.025, 2.0);
  spec.beta_spending = SpendingFunction::power(0.1, 2.0);
  return spec;
}

}  // namespace

TEST_CASE("approximating law for the linear statistic") {
  LinearStatistic stat({1.0, 1.0});
  CovMatrix m(2, {40.0, 10.0, 10.0, 40.0});
  std::vector<CovMatrix> sigmas{m.scaled(1.0 / 100.0)};
  delta::UnivariateLaw law =
      delta::approx_law(stat, ParamVector{0.0, 0.0}, ParamVector{0.0, 0.0}, sigmas);
  CHECK(law.mean == doctest::Approx(0.0));
  CHECK(law.variances[0] == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("approximating law matches the published marginal for the signed product") {
  // Gradient at thetaA gives g' M g = 1.625^2 * 100 = 264.0625, the stated
  // 264/n marginal.
  SignedProductStatistic stat;
  CovMatrix m(2, {40.0, 10.0, 10.0, 40.0});
  std::vector<CovMatrix> sigmas{m.scaled(1.0 / 122.0)};
  delta::UnivariateLaw law = delta::approx_law(stat, ParamVector{0.0, 0.0},
                                               ParamVector{1.625, 1.625}, sigmas);
  CHECK(law.mean == doctest::Approx(0.0));
  CHECK(law.variances[0] == doctest::Approx(264.0625 / 122.0).epsilon(1e-13));
}

TEST_CASE("zero gradient at the expansion point is a degenerate law") {
  SignedProductStatistic stat;
  CovMatrix m(2, {40.0, 10.0, 10.0, 40.0});
  std::vector<CovMatrix> sigmas{m.scaled(0.01)};
  CHECK_THROWS_AS(
      delta::approx_law(stat, ParamVector{0.0, 0.0}, ParamVector{0.0, 0.0}, sigmas),
      degenerate_law);
}

TEST_CASE("gradient fallback engages exactly when the null gradient vanishes") {
  CHECK(delta::gradient_fallback_used(paper_spec(1, make_signed_product_statistic())));
  CHECK(!delta::gradient_fallback_used(paper_spec(1, make_linear_statistic({1.0, 1.0}))));
}

TEST_CASE("variances must decrease across analyses") {
  LinearStatistic stat({1.0, 1.0});
  CovMatrix m(2, {40.0, 10.0, 10.0, 40.0});
  std::vector<CovMatrix> bad{m.scaled(1.0 / 100.0), m.scaled(1.0 / 100.0)};
  CHECK_THROWS_AS(
      delta::approx_law(stat, ParamVector{0.0, 0.0}, ParamVector{1.0, 1.0}, bad),
      schedule_error);
}

TEST_CASE("fixed-design boundary equals the normal quantile") {
  DesignSpec spec = paper_spec(1, make_linear_statistic({1.0, 1.0}));
  StageTargets targets{{0.025}, {0.1}};
  std::vector<double> schedule{100.0};
  Boundaries bounds = delta::solve_boundaries(spec, targets, schedule, {32, 1});
  CHECK(bounds.b[0] == doctest::Approx(1.9599639845400545).epsilon(1e-5));
}

TEST_CASE("the delta engine reproduces its own documented failure for the signed product") {
  DesignSpec spec = paper_spec(1, make_signed_product_statistic());
  StageTargets targets{{0.025}, {0.1}};
  std::vector<double> schedule{103.0};
  Boundaries bounds = delta::solve_boundaries(spec, targets, schedule, {10, 1});
  // z_{0.975} * sqrt(264.0625 / 103)
  CHECK(bounds.b[0] == doctest::Approx(3.138216).epsilon(1e-4));
}

TEST_CASE("linear boundaries agree between the delta and simpson engines") {
  DesignSpec spec = paper_spec(2, make_linear_statistic({1.0, 1.0}));
  StageTargets targets = stage_targets(spec, 1.0);
  std::vector<double> schedule{22.0, 44.0};
  Boundaries dl = delta::solve_boundaries(spec, targets, schedule, {32, 2});
  Boundaries sp = simpson::solve_boundaries(spec, targets, schedule, {16, 2});
  for (int k = 0; k < 2; ++k) {
    CHECK(dl.a[k] == doctest::Approx(sp.a[k]).epsilon(5e-4));
    CHECK(dl.b[k] == doctest::Approx(sp.b[k]).epsilon(5e-4));
  }
}

TEST_CASE("implied cross-analysis correlation has the independent-increments form") {
  // Under the collapsed law, Corr(D_k1, D_k2) = sqrt(v_k2 / v_k1); with
  // Sigma_k = M/n_k this is sqrt(n_k1 / n_k2) regardless of M.
  SignedProductStatistic stat;
  CovMatrix m(2, {40.0, 10.0, 10.0, 40.0});
  std::vector<CovMatrix> sigmas{m.scaled(1.0 / 23.0), m.scaled(1.0 / 46.0),
                                m.scaled(1.0 / 69.0)};
  delta::UnivariateLaw law = delta::approx_law(stat, ParamVector{0.0, 0.0},
                                               ParamVector{1.625, 1.625}, sigmas);
  for (std::size_t k1 = 0; k1 < 3; ++k1)
    for (std::size_t k2 = k1; k2 < 3; ++k2) {
      const double implied = law.variances[k2] / std::sqrt(law.variances[k1] * law.variances[k2]);
      CHECK(implied == doctest::Approx(std::sqrt(law.variances[k2] / law.variances[k1]))
                           .epsilon(1e-12));
    }
}

TEST_CASE("delta evaluation of a fixed boundary matches the normal tail") {
  DesignSpec spec = paper_spec(1, make_signed_product_statistic());
  Boundaries bounds;
  bounds.a = {3.1382};
  bounds.b = {3.1382};
  std::vector<double> schedule{103.0};
  StageProbabilities probs =
      delta::evaluate_probabilities(spec, bounds, spec.theta0, schedule, {32, 1});
  // Under the collapsed law the tail is 1 - Phi(b / sqrt(264.0625 / 103)).
  const double z = 3.1382 / std::sqrt(264.0625 / 103.0);
  CHECK(probs.reject[0] == doctest::Approx(1.0 - norm_cdf(z)).epsilon(1e-5));
}

TEST_CASE("information ratio is one for a single analysis and scale-free in M") {
  DesignSpec spec = paper_spec(1, make_linear_statistic({1.0, 1.0}));
  delta::InformationRatio one = delta::information_ratio(spec, {32, 1});
  CHECK(one.ratio == doctest::Approx(1.0));

  DesignSpec gst = paper_spec(3, make_linear_statistic({1.0, 1.0}));
  delta::InformationRatio base = delta::information_ratio(gst, {32, 2});
  DesignSpec scaled = gst;
  scaled.nuisance = gst.nuisance.scaled(3.7);
  delta::InformationRatio same = delta::information_ratio(scaled, {32, 2});
  CHECK(base.ratio == doctest::Approx(same.ratio).epsilon(1e-4));
  CHECK(base.ratio > 1.0);
}
