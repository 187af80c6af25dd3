#include <doctest.h>

#include <cmath>
#include <limits>

#include "mgst/errors.hpp"
#include "mgst/normal.hpp"
#include "mgst/rng.hpp"
#include "mgst/simpson.hpp"
#include "oracles.hpp"

using namespace mgst;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

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

TEST_CASE("first layer mass approaches one as the grid refines") {
  CovMatrix cov(2, {40.0 / 100, 10.0 / 100, 10.0 / 100, 40.0 / 100});
  ParamVector theta{0.0, 0.0};
  const double e6 = std::fabs(simpson::first_layer(theta, cov, 6, 1).total_mass() - 1.0);
  const double e10 = std::fabs(simpson::first_layer(theta, cov, 10, 1).total_mass() - 1.0);
  const double e16 = std::fabs(simpson::first_layer(theta, cov, 16, 1).total_mass() - 1.0);
  CHECK(e6 < 5e-5);
  CHECK(e10 < 5e-6);
  CHECK(e16 < 1e-6);
  CHECK(e10 < e6);
  CHECK(e16 < e10);
}

TEST_CASE("first layer stores the closed-form density at the center node") {
  CovMatrix cov(2, {0.4, 0.1, 0.1, 0.4});
  ParamVector theta{0.7, -0.3};
  simpson::GridLayer layer = simpson::first_layer(theta, cov, 2, 1);
  // Center node of each axis sits at theta.
  const int mid = (layer.axis(0).size() - 1) / 2;
  const std::size_t flat = static_cast<std::size_t>(mid) * layer.axis(1).size() + mid;
  CHECK(layer.value_at(flat) == doctest::Approx(mvn_density(theta, theta, cov)).epsilon(1e-13));
  CHECK(layer.eval(theta) == doctest::Approx(mvn_density(theta, theta, cov)).epsilon(1e-13));
}

TEST_CASE("univariate first layer recovers its mean by quadrature") {
  CovMatrix cov(1, {2.25});
  ParamVector theta{1.3};
  simpson::GridLayer layer = simpson::first_layer(theta, cov, 8, 1);
  double mean = 0.0, mass = 0.0;
  for (int i = 0; i < layer.axis(0).size(); ++i) {
    mean += layer.axis(0).weights[i] * layer.axis(0).nodes[i] * layer.value_at(i);
    mass += layer.axis(0).weights[i] * layer.value_at(i);
  }
  // The grid is symmetric about theta, so the first moment normalized by the
  // quadrature mass is exact to roundoff; the raw moment carries the tail
  // quadrature bias.
  CHECK(mean / mass == doctest::Approx(1.3).epsilon(1e-10));
  CHECK(mean == doctest::Approx(1.3).epsilon(1e-4));
}

TEST_CASE("propagation with no stopping preserves total mass") {
  DesignSpec spec = paper_spec(2, make_linear_statistic({1.0, 1.0}));
  CovMatrix s1 = spec.covariance_at(50.0);
  CovMatrix s2 = spec.covariance_at(100.0);
  simpson::GridLayer l1 = simpson::first_layer(spec.theta0, s1, 6, 2);
  simpson::GridLayer l2 = simpson::propagate_layer(l1, -kInf, kInf, *spec.statistic, spec.theta0,
                                                   s1, s2, 6, 2);
  CHECK(l2.total_mass() == doctest::Approx(1.0).epsilon(2e-4));
}

TEST_CASE("one-dimensional propagation matches the classic recursion on the same grid") {
  const double theta = 0.3, v1 = 2.5 / 5.0, v2 = 2.5 / 9.0;
  const double a = -0.8, b = 1.4;
  CovMatrix s1(1, {v1}), s2(1, {v2});
  auto identity = make_linear_statistic({1.0});
  simpson::GridLayer l1 = simpson::first_layer(ParamVector{theta}, s1, 4, 1);
  simpson::GridLayer l2 =
      simpson::propagate_layer(l1, a, b, *identity, ParamVector{theta}, s1, s2, 4, 1);

  // Independent classic recursion: same trimmed grid, normal pdf/cdf math.
  simpson::TrimmedGrid grid = simpson::trim_axis(l1.axis(0), a, b);
  oracle::UnivariateLayer prev;
  const double sd1 = std::sqrt(v1);
  for (std::size_t j = 0; j < grid.nodes.size(); ++j) {
    prev.z.push_back(grid.nodes[j]);
    prev.h.push_back(grid.weights[j] * norm_pdf((grid.nodes[j] - theta) / sd1) / sd1);
  }
  std::vector<double> ones(l2.axis(0).size(), 1.0);
  oracle::UnivariateLayer next = oracle::classic_propagate(
      prev, l2.axis(0).nodes, ones, theta, sd1, std::sqrt(v2));
  for (int i = 0; i < l2.axis(0).size(); ++i)
    CHECK(l2.value_at(i) == doctest::Approx(next.h[i]).epsilon(1e-12));

  // Exit probabilities agree with the CDF-based classic values to quadrature
  // accuracy; the last coordinate is integrated numerically, so compare at a
  // finer grid.
  simpson::GridLayer f1 = simpson::first_layer(ParamVector{theta}, s1, 16, 1);
  simpson::GridLayer f2 =
      simpson::propagate_layer(f1, a, b, *identity, ParamVector{theta}, s1, s2, 16, 1);
  simpson::TrimmedGrid fine = simpson::trim_axis(f1.axis(0), a, b);
  oracle::UnivariateLayer fprev;
  for (std::size_t j = 0; j < fine.nodes.size(); ++j) {
    fprev.z.push_back(fine.nodes[j]);
    fprev.h.push_back(fine.weights[j] * norm_pdf((fine.nodes[j] - theta) / sd1) / sd1);
  }
  const double upper = simpson::stage_probability(f2, simpson::RegionSide::Reject, 1.1,
                                                  *identity, 1);
  CHECK(upper == doctest::Approx(oracle::classic_exit_upper(fprev, 1.1, theta, sd1,
                                                            std::sqrt(v2)))
                     .epsilon(1e-5));
  const double lower = simpson::stage_probability(f2, simpson::RegionSide::Accept, -0.2,
                                                  *identity, 1);
  CHECK(lower == doctest::Approx(oracle::classic_exit_lower(fprev, -0.2, theta, sd1,
                                                            std::sqrt(v2)))
                     .epsilon(1e-5));
}

TEST_CASE("fixed linear design reproduces the closed-form boundary") {
  DesignSpec spec = paper_spec(1, make_linear_statistic({1.0, 1.0}));
  StageTargets targets{{0.025}, {0.1}};
  std::vector<double> schedule{100.0};
  Boundaries bounds = simpson::solve_boundaries(spec, targets, schedule, {10, 2});
  // g' (M/100) g = 1, so b = Phi^-1(0.975).
  CHECK(bounds.a[0] == bounds.b[0]);
  CHECK(bounds.b[0] == doctest::Approx(1.9599639845400545).epsilon(3e-4));
  CHECK(bounds.realized_psi[0] == doctest::Approx(0.025).epsilon(1e-6));
  CHECK(bounds.realized_xi[0] == doctest::Approx(norm_cdf(1.9599639845 - 3.25)).epsilon(2e-4));
}

TEST_CASE("whole-space rejection probability equals total mass") {
  DesignSpec spec = paper_spec(1, make_signed_product_statistic());
  CovMatrix cov = spec.covariance_at(103.0);
  simpson::GridLayer layer = simpson::first_layer(spec.theta0, cov, 6, 1);
  const double all = simpson::stage_probability(layer, simpson::RegionSide::Reject, -kInf,
                                                *spec.statistic, 1);
  CHECK(all == doctest::Approx(layer.total_mass()).epsilon(1e-12));
  const double none = simpson::stage_probability(layer, simpson::RegionSide::Reject, kInf,
                                                 *spec.statistic, 1);
  CHECK(none == 0.0);
}

TEST_CASE("rejection probability is monotone in the boundary") {
  DesignSpec spec = paper_spec(1, make_signed_product_statistic());
  CovMatrix cov = spec.covariance_at(103.0);
  simpson::GridLayer layer = simpson::first_layer(spec.theta0, cov, 6, 1);
  double prev = 2.0;
  for (double b = -2.0; b <= 4.0; b += 0.25) {
    const double p = simpson::stage_probability(layer, simpson::RegionSide::Reject, b,
                                                *spec.statistic, 1);
    CHECK(p <= prev + 1e-12);
    prev = p;
  }
}

TEST_CASE("stage-two mass equals one minus the stage-one exits, cross-checked by sampling") {
  DesignSpec spec = paper_spec(2, make_linear_statistic({1.0, 1.0}));
  CovMatrix s1 = spec.covariance_at(22.0);
  CovMatrix s2 = spec.covariance_at(44.0);
  const double a1 = -2.4044, b1 = 6.5816;
  simpson::GridLayer l1 = simpson::first_layer(spec.theta0, s1, 6, 2);
  simpson::GridLayer l2 =
      simpson::propagate_layer(l1, a1, b1, *spec.statistic, spec.theta0, s1, s2, 6, 2);
  const double mass = l2.total_mass();

  const double psi1 = simpson::stage_probability(l1, simpson::RegionSide::Reject, b1,
                                                 *spec.statistic, 2);
  const double acc1 = simpson::stage_probability(l1, simpson::RegionSide::Accept, a1,
                                                 *spec.statistic, 2);
  CHECK(mass == doctest::Approx(1.0 - psi1 - acc1).epsilon(1e-4));

  // Monte Carlo oracle for the continuation probability.
  const int n = 200000;
  RngStream rng(77, 0);
  std::vector<double> chol = s1.cholesky_factor();
  int cont = 0;
  for (int i = 0; i < n; ++i) {
    const double z0 = rng.normal(), z1 = rng.normal();
    const double x0 = chol[0] * z0;
    const double x1 = chol[2] * z0 + chol[3] * z1;
    const double d = x0 + x1;
    cont += (d >= a1 && d < b1) ? 1 : 0;
  }
  const double phat = static_cast<double>(cont) / n;
  const double se = std::sqrt(phat * (1.0 - phat) / n);
  CHECK(std::fabs(mass - phat) < 4.0 * se + 1e-4);
}

TEST_CASE("unattainable stage targets raise infeasible_design") {
  DesignSpec spec = paper_spec(1, make_linear_statistic({1.0, 1.0}));
  StageTargets targets{{1.5}, {0.1}};  // more than the whole mass
  std::vector<double> schedule{100.0};
  CHECK_THROWS_AS(simpson::solve_boundaries(spec, targets, schedule, {4, 1}),
                  infeasible_design);
}

TEST_CASE("boundary refinement converges with the grid parameter") {
  // |psi(r) - psi(2r)| at the fixed oracle boundary shrinks as r grows.
  DesignSpec spec = paper_spec(1, make_linear_statistic({1.0, 1.0}));
  CovMatrix cov = spec.covariance_at(100.0);
  const double oracle_b = 1.9599639845400545;
  auto psi_at = [&](int r) {
    simpson::GridLayer layer = simpson::first_layer(spec.theta0, cov, r, 2);
    return simpson::stage_probability(layer, simpson::RegionSide::Reject, oracle_b,
                                      *spec.statistic, 2);
  };
  const double d4 = std::fabs(psi_at(4) - psi_at(8));
  const double d8 = std::fabs(psi_at(8) - psi_at(16));
  CHECK(d8 < d4);
  CHECK(std::fabs(psi_at(10) - psi_at(11)) < 1e-5);
}

TEST_CASE("three-endpoint designs work through the generic path") {
  DesignSpec spec;
  spec.p = 3;
  spec.K = 1;
  spec.alpha = 0.025;
  spec.beta = 0.1;
  spec.theta0 = {0.0, 0.0, 0.0};
  spec.thetaA = {1.0, 1.0, 1.0};
  spec.nuisance = CovMatrix(3, {2.0, 0.3, 0.2, 0.3, 2.0, 0.4, 0.2, 0.4, 2.0});
  spec.statistic = make_linear_statistic({1.0, 1.0, 1.0});
  spec.alpha_spending = SpendingFunction::power(0.025, 2.0);
  spec.beta_spending = SpendingFunction::power(0.1, 2.0);

  CovMatrix cov = spec.covariance_at(10.0);
  simpson::GridLayer layer = simpson::first_layer(spec.theta0, cov, 3, 2);
  CHECK(layer.total_mass() == doctest::Approx(1.0).epsilon(5e-4));

  StageTargets targets{{0.025}, {0.1}};
  std::vector<double> schedule{10.0};
  Boundaries bounds = simpson::solve_boundaries(spec, targets, schedule, {4, 2});
  // g' (M/10) g = 0.78, so b = 1.95996 * sqrt(0.78).
  CHECK(bounds.b[0] == doctest::Approx(1.9599639845 * std::sqrt(0.78)).epsilon(1e-3));
}

TEST_CASE("results are bit-identical across worker counts") {
  DesignSpec spec = paper_spec(3, make_signed_product_statistic());
  StageTargets targets = stage_targets(spec, 1.0);
  std::vector<double> schedule{23.0, 46.0, 69.0};
  Boundaries one = simpson::solve_boundaries(spec, targets, schedule, {4, 1});
  Boundaries three = simpson::solve_boundaries(spec, targets, schedule, {4, 3});
  CHECK(one.a == three.a);
  CHECK(one.b == three.b);
  CHECK(one.realized_psi == three.realized_psi);
  CHECK(one.realized_xi == three.realized_xi);
}

TEST_CASE("worst-case null backed by the integration engine picks the origin") {
  DesignSpec spec = paper_spec(5, make_signed_product_statistic());
  std::vector<double> schedule{23, 46, 69, 92, 115};
  Boundaries bounds;  // published non-linear constants
  bounds.a = {-3.9221, -0.8151, -0.0352, 0.3634, 0.8295};
  bounds.b = {9.8568, 3.7549, 2.0504, 1.2838, 0.8295};
  auto psi_eval = [&](const ParamVector& theta) {
    return simpson::evaluate_probabilities(spec, bounds, theta, schedule, {4, 2}).reject;
  };
  std::vector<ParamVector> candidates{{0.0, 0.0}, {-1.0, 0.0}, {0.0, -1.0}};
  ParamVector best = worst_case_null(candidates, psi_eval);
  CHECK(best[0] == 0.0);
  CHECK(best[1] == 0.0);
}

TEST_CASE("evaluating solved boundaries reproduces the realized stage errors") {
  DesignSpec spec = paper_spec(2, make_signed_product_statistic());
  StageTargets targets = stage_targets(spec, 1.0);
  std::vector<double> schedule{23.0, 46.0};
  Boundaries bounds = simpson::solve_boundaries(spec, targets, schedule, {4, 2});
  StageProbabilities under_null =
      simpson::evaluate_probabilities(spec, bounds, spec.theta0, schedule, {4, 2});
  for (int k = 0; k < 2; ++k)
    CHECK(under_null.reject[k] == doctest::Approx(bounds.realized_psi[k]).epsilon(1e-10));
}
