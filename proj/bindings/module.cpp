// Python bindings for the design library: statistics, normal primitives,
// error spending, the three boundary engines and sample sizing.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <string>
#include <vector>

#include "mgst/config.hpp"
#include "mgst/delta.hpp"
#include "mgst/design.hpp"
#include "mgst/errors.hpp"
#include "mgst/gaussian.hpp"
#include "mgst/montecarlo.hpp"
#include "mgst/normal.hpp"
#include "mgst/samplesize.hpp"
#include "mgst/simpson.hpp"
#include "mgst/statistic.hpp"

namespace py = pybind11;
using namespace mgst;

namespace {

CovMatrix matrix_from(const std::vector<std::vector<double>>& rows) {
  const int p = static_cast<int>(rows.size());
  std::vector<double> entries;
  entries.reserve(static_cast<std::size_t>(p) * p);
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != p) throw config_error("matrix must be square");
    entries.insert(entries.end(), row.begin(), row.end());
  }
  return CovMatrix(p, std::move(entries));
}

std::vector<std::vector<double>> matrix_to(const CovMatrix& m) {
  std::vector<std::vector<double>> rows(m.dim(), std::vector<double>(m.dim()));
  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j < m.dim(); ++j) rows[i][j] = m(i, j);
  return rows;
}

DesignSpec spec_from(int endpoints, int analyses, double alpha, double beta,
                     const ParamVector& theta0, const ParamVector& thetaA,
                     const std::vector<std::vector<double>>& nuisance,
                     std::shared_ptr<const SummaryStatistic> statistic, double alpha_exponent,
                     double beta_exponent, const std::vector<double>& sample_sizes,
                     const std::vector<double>& information) {
  DesignSpec spec;
  spec.p = endpoints;
  spec.K = analyses;
  spec.alpha = alpha;
  spec.beta = beta;
  spec.theta0 = theta0;
  spec.thetaA = thetaA;
  spec.nuisance = matrix_from(nuisance);
  spec.statistic = std::move(statistic);
  spec.alpha_spending = SpendingFunction::power(alpha, alpha_exponent);
  spec.beta_spending = SpendingFunction::power(beta, beta_exponent);
  spec.sample_sizes = sample_sizes;
  spec.information = information;
  spec.validate();
  return spec;
}

py::dict boundaries_to_dict(const Boundaries& b) {
  py::dict out;
  out["a"] = b.a;
  out["b"] = b.b;
  out["realized_psi"] = b.realized_psi;
  out["realized_xi"] = b.realized_xi;
  return out;
}

Boundaries boundaries_from_dict(const py::dict& d) {
  Boundaries b;
  b.a = d["a"].cast<std::vector<double>>();
  b.b = d["b"].cast<std::vector<double>>();
  return b;
}

}  // namespace

PYBIND11_MODULE(_mgst, m) {
  m.doc() = "Group sequential designs for multivariate endpoints summarized by a scalar statistic";

  py::register_exception<config_error>(m, "ConfigError");
  py::register_exception<infeasible_design>(m, "InfeasibleDesign");

  py::class_<SummaryStatistic, std::shared_ptr<SummaryStatistic>>(m, "SummaryStatistic")
      .def_property_readonly("dim", &SummaryStatistic::dim)
      .def_property_readonly("max_roots", &SummaryStatistic::max_roots)
      .def_property_readonly("name", &SummaryStatistic::name)
      .def("evaluate",
           [](const SummaryStatistic& s, const ParamVector& theta) { return s.evaluate(theta); })
      .def("gradient",
           [](const SummaryStatistic& s, const ParamVector& theta) { return s.gradient(theta); })
      .def(
          "last_coord_roots",
          [](const SummaryStatistic& s, const ParamVector& prefix, double level, double lo,
             double hi) { return s.last_coord_roots(prefix, level, lo, hi); },
          py::arg("prefix"), py::arg("level"), py::arg("lo") = -50.0, py::arg("hi") = 50.0);

  m.def("linear_statistic",
        [](const std::vector<double>& weights) {
          return std::shared_ptr<SummaryStatistic>(
              std::const_pointer_cast<SummaryStatistic>(make_linear_statistic(weights)));
        },
        py::arg("weights"));
  m.def("signed_product_statistic", []() {
    return std::shared_ptr<SummaryStatistic>(
        std::const_pointer_cast<SummaryStatistic>(make_signed_product_statistic()));
  });

  m.def("norm_cdf", &norm_cdf);
  m.def("norm_quantile", &norm_quantile);
  m.def(
      "mvn_density",
      [](const ParamVector& x, const ParamVector& mean,
         const std::vector<std::vector<double>>& cov) {
        return mvn_density(x, mean, matrix_from(cov));
      },
      py::arg("x"), py::arg("mean"), py::arg("cov"));
  m.def(
      "conditional_law",
      [](const ParamVector& theta, const std::vector<std::vector<double>>& sigma_prev,
         const std::vector<std::vector<double>>& sigma_curr, const ParamVector& x_prev) {
        ConditionalLaw law =
            conditional_law(theta, matrix_from(sigma_prev), matrix_from(sigma_curr), x_prev);
        py::dict out;
        out["mean"] = law.mean;
        out["cov"] = matrix_to(law.cov);
        return out;
      },
      py::arg("theta"), py::arg("sigma_prev"), py::arg("sigma_curr"), py::arg("x_prev"));
  m.def(
      "information",
      [](const std::vector<std::vector<double>>& cov) { return information(matrix_from(cov)); },
      py::arg("cov"));

  m.def(
      "stage_targets",
      [](int analyses, double alpha, double beta, double alpha_exponent, double beta_exponent,
         const std::vector<double>& information, double information_max) {
        std::vector<double> levels = information;
        double i_max = information_max;
        if (levels.empty()) {
          levels.resize(analyses);
          for (int k = 0; k < analyses; ++k) levels[k] = static_cast<double>(k + 1) / analyses;
          i_max = 1.0;
        } else if (i_max <= 0.0) {
          i_max = levels.back();
        }
        StageTargets t = stage_targets(levels, i_max, SpendingFunction::power(alpha, alpha_exponent),
                                       SpendingFunction::power(beta, beta_exponent));
        py::dict out;
        out["psi"] = t.psi;
        out["xi"] = t.xi;
        return out;
      },
      py::arg("analyses"), py::arg("alpha"), py::arg("beta"), py::arg("alpha_exponent") = 2.0,
      py::arg("beta_exponent") = 2.0, py::arg("information") = std::vector<double>{},
      py::arg("information_max") = 0.0);

  m.def(
      "region_of",
      [](const py::dict& boundaries, int k, double delta_value) {
        switch (region_of(boundaries_from_dict(boundaries), k, delta_value)) {
          case Region::Accept: return "accept";
          case Region::Reject: return "reject";
          default: return "continue";
        }
      },
      py::arg("boundaries"), py::arg("k"), py::arg("delta_value"));

  m.def(
      "solve_design",
      [](int endpoints, int analyses, double alpha, double beta, const ParamVector& theta0,
         const ParamVector& thetaA, const std::vector<std::vector<double>>& nuisance,
         std::shared_ptr<SummaryStatistic> statistic, const std::vector<double>& sample_sizes,
         const std::string& engine, int gridsize, long long replicates, std::uint64_t seed,
         int workers, double alpha_exponent, double beta_exponent,
         const std::vector<double>& information, double information_max) {
        DesignSpec spec = spec_from(endpoints, analyses, alpha, beta, theta0, thetaA, nuisance,
                                    statistic, alpha_exponent, beta_exponent, sample_sizes,
                                    information);
        double i_max = information_max > 0.0
                           ? information_max
                           : (spec.information.empty() ? 1.0 : spec.information.back());
        StageTargets targets = stage_targets(spec, i_max);
        Boundaries bounds;
        EngineKind kind = engine_from_string(engine);
        if (kind == EngineKind::simpson)
          bounds = simpson::solve_boundaries(spec, targets, sample_sizes, {gridsize, workers});
        else if (kind == EngineKind::delta)
          bounds = delta::solve_boundaries(spec, targets, sample_sizes, {gridsize, workers});
        else
          bounds = montecarlo::solve_boundaries(
              spec, targets, sample_sizes,
              {replicates, seed, montecarlo::QuantileMode::survivor_fraction, workers});
        py::dict out = boundaries_to_dict(bounds);
        out["targets_psi"] = targets.psi;
        out["targets_xi"] = targets.xi;
        return out;
      },
      py::arg("endpoints"), py::arg("analyses"), py::arg("alpha"), py::arg("beta"),
      py::arg("theta0"), py::arg("thetaA"), py::arg("nuisance"), py::arg("statistic"),
      py::arg("sample_sizes"), py::arg("engine") = "simpson", py::arg("gridsize") = 6,
      py::arg("replicates") = 100000, py::arg("seed") = 1, py::arg("workers") = 1,
      py::arg("alpha_exponent") = 2.0, py::arg("beta_exponent") = 2.0,
      py::arg("information") = std::vector<double>{}, py::arg("information_max") = 0.0);

  m.def(
      "evaluate_design",
      [](int endpoints, int analyses, double alpha, double beta, const ParamVector& theta0,
         const ParamVector& thetaA, const std::vector<std::vector<double>>& nuisance,
         std::shared_ptr<SummaryStatistic> statistic, const std::vector<double>& sample_sizes,
         const py::dict& boundaries, const ParamVector& theta, const std::string& engine,
         int gridsize, long long replicates, std::uint64_t seed, int workers) {
        DesignSpec spec = spec_from(endpoints, analyses, alpha, beta, theta0, thetaA, nuisance,
                                    statistic, 2.0, 2.0, sample_sizes, {});
        Boundaries bounds = boundaries_from_dict(boundaries);
        py::dict out;
        EngineKind kind = engine_from_string(engine);
        if (kind == EngineKind::monte_carlo) {
          montecarlo::Estimate est = montecarlo::estimate_probabilities(
              spec, bounds, theta, sample_sizes,
              {replicates, seed, montecarlo::QuantileMode::survivor_fraction, workers});
          out["reject"] = est.reject;
          out["accept"] = est.accept;
          out["reject_se"] = est.reject_se;
          out["accept_se"] = est.accept_se;
        } else {
          StageProbabilities probs =
              kind == EngineKind::simpson
                  ? simpson::evaluate_probabilities(spec, bounds, theta, sample_sizes,
                                                    {gridsize, workers})
                  : delta::evaluate_probabilities(spec, bounds, theta, sample_sizes,
                                                  {gridsize, workers});
          out["reject"] = probs.reject;
          out["accept"] = probs.accept;
        }
        return out;
      },
      py::arg("endpoints"), py::arg("analyses"), py::arg("alpha"), py::arg("beta"),
      py::arg("theta0"), py::arg("thetaA"), py::arg("nuisance"), py::arg("statistic"),
      py::arg("sample_sizes"), py::arg("boundaries"), py::arg("theta"),
      py::arg("engine") = "simpson", py::arg("gridsize") = 6, py::arg("replicates") = 100000,
      py::arg("seed") = 1, py::arg("workers") = 1);

  m.def(
      "sample_size",
      [](int endpoints, int analyses, double alpha, double beta, const ParamVector& theta0,
         const ParamVector& thetaA, const std::vector<std::vector<double>>& nuisance,
         std::shared_ptr<SummaryStatistic> statistic, double alpha_exponent, double beta_exponent,
         int gridsize_fixed, int gridsize_delta, int workers) {
        DesignSpec spec = spec_from(endpoints, analyses, alpha, beta, theta0, thetaA, nuisance,
                                    statistic, alpha_exponent, beta_exponent, {}, {});
        samplesize::SizingResult r = samplesize::max_information(
            spec, {gridsize_fixed, gridsize_delta, workers});
        py::dict out;
        out["i_fix"] = r.i_fix;
        out["i_fix_delta"] = r.i_fix_delta;
        out["i_max_delta"] = r.i_max_delta;
        out["ratio"] = r.ratio;
        out["i_max"] = r.i_max;
        out["n_fixed"] = r.n_fixed;
        out["group_size"] = r.group_size;
        out["n_schedule"] = r.n_schedule;
        return out;
      },
      py::arg("endpoints"), py::arg("analyses"), py::arg("alpha"), py::arg("beta"),
      py::arg("theta0"), py::arg("thetaA"), py::arg("nuisance"), py::arg("statistic"),
      py::arg("alpha_exponent") = 2.0, py::arg("beta_exponent") = 2.0,
      py::arg("gridsize_fixed") = 32, py::arg("gridsize_delta") = 128, py::arg("workers") = 1);

  m.def(
      "attained_power",
      [](int endpoints, int analyses, double alpha, double beta, const ParamVector& theta0,
         const ParamVector& thetaA, const std::vector<std::vector<double>>& design_nuisance,
         const std::vector<std::vector<double>>& true_nuisance,
         std::shared_ptr<SummaryStatistic> statistic, int gridsize_fixed, int gridsize_delta,
         int power_gridsize, int workers) {
        DesignSpec spec = spec_from(endpoints, analyses, alpha, beta, theta0, thetaA,
                                    design_nuisance, statistic, 2.0, 2.0, {}, {});
        return samplesize::attained_power(spec, matrix_from(true_nuisance),
                                          {gridsize_fixed, gridsize_delta, workers},
                                          power_gridsize);
      },
      py::arg("endpoints"), py::arg("analyses"), py::arg("alpha"), py::arg("beta"),
      py::arg("theta0"), py::arg("thetaA"), py::arg("design_nuisance"),
      py::arg("true_nuisance"), py::arg("statistic"), py::arg("gridsize_fixed") = 32,
      py::arg("gridsize_delta") = 128, py::arg("power_gridsize") = 6, py::arg("workers") = 1);

  m.attr("__version__") = "0.1.0";
}
