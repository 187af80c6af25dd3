// Command-line front end: configuration-driven trial design, sample size
// calculation, Monte Carlo verification and nuisance sensitivity sweeps.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mgst/config.hpp"
#include "mgst/delta.hpp"
#include "mgst/errors.hpp"
#include "mgst/montecarlo.hpp"
#include "mgst/samplesize.hpp"
#include "mgst/simpson.hpp"

namespace {

using mgst::Boundaries;
using mgst::DesignDocument;
using mgst::EngineKind;
using mgst::StageTargets;
using nlohmann::json;

// All printed numbers carry 6 significant digits.
std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct CommonFlags {
  std::string config_path;
  std::optional<std::string> engine;
  std::optional<int> gridsize;
  std::optional<long long> replicates;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  bool verify = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("config", flags.config_path, "design document (JSON)")->required();
  cmd->add_option("--engine", flags.engine, "simpson | delta | monte-carlo");
  cmd->add_option("--gridsize", flags.gridsize, "Simpson grid size parameter r");
  cmd->add_option("--replicates", flags.replicates, "Monte Carlo replicates N");
  cmd->add_option("--seed", flags.seed, "Monte Carlo seed");
  cmd->add_option("--workers", flags.workers, "worker threads");
  cmd->add_option("--out", flags.out, "write the JSON report here (plus .csv table)");
  cmd->add_flag("--verify", flags.verify, "add cross-engine check columns");
}

DesignDocument load_with_flags(const CommonFlags& flags) {
  DesignDocument doc = mgst::load_design_document(flags.config_path);
  if (flags.engine) doc.engine = mgst::engine_from_string(*flags.engine);
  if (flags.gridsize) doc.gridsize = *flags.gridsize;
  if (flags.replicates) doc.replicates = *flags.replicates;
  if (flags.seed) doc.seed = *flags.seed;
  if (flags.workers) doc.workers = *flags.workers;
  if (flags.out) doc.out = *flags.out;
  if (flags.verify) doc.verify = true;
  return doc;
}

std::vector<double> schedule_of(const DesignDocument& doc) {
  if (doc.spec.sample_sizes.empty())
    throw mgst::config_error("this command needs design.sample_sizes");
  return doc.spec.sample_sizes;
}

void write_report(const DesignDocument& doc, const json& report, const std::string& csv) {
  if (doc.out.empty()) return;
  std::ofstream out(doc.out);
  if (!out) throw mgst::config_error("cannot write report to '" + doc.out + "'");
  out << report.dump(2) << "\n";
  if (!csv.empty()) {
    std::ofstream cout_csv(doc.out + ".csv");
    cout_csv << csv;
  }
  std::cout << "report written to " << doc.out << "\n";
}

Boundaries solve_with_engine(const DesignDocument& doc, const StageTargets& targets,
                             const std::vector<double>& schedule) {
  switch (doc.engine) {
    case EngineKind::simpson:
      return mgst::simpson::solve_boundaries(doc.spec, targets, schedule,
                                             {doc.resolved_gridsize(), doc.workers});
    case EngineKind::delta:
      return mgst::delta::solve_boundaries(doc.spec, targets, schedule,
                                           {doc.resolved_gridsize(), doc.workers});
    case EngineKind::monte_carlo:
      return mgst::montecarlo::solve_boundaries(
          doc.spec, targets, schedule,
          {doc.replicates, doc.seed, doc.mc_quantiles, doc.workers});
  }
  throw mgst::config_error("unreachable engine kind");
}

int cmd_design(const CommonFlags& flags) {
  DesignDocument doc = load_with_flags(flags);
  std::vector<double> schedule = schedule_of(doc);
  StageTargets targets = mgst::stage_targets(doc.spec, doc.resolved_information_max());
  Boundaries bounds = solve_with_engine(doc, targets, schedule);

  json report;
  report["command"] = "design";
  report["resolved_config"] = mgst::document_to_json(doc);
  report["targets"] = {{"psi", targets.psi}, {"xi", targets.xi}};
  report["boundaries"] = mgst::boundaries_to_json(bounds);

  if (doc.engine == EngineKind::delta &&
      (doc.spec.statistic->name() != "linear" || mgst::delta::gradient_fallback_used(doc.spec))) {
    report["warnings"] = json::array(
        {"the delta approximation is first-order and known to misplace boundaries for "
         "non-linear summary statistics; prefer engine=simpson for design"});
  }
  if (doc.verify) {
    mgst::StageProbabilities p0 = mgst::delta::evaluate_probabilities(
        doc.spec, bounds, doc.spec.theta0, schedule, {128, doc.workers});
    mgst::StageProbabilities pA = mgst::delta::evaluate_probabilities(
        doc.spec, bounds, doc.spec.thetaA, schedule, {128, doc.workers});
    mgst::montecarlo::Options mc{doc.replicates, doc.seed, doc.mc_quantiles, doc.workers};
    mgst::montecarlo::Estimate m0 =
        mgst::montecarlo::estimate_probabilities(doc.spec, bounds, doc.spec.theta0, schedule, mc);
    mgst::montecarlo::Estimate mA =
        mgst::montecarlo::estimate_probabilities(doc.spec, bounds, doc.spec.thetaA, schedule, mc);
    report["verify"] = {
        {"delta",
         {{"gridsize", 128},
          {"psi", p0.reject},
          {"xi", pA.accept},
          {"exact_for_linear", doc.spec.statistic->name() == "linear"}}},
        {"monte_carlo",
         {{"replicates", doc.replicates},
          {"seed", doc.seed},
          {"psi", m0.reject},
          {"psi_se", m0.reject_se},
          {"xi", mA.accept},
          {"xi_se", mA.accept_se}}}};
  }

  std::string csv = "k,a,b,target_psi,target_xi,realized_psi,realized_xi\n";
  std::printf("%2s %12s %12s %12s %12s %14s %14s\n", "k", "a", "b", "target_psi", "target_xi",
              "realized_psi", "realized_xi");
  for (int k = 0; k < doc.spec.K; ++k) {
    std::printf("%2d %12s %12s %12s %12s %14s %14s\n", k + 1, num(bounds.a[k]).c_str(),
                num(bounds.b[k]).c_str(), num(targets.psi[k]).c_str(), num(targets.xi[k]).c_str(),
                num(bounds.realized_psi[k]).c_str(), num(bounds.realized_xi[k]).c_str());
    csv += std::to_string(k + 1) + "," + num(bounds.a[k]) + "," + num(bounds.b[k]) + "," +
           num(targets.psi[k]) + "," + num(targets.xi[k]) + "," + num(bounds.realized_psi[k]) +
           "," + num(bounds.realized_xi[k]) + "\n";
  }
  if (report.contains("warnings"))
    std::cout << "warning: " << report["warnings"][0].get<std::string>() << "\n";
  write_report(doc, report, csv);
  return 0;
}

int cmd_samplesize(const CommonFlags& flags) {
  DesignDocument doc = load_with_flags(flags);
  mgst::samplesize::SizingOptions opt{doc.sizing_gridsize_fixed, doc.sizing_gridsize_delta,
                                      doc.workers};
  mgst::samplesize::SizingResult sizing = mgst::samplesize::max_information(doc.spec, opt);

  json report;
  report["command"] = "samplesize";
  report["resolved_config"] = mgst::document_to_json(doc);
  report["sizing"] = {{"i_fix", sizing.i_fix},
                      {"i_fix_delta", sizing.i_fix_delta},
                      {"i_max_delta", sizing.i_max_delta},
                      {"ratio", sizing.ratio},
                      {"i_max", sizing.i_max},
                      {"n_fixed_continuous", sizing.n_fixed_continuous},
                      {"n_gst_continuous", sizing.n_gst_continuous},
                      {"n_fixed", sizing.n_fixed},
                      {"group_size", sizing.group_size},
                      {"n_schedule", sizing.n_schedule}};

  std::printf("fixed-sample information  I_fix   = %s (n = %lld)\n", num(sizing.i_fix).c_str(),
              sizing.n_fixed);
  std::printf("univariate approximation  I~fix   = %s, I~max = %s, ratio R = %s\n",
              num(sizing.i_fix_delta).c_str(), num(sizing.i_max_delta).c_str(),
              num(sizing.ratio).c_str());
  std::printf("maximum information       I_max   = %s (continuous n = %s)\n",
              num(sizing.i_max).c_str(), num(sizing.n_gst_continuous).c_str());
  std::printf("per-arm schedule          n^(k)   = %lldk ->", sizing.group_size);
  std::string csv = "k,n\n";
  for (int k = 0; k < doc.spec.K; ++k) {
    std::printf(" %lld", sizing.n_schedule[k]);
    csv += std::to_string(k + 1) + "," + std::to_string(sizing.n_schedule[k]) + "\n";
  }
  std::printf("\n");
  write_report(doc, report, csv);
  return 0;
}

int cmd_simulate(const CommonFlags& flags) {
  DesignDocument doc = load_with_flags(flags);
  std::vector<double> schedule = schedule_of(doc);
  Boundaries bounds;
  if (doc.boundaries) {
    bounds = *doc.boundaries;
  } else if (!doc.boundaries_from.empty()) {
    std::ifstream in(doc.boundaries_from);
    if (!in) throw mgst::config_error("cannot open boundaries file '" + doc.boundaries_from + "'");
    json prior;
    in >> prior;
    bounds = mgst::boundaries_from_json(prior.contains("boundaries") ? prior["boundaries"]
                                                                     : prior);
  } else {
    throw mgst::config_error("simulate needs 'boundaries' or 'boundaries_from'");
  }
  if (static_cast<int>(bounds.b.size()) != doc.spec.K)
    throw mgst::config_error("boundaries must have one entry per analysis");

  StageTargets targets = mgst::stage_targets(doc.spec, doc.resolved_information_max());
  mgst::montecarlo::Options mc{doc.replicates, doc.seed, doc.mc_quantiles, doc.workers};
  mgst::montecarlo::Estimate null_est =
      mgst::montecarlo::estimate_probabilities(doc.spec, bounds, doc.spec.theta0, schedule, mc);
  mgst::montecarlo::Estimate alt_est =
      mgst::montecarlo::estimate_probabilities(doc.spec, bounds, doc.spec.thetaA, schedule, mc);

  json report;
  report["command"] = "simulate";
  report["resolved_config"] = mgst::document_to_json(doc);
  report["boundaries"] = mgst::boundaries_to_json(bounds);
  json stages = json::array();
  std::string csv = "k,psi_hat,psi_se,psi_target,psi_ok,xi_hat,xi_se,xi_target,xi_ok\n";
  std::printf("%2s %12s %12s %5s %12s %12s %5s\n", "k", "psi_hat", "(se)", "ok?", "xi_hat", "(se)",
              "ok?");
  bool all_ok = true;
  for (int k = 0; k < doc.spec.K; ++k) {
    const bool psi_ok =
        std::fabs(null_est.reject[k] - targets.psi[k]) <= 4.0 * null_est.reject_se[k] + 1e-12;
    const bool xi_ok =
        std::fabs(alt_est.accept[k] - targets.xi[k]) <= 4.0 * alt_est.accept_se[k] + 1e-12;
    all_ok = all_ok && psi_ok && xi_ok;
    stages.push_back({{"k", k + 1},
                      {"psi_hat", null_est.reject[k]},
                      {"psi_se", null_est.reject_se[k]},
                      {"psi_target", targets.psi[k]},
                      {"psi_within_4se", psi_ok},
                      {"xi_hat", alt_est.accept[k]},
                      {"xi_se", alt_est.accept_se[k]},
                      {"xi_target", targets.xi[k]},
                      {"xi_within_4se", xi_ok}});
    std::printf("%2d %12s %12s %5s %12s %12s %5s\n", k + 1, num(null_est.reject[k]).c_str(),
                num(null_est.reject_se[k]).c_str(), psi_ok ? "yes" : "NO",
                num(alt_est.accept[k]).c_str(), num(alt_est.accept_se[k]).c_str(),
                xi_ok ? "yes" : "NO");
    csv += std::to_string(k + 1) + "," + num(null_est.reject[k]) + "," +
           num(null_est.reject_se[k]) + "," + num(targets.psi[k]) + "," +
           (psi_ok ? "1" : "0") + "," + num(alt_est.accept[k]) + "," +
           num(alt_est.accept_se[k]) + "," + num(targets.xi[k]) + "," + (xi_ok ? "1" : "0") +
           "\n";
  }
  report["stages"] = stages;
  report["all_within_4se"] = all_ok;
  std::printf("overall: %s\n", all_ok ? "all stage estimates within 4 standard errors"
                                      : "some stage estimates deviate beyond 4 standard errors");
  write_report(doc, report, csv);
  return 0;
}

int cmd_sensitivity(const CommonFlags& flags, std::optional<double> rho_min,
                    std::optional<double> rho_max, std::optional<double> rho_step) {
  DesignDocument doc = load_with_flags(flags);
  std::vector<double> design_rhos = doc.rho_design;
  std::vector<double> true_rhos = doc.rho_true;
  if (rho_min && rho_max && rho_step) {
    design_rhos.clear();
    for (double r = *rho_min; r <= *rho_max + 1e-12; r += *rho_step) design_rhos.push_back(r);
    true_rhos = design_rhos;
  }
  if (design_rhos.empty())
    throw mgst::config_error("sensitivity needs rho values (config or --rho-min/max/step)");
  if (true_rhos.empty()) true_rhos = design_rhos;
  if (doc.spec.p != 2)
    throw mgst::config_error("the sensitivity sweep re-correlates a 2x2 nuisance matrix");

  const double d1 = doc.spec.nuisance(0, 0);
  const double d2 = doc.spec.nuisance(1, 1);
  auto correlated = [&](double rho) {
    const double off = rho * std::sqrt(d1 * d2);
    return mgst::CovMatrix(2, {d1, off, off, d2});
  };
  mgst::samplesize::SizingOptions opt{doc.sizing_gridsize_fixed, doc.sizing_gridsize_delta,
                                      doc.workers};

  json rows = json::array();
  std::string csv = "rho_design,rho_true,group_size,power\n";
  std::printf("%10s %9s %11s %9s\n", "rho_design", "rho_true", "group_size", "power");
  for (double rd : design_rhos) {
    DesignDocument designed = doc;
    designed.spec.nuisance = correlated(rd);
    mgst::samplesize::SizingResult sizing = mgst::samplesize::max_information(designed.spec, opt);
    for (double rt : true_rhos) {
      const double power = mgst::samplesize::attained_power(designed.spec, correlated(rt), opt,
                                                            doc.power_gridsize);
      rows.push_back({{"rho_design", rd},
                      {"rho_true", rt},
                      {"group_size", sizing.group_size},
                      {"power", power}});
      std::printf("%10s %9s %11lld %9s\n", num(rd).c_str(), num(rt).c_str(), sizing.group_size,
                  num(power).c_str());
      csv += num(rd) + "," + num(rt) + "," + std::to_string(sizing.group_size) + "," +
             num(power) + "\n";
    }
  }
  json report;
  report["command"] = "sensitivity";
  report["resolved_config"] = mgst::document_to_json(doc);
  report["grid"] = rows;
  write_report(doc, report, csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group sequential designs for multivariate endpoints with a scalar summary"};
  app.require_subcommand(1);

  CommonFlags design_flags, size_flags, sim_flags, sens_flags;
  CLI::App* design = app.add_subcommand("design", "solve stage-wise boundary constants");
  add_common(design, design_flags);
  CLI::App* samplesize = app.add_subcommand("samplesize", "fixed and maximum information");
  add_common(samplesize, size_flags);
  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo check of fixed boundaries");
  add_common(simulate, sim_flags);
  CLI::App* sensitivity =
      app.add_subcommand("sensitivity", "power under a misspecified nuisance matrix");
  add_common(sensitivity, sens_flags);
  std::optional<double> rho_min, rho_max, rho_step;
  sensitivity->add_option("--rho-min", rho_min, "smallest correlation in the sweep");
  sensitivity->add_option("--rho-max", rho_max, "largest correlation in the sweep");
  sensitivity->add_option("--rho-step", rho_step, "correlation step");

  CLI11_PARSE(app, argc, argv);

  try {
    if (design->parsed()) return cmd_design(design_flags);
    if (samplesize->parsed()) return cmd_samplesize(size_flags);
    if (simulate->parsed()) return cmd_simulate(sim_flags);
    if (sensitivity->parsed()) return cmd_sensitivity(sens_flags, rho_min, rho_max, rho_step);
  } catch (const mgst::config_error& err) {
    nlohmann::json out{{"error", {{"code", 2}, {"message", err.what()}}}};
    std::cerr << out.dump() << "\n";
    return 2;
  } catch (const mgst::error& err) {
    nlohmann::json out{{"error", {{"code", 1}, {"message", err.what()}}}};
    std::cerr << out.dump() << "\n";
    return 1;
  }
  return 0;
}
