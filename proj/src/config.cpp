#include "mgst/config.hpp"

#include <fstream>
#include <set>
#include <utility>

#include "mgst/errors.hpp"

namespace mgst {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.contains(key))
      throw config_error("unknown key '" + key + "' in " + where);
  }
}

double require_number(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw config_error("missing key '" + key + "' in " + where);
  if (!obj[key].is_number()) throw config_error("'" + key + "' in " + where + " must be a number");
  return obj[key].get<double>();
}

std::vector<double> require_vector(const json& obj, const std::string& key,
                                   const std::string& where) {
  if (!obj.contains(key)) throw config_error("missing key '" + key + "' in " + where);
  if (!obj[key].is_array()) throw config_error("'" + key + "' in " + where + " must be an array");
  std::vector<double> out;
  for (const auto& v : obj[key]) {
    if (!v.is_number()) throw config_error("'" + key + "' in " + where + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

CovMatrix parse_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw config_error(where + " must be a non-empty matrix");
  const int p = static_cast<int>(j.size());
  std::vector<double> entries;
  entries.reserve(static_cast<std::size_t>(p) * p);
  for (const auto& row : j) {
    if (!row.is_array() || static_cast<int>(row.size()) != p)
      throw config_error(where + " must be square");
    for (const auto& v : row) {
      if (!v.is_number()) throw config_error(where + " must hold numbers");
      entries.push_back(v.get<double>());
    }
  }
  return CovMatrix(p, std::move(entries));
}

std::shared_ptr<const SummaryStatistic> parse_statistic(const json& j) {
  if (!j.is_object()) throw config_error("'statistic' must be an object");
  reject_unknown_keys(j, {"type", "weights"}, "statistic");
  if (!j.contains("type") || !j["type"].is_string())
    throw config_error("statistic needs a 'type' string");
  const std::string type = j["type"].get<std::string>();
  if (type == "linear") {
    return make_linear_statistic(require_vector(j, "weights", "statistic"));
  }
  if (type == "signed_product") {
    if (j.contains("weights")) throw config_error("signed_product takes no weights");
    return make_signed_product_statistic();
  }
  throw config_error("unknown statistic type '" + type + "' (expected linear or signed_product)");
}

SpendingFunction parse_spending(const json& parent, const std::string& key, double budget) {
  if (!parent.contains(key)) return SpendingFunction::power(budget, 2.0);
  const json& j = parent[key];
  if (!j.is_object()) throw config_error("'" + key + "' must be an object");
  reject_unknown_keys(j, {"family", "exponent"}, key);
  if (!j.contains("family") || j["family"].get<std::string>() != "power")
    throw config_error("'" + key + "' supports only the power family");
  const double exponent = j.contains("exponent") ? require_number(j, "exponent", key) : 2.0;
  return SpendingFunction::power(budget, exponent);
}

}  // namespace

std::string to_string(EngineKind kind) {
  switch (kind) {
    case EngineKind::simpson: return "simpson";
    case EngineKind::delta: return "delta";
    case EngineKind::monte_carlo: return "monte-carlo";
  }
  return "simpson";
}

EngineKind engine_from_string(const std::string& name) {
  if (name == "simpson") return EngineKind::simpson;
  if (name == "delta") return EngineKind::delta;
  if (name == "monte-carlo") return EngineKind::monte_carlo;
  throw config_error("unknown engine '" + name + "' (expected simpson, delta or monte-carlo)");
}

double DesignDocument::resolved_information_max() const {
  if (information_max > 0.0) return information_max;
  if (!spec.information.empty()) return spec.information.back();
  return 1.0;  // equal spacing: only fractions matter
}

DesignDocument parse_design_document(const nlohmann::json& doc) {
  if (!doc.is_object()) throw config_error("configuration must be a JSON object");
  reject_unknown_keys(doc,
                      {"design", "engine", "gridsize", "replicates", "seed", "workers",
                       "mc_quantiles", "verify", "out", "boundaries", "boundaries_from",
                       "sensitivity", "sizing"},
                      "configuration");
  if (!doc.contains("design") || !doc["design"].is_object())
    throw config_error("configuration needs a 'design' object");

  const json& d = doc["design"];
  reject_unknown_keys(d,
                      {"endpoints", "analyses", "alpha", "beta", "theta0", "thetaA", "nuisance",
                       "statistic", "alpha_spending", "beta_spending", "sample_sizes",
                       "information", "information_max"},
                      "design");

  DesignDocument out;
  DesignSpec& spec = out.spec;
  const double analyses = require_number(d, "analyses", "design");
  if (analyses < 1 || analyses != static_cast<long long>(analyses))
    throw config_error("invalid analysis count");
  spec.K = static_cast<int>(analyses);
  const double endpoints = require_number(d, "endpoints", "design");
  if (endpoints < 1 || endpoints != static_cast<long long>(endpoints))
    throw config_error("invalid endpoint count");
  spec.p = static_cast<int>(endpoints);
  if (spec.p > 3)
    throw config_error("endpoint counts above 3 are outside the supported grid budget");
  spec.alpha = require_number(d, "alpha", "design");
  spec.beta = require_number(d, "beta", "design");
  spec.theta0 = require_vector(d, "theta0", "design");
  spec.thetaA = require_vector(d, "thetaA", "design");
  if (!d.contains("nuisance")) throw config_error("missing key 'nuisance' in design");
  spec.nuisance = parse_matrix(d["nuisance"], "design nuisance");
  if (!d.contains("statistic")) throw config_error("missing key 'statistic' in design");
  spec.statistic = parse_statistic(d["statistic"]);
  spec.alpha_spending = parse_spending(d, "alpha_spending", spec.alpha);
  spec.beta_spending = parse_spending(d, "beta_spending", spec.beta);
  if (d.contains("sample_sizes")) spec.sample_sizes = require_vector(d, "sample_sizes", "design");
  if (d.contains("information")) {
    if (d["information"].is_string()) {
      if (d["information"].get<std::string>() != "equal")
        throw config_error("'information' must be \"equal\" or an array of levels");
    } else {
      spec.information = require_vector(d, "information", "design");
    }
  }
  if (d.contains("information_max"))
    out.information_max = require_number(d, "information_max", "design");
  spec.validate();

  if (doc.contains("engine")) out.engine = engine_from_string(doc["engine"].get<std::string>());
  if (doc.contains("gridsize")) {
    out.gridsize = static_cast<int>(require_number(doc, "gridsize", "configuration"));
    if (out.gridsize < 1) throw config_error("gridsize must be at least 1");
  }
  if (doc.contains("replicates")) {
    out.replicates = static_cast<long long>(require_number(doc, "replicates", "configuration"));
    if (out.replicates < 1) throw config_error("replicates must be positive");
  }
  if (doc.contains("seed"))
    out.seed = static_cast<std::uint64_t>(require_number(doc, "seed", "configuration"));
  if (doc.contains("workers")) {
    out.workers = static_cast<int>(require_number(doc, "workers", "configuration"));
    if (out.workers < 1) throw config_error("workers must be at least 1");
  }
  if (doc.contains("mc_quantiles")) {
    const std::string mode = doc["mc_quantiles"].get<std::string>();
    if (mode == "survivor-fraction")
      out.mc_quantiles = montecarlo::QuantileMode::survivor_fraction;
    else if (mode == "overall-fraction")
      out.mc_quantiles = montecarlo::QuantileMode::overall_fraction;
    else
      throw config_error("mc_quantiles must be survivor-fraction or overall-fraction");
  }
  if (doc.contains("verify")) out.verify = doc["verify"].get<bool>();
  if (doc.contains("out")) out.out = doc["out"].get<std::string>();
  if (doc.contains("boundaries")) out.boundaries = boundaries_from_json(doc["boundaries"]);
  if (doc.contains("boundaries_from"))
    out.boundaries_from = doc["boundaries_from"].get<std::string>();

  if (doc.contains("sensitivity")) {
    const json& s = doc["sensitivity"];
    reject_unknown_keys(s, {"rho_design", "rho_true", "power_gridsize"}, "sensitivity");
    if (s.contains("rho_design")) out.rho_design = require_vector(s, "rho_design", "sensitivity");
    if (s.contains("rho_true")) out.rho_true = require_vector(s, "rho_true", "sensitivity");
    if (s.contains("power_gridsize"))
      out.power_gridsize = static_cast<int>(require_number(s, "power_gridsize", "sensitivity"));
  }
  if (doc.contains("sizing")) {
    const json& s = doc["sizing"];
    reject_unknown_keys(s, {"gridsize_fixed", "gridsize_delta"}, "sizing");
    if (s.contains("gridsize_fixed"))
      out.sizing_gridsize_fixed = static_cast<int>(require_number(s, "gridsize_fixed", "sizing"));
    if (s.contains("gridsize_delta"))
      out.sizing_gridsize_delta = static_cast<int>(require_number(s, "gridsize_delta", "sizing"));
  }
  return out;
}

DesignDocument load_design_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open configuration file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& err) {
    throw config_error("configuration is not valid JSON: " + std::string(err.what()));
  }
  return parse_design_document(doc);
}

nlohmann::json document_to_json(const DesignDocument& doc) {
  const DesignSpec& spec = doc.spec;
  json stat;
  stat["type"] = spec.statistic->name();
  if (const auto* linear = dynamic_cast<const LinearStatistic*>(spec.statistic.get()))
    stat["weights"] = linear->weights();
  json design{{"endpoints", spec.p},
              {"analyses", spec.K},
              {"alpha", spec.alpha},
              {"beta", spec.beta},
              {"theta0", spec.theta0},
              {"thetaA", spec.thetaA},
              {"statistic", stat}};
  std::vector<std::vector<double>> m(spec.p, std::vector<double>(spec.p));
  for (int i = 0; i < spec.p; ++i)
    for (int j = 0; j < spec.p; ++j) m[i][j] = spec.nuisance(i, j);
  design["nuisance"] = m;
  design["alpha_spending"] = {{"family", "power"}, {"exponent", spec.alpha_spending.exponent}};
  design["beta_spending"] = {{"family", "power"}, {"exponent", spec.beta_spending.exponent}};
  if (!spec.sample_sizes.empty()) design["sample_sizes"] = spec.sample_sizes;
  if (spec.information.empty())
    design["information"] = "equal";
  else
    design["information"] = spec.information;
  if (doc.information_max > 0.0) design["information_max"] = doc.information_max;

  json out{{"design", design},
           {"engine", to_string(doc.engine)},
           {"gridsize", doc.resolved_gridsize()},
           {"replicates", doc.replicates},
           {"seed", doc.seed},
           {"workers", doc.workers},
           {"mc_quantiles", doc.mc_quantiles == montecarlo::QuantileMode::survivor_fraction
                                ? "survivor-fraction"
                                : "overall-fraction"}};
  return out;
}

nlohmann::json boundaries_to_json(const Boundaries& boundaries) {
  json j;
  j["a"] = boundaries.a;
  j["b"] = boundaries.b;
  if (!boundaries.realized_psi.empty()) j["realized_psi"] = boundaries.realized_psi;
  if (!boundaries.realized_xi.empty()) j["realized_xi"] = boundaries.realized_xi;
  return j;
}

Boundaries boundaries_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("a") || !j.contains("b"))
    throw config_error("boundaries need 'a' and 'b' arrays");
  Boundaries out;
  for (const auto& v : j["a"]) out.a.push_back(v.get<double>());
  for (const auto& v : j["b"]) out.b.push_back(v.get<double>());
  if (out.a.size() != out.b.size()) throw config_error("boundary arrays differ in length");
  for (std::size_t k = 0; k < out.a.size(); ++k)
    if (out.a[k] > out.b[k]) throw config_error("boundaries must satisfy a <= b at every stage");
  return out;
}

}  // namespace mgst
