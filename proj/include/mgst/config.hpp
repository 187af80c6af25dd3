#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "mgst/design.hpp"
#include "mgst/montecarlo.hpp"

namespace mgst {

enum class EngineKind { simpson, delta, monte_carlo };

std::string to_string(EngineKind kind);
EngineKind engine_from_string(const std::string& name);

// A parsed design document: the DesignSpec plus engine choice, accuracy
// knobs and output paths. Parsing is strict; unknown keys are rejected.
struct DesignDocument {
  DesignSpec spec;
  double information_max = 0.0;  // 0 resolves to the last information level
  EngineKind engine = EngineKind::simpson;
  int gridsize = 0;  // 0 resolves to 6 for K > 1, 10 for fixed designs
  long long replicates = 1'000'000;
  std::uint64_t seed = 1;
  int workers = 1;
  montecarlo::QuantileMode mc_quantiles = montecarlo::QuantileMode::survivor_fraction;
  bool verify = false;
  std::string out;
  std::optional<Boundaries> boundaries;
  std::string boundaries_from;
  // Sensitivity sweep: design-time correlations, true correlations, and the
  // grid size used for the power evaluation.
  std::vector<double> rho_design;
  std::vector<double> rho_true;
  int power_gridsize = 6;
  int sizing_gridsize_fixed = 32;
  int sizing_gridsize_delta = 128;

  int resolved_gridsize() const { return gridsize > 0 ? gridsize : (spec.K > 1 ? 6 : 10); }
  double resolved_information_max() const;
};

DesignDocument parse_design_document(const nlohmann::json& doc);
DesignDocument load_design_document(const std::string& path);

// The full resolved configuration, echoed into every report so results are
// reproducible from the report alone.
nlohmann::json document_to_json(const DesignDocument& doc);

nlohmann::json boundaries_to_json(const Boundaries& boundaries);
Boundaries boundaries_from_json(const nlohmann::json& j);

}  // namespace mgst
