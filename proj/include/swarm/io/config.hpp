// Run configuration: a single JSON document
//   { "seed"?, "scenario"? | "model", "integrator"?, "outputs"? }
// resolved into a model, an explicit initial condition, and an integrator
// setup. The resolved echo always carries explicit initial-state arrays so
// that re-running the echoed config reproduces the trajectory bit-for-bit.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "swarm/integrate.hpp"
#include "swarm/model.hpp"

namespace swarm::io {

struct RunConfig {
  model::Model model;
  model::SwarmState initial;
  integrate::Config integrator;
  double window_fraction = 0.5;
  std::uint64_t seed = 0;
  nlohmann::json resolved;  // full provenance echo
};

RunConfig config_from_json(const nlohmann::json& doc);
// Throws InputError with the parser's line/column diagnostic on bad JSON.
RunConfig load_config(const std::filesystem::path& path);

nlohmann::json matrix_to_json(const linalg::Matrix& m);
linalg::Matrix matrix_from_json(const nlohmann::json& j);

nlohmann::json integrator_to_json(const integrate::Config& cfg);
integrate::Config integrator_from_json(const nlohmann::json& j, integrate::Config base);

}  // namespace swarm::io
