// Named scenario catalog. Every entry resolves deterministically from
// (name, overrides, seed) to a model, an initial condition, an integrator
// configuration, and a list of post-run checks.
//
//   parabolic(n, lambda)        A = lambda (I - J/n); the all-to-all spring model
//   example2(n)                 A = I - Q, Q projecting onto the span of
//                               (1,0,1,...,0) and (1/n,...,n/n); ring-state run
//   nearest_neighbor_ring(n, w) cycle-graph Laplacian coupling
//   morse_swarm(n, ...)         bounded Morse interaction
//   dispersal_pair(M)           two mirrored agents on the line with a smooth
//                               bump perturbation below half the propulsion dip
//   helix(a_speed, b_radius, lambda)
//                               two-agent drifting circular orbit with a known
//                               closed form
//
// Checks are evaluated against a finished trajectory by run_checks.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "swarm/integrate.hpp"
#include "swarm/model.hpp"

namespace swarm::scenarios {

struct Scenario {
  std::string name;
  model::Model model;
  model::SwarmState initial;
  integrate::Config integrator;
  std::vector<std::string> checks;
  std::map<std::string, double> params;  // fully resolved, for provenance
  std::uint64_t seed = 0;
};

struct CheckResult {
  std::string id;
  bool pass = false;
  double value = 0.0;
  std::string detail;
};

struct CatalogEntry {
  std::string name;
  std::string description;
  std::map<std::string, double> defaults;
};

const std::vector<CatalogEntry>& catalog();

// Unknown names and unknown override keys raise InputError. Numeric
// overrides replace catalog defaults; "seed" reseeds the initial condition.
Scenario build(const std::string& name, const std::map<std::string, double>& overrides = {});

std::vector<CheckResult> run_checks(const Scenario& scenario,
                                    const integrate::Trajectory& traj);

// Exact two-agent drifting-orbit state at time t. Requires
// a_speed^2 + lambda b_radius^2 = 1 within 1e-12 (the zero-propulsion
// speed condition), d = 3.
model::SwarmState helix_reference(double a_speed, double b_radius, double lambda, double t);

}  // namespace swarm::scenarios
