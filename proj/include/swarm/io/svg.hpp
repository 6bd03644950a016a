// Native SVG rendering (no plotting dependency): agent traces with the
// generalized-center path, the Lyapunov value over time, and the energy
// drift curve. Fixed 1000x1000 canvas; the data-coordinate window is
// recorded in data-* attributes on the root element so consumers can invert
// the mapping. Output is deterministic for fixed input.

#pragma once

#include <filesystem>
#include <vector>

#include "swarm/certify.hpp"
#include "swarm/integrate.hpp"
#include "swarm/model.hpp"

namespace swarm::io {

// Tail-window traces: one polyline per agent (first two coordinates, or
// (t, x) when d = 1), the generalized-center path, and end-position dots.
void write_traces_svg(const std::filesystem::path& path, const model::Model& m,
                      const integrate::Trajectory& traj, double window_fraction = 0.5);

void write_lyapunov_svg(const std::filesystem::path& path,
                        const certify::LyapunovTrace& trace);

void write_energy_svg(const std::filesystem::path& path, const std::vector<double>& t,
                      const std::vector<double>& drift);

}  // namespace swarm::io
