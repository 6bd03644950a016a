// Trajectory CSV: flat wide format, one row per sample,
// header t,r_1_1,...,r_n_d,v_1_1,...,v_n_d. Values are written with 17
// significant digits so the file round-trips doubles exactly.

#pragma once

#include <cstddef>
#include <filesystem>

#include "swarm/integrate.hpp"

namespace swarm::io {

void write_trajectory_csv(const std::filesystem::path& path,
                          const integrate::Trajectory& traj, std::size_t n, std::size_t d);

// Returns the trajectory plus the (n*d) block size inferred from the header.
struct CsvTrajectory {
  integrate::Trajectory traj;
  std::size_t block = 0;  // n*d
};
CsvTrajectory read_trajectory_csv(const std::filesystem::path& path);

}  // namespace swarm::io
