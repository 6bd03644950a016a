#include "swarm/io/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "swarm/errors.hpp"

namespace swarm::io {

void write_trajectory_csv(const std::filesystem::path& path,
                          const integrate::Trajectory& traj, std::size_t n, std::size_t d) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");

  out << "t";
  for (const char* block : {"r", "v"})
    for (std::size_t k = 1; k <= n; ++k)
      for (std::size_t c = 1; c <= d; ++c) out << ',' << block << '_' << k << '_' << c;
  out << '\n';

  char buf[32];
  for (std::size_t i = 0; i < traj.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", traj.times[i]);
    out << buf;
    for (double v : traj.states[i]) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

CsvTrajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open trajectory file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty trajectory file " + path.string());

  std::size_t columns = 1;
  for (char c : line)
    if (c == ',') ++columns;
  if (columns < 3 || (columns - 1) % 2 != 0)
    throw InputError("trajectory header must carry t plus 2*n*d value columns");

  CsvTrajectory out;
  out.block = (columns - 1) / 2;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    row.reserve(columns);
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != columns)
      throw InputError("trajectory row has " + std::to_string(row.size()) +
                       " cells, expected " + std::to_string(columns));
    out.traj.times.push_back(row.front());
    out.traj.states.emplace_back(row.begin() + 1, row.end());
  }
  return out;
}

}  // namespace swarm::io
