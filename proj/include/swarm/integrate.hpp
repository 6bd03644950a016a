// Explicit time integration on flat state vectors: classical RK4 with a
// fixed step, and an embedded Dormand-Prince 4(5) pair with safeguarded
// step control. Output is sampled on a fixed cadence by cubic Hermite
// interpolation of accepted steps, so the sampling grid never constrains
// the step sequence.

#pragma once

#include <functional>
#include <span>
#include <vector>

namespace swarm::integrate {

using Rhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

enum class Method { Rk4, Embedded45 };

struct Config {
  Method method = Method::Embedded45;
  double h = 1e-2;  // fixed step for rk4; initial step for embedded45
  double abs_tol = 1e-9;
  double rel_tol = 1e-9;
  double h_min = 1e-12;
  double h_max = 1.0;
  double t_end = 10.0;
  double sample_every = 0.1;

  void validate() const;  // throws InputError
};

struct Trajectory {
  std::vector<double> times;                // strictly increasing, first = t0
  std::vector<std::vector<double>> states;  // one flat state per time
  long accepted = 0;
  long rejected = 0;

  std::size_t size() const { return times.size(); }
};

// One classical four-stage Runge-Kutta step; returns the state at t + h.
// Throws BlowUpError if any stage goes non-finite.
std::vector<double> step_rk4(const Rhs& rhs, double t, std::span<const double> y, double h);

Trajectory integrate(const Rhs& rhs, double t0, std::vector<double> y0, const Config& cfg);

}  // namespace swarm::integrate
