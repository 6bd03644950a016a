#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "swarm/errors.hpp"
#include "swarm/integrate.hpp"
#include "swarm/model.hpp"
#include "swarm/scenarios.hpp"

using namespace swarm;
namespace si = swarm::integrate;
using si::Config;
using si::Method;
using si::Rhs;
using si::step_rk4;

namespace {

const Rhs kDecay = [](double, std::span<const double> y, std::span<double> dydt) {
  dydt[0] = -y[0];
};

const Rhs kHarmonic = [](double, std::span<const double> y, std::span<double> dydt) {
  dydt[0] = y[1];
  dydt[1] = -y[0];
};

}  // namespace

TEST_CASE("single rk4 step on exponential decay") {
  const auto out = step_rk4(kDecay, 0.0, std::vector<double>{1.0}, 0.1);
  CHECK(std::abs(out[0] - std::exp(-0.1)) <= 1e-7);
}

TEST_CASE("rk4 returns to start after one harmonic period") {
  std::vector<double> y{1.0, 0.0};
  const double period = 2.0 * 3.14159265358979323846;
  const int steps = static_cast<int>(period / 1e-3);
  const double h = period / steps;
  for (int i = 0; i < steps; ++i) y = step_rk4(kHarmonic, i * h, y, h);
  CHECK(std::abs(y[0] - 1.0) <= 1e-9);
  CHECK(std::abs(y[1]) <= 1e-9);
}

TEST_CASE("zero vector field leaves the state unchanged") {
  const Rhs zero = [](double, std::span<const double>, std::span<double> dydt) {
    dydt[0] = 0.0;
  };
  const auto out = step_rk4(zero, 0.0, std::vector<double>{3.5}, 0.7);
  CHECK(out[0] == 3.5);
}

TEST_CASE("config validation") {
  Config cfg;
  cfg.h = -1.0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = Config{};
  cfg.abs_tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = Config{};
  cfg.h_min = 1.0;
  cfg.h_max = 0.1;
  CHECK_THROWS_AS(cfg.validate(), InputError);
}

TEST_CASE("t_end = 0 yields a single snapshot") {
  Config cfg;
  cfg.t_end = 0.0;
  const auto traj = si::integrate(kDecay, 0.0, {1.0}, cfg);
  CHECK(traj.size() == 1);
  CHECK(traj.times[0] == 0.0);
}

TEST_CASE("sample count matches the cadence contract") {
  Config cfg;
  cfg.method = Method::Rk4;
  cfg.h = 1e-2;
  cfg.t_end = 1.0;
  cfg.sample_every = 0.1;
  auto traj = si::integrate(kDecay, 0.0, {1.0}, cfg);
  CHECK(traj.size() == 11);  // ceil(1.0/0.1) + 1
  CHECK(traj.times.front() == 0.0);
  CHECK(traj.times.back() == doctest::Approx(1.0));
  for (std::size_t i = 1; i < traj.size(); ++i) CHECK(traj.times[i] > traj.times[i - 1]);

  // Non-commensurate horizon still lands the final sample on t_end.
  cfg.t_end = 1.05;
  traj = si::integrate(kDecay, 0.0, {1.0}, cfg);
  CHECK(traj.size() == 12);
  CHECK(traj.times.back() == doctest::Approx(1.05));
}

TEST_CASE("adaptive integration of exponential decay hits tolerance") {
  Config cfg;
  cfg.method = Method::Embedded45;
  cfg.abs_tol = 1e-10;
  cfg.rel_tol = 1e-10;
  cfg.t_end = 5.0;
  cfg.sample_every = 0.5;
  const auto traj = si::integrate(kDecay, 0.0, {1.0}, cfg);
  for (std::size_t i = 0; i < traj.size(); ++i)
    CHECK(std::abs(traj.states[i][0] - std::exp(-traj.times[i])) <= 1e-8);
  CHECK(traj.accepted > 0);
}

TEST_CASE("helix integration matches the closed form to 1e-6") {
  const auto scenario = scenarios::build("helix");
  const auto traj = si::integrate(model::swarm_rhs(scenario.model), 0.0,
                              model::pack(scenario.initial.r, scenario.initial.v),
                              scenario.integrator);
  double worst = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto s = model::unpack_swarm(traj.times[i], traj.states[i], 2, 3);
    const auto exact = scenarios::helix_reference(0.6, 0.8, 1.0, traj.times[i]);
    worst = std::max(worst, linalg::max_abs(s.r - exact.r));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("halving the step divides the helix error by about 16") {
  const auto scenario = scenarios::build("helix", {{"t_end", 10.0}, {"sample_every", 0.5}});
  auto error_at = [&](double h) {
    auto cfg = scenario.integrator;
    cfg.h = h;
    const auto traj = si::integrate(model::swarm_rhs(scenario.model), 0.0,
                                model::pack(scenario.initial.r, scenario.initial.v), cfg);
    double worst = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
      const auto s = model::unpack_swarm(traj.times[i], traj.states[i], 2, 3);
      const auto exact = scenarios::helix_reference(0.6, 0.8, 1.0, traj.times[i]);
      worst = std::max(worst, linalg::max_abs(s.r - exact.r));
    }
    return worst;
  };
  const double e1 = error_at(4e-3);
  const double e2 = error_at(2e-3);
  const double order = std::log2(e1 / e2);
  CHECK(order >= 3.7);
  CHECK(order <= 4.3);
}

TEST_CASE("blow-up is reported with a time stamp") {
  const Rhs explode = [](double, std::span<const double> y, std::span<double> dydt) {
    dydt[0] = y[0] * y[0];  // finite-time blow-up from y(0) = 1 at t = 1
  };
  Config cfg;
  cfg.method = Method::Rk4;
  cfg.h = 1e-3;
  cfg.t_end = 2.0;
  cfg.sample_every = 0.1;
  CHECK_THROWS_AS(si::integrate(explode, 0.0, {1.0}, cfg), BlowUpError);
}

TEST_CASE("step underflow reports stiffness") {
  // Discontinuous right-hand side keeps the error estimate large, driving
  // the controller below h_min.
  const Rhs nasty = [](double t, std::span<const double>, std::span<double> dydt) {
    dydt[0] = (std::sin(1e8 * t) > 0) ? 1e8 : -1e8;
  };
  Config cfg;
  cfg.method = Method::Embedded45;
  cfg.h = 1e-2;
  cfg.h_min = 1e-6;
  cfg.abs_tol = 1e-12;
  cfg.rel_tol = 1e-12;
  cfg.t_end = 1.0;
  cfg.sample_every = 0.5;
  CHECK_THROWS_AS(si::integrate(nasty, 0.0, {0.0}, cfg), StiffnessError);
}

TEST_CASE("identical inputs give bit-identical trajectories") {
  const auto scenario = scenarios::build("parabolic", {{"n", 5.0}, {"t_end", 20.0}});
  const auto rhs = model::swarm_rhs(scenario.model);
  const auto flat = model::pack(scenario.initial.r, scenario.initial.v);
  const auto t1 = si::integrate(rhs, 0.0, flat, scenario.integrator);
  const auto t2 = si::integrate(rhs, 0.0, flat, scenario.integrator);
  REQUIRE(t1.size() == t2.size());
  for (std::size_t i = 0; i < t1.size(); ++i) {
    CHECK(t1.times[i] == t2.times[i]);
    CHECK(t1.states[i] == t2.states[i]);
  }
}
