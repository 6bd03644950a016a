#include "swarm/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "swarm/analysis.hpp"
#include "swarm/certify.hpp"
#include "swarm/errors.hpp"
#include "swarm/rng.hpp"

namespace swarm::scenarios {

namespace {

using linalg::Matrix;
using model::Model;
using model::PropulsionLaw;
using model::SwarmState;

Matrix parabolic_matrix(std::size_t n, double lambda) {
  Matrix a(n, n);
  const double off = -lambda / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = (i == j ? lambda + off : off);
  return a;
}

Matrix cycle_laplacian(std::size_t n, double w) {
  Matrix a(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    a(k, k) += 2.0 * w;
    a(k, (k + 1) % n) -= w;
    a(k, (k + n - 1) % n) -= w;
  }
  return a;
}

// I - Q with Q the projection onto span{(1,0,1,...,0), (1/n,...,n/n)}.
// The printed vectors are not orthogonal; Q needs an orthonormal basis, so
// they are orthonormalized here (the span is what the construction fixes).
Matrix example2_matrix(std::size_t n) {
  std::vector<double> u1(n), u2(n);
  for (std::size_t i = 0; i < n; ++i) {
    u1[i] = (i % 2 == 0) ? 1.0 : 0.0;
    u2[i] = static_cast<double>(i + 1) / static_cast<double>(n);
  }
  const double n1 = linalg::norm(u1);
  for (auto& c : u1) c /= n1;
  const double proj = linalg::dot(u2, u1);
  for (std::size_t i = 0; i < n; ++i) u2[i] -= proj * u1[i];
  const double n2 = linalg::norm(u2);
  if (n2 < 1e-12) throw InputError("example2 spanning vectors are dependent for this n");
  for (auto& c : u2) c /= n2;

  Matrix a = Matrix::identity(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) -= u1[i] * u1[j] + u2[i] * u2[j];
  return a;
}

SwarmState uniform_box_ic(std::size_t n, std::size_t d, double pos_lo, double pos_hi,
                          double vel_scale, std::uint64_t seed) {
  SwarmState s;
  s.t = 0.0;
  s.r = Matrix(n, d);
  s.v = Matrix(n, d);
  Rng rng = Rng::stream(seed, 0);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t c = 0; c < d; ++c) s.r(k, c) = rng.uniform(pos_lo, pos_hi);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t c = 0; c < d; ++c)
      s.v(k, c) = vel_scale == 0.0 ? 0.0 : rng.uniform(-vel_scale, vel_scale);
  return s;
}

integrate::Config default_integrator(double t_end, double sample_every) {
  integrate::Config cfg;
  cfg.method = integrate::Method::Embedded45;
  cfg.h = 1e-2;
  cfg.abs_tol = 1e-8;
  cfg.rel_tol = 1e-8;
  cfg.h_min = 1e-12;
  cfg.h_max = 1.0;
  cfg.t_end = t_end;
  cfg.sample_every = sample_every;
  return cfg;
}

std::size_t as_count(double v, const char* what) {
  if (!(v >= 1.0) || v != std::floor(v))
    throw InputError(std::string(what) + " must be a positive integer");
  return static_cast<std::size_t>(v);
}

model::CustomBoundedCoupling dispersal_coupling(double box_size) {
  const auto window = certify::dispersal_window(PropulsionLaw::van_der_pol());
  // Smooth compactly supported bump with analytic sup = 0.99 * depth/2,
  // attained at the origin of the (x, v) phase square.
  const double amplitude = 0.99 * window.depth / 2.0;
  const double radius = 2.0 * box_size;
  model::CustomBoundedCoupling coupling;
  coupling.bound = amplitude;
  coupling.label = "dispersal_pair";
  coupling.force = [amplitude, radius](const Matrix& r, const Matrix& v, Matrix& force) {
    const double rho2 = (r(0, 0) * r(0, 0) + r(1, 0) * r(1, 0) + v(0, 0) * v(0, 0) +
                         v(1, 0) * v(1, 0)) /
                        (radius * radius);
    double f = 0.0;
    if (rho2 < 1.0) f = amplitude * std::exp(1.0 - 1.0 / (1.0 - rho2));
    force(0, 0) = f;
    force(1, 0) = -f;
  };
  return coupling;
}

}  // namespace

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries = {
      {"parabolic",
       "all-to-all spring coupling lambda (I - J/n); mills about the swarm mean",
       {{"n", 30}, {"d", 2}, {"lambda", 1.0}, {"pos_scale", 2.0}, {"vel_scale", 1.0},
        {"seed", 1}, {"t_end", 400.0}, {"sample_every", 0.5}}},
      {"example2",
       "rank-2 kernel coupling I - Q, positions uniform in [1,5]^2, zero velocities",
       {{"n", 30}, {"seed", 2}, {"t_end", 400.0}, {"sample_every", 0.5}}},
      {"nearest_neighbor_ring",
       "cycle-graph Laplacian coupling with weight w; kernel spanned by (1,...,1)",
       {{"n", 8}, {"d", 2}, {"w", 1.0}, {"pos_scale", 2.0}, {"vel_scale", 1.0},
        {"seed", 3}, {"t_end", 200.0}, {"sample_every", 0.5}}},
      {"morse_swarm",
       "bounded Morse interaction; speeds certified by the kinetic-energy bound",
       {{"n", 5}, {"d", 2}, {"C_a", 0.5}, {"l_a", 2.0}, {"C_r", 1.0}, {"l_r", 0.5},
        {"pos_scale", 2.0}, {"vel_scale", 1.0}, {"seed", 4}, {"t_end", 300.0},
        {"sample_every", 0.5}}},
      {"dispersal_pair",
       "mirrored pair on the line escaping at the lower window speed",
       {{"M", 10.0}, {"seed", 5}, {"t_end", 100.0}, {"sample_every", 0.1}}},
      {"helix",
       "two-agent drifting orbit with closed-form solution (a^2 + lambda b^2 = 1)",
       {{"a_speed", 0.6}, {"b_radius", 0.8}, {"lambda", 1.0}, {"t_end", 50.0},
        {"sample_every", 0.1}, {"h", 1e-3}}},
  };
  return entries;
}

Scenario build(const std::string& name, const std::map<std::string, double>& overrides) {
  const auto& entries = catalog();
  const auto it = std::find_if(entries.begin(), entries.end(),
                               [&name](const CatalogEntry& e) { return e.name == name; });
  if (it == entries.end()) throw InputError("unknown scenario '" + name + "'");

  std::map<std::string, double> params = it->defaults;
  for (const auto& [key, value] : overrides) {
    if (params.find(key) == params.end())
      throw InputError("scenario '" + name + "' has no parameter '" + key + "'");
    params[key] = value;
  }

  Scenario scenario;
  scenario.name = name;
  scenario.params = params;
  scenario.seed = params.count("seed") ? static_cast<std::uint64_t>(params["seed"]) : 0;
  scenario.integrator = default_integrator(params["t_end"], params["sample_every"]);

  const auto vdp = PropulsionLaw::van_der_pol();

  if (name == "parabolic") {
    const std::size_t n = as_count(params["n"], "n");
    const std::size_t d = as_count(params["d"], "d");
    scenario.model = model::make_linear_model(n, d, model::Propulsion::homogeneous(vdp, n),
                                              parabolic_matrix(n, params["lambda"]));
    scenario.initial = uniform_box_ic(n, d, -params["pos_scale"], params["pos_scale"],
                                      params["vel_scale"], scenario.seed);
    scenario.checks = {"tail_unit_speed", "ring_radius"};
  } else if (name == "example2") {
    const std::size_t n = as_count(params["n"], "n");
    scenario.model = model::make_linear_model(n, 2, model::Propulsion::homogeneous(vdp, n),
                                              example2_matrix(n));
    scenario.initial = uniform_box_ic(n, 2, 1.0, 5.0, 0.0, scenario.seed);
    scenario.checks = {"tail_unit_speed"};
  } else if (name == "nearest_neighbor_ring") {
    const std::size_t n = as_count(params["n"], "n");
    const std::size_t d = as_count(params["d"], "d");
    scenario.model = model::make_linear_model(n, d, model::Propulsion::homogeneous(vdp, n),
                                              cycle_laplacian(n, params["w"]));
    scenario.initial = uniform_box_ic(n, d, -params["pos_scale"], params["pos_scale"],
                                      params["vel_scale"], scenario.seed);
    scenario.checks = {"tail_unit_speed"};
  } else if (name == "morse_swarm") {
    const std::size_t n = as_count(params["n"], "n");
    const std::size_t d = as_count(params["d"], "d");
    model::MorseCoupling morse;
    morse.C_a = params["C_a"];
    morse.l_a = params["l_a"];
    morse.C_r = params["C_r"];
    morse.l_r = params["l_r"];
    scenario.model =
        model::make_morse_model(n, d, model::Propulsion::homogeneous(vdp, n), morse);
    scenario.initial = uniform_box_ic(n, d, -params["pos_scale"], params["pos_scale"],
                                      params["vel_scale"], scenario.seed);
    scenario.checks = {"morse_speed_below_m1"};
  } else if (name == "dispersal_pair") {
    const double box = params["M"];
    if (!(box > 0.0)) throw InputError("dispersal_pair needs M > 0");
    scenario.model = model::make_custom_bounded_model(
        2, 1, model::Propulsion::homogeneous(vdp, 2), dispersal_coupling(box));
    scenario.initial.t = 0.0;
    scenario.initial.r = Matrix(2, 1);
    scenario.initial.v = Matrix(2, 1);
    scenario.initial.r(0, 0) = box + 1.0;
    scenario.initial.r(1, 0) = -(box + 1.0);
    scenario.initial.v(0, 0) = 1.0;
    scenario.initial.v(1, 0) = -1.0;
    scenario.integrator.abs_tol = 1e-9;
    scenario.integrator.rel_tol = 1e-9;
    scenario.checks = {"dispersal_escape"};
  } else if (name == "helix") {
    const double lambda = params["lambda"];
    scenario.model = model::make_linear_model(2, 3, model::Propulsion::homogeneous(vdp, 2),
                                              parabolic_matrix(2, lambda));
    scenario.initial =
        helix_reference(params["a_speed"], params["b_radius"], lambda, 0.0);
    scenario.integrator.method = integrate::Method::Rk4;
    scenario.integrator.h = params["h"];
    scenario.checks = {"helix_position_error", "helix_drift_slope"};
  }
  return scenario;
}

model::SwarmState helix_reference(double a_speed, double b_radius, double lambda, double t) {
  const double constraint = a_speed * a_speed + lambda * b_radius * b_radius;
  if (std::abs(constraint - 1.0) > 1e-12)
    throw InputError("helix requires a_speed^2 + lambda*b_radius^2 = 1 (zero-propulsion "
                     "speed condition)");
  const double w = std::sqrt(lambda);
  SwarmState s;
  s.t = t;
  s.r = Matrix(2, 3);
  s.v = Matrix(2, 3);
  const double c = std::cos(w * t), sn = std::sin(w * t);
  s.r(0, 0) = a_speed * t;
  s.r(0, 1) = b_radius * c;
  s.r(0, 2) = b_radius * sn;
  s.v(0, 0) = a_speed;
  s.v(0, 1) = -b_radius * w * sn;
  s.v(0, 2) = b_radius * w * c;
  for (std::size_t cc = 0; cc < 3; ++cc) {
    s.r(1, cc) = (cc == 0) ? s.r(0, cc) : -s.r(0, cc);
    s.v(1, cc) = (cc == 0) ? s.v(0, cc) : -s.v(0, cc);
  }
  return s;
}

std::vector<CheckResult> run_checks(const Scenario& scenario,
                                    const integrate::Trajectory& traj) {
  std::vector<CheckResult> results;
  char detail[256];

  for (const std::string& id : scenario.checks) {
    CheckResult res;
    res.id = id;
    if (id == "helix_position_error") {
      double worst = 0.0;
      for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto s = model::unpack_swarm(traj.times[i], traj.states[i], 2, 3);
        const auto exact =
            helix_reference(scenario.params.at("a_speed"), scenario.params.at("b_radius"),
                            scenario.params.at("lambda"), traj.times[i]);
        worst = std::max(worst, linalg::max_abs(s.r - exact.r));
      }
      res.value = worst;
      res.pass = worst <= 1e-6;
      std::snprintf(detail, sizeof(detail), "max position error vs closed form = %.3e",
                    worst);
    } else if (id == "helix_drift_slope") {
      const auto bounds = analysis::tail_bounds(scenario.model, traj, 0.5);
      const double target = scenario.params.at("a_speed");
      res.value = bounds.drift_slope;
      res.pass = std::abs(bounds.drift_slope - target) <= 1e-4;
      std::snprintf(detail, sizeof(detail), "center drift slope = %.6f (target %.6f)",
                    bounds.drift_slope, target);
    } else if (id == "dispersal_escape") {
      const auto window =
          certify::dispersal_window(scenario.model.propulsion.law(0));
      const double box = scenario.params.at("M");
      double min_margin = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto s = model::unpack_swarm(traj.times[i], traj.states[i], 2, 1);
        min_margin = std::min(min_margin, s.r(0, 0) - (box + window.v_lo * s.t));
      }
      res.value = min_margin;
      res.pass = min_margin >= 0.0;
      std::snprintf(detail, sizeof(detail),
                    "min of x(t) - (M + v_lo t) = %.4f with v_lo = %.4f", min_margin,
                    window.v_lo);
    } else if (id == "tail_unit_speed") {
      const auto metrics = analysis::ring_metrics(scenario.model, traj, 0.5);
      double worst = 0.0;
      for (double sp : metrics.mean_speed) worst = std::max(worst, std::abs(sp - 1.0));
      res.value = worst;
      res.pass = worst <= 0.01;
      std::snprintf(detail, sizeof(detail), "max |tail mean speed - 1| = %.4f", worst);
    } else if (id == "ring_radius") {
      const auto metrics = analysis::ring_metrics(scenario.model, traj, 0.5);
      const double target = 1.0 / std::sqrt(scenario.params.at("lambda"));
      double worst = 0.0;
      for (double r : metrics.mean_radius) worst = std::max(worst, std::abs(r - target));
      res.value = worst;
      res.pass = worst <= 0.02;
      std::snprintf(detail, sizeof(detail),
                    "max |tail mean radius - %.4f| = %.4f (circular-orbit balance)", target,
                    worst);
    } else if (id == "morse_speed_below_m1") {
      const auto cert = certify::theorem2_velocity_bound(scenario.model);
      const auto bounds = analysis::tail_bounds(scenario.model, traj, 0.5);
      res.value = cert.m1 - bounds.sup_speed;
      res.pass = bounds.sup_speed <= cert.m1;
      std::snprintf(detail, sizeof(detail), "tail sup speed %.4f vs certified M1 %.4f",
                    bounds.sup_speed, cert.m1);
    } else {
      res.pass = false;
      std::snprintf(detail, sizeof(detail), "unknown check id");
    }
    res.detail = detail;
    results.push_back(std::move(res));
  }
  return results;
}

}  // namespace swarm::scenarios
