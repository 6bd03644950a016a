#include "swarm/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "swarm/errors.hpp"

namespace swarm::integrate {

namespace {

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

// Dormand-Prince 5(4) tableau. The fifth-order solution propagates; the
// embedded fourth-order difference drives the error estimate. FSAL: k7 of
// an accepted step is k1 of the next.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

// Cubic Hermite interpolation of (t0,y0,f0)-(t1,y1,f1) at t.
void hermite(double t0, std::span<const double> y0, std::span<const double> f0, double t1,
             std::span<const double> y1, std::span<const double> f1, double t,
             std::vector<double>& out) {
  const double h = t1 - t0;
  const double s = (t - t0) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  const double h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s);
  const double h11 = s * s * (s - 1);
  out.resize(y0.size());
  for (std::size_t i = 0; i < y0.size(); ++i)
    out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
}

// Sample grid: k * sample_every for k = 0 .. ceil(t_end / sample_every),
// with the last point clamped to t0 + t_end. t_end = 0 yields the single
// initial snapshot.
struct Sampler {
  Sampler(double t0, const Config& cfg) : t0_(t0), se_(cfg.sample_every) {
    const double span = cfg.t_end;
    last_index_ = (span <= 0.0) ? 0 : static_cast<long>(std::ceil(span / se_ - 1e-12));
    t_final_ = t0 + span;
  }
  bool done() const { return next_ > last_index_; }
  double next_time() const {
    const double t = t0_ + static_cast<double>(next_) * se_;
    return std::min(t, t_final_);
  }
  void advance() { ++next_; }

  double t0_, se_, t_final_;
  long next_ = 0, last_index_ = 0;
};

void emit_samples(Sampler& sampler, Trajectory& traj, double t0,
                  std::span<const double> y0, std::span<const double> f0, double t1,
                  std::span<const double> y1, std::span<const double> f1) {
  std::vector<double> interp;
  const double snap = 1e-12 * std::max(1.0, std::abs(t1));
  while (!sampler.done() && sampler.next_time() <= t1 + snap) {
    const double ts = sampler.next_time();
    if (ts >= t1 - snap) {
      traj.times.push_back(t1);
      traj.states.emplace_back(y1.begin(), y1.end());
    } else {
      hermite(t0, y0, f0, t1, y1, f1, ts, interp);
      traj.times.push_back(ts);
      traj.states.push_back(interp);
    }
    sampler.advance();
  }
}

Trajectory integrate_rk4(const Rhs& rhs, double t0, std::vector<double> y0,
                         const Config& cfg) {
  Trajectory traj;
  Sampler sampler(t0, cfg);
  traj.times.push_back(t0);
  traj.states.push_back(y0);
  sampler.advance();

  const double t_final = t0 + cfg.t_end;
  const double time_dust = 1e-12 * std::max(1.0, std::abs(t_final));
  std::vector<double> f0(y0.size()), f1(y0.size());
  rhs(t0, y0, f0);
  if (!all_finite(f0)) throw BlowUpError("non-finite right-hand side", t0);

  double t = t0;
  long step_index = 0;
  while (!sampler.done()) {
    const double remaining = t_final - t;
    if (remaining <= time_dust) break;
    const bool full_step = remaining >= cfg.h;
    const double h = full_step ? cfg.h : remaining;
    std::vector<double> y1 = step_rk4(rhs, t, y0, h);
    // Track time by step count instead of accumulation to avoid drift.
    const double t1 = full_step ? t0 + static_cast<double>(++step_index) * cfg.h : t_final;
    rhs(t1, y1, f1);
    if (!all_finite(f1)) throw BlowUpError("non-finite right-hand side", t1);
    emit_samples(sampler, traj, t, y0, f0, t1, y1, f1);
    ++traj.accepted;
    t = t1;
    y0.swap(y1);
    f0.swap(f1);
  }
  return traj;
}

Trajectory integrate_dp45(const Rhs& rhs, double t0, std::vector<double> y0,
                          const Config& cfg) {
  const std::size_t dim = y0.size();
  Trajectory traj;
  Sampler sampler(t0, cfg);
  traj.times.push_back(t0);
  traj.states.push_back(y0);
  sampler.advance();

  const double t_final = t0 + cfg.t_end;
  const double time_dust = 1e-12 * std::max(1.0, std::abs(t_final));
  std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim);
  std::vector<double> ytmp(dim), y1(dim);

  rhs(t0, y0, k1);
  if (!all_finite(k1)) throw BlowUpError("non-finite right-hand side", t0);

  double t = t0;
  double h = std::clamp(cfg.h, cfg.h_min, cfg.h_max);
  while (!sampler.done()) {
    const double remaining = t_final - t;
    if (remaining <= time_dust) break;
    // The final partial step may legitimately fall below h_min; only a
    // controller-driven shrink counts as stiffness.
    const double h_try = std::min(h, remaining);

    auto stage = [&](std::vector<double>& k, double c, auto&&... weighted) {
      for (std::size_t i = 0; i < dim; ++i) {
        double acc = y0[i];
        ((acc += h_try * weighted.first * (*weighted.second)[i]), ...);
        ytmp[i] = acc;
      }
      rhs(t + c * h_try, ytmp, k);
      if (!all_finite(k)) throw BlowUpError("non-finite right-hand side", t + c * h_try);
    };
    stage(k2, c2, std::pair{a21, &k1});
    stage(k3, c3, std::pair{a31, &k1}, std::pair{a32, &k2});
    stage(k4, c4, std::pair{a41, &k1}, std::pair{a42, &k2}, std::pair{a43, &k3});
    stage(k5, c5, std::pair{a51, &k1}, std::pair{a52, &k2}, std::pair{a53, &k3},
          std::pair{a54, &k4});
    stage(k6, 1.0, std::pair{a61, &k1}, std::pair{a62, &k2}, std::pair{a63, &k3},
          std::pair{a64, &k4}, std::pair{a65, &k5});

    for (std::size_t i = 0; i < dim; ++i)
      y1[i] = y0[i] +
              h_try * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    if (!all_finite(y1)) throw BlowUpError("non-finite state", t + h_try);
    rhs(t + h_try, y1, k7);
    if (!all_finite(k7)) throw BlowUpError("non-finite right-hand side", t + h_try);

    // Scaled RMS norm of the embedded 4th-order error estimate.
    double err_sq = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double e = h_try * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                e6 * k6[i] + e7 * k7[i]);
      const double scale =
          cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
      err_sq += (e / scale) * (e / scale);
    }
    const double err = std::sqrt(err_sq / static_cast<double>(dim));

    const double factor =
        std::min(5.0, std::max(0.2, 0.9 * std::pow(err > 0.0 ? 1.0 / err : 1e10, 0.2)));
    if (err <= 1.0) {
      const double t1 = t + h_try;
      emit_samples(sampler, traj, t, y0, k1, t1, y1, k7);
      ++traj.accepted;
      t = t1;
      y0.swap(y1);
      k1.swap(k7);  // FSAL
      h = std::clamp(h_try * factor, cfg.h_min, cfg.h_max);
    } else {
      ++traj.rejected;
      const double h_new = h_try * factor;
      if (h_new < cfg.h_min)
        throw StiffnessError("adaptive step underflow below h_min", t);
      h = h_new;
    }
  }
  return traj;
}

}  // namespace

void Config::validate() const {
  if (!(h > 0.0)) throw InputError("integrator step h must be positive");
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
    throw InputError("integrator tolerances must be positive");
  if (!(h_min <= h_max)) throw InputError("integrator needs h_min <= h_max");
  if (!(sample_every > 0.0)) throw InputError("sample_every must be positive");
  if (!std::isfinite(t_end) || t_end < 0.0)
    throw InputError("t_end must be finite and nonnegative");
}

std::vector<double> step_rk4(const Rhs& rhs, double t, std::span<const double> y, double h) {
  const std::size_t dim = y.size();
  std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), ytmp(dim), out(dim);

  auto check = [&](const std::vector<double>& k, double tk) {
    if (!all_finite(k)) throw BlowUpError("non-finite rk4 stage", tk);
  };
  rhs(t, y, k1);
  check(k1, t);
  for (std::size_t i = 0; i < dim; ++i) ytmp[i] = y[i] + 0.5 * h * k1[i];
  rhs(t + 0.5 * h, ytmp, k2);
  check(k2, t + 0.5 * h);
  for (std::size_t i = 0; i < dim; ++i) ytmp[i] = y[i] + 0.5 * h * k2[i];
  rhs(t + 0.5 * h, ytmp, k3);
  check(k3, t + 0.5 * h);
  for (std::size_t i = 0; i < dim; ++i) ytmp[i] = y[i] + h * k3[i];
  rhs(t + h, ytmp, k4);
  check(k4, t + h);
  for (std::size_t i = 0; i < dim; ++i)
    out[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

  if (!all_finite(out)) throw BlowUpError("non-finite state after rk4 step", t + h);
  return out;
}

Trajectory integrate(const Rhs& rhs, double t0, std::vector<double> y0, const Config& cfg) {
  cfg.validate();
  if (!all_finite(y0)) throw InputError("initial state has non-finite entries");
  if (cfg.method == Method::Rk4) return integrate_rk4(rhs, t0, std::move(y0), cfg);
  return integrate_dp45(rhs, t0, std::move(y0), cfg);
}

}  // namespace swarm::integrate
