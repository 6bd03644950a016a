#include "swarm/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "swarm/certify.hpp"
#include "swarm/errors.hpp"

namespace swarm::analysis {

namespace {

Matrix center_projection(const Model& m) {
  if (m.is_linear()) return m.linear().projection.Q;
  // No kernel structure for bounded coupling; report offsets from the mean.
  Matrix q(m.n, m.n, 1.0 / static_cast<double>(m.n));
  return q;
}

std::size_t window_start(const integrate::Trajectory& traj, double window_fraction) {
  if (traj.size() == 0) throw InputError("empty trajectory");
  if (!(window_fraction > 0.0) || window_fraction > 1.0)
    throw InputError("window_fraction must lie in (0, 1]");
  const double t0 = traj.times.front();
  const double t1 = traj.times.back();
  const double cut = t1 - window_fraction * (t1 - t0);
  std::size_t start = 0;
  while (start + 1 < traj.size() && traj.times[start] < cut) ++start;
  if (traj.size() - start < 2) {
    if (traj.size() < 2) throw InputError("tail window needs at least 2 samples");
    start = traj.size() - 2;
  }
  return start;
}

}  // namespace

Matrix generalized_center(const Matrix& q, const Matrix& r) {
  if (q.cols() != r.rows()) throw InputError("generalized_center: shape mismatch");
  return q * r;
}

Matrix position_residual(const Model& m, const model::SwarmState& s) {
  const auto& lc = m.linear();
  const auto deriv = model::rhs_linear(m, s);

  Matrix rhs(m.n, m.d);  // -y_j - p_j(|x_j|) x_j
  for (std::size_t k = 0; k < m.n; ++k) {
    const double z = linalg::norm(s.v.row(k));
    const double p = m.propulsion.law(k).eval(z);
    for (std::size_t c = 0; c < m.d; ++c) rhs(k, c) = -deriv.dv(k, c) - p * s.v(k, c);
  }
  return (s.r - lc.projection.Q * s.r) - lc.projection.S_inv * rhs;
}

BoundsReport tail_bounds(const Model& m, const integrate::Trajectory& traj,
                         double window_fraction) {
  const std::size_t start = window_start(traj, window_fraction);
  const Matrix q = center_projection(m);

  BoundsReport report;
  report.t_start = traj.times[start];
  report.t_end = traj.times.back();
  report.per_agent_speed.assign(m.n, 0.0);
  report.per_agent_accel.assign(m.n, 0.0);
  report.per_agent_offset.assign(m.n, 0.0);

  // Accumulators for the least-squares slope of |mean position|(t).
  double sum_t = 0.0, sum_tt = 0.0, sum_f = 0.0, sum_tf = 0.0;
  const double count = static_cast<double>(traj.size() - start);

  for (std::size_t i = start; i < traj.size(); ++i) {
    const auto s = model::unpack_swarm(traj.times[i], traj.states[i], m.n, m.d);
    const auto deriv = model::rhs_swarm(m, s);
    const Matrix center = q * s.r;
    for (std::size_t k = 0; k < m.n; ++k) {
      report.per_agent_speed[k] =
          std::max(report.per_agent_speed[k], linalg::norm(s.v.row(k)));
      report.per_agent_accel[k] =
          std::max(report.per_agent_accel[k], linalg::norm(deriv.dv.row(k)));
      double off = 0.0;
      for (std::size_t c = 0; c < m.d; ++c) {
        const double diff = s.r(k, c) - center(k, c);
        off += diff * diff;
      }
      report.per_agent_offset[k] = std::max(report.per_agent_offset[k], std::sqrt(off));
    }
    double mean_norm = 0.0;
    for (std::size_t c = 0; c < m.d; ++c) {
      double mc = 0.0;
      for (std::size_t k = 0; k < m.n; ++k) mc += s.r(k, c);
      mc /= static_cast<double>(m.n);
      mean_norm += mc * mc;
    }
    mean_norm = std::sqrt(mean_norm);
    sum_t += s.t;
    sum_tt += s.t * s.t;
    sum_f += mean_norm;
    sum_tf += s.t * mean_norm;
  }

  report.sup_speed = *std::max_element(report.per_agent_speed.begin(),
                                       report.per_agent_speed.end());
  report.sup_accel = *std::max_element(report.per_agent_accel.begin(),
                                       report.per_agent_accel.end());
  report.sup_center_offset = *std::max_element(report.per_agent_offset.begin(),
                                               report.per_agent_offset.end());

  const double denom = count * sum_tt - sum_t * sum_t;
  report.drift_slope = (denom != 0.0) ? (count * sum_tf - sum_t * sum_f) / denom : 0.0;
  return report;
}

double energy_drift(const Model& m, const integrate::Trajectory& traj,
                    TrajectoryKind kind) {
  if (!m.is_linear()) throw UsageError("energy_drift requires linear coupling");
  if (traj.size() == 0) throw InputError("empty trajectory");

  auto energies = [&](std::size_t i) {
    if (kind == TrajectoryKind::Lienard) {
      const auto s = model::unpack_lienard(traj.times[i], traj.states[i], m.n, m.d);
      return certify::manifold_energies(m, s).rows;
    }
    const auto s = model::unpack_swarm(traj.times[i], traj.states[i], m.n, m.d);
    const model::LienardState lie{s.t, s.v, model::rhs_linear(m, s).dv};
    return certify::manifold_energies(m, lie).rows;
  };

  const Matrix e0 = energies(0);
  double drift = 0.0;
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const Matrix diff = energies(i) - e0;
    for (std::size_t l = 0; l < m.n; ++l)
      drift = std::max(drift, linalg::norm(diff.row(l)));
  }
  return drift;
}

RingMetrics ring_metrics(const Model& m, const integrate::Trajectory& traj,
                         double window_fraction) {
  const std::size_t start = window_start(traj, window_fraction);
  const Matrix q = center_projection(m);

  RingMetrics metrics;
  metrics.mean_speed.assign(m.n, 0.0);
  metrics.mean_radius.assign(m.n, 0.0);
  metrics.radius_stddev.assign(m.n, 0.0);
  std::vector<double> radius_sq(m.n, 0.0);
  const double count = static_cast<double>(traj.size() - start);

  for (std::size_t i = start; i < traj.size(); ++i) {
    const auto s = model::unpack_swarm(traj.times[i], traj.states[i], m.n, m.d);
    const Matrix center = q * s.r;
    for (std::size_t k = 0; k < m.n; ++k) {
      metrics.mean_speed[k] += linalg::norm(s.v.row(k));
      double off = 0.0;
      for (std::size_t c = 0; c < m.d; ++c) {
        const double diff = s.r(k, c) - center(k, c);
        off += diff * diff;
      }
      const double radius = std::sqrt(off);
      metrics.mean_radius[k] += radius;
      radius_sq[k] += radius * radius;
    }
  }
  for (std::size_t k = 0; k < m.n; ++k) {
    metrics.mean_speed[k] /= count;
    metrics.mean_radius[k] /= count;
    const double var =
        std::max(0.0, radius_sq[k] / count - metrics.mean_radius[k] * metrics.mean_radius[k]);
    metrics.radius_stddev[k] = std::sqrt(var);
  }
  return metrics;
}

}  // namespace swarm::analysis
