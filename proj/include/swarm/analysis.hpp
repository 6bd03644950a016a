// Post-hoc trajectory diagnostics: generalized center of mass, position
// recovery residual, tail suprema, energy drift, and ring-state metrics.
//
// "Ultimately bounded" is operationalized as suprema over the final
// window_fraction of a run whose horizon comfortably exceeds the observed
// transient; accelerations are recomputed from the right-hand side at the
// sample points rather than differenced numerically.

#pragma once

#include <cstddef>
#include <vector>

#include "swarm/integrate.hpp"
#include "swarm/linalg.hpp"
#include "swarm/model.hpp"

namespace swarm::analysis {

using linalg::Matrix;
using model::Model;

// Row k = sum_j q_kj r_j, the per-agent weighted position average given by
// the projection onto ker(A). Reduces to the swarm mean when the kernel is
// spanned by (1,...,1).
Matrix generalized_center(const Matrix& q, const Matrix& r);

// (r_k - sum_j q_kj r_j) - sum_j sinv_kj (-y_j - p_j(|x_j|) x_j) with
// (x, y) = (v, v') recomputed from the right-hand side; vanishes along
// trajectories of the linear-coupling model up to rounding.
Matrix position_residual(const Model& m, const model::SwarmState& s);

struct BoundsReport {
  double t_start = 0.0;
  double t_end = 0.0;
  double sup_speed = 0.0;
  double sup_accel = 0.0;
  double sup_center_offset = 0.0;
  std::vector<double> per_agent_speed;
  std::vector<double> per_agent_accel;
  std::vector<double> per_agent_offset;
  double drift_slope = 0.0;  // least-squares slope of |mean position|(t)
};

// Suprema over the trailing window_fraction of a position-form trajectory.
// For linear coupling the center is the kernel projection; for bounded
// coupling it degrades to the plain average.
BoundsReport tail_bounds(const Model& m, const integrate::Trajectory& traj,
                         double window_fraction = 0.5);

enum class TrajectoryKind {
  Lienard,  // states are (x, y) of the velocity-acceleration system
  Swarm,    // states are (r, v); converted via (x, y) = (v, v') from the rhs
};

// Max over samples and rows of |E_l(t) - E_l(0)|; linear coupling only.
// For an integrated Lienard trajectory this measures the integrator's
// conservation error; for a converted position-form trajectory it is an
// algebraic consistency diagnostic (zero up to rounding, since QA = 0).
double energy_drift(const Model& m, const integrate::Trajectory& traj,
                    TrajectoryKind kind = TrajectoryKind::Lienard);

struct RingMetrics {
  std::vector<double> mean_speed;
  std::vector<double> mean_radius;   // distance to the generalized center
  std::vector<double> radius_stddev;
};

RingMetrics ring_metrics(const Model& m, const integrate::Trajectory& traj,
                         double window_fraction = 0.5);

}  // namespace swarm::analysis
