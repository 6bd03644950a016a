// Dissipativity certification machinery for the coupled Lienard system
//
//   x'_k = y_k,   y'_k = -grad F_k(x_k) y_k - sum_m a_km x_m.
//
// The toolkit evaluates the Lyapunov function
//
//   V = 1/2 sum_k |x_k|^2
//     + 1/2 sum_{k,m} sinv_km [y_k + F_k(x_k) - delta W_k]^T [y_m + F_m(x_m) - delta W_m],
//   W_k = sum_l s_kl M(x_l / a),
//
// with M the radial ramp (identity inside the unit ball, x/|x| outside),
// together with its exact orbital derivative
//
//   V' = -sum_k F_k^T x_k + sum_k E_k^T x_k
//        - delta sum_k W_k^T (-x_k + sum_l q_kl x_l)
//        - (delta/a) sum_k [y_k + F_k - delta W_k]^T gradM(x_k/a) y_k,
//
// valid on the invariant manifold with energies E_l = sum_k q_lk [y_k + F_k(x_k)].
// V is nonsmooth on {|x_k| = a}; the derivative is only evaluated off that
// measure-zero set (guard band 1e-12).
//
// A certificate consists of parameters (a, delta, b) whose three defining
// inequalities were re-verified, plus a randomized decrease check: V' <= -1
// on sampled manifold states outside the box {|x_k| <= a, |y_k| <= b}.
//
// For bounded coupling the kinetic-energy argument applies instead: with
// |c_k| <= m, speeds are ultimately bounded by the smallest M1 with
// s [p_k(s) - m] >= Qsum + 1 for all k, Qsum = -sum_k min_s s [p_k(s) - m].
//
// All one-dimensional minimizations run on the closed-form polynomial
// families with a certified leading-coefficient tail bound, so certificates
// never rest on heuristic optimization.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swarm/integrate.hpp"
#include "swarm/linalg.hpp"
#include "swarm/model.hpp"

namespace swarm::certify {

using linalg::Matrix;
using model::LienardState;
using model::Model;

// Radial ramp: x inside the unit ball, x/|x| outside.
std::vector<double> ramp(std::span<const double> x);

struct RampJacobian {
  Matrix jac;
  // |x| == 1 exactly: the inside branch (identity) was returned by
  // convention; the true gradient does not exist there.
  bool on_unit_sphere = false;
};
RampJacobian ramp_jacobian(std::span<const double> x);

struct EnergyVector {
  Matrix rows;  // n x d, row l = E_l
  std::size_t effective_rank = 0;  // = dim ker(A); dependent rows carry no news
};

// E_l = sum_k q_lk [y_k + F_k(x_k)]; conserved along the Lienard flow.
EnergyVector manifold_energies(const Model& m, const LienardState& s);
EnergyVector zero_energies(const Model& m);

struct LyapunovParams {
  double a = 0.0;      // speed box half-width, > 1
  double delta = 0.0;  // in (0, min(1, 1/||S||_inf))
  double b = 0.0;      // acceleration box half-width
  double C1 = 0.0, C2 = 0.0, C3 = 0.0, C4 = 0.0;
  double W_a = 0.0, K_a = 0.0;
};

struct Constants {
  double C1 = 0.0, C2 = 0.0, C3 = 0.0, C4 = 0.0, W_a = 0.0, K_a = 0.0;
};

// The estimate constants entering the parameter inequalities:
//   C1 = sum_k |E_k| + n ||S|| (1 + ||Q||)
//   C2 = n ||S||^2 / 4
//   C3 = sum_k max(0, -inf_{z>=0} p_k(z) z^2)
//   C4 = max_k (sup_{|x|<=a} |F_k| + delta ||S||)^2 / 4
//   W_a = max_k max_{0<=z<=a} (-p_k(z) z^2 + C1 z) + C3 + delta^3 C2
//   K_a = max_k sup_{|x|<=a} |F_k| + delta ||S||
// (all matrix norms are the infinity operator norm).
Constants compute_constants(const Model& m, const EnergyVector& e, double a, double delta);

double lyapunov_value(const Model& m, const LyapunovParams& p, const LienardState& s);

// Exact orbital derivative on the manifold with energies e. Throws
// NonsmoothPointError when some |x_k| is within 1e-12 of a.
double lyapunov_derivative(const Model& m, const EnergyVector& e, const LyapunovParams& p,
                           const LienardState& s);

// Chooses (a, delta, b):
//   delta0 = min(1, 1/||S||)/2; a doubles from 2 until
//   -p_k(z) z^2 + C1 z + (C3 + delta0^3 C2) < -2 for all z > a and all k
//   (dense grid plus certified leading-term tail); delta halves from delta0
//   until delta n C4(a, delta) / a < 1; b is 1.05 times the larger root of
//   (delta/a)(z^2 - K_a z) = 1 + W_a + delta (n-1) max(K_a, K_a^2) / (4a).
// Throws CertificationError after 60 doublings, naming the blocking agent.
LyapunovParams select_params(const Model& m, const EnergyVector& e);

struct ParamCheck {
  bool constants_consistent = false;
  bool speed_inequality = false;   // sup_{z>a} of the choose-a polynomial < -2
  bool delta_inequality = false;   // delta n C4 / a < 1
  bool accel_inequality = false;   // decrease margin > 1 for all z >= b
  double speed_margin = 0.0;       // that sup (want < -2)
  double delta_product = 0.0;      // delta n C4 / a (want < 1)
  double accel_margin = 0.0;       // value at z = b (want > 1)
  bool ok() const {
    return constants_consistent && speed_inequality && delta_inequality && accel_inequality;
  }
};
// Re-derives the constants from the model and re-evaluates the three
// defining inequalities by direct evaluation.
ParamCheck verify_params(const Model& m, const EnergyVector& e, const LyapunovParams& p);

struct Region {
  enum class Kind {
    SpeedShell,  // some |x_k| in (a, 10a]
    AccelShell,  // all |x_k| <= a, some |y_k| in (b, 10b]
  };
  Kind kind = Kind::SpeedShell;
  double a = 0.0;
  double b = 0.0;
};

// Draws a state in the region, then shifts y by Q (E - Q(y + F(x))) so the
// manifold energies equal e exactly (valid because Q^2 = Q and Q E = E);
// deterministic in the seed. Post-condition: energy residual <= 1e-9.
LienardState sample_manifold_state(const Model& m, const EnergyVector& e, const Region& region,
                                   std::uint64_t seed);

enum class CertificateStatus { Pass, Fail, Vacuous };

struct Certificate {
  LyapunovParams params;
  std::size_t samples_checked = 0;
  double max_vdot_outside_box = 0.0;
  CertificateStatus status = CertificateStatus::Vacuous;
  std::optional<LienardState> witness;  // violating state, when status == Fail
  // Position recovery per r - Qr = S^{-1}(-y - F(x)).
  double position_offset_bound = 0.0;
  std::string ultimate_bound_note;
};

// Samples n_samples states (alternating the two shell regions), records the
// maximum V' observed; passes iff that maximum is <= -1. Samples are split
// across workers (SWARM_THREADS caps the pool) on counter-derived streams,
// so the result is independent of the worker count.
Certificate verify_decrease(const Model& m, const EnergyVector& e, const LyapunovParams& p,
                            std::size_t n_samples, std::uint64_t seed);

struct BoundedCertificate {
  double m = 0.0;               // uniform coupling bound
  std::vector<double> q;        // per-agent min of s [p_k(s) - m]
  double q_sum = 0.0;           // -sum_k q_k
  double m1 = 0.0;              // ultimate speed bound (with 1% safety)
};
// Kinetic-energy certificate for bounded coupling; requires p_k -> infinity
// for every agent.
BoundedCertificate theorem2_velocity_bound(const Model& m);

struct DispersalWindow {
  double depth = 0.0;   // |min_{z>=0} z p(z)|
  double v_lo = 0.0;    // velocity window around the cruising speed:
  double v_hi = 0.0;    // component of {|z p(z)| <= depth/2} containing the zero
};
// The two-agent escape construction: a perturbation below depth/2 cannot
// push the cruising speed out of [v_lo, v_hi].
DispersalWindow dispersal_window(const model::PropulsionLaw& law);

struct LyapunovTrace {
  std::vector<double> t;
  std::vector<double> value;
  std::vector<char> outside_box;  // 1 where some |x_k| > a or |y_k| > b
};
// V along a simulated position-form trajectory, evaluated on the
// velocity-acceleration image (x, y) = (v, v').
LyapunovTrace lyapunov_trace(const Model& m, const LyapunovParams& p,
                             const integrate::Trajectory& traj);

}  // namespace swarm::certify
