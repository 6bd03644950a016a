// Model building blocks: per-agent propulsion laws p_k, the radial flux
// F_k(x) = p_k(|x|) x with its Jacobian, and the right-hand sides of the
// three dynamical systems the toolkit integrates:
//
//   position form, linear coupling:   r"_k = -p_k(|r'_k|) r'_k - sum_m a_km r_m
//   velocity-acceleration form:       x'_k = y_k,
//                                     y'_k = -grad F_k(x_k) y_k - sum_m a_km x_m
//   position form, bounded coupling:  r"_k = -p_k(|r'_k|) r'_k + c_k(r, r')
//
// Propulsion families are closed-form polynomials in z = |x| so that the
// certification layer can minimize z p(z), p(z) z^2 and friends with
// certified tail bounds instead of heuristic optimization.

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "swarm/linalg.hpp"

namespace swarm::model {

using linalg::Matrix;

enum class PropulsionFamily { VanDerPolRadial, Polynomial, ShiftedPolynomial };

struct PropulsionLaw {
  PropulsionFamily family = PropulsionFamily::VanDerPolRadial;
  // Canonical representation: p(z) = sum_i zpoly[i] z^i. All families
  // reduce to this; eval/deriv go through it, so family evaluation is exact.
  std::vector<double> zpoly{-1.0, 0.0, 1.0};

  // ShiftedPolynomial bookkeeping, kept for config echo: p(z) = c (z^k - v0^k).
  double shift_scale = 1.0;
  int shift_power = 2;
  double shift_v0 = 1.0;

  static PropulsionLaw van_der_pol();
  static PropulsionLaw polynomial(std::vector<double> coefficients);
  static PropulsionLaw shifted_polynomial(double c, int k, double v0);

  double eval(double z) const;
  double deriv(double z) const;

  // z p(z) -> infinity as z -> infinity (required by the linear-coupling
  // certifier). Certified by the leading coefficient.
  bool grows_pz() const;
  // p(z) -> infinity (required by the bounded-coupling certifier).
  bool grows_p() const;
};

struct Propulsion {
  std::vector<PropulsionLaw> laws;  // one per agent

  static Propulsion homogeneous(PropulsionLaw law, std::size_t n);
  const PropulsionLaw& law(std::size_t k) const { return laws[k]; }
  bool all_grow_pz() const;
  bool all_grow_p() const;
};

struct LinearCoupling {
  Matrix A;  // symmetric PSD after construction
  linalg::SpectralDecomposition decomposition;
  linalg::ProjectionPair projection;
};

struct MorseCoupling {
  double C_a = 0.5;  // attraction amplitude
  double l_a = 2.0;  // attraction length
  double C_r = 1.0;  // repulsion amplitude
  double l_r = 0.5;  // repulsion length
};

// Arbitrary bounded force law with a caller-declared sup bound.
struct CustomBoundedCoupling {
  std::function<void(const Matrix& r, const Matrix& v, Matrix& force)> force;
  double bound = 0.0;
  std::string label;  // echoed into configs/manifests
};

using Coupling = std::variant<LinearCoupling, MorseCoupling, CustomBoundedCoupling>;

struct SwarmState {
  double t = 0.0;
  Matrix r;  // n x d positions
  Matrix v;  // n x d velocities
};

struct LienardState {
  double t = 0.0;
  Matrix x;  // n x d (velocities of the original system)
  Matrix y;  // n x d (accelerations)
};

struct SwarmDeriv {
  Matrix dr;
  Matrix dv;
};

struct LienardDeriv {
  Matrix dx;
  Matrix dy;
};

struct Model {
  std::size_t n = 0;
  std::size_t d = 0;
  Propulsion propulsion;
  Coupling coupling;

  bool is_linear() const { return std::holds_alternative<LinearCoupling>(coupling); }
  bool is_bounded() const { return !is_linear(); }
  // Throws UsageError when the coupling is not of the requested variant.
  const LinearCoupling& linear() const;
};

// Builds a model with a symmetrized, PSD-checked linear coupling matrix.
Model make_linear_model(std::size_t n, std::size_t d, Propulsion propulsion, Matrix a,
                        double zero_tol = 1e-9);
Model make_morse_model(std::size_t n, std::size_t d, Propulsion propulsion,
                       MorseCoupling morse);
Model make_custom_bounded_model(std::size_t n, std::size_t d, Propulsion propulsion,
                                CustomBoundedCoupling custom);

// (p_k(z), p'_k(z)); z must be nonnegative.
std::pair<double, double> propulsion_eval(const Propulsion& spec, std::size_t k, double z);

// F_k(x) = p_k(|x|) x; zero vector at x = 0.
std::vector<double> flux(const PropulsionLaw& law, std::span<const double> x);

// grad F(x) = p(|x|) I + (p'(|x|)/|x|) x x^T; the limit p(0) I at x = 0.
Matrix flux_jacobian(const PropulsionLaw& law, std::span<const double> x);

SwarmDeriv rhs_linear(const Model& m, const SwarmState& s);
LienardDeriv rhs_lienard(const Model& m, const LienardState& s);
SwarmDeriv rhs_bounded(const Model& m, const SwarmState& s);
// Dispatches on the coupling variant.
SwarmDeriv rhs_swarm(const Model& m, const SwarmState& s);

// Pairwise Morse force on every agent; coincident pairs contribute zero.
Matrix morse_forces(const MorseCoupling& c, const Matrix& r);
double morse_potential(const MorseCoupling& c, double rho);

// Uniform bound m with |c_k| <= m. Morse: (n-1)(C_r/l_r + C_a/l_a).
// Throws UsageError for linear coupling.
double coupling_bound(const Model& m);

// Flat-state packing used by the integrator and the CSV writer: first all
// position rows, then all velocity rows, row-major.
std::vector<double> pack(const Matrix& first, const Matrix& second);
void unpack(std::span<const double> flat, Matrix& first, Matrix& second);
SwarmState unpack_swarm(double t, std::span<const double> flat, std::size_t n, std::size_t d);
LienardState unpack_lienard(double t, std::span<const double> flat, std::size_t n,
                            std::size_t d);

// Right-hand sides in flat form, for the integrator.
std::function<void(double, std::span<const double>, std::span<double>)> swarm_rhs(
    const Model& m);
std::function<void(double, std::span<const double>, std::span<double>)> lienard_rhs(
    const Model& m);

}  // namespace swarm::model
