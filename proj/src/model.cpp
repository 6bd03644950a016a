#include "swarm/model.hpp"

#include <cmath>
#include <string>

#include "swarm/errors.hpp"

namespace swarm::model {

namespace {

double poly_eval(const std::vector<double>& c, double z) {
  double acc = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) acc = acc * z + c[i];
  return acc;
}

double poly_deriv_eval(const std::vector<double>& c, double z) {
  double acc = 0.0;
  for (std::size_t i = c.size(); i-- > 1;) acc = acc * z + c[i] * static_cast<double>(i);
  return acc;
}

// Index of the highest nonzero coefficient, or npos for the zero polynomial.
std::size_t poly_degree(const std::vector<double>& c) {
  for (std::size_t i = c.size(); i-- > 0;)
    if (c[i] != 0.0) return i;
  return static_cast<std::size_t>(-1);
}

}  // namespace

PropulsionLaw PropulsionLaw::van_der_pol() {
  PropulsionLaw law;
  law.family = PropulsionFamily::VanDerPolRadial;
  law.zpoly = {-1.0, 0.0, 1.0};
  return law;
}

PropulsionLaw PropulsionLaw::polynomial(std::vector<double> coefficients) {
  if (coefficients.empty()) throw InputError("polynomial propulsion needs coefficients");
  PropulsionLaw law;
  law.family = PropulsionFamily::Polynomial;
  law.zpoly = std::move(coefficients);
  return law;
}

PropulsionLaw PropulsionLaw::shifted_polynomial(double c, int k, double v0) {
  if (k < 1) throw InputError("shifted polynomial propulsion needs power >= 1");
  PropulsionLaw law;
  law.family = PropulsionFamily::ShiftedPolynomial;
  law.shift_scale = c;
  law.shift_power = k;
  law.shift_v0 = v0;
  law.zpoly.assign(static_cast<std::size_t>(k) + 1, 0.0);
  law.zpoly[0] = -c * std::pow(v0, k);
  law.zpoly[static_cast<std::size_t>(k)] = c;
  return law;
}

double PropulsionLaw::eval(double z) const { return poly_eval(zpoly, z); }
double PropulsionLaw::deriv(double z) const { return poly_deriv_eval(zpoly, z); }

bool PropulsionLaw::grows_pz() const {
  const std::size_t deg = poly_degree(zpoly);
  if (deg == static_cast<std::size_t>(-1)) return false;
  return zpoly[deg] > 0.0;  // z p(z) ~ lead z^{deg+1}, deg+1 >= 1
}

bool PropulsionLaw::grows_p() const {
  const std::size_t deg = poly_degree(zpoly);
  if (deg == static_cast<std::size_t>(-1) || deg == 0) return false;
  return zpoly[deg] > 0.0;
}

Propulsion Propulsion::homogeneous(PropulsionLaw law, std::size_t n) {
  Propulsion p;
  p.laws.assign(n, std::move(law));
  return p;
}

bool Propulsion::all_grow_pz() const {
  for (const auto& law : laws)
    if (!law.grows_pz()) return false;
  return true;
}

bool Propulsion::all_grow_p() const {
  for (const auto& law : laws)
    if (!law.grows_p()) return false;
  return true;
}

const LinearCoupling& Model::linear() const {
  if (const auto* lc = std::get_if<LinearCoupling>(&coupling)) return *lc;
  throw UsageError("operation requires linear coupling");
}

Model make_linear_model(std::size_t n, std::size_t d, Propulsion propulsion, Matrix a,
                        double zero_tol) {
  if (a.rows() != n || a.cols() != n) throw InputError("coupling matrix must be n x n");
  if (propulsion.laws.size() != n) throw InputError("need one propulsion law per agent");
  LinearCoupling lc;
  lc.A = linalg::symmetrized(a);
  lc.decomposition = linalg::spectral_decompose(lc.A);
  lc.projection = linalg::kernel_projection(lc.A, lc.decomposition, zero_tol);
  Model m;
  m.n = n;
  m.d = d;
  m.propulsion = std::move(propulsion);
  m.coupling = std::move(lc);
  return m;
}

Model make_morse_model(std::size_t n, std::size_t d, Propulsion propulsion,
                       MorseCoupling morse) {
  if (propulsion.laws.size() != n) throw InputError("need one propulsion law per agent");
  if (morse.C_a < 0 || morse.C_r < 0 || morse.l_a <= 0 || morse.l_r <= 0)
    throw InputError("Morse parameters must be positive (lengths strictly)");
  Model m;
  m.n = n;
  m.d = d;
  m.propulsion = std::move(propulsion);
  m.coupling = morse;
  return m;
}

Model make_custom_bounded_model(std::size_t n, std::size_t d, Propulsion propulsion,
                                CustomBoundedCoupling custom) {
  if (propulsion.laws.size() != n) throw InputError("need one propulsion law per agent");
  if (!custom.force) throw InputError("custom bounded coupling needs a force callable");
  if (custom.bound < 0) throw InputError("declared coupling bound must be nonnegative");
  Model m;
  m.n = n;
  m.d = d;
  m.propulsion = std::move(propulsion);
  m.coupling = std::move(custom);
  return m;
}

std::pair<double, double> propulsion_eval(const Propulsion& spec, std::size_t k, double z) {
  if (z < 0.0) throw InputError("propulsion argument z must be nonnegative");
  const auto& law = spec.law(k);
  return {law.eval(z), law.deriv(z)};
}

std::vector<double> flux(const PropulsionLaw& law, std::span<const double> x) {
  const double z = linalg::norm(x);
  std::vector<double> out(x.begin(), x.end());
  const double p = law.eval(z);
  for (auto& c : out) c *= p;
  return out;
}

Matrix flux_jacobian(const PropulsionLaw& law, std::span<const double> x) {
  const std::size_t d = x.size();
  const double z = linalg::norm(x);
  Matrix j(d, d);
  const double p = law.eval(z);
  for (std::size_t i = 0; i < d; ++i) j(i, i) = p;
  if (z > 0.0) {
    // Rank-one term vanishes in the z -> 0 limit, keeping the Jacobian
    // continuous at the origin.
    const double w = law.deriv(z) / z;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t jj = 0; jj < d; ++jj) j(i, jj) += w * x[i] * x[jj];
  }
  return j;
}

SwarmDeriv rhs_linear(const Model& m, const SwarmState& s) {
  const auto& lc = m.linear();
  SwarmDeriv out;
  out.dr = s.v;
  out.dv = lc.A * s.r;
  out.dv *= -1.0;
  for (std::size_t k = 0; k < m.n; ++k) {
    const double z = linalg::norm(s.v.row(k));
    const double p = m.propulsion.law(k).eval(z);
    for (std::size_t c = 0; c < m.d; ++c) out.dv(k, c) -= p * s.v(k, c);
  }
  return out;
}

LienardDeriv rhs_lienard(const Model& m, const LienardState& s) {
  const auto& lc = m.linear();
  LienardDeriv out;
  out.dx = s.y;
  out.dy = lc.A * s.x;
  out.dy *= -1.0;
  for (std::size_t k = 0; k < m.n; ++k) {
    const Matrix j = flux_jacobian(m.propulsion.law(k), s.x.row(k));
    for (std::size_t i = 0; i < m.d; ++i) {
      double acc = 0.0;
      for (std::size_t c = 0; c < m.d; ++c) acc += j(i, c) * s.y(k, c);
      out.dy(k, i) -= acc;
    }
  }
  return out;
}

double morse_potential(const MorseCoupling& c, double rho) {
  return c.C_r * std::exp(-rho / c.l_r) - c.C_a * std::exp(-rho / c.l_a);
}

Matrix morse_forces(const MorseCoupling& c, const Matrix& r) {
  const std::size_t n = r.rows();
  const std::size_t d = r.cols();
  Matrix f(n, d);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t mm = k + 1; mm < n; ++mm) {
      double rho2 = 0.0;
      for (std::size_t cc = 0; cc < d; ++cc) {
        const double diff = r(k, cc) - r(mm, cc);
        rho2 += diff * diff;
      }
      const double rho = std::sqrt(rho2);
      if (rho == 0.0) continue;  // direction undefined; pair contributes nothing
      // U'(rho), with U = C_r exp(-rho/l_r) - C_a exp(-rho/l_a)
      const double uprime =
          -c.C_r / c.l_r * std::exp(-rho / c.l_r) + c.C_a / c.l_a * std::exp(-rho / c.l_a);
      const double w = -uprime / rho;
      for (std::size_t cc = 0; cc < d; ++cc) {
        const double diff = r(k, cc) - r(mm, cc);
        f(k, cc) += w * diff;
        f(mm, cc) -= w * diff;  // pairwise antisymmetric
      }
    }
  }
  return f;
}

SwarmDeriv rhs_bounded(const Model& m, const SwarmState& s) {
  SwarmDeriv out;
  out.dr = s.v;
  if (const auto* morse = std::get_if<MorseCoupling>(&m.coupling)) {
    out.dv = morse_forces(*morse, s.r);
  } else if (const auto* custom = std::get_if<CustomBoundedCoupling>(&m.coupling)) {
    out.dv = Matrix(m.n, m.d);
    custom->force(s.r, s.v, out.dv);
  } else {
    throw UsageError("rhs_bounded requires Morse or custom bounded coupling");
  }
  for (std::size_t k = 0; k < m.n; ++k) {
    const double z = linalg::norm(s.v.row(k));
    const double p = m.propulsion.law(k).eval(z);
    for (std::size_t c = 0; c < m.d; ++c) out.dv(k, c) -= p * s.v(k, c);
  }
  return out;
}

SwarmDeriv rhs_swarm(const Model& m, const SwarmState& s) {
  return m.is_linear() ? rhs_linear(m, s) : rhs_bounded(m, s);
}

double coupling_bound(const Model& m) {
  if (const auto* morse = std::get_if<MorseCoupling>(&m.coupling)) {
    // |U'(rho)| <= C_r/l_r + C_a/l_a since each exponential factor is <= 1;
    // summing over the n-1 neighbors of an agent gives the bound.
    return static_cast<double>(m.n - 1) * (morse->C_r / morse->l_r + morse->C_a / morse->l_a);
  }
  if (const auto* custom = std::get_if<CustomBoundedCoupling>(&m.coupling)) {
    return custom->bound;
  }
  throw UsageError("coupling_bound is undefined for linear coupling");
}

std::vector<double> pack(const Matrix& first, const Matrix& second) {
  std::vector<double> flat;
  flat.reserve(first.flat().size() + second.flat().size());
  flat.insert(flat.end(), first.flat().begin(), first.flat().end());
  flat.insert(flat.end(), second.flat().begin(), second.flat().end());
  return flat;
}

void unpack(std::span<const double> flat, Matrix& first, Matrix& second) {
  const std::size_t half = flat.size() / 2;
  std::copy(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(half),
            first.flat().begin());
  std::copy(flat.begin() + static_cast<std::ptrdiff_t>(half), flat.end(),
            second.flat().begin());
}

SwarmState unpack_swarm(double t, std::span<const double> flat, std::size_t n,
                        std::size_t d) {
  SwarmState s{t, Matrix(n, d), Matrix(n, d)};
  unpack(flat, s.r, s.v);
  return s;
}

LienardState unpack_lienard(double t, std::span<const double> flat, std::size_t n,
                            std::size_t d) {
  LienardState s{t, Matrix(n, d), Matrix(n, d)};
  unpack(flat, s.x, s.y);
  return s;
}

std::function<void(double, std::span<const double>, std::span<double>)> swarm_rhs(
    const Model& m) {
  return [&m](double t, std::span<const double> y, std::span<double> dydt) {
    const SwarmState s = unpack_swarm(t, y, m.n, m.d);
    const SwarmDeriv deriv = rhs_swarm(m, s);
    const auto flat = pack(deriv.dr, deriv.dv);
    std::copy(flat.begin(), flat.end(), dydt.begin());
  };
}

std::function<void(double, std::span<const double>, std::span<double>)> lienard_rhs(
    const Model& m) {
  return [&m](double t, std::span<const double> y, std::span<double> dydt) {
    const LienardState s = unpack_lienard(t, y, m.n, m.d);
    const LienardDeriv deriv = rhs_lienard(m, s);
    const auto flat = pack(deriv.dx, deriv.dy);
    std::copy(flat.begin(), flat.end(), dydt.begin());
  };
}

}  // namespace swarm::model
