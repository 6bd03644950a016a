#include "swarm/certify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <thread>

#include "swarm/errors.hpp"
#include "swarm/rng.hpp"

namespace swarm::certify {

namespace {

using model::flux;
using model::flux_jacobian;
using model::PropulsionLaw;

// ---------------------------------------------------------------------------
// Certified one-dimensional search on the closed-form polynomial families.
// Coefficients are ascending. Tail behavior is pinned by the leading
// coefficient, so a finite scan interval plus the tail bound covers the ray.
// ---------------------------------------------------------------------------

double poly_eval(const std::vector<double>& c, double z) {
  double acc = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) acc = acc * z + c[i];
  return acc;
}

std::size_t poly_degree(const std::vector<double>& c) {
  for (std::size_t i = c.size(); i-- > 0;)
    if (c[i] != 0.0) return i;
  return static_cast<std::size_t>(-1);
}

double lower_coeff_sum(const std::vector<double>& c, std::size_t deg) {
  double b = 0.0;
  for (std::size_t i = 0; i < deg; ++i) b += std::abs(c[i]);
  return b;
}

// Z >= 1 with poly(z) >= lead z^deg / 2 for all z >= Z (lead > 0).
double positive_tail_cutoff(const std::vector<double>& c) {
  const std::size_t deg = poly_degree(c);
  const double lead = c[deg];
  return std::max(1.0, 2.0 * lower_coeff_sum(c, deg) / lead);
}

// Z with poly(z) >= target for all z >= Z (lead > 0, target >= 0).
double positive_tail_cutoff_for_target(const std::vector<double>& c, double target) {
  const std::size_t deg = poly_degree(c);
  const double lead = c[deg];
  const double z0 = positive_tail_cutoff(c);
  const double z1 = std::pow(2.0 * std::max(target, 0.0) / lead, 1.0 / static_cast<double>(deg));
  return std::max(z0, z1);
}

// Z with poly(z) <= threshold for all z >= Z (lead < 0, threshold <= 0).
double negative_tail_cutoff_for_threshold(const std::vector<double>& c, double threshold) {
  std::vector<double> neg(c);
  for (auto& v : neg) v = -v;
  return positive_tail_cutoff_for_target(neg, -threshold);
}

// Dense grid plus golden-section refinement in the best bracket.
template <typename F>
std::pair<double, double> min_on_interval(const F& f, double lo, double hi,
                                          std::size_t grid = 10000) {
  if (!(hi > lo)) return {lo, f(lo)};
  double best_z = lo, best_v = f(lo);
  const double step = (hi - lo) / static_cast<double>(grid);
  for (std::size_t i = 1; i <= grid; ++i) {
    const double z = (i == grid) ? hi : lo + step * static_cast<double>(i);
    const double v = f(z);
    if (v < best_v) {
      best_v = v;
      best_z = z;
    }
  }
  double a = std::max(lo, best_z - step);
  double b = std::min(hi, best_z + step);
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200 && (b - a) > 1e-15 * std::max(1.0, std::abs(b)); ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = f(x2);
    }
  }
  const double zm = 0.5 * (a + b);
  const double vm = f(zm);
  if (vm < best_v) {
    best_v = vm;
    best_z = zm;
  }
  return {best_z, best_v};
}

template <typename F>
std::pair<double, double> max_on_interval(const F& f, double lo, double hi,
                                          std::size_t grid = 10000) {
  auto [z, v] = min_on_interval([&f](double x) { return -f(x); }, lo, hi, grid);
  return {z, -v};
}

// Global minimum over [0, inf) for an ascending polynomial with positive
// leading coefficient and nonpositive constant term: past the tail cutoff
// the values are nonnegative, while the minimum is <= poly(0) <= 0.
std::pair<double, double> certified_ray_min(const std::vector<double>& c) {
  const double z_hi = positive_tail_cutoff(c);
  return min_on_interval([&c](double z) { return poly_eval(c, z); }, 0.0, z_hi);
}

// p(z) z^2 as an ascending polynomial.
std::vector<double> pz2_poly(const PropulsionLaw& law) {
  std::vector<double> c(law.zpoly.size() + 2, 0.0);
  for (std::size_t i = 0; i < law.zpoly.size(); ++i) c[i + 2] = law.zpoly[i];
  return c;
}

// z (p(z) - m) as an ascending polynomial.
std::vector<double> zpm_poly(const PropulsionLaw& law, double m) {
  std::vector<double> c(law.zpoly.size() + 1, 0.0);
  for (std::size_t i = 0; i < law.zpoly.size(); ++i) c[i + 1] = law.zpoly[i];
  c[1] -= m;
  return c;
}

// The choose-a polynomial g(z) = -p(z) z^2 + C1 z + cst.
std::vector<double> choose_a_poly(const PropulsionLaw& law, double c1, double cst) {
  std::vector<double> c = pz2_poly(law);
  for (auto& v : c) v = -v;
  c[1] += c1;
  c[0] += cst;
  return c;
}

// sup over [a, inf) of the choose-a polynomial, combining a dense grid on
// [a, tail cutoff] with the certified tail (below -2 past the cutoff).
double choose_a_sup(const std::vector<double>& g, double a) {
  const double z_tail = negative_tail_cutoff_for_threshold(g, -2.0);
  const double hi = std::max(z_tail, a * (1.0 + 1e-9) + 1.0);
  auto [z, v] = max_on_interval([&g](double zz) { return poly_eval(g, zz); }, a, hi);
  (void)z;
  return v;
}

double sup_flux_on_box(const PropulsionLaw& law, double a) {
  auto [z, v] =
      max_on_interval([&law](double zz) { return std::abs(law.eval(zz)) * zz; }, 0.0, a);
  (void)z;
  return v;
}

void require_grows_pz(const Model& m) {
  for (std::size_t k = 0; k < m.n; ++k)
    if (!m.propulsion.law(k).grows_pz())
      throw UsageError("agent " + std::to_string(k) +
                       ": propulsion lacks the certified growth z p(z) -> inf");
}

void check_energy_in_range(const Model& m, const EnergyVector& e) {
  const auto& proj = m.linear().projection;
  const Matrix residual = proj.Q * e.rows - e.rows;
  if (linalg::inf_norm(residual) > 1e-9)
    throw InputError("energy vector does not lie row-wise in the range of Q");
}

Matrix flux_rows(const Model& m, const Matrix& x) {
  Matrix f(m.n, m.d);
  for (std::size_t k = 0; k < m.n; ++k) {
    const auto fk = flux(m.propulsion.law(k), x.row(k));
    for (std::size_t c = 0; c < m.d; ++c) f(k, c) = fk[c];
  }
  return f;
}

// W rows: W_k = sum_l s_kl M(x_l / a).
Matrix w_rows(const Model& m, const Matrix& x, double a) {
  Matrix ramped(m.n, m.d);
  std::vector<double> scaled(m.d);
  for (std::size_t k = 0; k < m.n; ++k) {
    for (std::size_t c = 0; c < m.d; ++c) scaled[c] = x(k, c) / a;
    const auto r = ramp(scaled);
    for (std::size_t c = 0; c < m.d; ++c) ramped(k, c) = r[c];
  }
  return m.linear().projection.S * ramped;
}

std::size_t worker_count(std::size_t jobs) {
  std::size_t count = std::thread::hardware_concurrency();
  if (count == 0) count = 1;
  if (const char* env = std::getenv("SWARM_THREADS")) {
    char* end = nullptr;
    const long parsed = std::strtol(env, &end, 10);
    if (end != env && parsed > 0) count = static_cast<std::size_t>(parsed);
  }
  return std::max<std::size_t>(1, std::min({count, jobs, std::size_t{256}}));
}

}  // namespace

std::vector<double> ramp(std::span<const double> x) {
  std::vector<double> out(x.begin(), x.end());
  const double r = linalg::norm(x);
  if (r > 1.0) {
    for (auto& c : out) c /= r;
  }
  return out;
}

RampJacobian ramp_jacobian(std::span<const double> x) {
  const std::size_t d = x.size();
  const double r = linalg::norm(x);
  RampJacobian out;
  if (r <= 1.0) {
    out.jac = Matrix::identity(d);
    out.on_unit_sphere = (r == 1.0);
    return out;
  }
  out.jac = Matrix(d, d);
  const double r3 = r * r * r;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j)
      out.jac(i, j) = (((i == j) ? r * r : 0.0) - x[i] * x[j]) / r3;
  }
  return out;
}

EnergyVector manifold_energies(const Model& m, const LienardState& s) {
  const auto& proj = m.linear().projection;
  EnergyVector e;
  e.rows = proj.Q * (s.y + flux_rows(m, s.x));
  e.effective_rank = proj.kernel_dim;
  return e;
}

EnergyVector zero_energies(const Model& m) {
  EnergyVector e;
  e.rows = Matrix(m.n, m.d);
  e.effective_rank = m.linear().projection.kernel_dim;
  return e;
}

Constants compute_constants(const Model& m, const EnergyVector& e, double a, double delta) {
  const auto& proj = m.linear().projection;
  if (!(a > 1.0)) throw InputError("compute_constants: a must exceed 1");
  const double norm_s = linalg::inf_norm(proj.S);
  if (!(delta > 0.0) || !(delta < std::min(1.0, 1.0 / norm_s)))
    throw InputError("compute_constants: delta must lie in (0, min(1, 1/||S||))");
  require_grows_pz(m);

  const double n = static_cast<double>(m.n);
  const double norm_q = linalg::inf_norm(proj.Q);

  Constants c;
  double sum_e = 0.0;
  for (std::size_t k = 0; k < m.n; ++k) sum_e += linalg::norm(e.rows.row(k));
  c.C1 = sum_e + n * norm_s * (1.0 + norm_q);
  c.C2 = n * norm_s * norm_s / 4.0;

  c.C3 = 0.0;
  double worst_flux = 0.0;
  double w_inner = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < m.n; ++k) {
    const auto& law = m.propulsion.law(k);
    c.C3 += std::max(0.0, -certified_ray_min(pz2_poly(law)).second);
    worst_flux = std::max(worst_flux, sup_flux_on_box(law, a));
    const auto g = choose_a_poly(law, c.C1, 0.0);
    w_inner = std::max(
        w_inner, max_on_interval([&g](double z) { return poly_eval(g, z); }, 0.0, a).second);
  }
  c.K_a = worst_flux + delta * norm_s;
  c.C4 = c.K_a * c.K_a / 4.0;
  c.W_a = w_inner + c.C3 + delta * delta * delta * c.C2;
  return c;
}

double lyapunov_value(const Model& m, const LyapunovParams& p, const LienardState& s) {
  const auto& proj = m.linear().projection;
  const Matrix f = flux_rows(m, s.x);
  const Matrix w = w_rows(m, s.x, p.a);
  Matrix g = s.y + f;
  g -= w * p.delta;

  double v = 0.0;
  for (std::size_t k = 0; k < m.n; ++k) {
    const auto xk = s.x.row(k);
    v += 0.5 * linalg::dot(xk, xk);
  }
  for (std::size_t k = 0; k < m.n; ++k)
    for (std::size_t mm = 0; mm < m.n; ++mm)
      v += 0.5 * proj.S_inv(k, mm) * linalg::dot(g.row(k), g.row(mm));
  return v;
}

double lyapunov_derivative(const Model& m, const EnergyVector& e, const LyapunovParams& p,
                           const LienardState& s) {
  const auto& proj = m.linear().projection;
  for (std::size_t k = 0; k < m.n; ++k) {
    if (std::abs(linalg::norm(s.x.row(k)) - p.a) <= 1e-12)
      throw NonsmoothPointError("lyapunov derivative evaluated on |x_k| = a (agent " +
                                std::to_string(k) + ")");
  }

  const Matrix f = flux_rows(m, s.x);
  const Matrix w = w_rows(m, s.x, p.a);
  Matrix g = s.y + f;
  g -= w * p.delta;
  const Matrix qx = proj.Q * s.x;

  double term_flux = 0.0, term_energy = 0.0, term_w = 0.0, term_ramp = 0.0;
  std::vector<double> scaled(m.d), jy(m.d);
  for (std::size_t k = 0; k < m.n; ++k) {
    const auto xk = s.x.row(k);
    term_flux -= linalg::dot(f.row(k), xk);
    term_energy += linalg::dot(e.rows.row(k), xk);

    double wdot = 0.0;
    for (std::size_t c = 0; c < m.d; ++c) wdot += w(k, c) * (-s.x(k, c) + qx(k, c));
    term_w -= p.delta * wdot;

    for (std::size_t c = 0; c < m.d; ++c) scaled[c] = s.x(k, c) / p.a;
    const Matrix jac = ramp_jacobian(scaled).jac;
    for (std::size_t i = 0; i < m.d; ++i) {
      double acc = 0.0;
      for (std::size_t c = 0; c < m.d; ++c) acc += jac(i, c) * s.y(k, c);
      jy[i] = acc;
    }
    term_ramp -= (p.delta / p.a) * linalg::dot(g.row(k), jy);
  }
  return term_flux + term_energy + term_w + term_ramp;
}

LyapunovParams select_params(const Model& m, const EnergyVector& e) {
  const auto& proj = m.linear().projection;
  require_grows_pz(m);
  const double norm_s = linalg::inf_norm(proj.S);
  const double norm_q = linalg::inf_norm(proj.Q);
  const double n = static_cast<double>(m.n);

  double sum_e = 0.0;
  for (std::size_t k = 0; k < m.n; ++k) sum_e += linalg::norm(e.rows.row(k));
  const double c1 = sum_e + n * norm_s * (1.0 + norm_q);
  const double c2 = n * norm_s * norm_s / 4.0;
  double c3 = 0.0;
  for (std::size_t k = 0; k < m.n; ++k)
    c3 += std::max(0.0, -certified_ray_min(pz2_poly(m.propulsion.law(k))).second);

  const double delta0 = std::min(1.0, 1.0 / norm_s) / 2.0;
  const double cst0 = c3 + delta0 * delta0 * delta0 * c2;

  double a = 2.0;
  bool found = false;
  std::size_t blocking = 0;
  for (int doublings = 0; doublings <= 60; ++doublings) {
    bool ok = true;
    for (std::size_t k = 0; k < m.n; ++k) {
      const auto g = choose_a_poly(m.propulsion.law(k), c1, cst0);
      if (choose_a_sup(g, a) >= -2.0) {
        ok = false;
        blocking = k;
        break;
      }
    }
    if (ok) {
      found = true;
      break;
    }
    a *= 2.0;
  }
  if (!found)
    throw CertificationError("no admissible speed bound after 60 doublings; agent " +
                             std::to_string(blocking) + "'s propulsion blocks the decrease");

  double delta = delta0;
  Constants cst = compute_constants(m, e, a, delta);
  int halvings = 0;
  while (!(delta * n * cst.C4 / a < 1.0)) {
    if (++halvings > 200) throw CertificationError("delta selection did not terminate");
    delta *= 0.5;
    cst = compute_constants(m, e, a, delta);
  }

  LyapunovParams p;
  p.a = a;
  p.delta = delta;
  p.C1 = cst.C1;
  p.C2 = cst.C2;
  p.C3 = cst.C3;
  p.C4 = cst.C4;
  p.W_a = cst.W_a;
  p.K_a = cst.K_a;

  // Larger root of (delta/a)(z^2 - K_a z) = 1 + W_a + delta (n-1) Kt / (4a),
  // with the conservative Kt = max(K_a, K_a^2), then a 5% safety factor.
  const double kt = std::max(p.K_a, p.K_a * p.K_a);
  const double rhs = (a / delta) * (1.0 + p.W_a + delta * (n - 1.0) * kt / (4.0 * a));
  p.b = 1.05 * (0.5 * (p.K_a + std::sqrt(p.K_a * p.K_a + 4.0 * rhs)));
  return p;
}

ParamCheck verify_params(const Model& m, const EnergyVector& e, const LyapunovParams& p) {
  ParamCheck check;
  const Constants fresh = compute_constants(m, e, p.a, p.delta);
  auto close = [](double x, double y) {
    return std::abs(x - y) <= 1e-9 * std::max({1.0, std::abs(x), std::abs(y)});
  };
  check.constants_consistent = close(fresh.C1, p.C1) && close(fresh.C2, p.C2) &&
                               close(fresh.C3, p.C3) && close(fresh.C4, p.C4) &&
                               close(fresh.W_a, p.W_a) && close(fresh.K_a, p.K_a);

  const double cst = fresh.C3 + p.delta * p.delta * p.delta * fresh.C2;
  double sup = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < m.n; ++k)
    sup = std::max(sup, choose_a_sup(choose_a_poly(m.propulsion.law(k), fresh.C1, cst), p.a));
  check.speed_margin = sup;
  check.speed_inequality = sup < -2.0;

  check.delta_product = p.delta * static_cast<double>(m.n) * fresh.C4 / p.a;
  check.delta_inequality = check.delta_product < 1.0;

  // The decrease margin is an upward parabola in z with vertex at K_a/2 < b,
  // so the value at z = b certifies every z >= b.
  const double n = static_cast<double>(m.n);
  check.accel_margin = (p.delta / p.a) * (p.b * p.b - fresh.K_a * p.b) - fresh.W_a -
                       p.delta * (n - 1.0) * fresh.K_a * fresh.K_a / (4.0 * p.a);
  check.accel_inequality = (p.b > fresh.K_a / 2.0) && (check.accel_margin > 1.0);
  return check;
}

LienardState sample_manifold_state(const Model& m, const EnergyVector& e,
                                   const Region& region, std::uint64_t seed) {
  if (!(region.a > 0.0) || !(region.b > 0.0))
    throw InputError("sampling region is empty: a and b must be positive");
  check_energy_in_range(m, e);
  const auto& proj = m.linear().projection;
  const double margin_x = 1e-6 * std::max(1.0, region.a);
  const double margin_y = 1e-6 * std::max(1.0, region.b);

  for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
    Rng rng = Rng::stream(seed, attempt);
    const std::size_t pivot = static_cast<std::size_t>(rng.below(m.n));

    Matrix x(m.n, m.d), y(m.n, m.d);
    for (std::size_t k = 0; k < m.n; ++k) {
      const bool outside = (region.kind == Region::Kind::SpeedShell) &&
                           (k == pivot || rng.uniform() < 0.2);
      const auto xk = outside
                          ? rng.in_annulus(m.d, region.a + margin_x, 10.0 * region.a)
                          : rng.in_ball(m.d, region.a - margin_x);
      for (std::size_t c = 0; c < m.d; ++c) x(k, c) = xk[c];
    }
    for (std::size_t k = 0; k < m.n; ++k) {
      std::vector<double> yk;
      if (region.kind == Region::Kind::SpeedShell) {
        yk = rng.in_ball(m.d, 10.0 * region.b);
      } else {
        const bool outside = (k == pivot) || rng.uniform() < 0.2;
        yk = outside ? rng.in_annulus(m.d, region.b + margin_y, 10.0 * region.b)
                     : rng.in_ball(m.d, region.b - margin_y);
      }
      for (std::size_t c = 0; c < m.d; ++c) y(k, c) = yk[c];
    }

    // Project onto the manifold: y += Q (E - Q (y + F)). Q^2 = Q and
    // Q E = E make the corrected energies equal E exactly.
    const Matrix f = flux_rows(m, x);
    const Matrix shift = proj.Q * (e.rows - proj.Q * (y + f));
    y += shift;

    const double residual = linalg::inf_norm(proj.Q * (y + f) - e.rows);
    if (residual > 1e-9) continue;

    if (region.kind == Region::Kind::AccelShell) {
      bool in_window = false;
      for (std::size_t k = 0; k < m.n && !in_window; ++k) {
        const double r = linalg::norm(y.row(k));
        in_window = (r > region.b) && (r <= 10.0 * region.b);
      }
      if (!in_window) continue;  // the correction pulled us back into the box
    }
    return LienardState{0.0, std::move(x), std::move(y)};
  }
  throw CertificationError("manifold sampling failed: correction kept leaving the region");
}

Certificate verify_decrease(const Model& m, const EnergyVector& e, const LyapunovParams& p,
                            std::size_t n_samples, std::uint64_t seed) {
  Certificate cert;
  cert.params = p;
  cert.samples_checked = n_samples;

  {
    const auto& proj = m.linear().projection;
    double worst_flux = 0.0;
    for (std::size_t k = 0; k < m.n; ++k)
      worst_flux = std::max(worst_flux, sup_flux_on_box(m.propulsion.law(k), p.a));
    cert.position_offset_bound = linalg::inf_norm(proj.S_inv) * (p.b + worst_flux);
    char note[512];
    std::snprintf(note, sizeof(note),
                  "ultimate box: |x_k| <= a = %.6g, |y_k| <= b = %.6g; position recovery "
                  "r - Qr = S^{-1}(-y - F(x)) bounds the offset from the generalized "
                  "center by ||S^{-1}||_inf (b + sup|F|) = %.6g",
                  p.a, p.b, cert.position_offset_bound);
    cert.ultimate_bound_note = note;
  }

  if (n_samples == 0) {
    cert.status = CertificateStatus::Vacuous;
    cert.max_vdot_outside_box = -std::numeric_limits<double>::infinity();
    return cert;
  }

  struct Best {
    double vdot = -std::numeric_limits<double>::infinity();
    std::size_t index = 0;
    LienardState state;
  };
  const std::size_t workers = worker_count(n_samples);
  std::vector<Best> best(workers);

  auto run = [&](std::size_t w) {
    Best local;
    for (std::size_t i = w; i < n_samples; i += workers) {
      Region region;
      region.a = p.a;
      region.b = p.b;
      region.kind = (i % 2 == 0) ? Region::Kind::SpeedShell : Region::Kind::AccelShell;
      const LienardState s = sample_manifold_state(m, e, region, mix_seed(seed, i));
      const double vdot = lyapunov_derivative(m, e, p, s);
      if (vdot > local.vdot || (vdot == local.vdot && i < local.index)) {
        local.vdot = vdot;
        local.index = i;
        local.state = s;
      }
    }
    best[w] = std::move(local);
  };

  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& th : pool) th.join();
  }

  Best overall;
  for (auto& candidate : best) {
    if (candidate.vdot > overall.vdot ||
        (candidate.vdot == overall.vdot && candidate.index < overall.index))
      overall = std::move(candidate);
  }

  cert.max_vdot_outside_box = overall.vdot;
  if (overall.vdot <= -1.0) {
    cert.status = CertificateStatus::Pass;
  } else {
    cert.status = CertificateStatus::Fail;
    cert.witness = std::move(overall.state);
  }
  return cert;
}

BoundedCertificate theorem2_velocity_bound(const Model& m) {
  if (!m.is_bounded())
    throw UsageError("velocity-bound certificate requires bounded coupling");
  for (std::size_t k = 0; k < m.n; ++k)
    if (!m.propulsion.law(k).grows_p())
      throw UsageError("agent " + std::to_string(k) +
                       ": propulsion lacks the certified growth p(z) -> inf");

  BoundedCertificate cert;
  cert.m = model::coupling_bound(m);
  cert.q.resize(m.n);
  for (std::size_t k = 0; k < m.n; ++k)
    cert.q[k] = std::min(0.0, certified_ray_min(zpm_poly(m.propulsion.law(k), cert.m)).second);
  cert.q_sum = 0.0;
  for (double qk : cert.q) cert.q_sum -= qk;

  const double target = cert.q_sum + 1.0;
  double worst_crossing = 0.0;
  for (std::size_t k = 0; k < m.n; ++k) {
    const auto psi = zpm_poly(m.propulsion.law(k), cert.m);
    const double z_hi = positive_tail_cutoff_for_target(psi, target);
    // Last grid point below the target; everything past it is at or above,
    // and the tail beyond z_hi is certified.
    const std::size_t grid = 10000;
    std::size_t below = 0;
    for (std::size_t i = 0; i <= grid; ++i) {
      const double z = z_hi * static_cast<double>(i) / static_cast<double>(grid);
      if (poly_eval(psi, z) < target) below = i;
    }
    double lo = z_hi * static_cast<double>(below) / static_cast<double>(grid);
    double hi = std::min(z_hi, z_hi * static_cast<double>(below + 1) / static_cast<double>(grid));
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (poly_eval(psi, mid) < target ? lo : hi) = mid;
    }
    worst_crossing = std::max(worst_crossing, hi);
  }
  cert.m1 = 1.01 * worst_crossing;
  return cert;
}

DispersalWindow dispersal_window(const PropulsionLaw& law) {
  if (!law.grows_pz())
    throw UsageError("dispersal window requires the growth z p(z) -> inf");
  std::vector<double> g(law.zpoly.size() + 1, 0.0);
  for (std::size_t i = 0; i < law.zpoly.size(); ++i) g[i + 1] = law.zpoly[i];

  const auto [z_min, q_min] = certified_ray_min(g);
  if (q_min >= 0.0)
    throw UsageError("propulsion never dips below zero: no dispersal window exists");
  DispersalWindow win;
  win.depth = -q_min;

  auto eval = [&g](double z) { return poly_eval(g, z); };
  auto bisect = [&eval](double lo, double hi, double level) {
    // assumes eval(lo) < level <= eval(hi) or the reverse
    const bool rising = eval(lo) < level;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if ((eval(mid) < level) == rising)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  };

  // Cruising speed: first zero of z p(z) past the minimum.
  const double z_tail = positive_tail_cutoff(g);
  const std::size_t grid = 10000;
  double zero_hi = z_tail;
  for (std::size_t i = 1; i <= grid; ++i) {
    const double z = z_min + (z_tail - z_min) * static_cast<double>(i) / static_cast<double>(grid);
    if (eval(z) >= 0.0) {
      zero_hi = z;
      break;
    }
  }
  const double z_zero = bisect(z_min, zero_hi, 0.0);

  // Component boundary below: nearest crossing of -depth/2 under the zero.
  double lo_start = z_min;
  for (std::size_t i = 1; i <= grid; ++i) {
    const double z = z_zero - (z_zero - z_min) * static_cast<double>(i) / static_cast<double>(grid);
    if (eval(z) <= -win.depth / 2.0) {
      lo_start = z;
      break;
    }
  }
  win.v_lo = bisect(lo_start, z_zero, -win.depth / 2.0);

  // Component boundary above: nearest crossing of +depth/2 over the zero.
  const double hi_tail = positive_tail_cutoff_for_target(g, win.depth / 2.0);
  double hi_end = hi_tail;
  for (std::size_t i = 1; i <= grid; ++i) {
    const double z = z_zero + (hi_tail - z_zero) * static_cast<double>(i) / static_cast<double>(grid);
    if (eval(z) >= win.depth / 2.0) {
      hi_end = z;
      break;
    }
  }
  win.v_hi = bisect(z_zero, hi_end, win.depth / 2.0);
  return win;
}

LyapunovTrace lyapunov_trace(const Model& m, const LyapunovParams& p,
                             const integrate::Trajectory& traj) {
  LyapunovTrace trace;
  trace.t.reserve(traj.size());
  trace.value.reserve(traj.size());
  trace.outside_box.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto s = model::unpack_swarm(traj.times[i], traj.states[i], m.n, m.d);
    const auto deriv = model::rhs_swarm(m, s);
    const LienardState lie{s.t, s.v, deriv.dv};
    trace.t.push_back(s.t);
    trace.value.push_back(lyapunov_value(m, p, lie));
    bool outside = false;
    for (std::size_t k = 0; k < m.n && !outside; ++k) {
      outside = linalg::norm(lie.x.row(k)) > p.a || linalg::norm(lie.y.row(k)) > p.b;
    }
    trace.outside_box.push_back(outside ? 1 : 0);
  }
  return trace;
}

}  // namespace swarm::certify
