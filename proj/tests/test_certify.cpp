#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "swarm/certify.hpp"
#include "swarm/errors.hpp"
#include "swarm/model.hpp"
#include "swarm/scenarios.hpp"
#define TEST_UTIL_WANT_VDOT_ORACLE
#include "test_util.hpp"

using namespace swarm;
using namespace swarm::certify;
using model::LienardState;
using model::Model;
using model::Propulsion;
using model::PropulsionLaw;
using linalg::Matrix;

namespace {

Model parabolic_model(std::size_t n, std::size_t d, double lambda = 1.0) {
  Matrix a(n, n);
  const double off = -lambda / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = (i == j ? lambda + off : off);
  return model::make_linear_model(n, d, Propulsion::homogeneous(PropulsionLaw::van_der_pol(), n),
                                  a);
}

Model scalar_model() {
  return model::make_linear_model(1, 1,
                                  Propulsion::homogeneous(PropulsionLaw::van_der_pol(), 1),
                                  Matrix::from_rows({{1.0}}));
}

// A nonzero admissible energy vector: energies of a seeded random state.
EnergyVector random_energies(const Model& m, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, 0);
  LienardState s;
  s.x = Matrix(m.n, m.d);
  s.y = Matrix(m.n, m.d);
  for (auto& v : s.x.flat()) v = rng.uniform(-1.5, 1.5);
  for (auto& v : s.y.flat()) v = rng.uniform(-1.5, 1.5);
  return manifold_energies(m, s);
}

}  // namespace

TEST_CASE("ramp values") {
  const std::vector<double> inside{0.3, 0.4};
  CHECK(ramp(inside) == inside);
  const std::vector<double> outside{3.0, 4.0};
  const auto clipped = ramp(outside);
  CHECK(clipped[0] == doctest::Approx(0.6));
  CHECK(clipped[1] == doctest::Approx(0.8));
  const std::vector<double> zero{0.0, 0.0, 0.0};
  CHECK(ramp(zero) == zero);
}

TEST_CASE("ramp is 1-Lipschitz on sampled pairs") {
  Rng rng(5);
  for (int trial = 0; trial < 100000; ++trial) {
    const std::size_t d = 1 + rng.below(3);
    auto u = rng.in_ball(d, 3.0);
    auto w = rng.in_ball(d, 3.0);
    const auto ru = ramp(u);
    const auto rw = ramp(w);
    double dist = 0.0, rdist = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      dist += (u[i] - w[i]) * (u[i] - w[i]);
      rdist += (ru[i] - rw[i]) * (ru[i] - rw[i]);
    }
    CHECK(rdist <= dist * (1.0 + 1e-12) + 1e-300);
  }
}

TEST_CASE("ramp jacobian branches") {
  const std::vector<double> inside{0.5, 0.0};
  const auto ji = ramp_jacobian(inside);
  CHECK_FALSE(ji.on_unit_sphere);
  CHECK(linalg::inf_norm(ji.jac - Matrix::identity(2)) == 0.0);

  const std::vector<double> outside{2.0, 0.0};
  const auto jo = ramp_jacobian(outside);
  CHECK(jo.jac(0, 0) == doctest::Approx(0.0));
  CHECK(jo.jac(1, 1) == doctest::Approx(0.5));
  CHECK(jo.jac(0, 1) == doctest::Approx(0.0));

  const std::vector<double> boundary{1.0, 0.0};
  const auto jb = ramp_jacobian(boundary);
  CHECK(jb.on_unit_sphere);
  CHECK(linalg::inf_norm(jb.jac - Matrix::identity(2)) == 0.0);
}

TEST_CASE("ramp jacobian annihilates the radial direction outside the ball") {
  Rng rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = 1 + rng.below(3);
    auto x = rng.unit_vector(d);
    const double r = rng.uniform(1.01, 10.0);
    for (auto& c : x) c *= r;
    const auto j = ramp_jacobian(x);
    for (std::size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) acc += j.jac(i, c) * x[c];
      CHECK(std::abs(acc) <= 1e-13);
    }
    // Operator norm is at most 1: check the image of random directions.
    auto u = rng.unit_vector(d);
    std::vector<double> ju(d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t c = 0; c < d; ++c) ju[i] += j.jac(i, c) * u[c];
    CHECK(linalg::norm(ju) <= 1.0 + 1e-12);
  }
}

TEST_CASE("ramp jacobian matches finite differences off the unit sphere") {
  Rng rng(19);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = 1 + rng.below(3);
    auto x = rng.unit_vector(d);
    double r = rng.uniform(0.05, 3.0);
    if (std::abs(r - 1.0) < 1e-3) r += 2e-3;  // guard band around the kink
    for (auto& c : x) c *= r;
    const Matrix analytic = ramp_jacobian(x).jac;
    const Matrix fd = test_util::fd_jacobian(
        [](const std::vector<double>& p) { return ramp(p); }, x, 1e-6);
    worst = std::max(worst, linalg::max_abs(analytic - fd));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("manifold energies") {
  const Model m = parabolic_model(3, 2);
  LienardState zero;
  zero.x = Matrix(3, 2);
  zero.y = Matrix(3, 2);
  CHECK(linalg::max_abs(manifold_energies(m, zero).rows) == 0.0);
  CHECK(manifold_energies(m, zero).effective_rank == 1);

  // Averaging structure: every row equals the mean of y_k + F(x_k).
  Rng rng(3);
  LienardState s;
  s.x = Matrix(3, 2);
  s.y = Matrix(3, 2);
  for (auto& v : s.x.flat()) v = rng.uniform(-2, 2);
  for (auto& v : s.y.flat()) v = rng.uniform(-2, 2);
  const auto e = manifold_energies(m, s);
  Matrix expected(3, 2);
  for (std::size_t c = 0; c < 2; ++c) {
    double mean = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      const auto f = model::flux(m.propulsion.law(k), s.x.row(k));
      mean += s.y(k, c) + f[c];
    }
    mean /= 3.0;
    for (std::size_t k = 0; k < 3; ++k) expected(k, c) = mean;
  }
  CHECK(linalg::max_abs(e.rows - expected) <= 1e-12);

  // Invertible coupling: Q = 0, energies vanish identically.
  const Model inv = model::make_linear_model(
      2, 2, Propulsion::homogeneous(PropulsionLaw::van_der_pol(), 2),
      Matrix::from_rows({{2, 0}, {0, 3}}));
  CHECK(linalg::max_abs(manifold_energies(inv, s).rows) == 0.0);
}

TEST_CASE("lyapunov value: hand cases and positivity") {
  const Model m1 = scalar_model();
  LyapunovParams p;
  p.a = 2.0;
  p.delta = 0.25;

  LienardState origin;
  origin.x = Matrix(1, 1);
  origin.y = Matrix(1, 1);
  CHECK(lyapunov_value(m1, p, origin) == doctest::Approx(0.0));

  LienardState s;
  s.x = Matrix(1, 1);
  s.y = Matrix::from_rows({{1.0}});
  CHECK(lyapunov_value(m1, p, s) == doctest::Approx(0.5));

  const Model m = parabolic_model(3, 2);
  Rng rng(29);
  for (int trial = 0; trial < 10000; ++trial) {
    LienardState state;
    state.x = Matrix(3, 2);
    state.y = Matrix(3, 2);
    for (auto& v : state.x.flat()) v = rng.uniform(-5, 5);
    for (auto& v : state.y.flat()) v = rng.uniform(-5, 5);
    if (linalg::max_abs(state.x) == 0.0 && linalg::max_abs(state.y) == 0.0) continue;
    CHECK(lyapunov_value(m, p, state) > 0.0);
  }
}

TEST_CASE("lyapunov value diverges along scaling sequences") {
  const Model m = parabolic_model(2, 2);
  LyapunovParams p;
  p.a = 3.0;
  p.delta = 0.1;
  const auto& proj = m.linear().projection;
  const auto s_dec = linalg::spectral_decompose(proj.S);
  const double lambda_min_sinv = 1.0 / s_dec.eigenvalues.back();

  Rng rng(31);
  LienardState base;
  base.x = Matrix(2, 2);
  base.y = Matrix(2, 2);
  for (auto& v : base.x.flat()) v = rng.uniform(-1, 1);
  for (auto& v : base.y.flat()) v = rng.uniform(-1, 1);

  double previous = 0.0;
  for (double scale : {1.0, 10.0, 100.0, 1000.0}) {
    LienardState s;
    s.x = base.x * scale;
    s.y = base.y * scale;
    const double v = lyapunov_value(m, p, s);

    double x_sq = 0.0;
    for (double c : s.x.flat()) x_sq += c * c;
    CHECK(v >= 0.5 * x_sq - 1e-9 * std::max(1.0, x_sq));

    // Quadratic-form lower bound through lambda_min(S^{-1}).
    Matrix g = s.y;
    for (std::size_t k = 0; k < m.n; ++k) {
      const auto f = model::flux(m.propulsion.law(k), s.x.row(k));
      std::vector<double> scaled(m.d);
      for (std::size_t c = 0; c < m.d; ++c) scaled[c] = s.x(k, c) / p.a;
      const auto r = ramp(scaled);
      std::vector<double> w(m.d, 0.0);
      for (std::size_t l = 0; l < m.n; ++l) {
        std::vector<double> scaled_l(m.d);
        for (std::size_t c = 0; c < m.d; ++c) scaled_l[c] = s.x(l, c) / p.a;
        const auto rl = ramp(scaled_l);
        for (std::size_t c = 0; c < m.d; ++c) w[c] += proj.S(k, l) * rl[c];
      }
      for (std::size_t c = 0; c < m.d; ++c) g(k, c) += f[c] - p.delta * w[c];
    }
    double g_sq = 0.0;
    for (double c : g.flat()) g_sq += c * c;
    CHECK(v >= 0.5 * lambda_min_sinv * g_sq - 1e-9 * std::max(1.0, g_sq));

    CHECK(v > previous);
    previous = v;
  }
}

TEST_CASE("constants: hand arithmetic for the 2x2 Laplacian") {
  const Model m = model::make_linear_model(
      2, 1, Propulsion::homogeneous(PropulsionLaw::van_der_pol(), 2),
      Matrix::from_rows({{1, -1}, {-1, 1}}));
  const auto e = zero_energies(m);
  const auto c = compute_constants(m, e, 2.0, 0.25);
  CHECK(c.C1 == doctest::Approx(8.0));  // 0 + 2*2*(1+1)
  CHECK(c.C2 == doctest::Approx(2.0));  // 2*4/4
  CHECK(c.C3 == doctest::Approx(0.5));  // 2 * 1/4
}

TEST_CASE("C3 comes from the certified minimum of p(z) z^2") {
  // inf of z^4 - z^2 is -1/4 at z = 1/sqrt(2); per agent contribution 1/4.
  const Model m = parabolic_model(4, 2);
  const auto c = compute_constants(m, zero_energies(m), 2.0, 0.25);
  CHECK(c.C3 == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("C4 limit as delta -> 0") {
  const Model m = parabolic_model(2, 2);
  const auto e = zero_energies(m);
  const double a = 2.0;
  const auto c = compute_constants(m, e, a, 1e-12);
  // sup over |x| <= 2 of |p(z)| z = 3*2 = 6, so C4 -> 36/4 = 9.
  CHECK(c.C4 == doctest::Approx(9.0).epsilon(1e-6));
  CHECK_THROWS_AS(compute_constants(m, e, 0.5, 0.25), InputError);
  CHECK_THROWS_AS(compute_constants(m, e, 2.0, 2.0), InputError);
}

TEST_CASE("select_params satisfies its own inequalities") {
  for (std::size_t n : {2, 3}) {
    const Model m = parabolic_model(n, 2);
    const auto e = random_energies(m, 1000 + n);
    const auto p = select_params(m, e);
    CHECK(p.a > 1.0);
    CHECK(p.delta > 0.0);
    CHECK(p.delta < std::min(1.0, 1.0 / linalg::inf_norm(m.linear().projection.S)));
    CHECK(p.b > p.K_a);
    const auto check = verify_params(m, e, p);
    CHECK(check.constants_consistent);
    CHECK(check.speed_inequality);
    CHECK(check.delta_inequality);
    CHECK(check.accel_inequality);
    CHECK(check.speed_margin < -2.0);
    CHECK(check.delta_product < 1.0);
    CHECK(check.accel_margin > 1.0);
  }
}

TEST_CASE("single-oscillator speed bound sits past the -2 crossing") {
  const Model m = scalar_model();
  const auto e = zero_energies(m);
  const auto p = select_params(m, e);
  // Root bracketing oracle: the largest solution of
  // -z^4 + z^2 + C1 z + (C3 + delta^3 C2) = -2 must lie at or below a.
  const double cst = p.C3 + p.delta * p.delta * p.delta * p.C2 + 2.0;
  auto g = [&](double z) { return -z * z * z * z + z * z + p.C1 * z + cst; };
  double lo = 1.0, hi = 100.0;
  REQUIRE(g(hi) < 0.0);
  while (g(lo) < 0.0) lo *= 0.5;  // ensure a sign change
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) >= 0.0 ? lo : hi) = mid;
  }
  CHECK(p.a >= hi - 1e-9);
  const auto check = verify_params(m, e, p);
  CHECK(check.ok());
}

TEST_CASE("manifold sampling: projection identity, determinism, zero correction") {
  const Model m = parabolic_model(2, 2);
  const auto p = select_params(m, zero_energies(m));
  Region region;
  region.kind = Region::Kind::SpeedShell;
  region.a = p.a;
  region.b = p.b;

  const auto e0 = zero_energies(m);
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const auto s = sample_manifold_state(m, e0, region, seed);
    CHECK(linalg::inf_norm(manifold_energies(m, s).rows) <= 1e-9);
  }

  // Nonzero energies are hit exactly as well.
  const auto e1 = random_energies(m, 77);
  const auto s1 = sample_manifold_state(m, e1, region, 4);
  CHECK(linalg::inf_norm(manifold_energies(m, s1).rows - e1.rows) <= 1e-9);

  // Repeated seed gives the identical sample.
  const auto s2 = sample_manifold_state(m, e1, region, 4);
  CHECK(linalg::max_abs(s1.x - s2.x) == 0.0);
  CHECK(linalg::max_abs(s1.y - s2.y) == 0.0);

  // Invertible coupling: Q = 0, the correction is identically zero, so the
  // raw draw already lies on the (trivial) manifold.
  const Model inv = model::make_linear_model(
      2, 2, Propulsion::homogeneous(PropulsionLaw::van_der_pol(), 2),
      Matrix::from_rows({{2, 0}, {0, 3}}));
  const auto pi = select_params(inv, zero_energies(inv));
  Region ri;
  ri.kind = Region::Kind::AccelShell;
  ri.a = pi.a;
  ri.b = pi.b;
  const auto si = sample_manifold_state(inv, zero_energies(inv), ri, 9);
  CHECK(linalg::max_abs(manifold_energies(inv, si).rows) == 0.0);
  bool outside = false;
  for (std::size_t k = 0; k < 2; ++k)
    outside = outside || linalg::norm(si.y.row(k)) > pi.b;
  CHECK(outside);

  CHECK_THROWS_AS(sample_manifold_state(m, e0, Region{Region::Kind::SpeedShell, -1.0, 1.0}, 1),
                  InputError);
}

TEST_CASE("lyapunov derivative: equilibrium, guard, and flow finite differences") {
  const Model m = parabolic_model(2, 2);
  const auto e0 = zero_energies(m);
  LyapunovParams p = select_params(m, e0);

  LienardState origin;
  origin.x = Matrix(2, 2);
  origin.y = Matrix(2, 2);
  CHECK(lyapunov_derivative(m, e0, p, origin) == doctest::Approx(0.0));

  LienardState on_sphere;
  on_sphere.x = Matrix(2, 2);
  on_sphere.y = Matrix(2, 2);
  on_sphere.x(0, 0) = p.a;
  CHECK_THROWS_AS(lyapunov_derivative(m, e0, p, on_sphere), NonsmoothPointError);

  const auto e = random_energies(m, 2024);
  const auto params = select_params(m, e);
  const double worst = test_util::worst_vdot_fd_deviation(m, e, params, 555, 60);
  CHECK(worst <= 1e-4);
}

TEST_CASE("verify_decrease passes on the parabolic pair and reports the witness on corruption") {
  const Model m = parabolic_model(2, 2);
  const auto e = random_energies(m, 12);
  const auto p = select_params(m, e);

  const auto cert = verify_decrease(m, e, p, 2000, 99);
  CHECK(cert.status == CertificateStatus::Pass);
  CHECK(cert.max_vdot_outside_box <= -1.0);
  CHECK(cert.samples_checked == 2000);
  CHECK_FALSE(cert.witness.has_value());
  CHECK(cert.position_offset_bound > 0.0);

  // Violations of the tenfold-weakened box are rare events (the selected
  // constants are conservative), so the negative check uses a larger seeded
  // batch; seed 99 exposes over a dozen witnesses.
  auto corrupted = p;
  corrupted.b = p.b / 10.0;
  const auto bad = verify_decrease(m, e, corrupted, 20000, 99);
  CHECK(bad.status == CertificateStatus::Fail);
  REQUIRE(bad.witness.has_value());
  // The witness evaluates above the decrease threshold.
  CHECK(lyapunov_derivative(m, e, corrupted, *bad.witness) > -1.0);

  const auto vac = verify_decrease(m, e, p, 0, 1);
  CHECK(vac.status == CertificateStatus::Vacuous);
}

TEST_CASE("verify_decrease result is independent of the worker count") {
  const Model m = parabolic_model(3, 2);
  const auto e = random_energies(m, 5);
  const auto p = select_params(m, e);

  setenv("SWARM_THREADS", "1", 1);
  const auto one = verify_decrease(m, e, p, 600, 7);
  setenv("SWARM_THREADS", "3", 1);
  const auto three = verify_decrease(m, e, p, 600, 7);
  unsetenv("SWARM_THREADS");
  CHECK(one.max_vdot_outside_box == three.max_vdot_outside_box);
  CHECK(one.status == three.status);
}

TEST_CASE("kinetic-energy certificate for bounded coupling") {
  // m = 0: a single agent with no coupling.
  model::CustomBoundedCoupling none;
  none.bound = 0.0;
  none.force = [](const Matrix&, const Matrix&, Matrix& f) {
    for (auto& v : f.flat()) v = 0.0;
  };
  const Model solo = model::make_custom_bounded_model(
      1, 1, Propulsion::homogeneous(PropulsionLaw::van_der_pol(), 1), none);
  const auto cert = theorem2_velocity_bound(solo);
  const double expected_min = 2.0 / (3.0 * std::sqrt(3.0));  // |min of s^3 - s|
  CHECK(cert.m == 0.0);
  CHECK(-cert.q[0] == doctest::Approx(expected_min).epsilon(1e-9));
  CHECK(cert.q_sum == doctest::Approx(expected_min));

  // Cubic-root oracle: M1/1.01 solves s^3 - s = q_sum + 1.
  const double target = cert.q_sum + 1.0;
  double lo = 1.0, hi = 3.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    ((mid * mid * mid - mid) < target ? lo : hi) = mid;
  }
  CHECK(cert.m1 / 1.01 == doctest::Approx(hi).epsilon(1e-9));

  // n agents multiply q_sum.
  model::CustomBoundedCoupling none4 = none;
  const Model four = model::make_custom_bounded_model(
      4, 1, Propulsion::homogeneous(PropulsionLaw::van_der_pol(), 4), none4);
  const auto cert4 = theorem2_velocity_bound(four);
  CHECK(cert4.q_sum == doctest::Approx(4.0 * expected_min));

  // Growth flag: a propulsion that stays bounded is rejected.
  model::CustomBoundedCoupling none1 = none;
  const Model flat_p = model::make_custom_bounded_model(
      1, 1, Propulsion::homogeneous(PropulsionLaw::polynomial({1.0}), 1), none1);
  CHECK_THROWS_AS(theorem2_velocity_bound(flat_p), UsageError);

  const Model linear = parabolic_model(2, 2);
  CHECK_THROWS_AS(theorem2_velocity_bound(linear), UsageError);
}

TEST_CASE("theorem-2 bound certifies sampled kinetic decrease") {
  // With |c_k| <= m, the kinetic energy decreases whenever some speed
  // exceeds M1; spot-check the inequality chain on adversarial states where
  // the coupling pushes along the velocity.
  const auto scenario = scenarios::build("morse_swarm");
  const auto cert = theorem2_velocity_bound(scenario.model);
  const double m_bound = cert.m;
  Rng rng(41);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = scenario.model.n;
    double edot_bound = 0.0;
    // One agent at speed M1, others anywhere below.
    std::vector<double> speeds(n);
    speeds[0] = cert.m1 * rng.uniform(1.0, 3.0);
    for (std::size_t k = 1; k < n; ++k) speeds[k] = rng.uniform(0.0, cert.m1);
    for (std::size_t k = 0; k < n; ++k) {
      const double s = speeds[k];
      const double p = scenario.model.propulsion.law(k).eval(s);
      edot_bound += -p * s * s + m_bound * s;
    }
    CHECK(edot_bound <= -1.0 + 1e-9);
  }
}

TEST_CASE("dispersal window for the radial van der Pol law") {
  const auto window = dispersal_window(PropulsionLaw::van_der_pol());
  CHECK(window.depth == doctest::Approx(0.3849).epsilon(3e-3));
  CHECK(std::abs(window.depth - 2.0 / (3.0 * std::sqrt(3.0))) <= 1e-9);
  CHECK(std::abs(window.v_lo - 0.885) <= 5e-3);
  CHECK(std::abs(window.v_hi - 1.085) <= 5e-3);
  // Window brackets the cruising speed 1 where z p(z) vanishes.
  CHECK(window.v_lo < 1.0);
  CHECK(window.v_hi > 1.0);
}

TEST_CASE("energies are conserved along the integrated lienard flow") {
  const Model m = parabolic_model(3, 2);
  Rng rng(21);
  LienardState s0;
  s0.x = Matrix(3, 2);
  s0.y = Matrix(3, 2);
  for (auto& v : s0.x.flat()) v = rng.uniform(-1, 1);
  for (auto& v : s0.y.flat()) v = rng.uniform(-1, 1);

  integrate::Config cfg;
  cfg.method = integrate::Method::Embedded45;
  cfg.abs_tol = 1e-9;
  cfg.rel_tol = 1e-9;
  cfg.t_end = 50.0;
  cfg.sample_every = 0.5;
  const auto traj = integrate::integrate(model::lienard_rhs(m), 0.0,
                                         model::pack(s0.x, s0.y), cfg);

  const auto e0 = manifold_energies(m, s0).rows;
  double drift = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto s = model::unpack_lienard(traj.times[i], traj.states[i], 3, 2);
    const auto e = manifold_energies(m, s).rows;
    for (std::size_t l = 0; l < 3; ++l)
      drift = std::max(drift, linalg::norm((e - e0).row(l)));
  }
  CHECK(drift <= 1e-6);
}
