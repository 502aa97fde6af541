#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "skno/error.hpp"
#include "skno/generators.hpp"
#include "skno/oracle.hpp"

using namespace skno;

namespace {

constexpr double kPi = std::numbers::pi;

Field sine(int n, int mode = 1, double phase = 0.0) {
  Field f(Grid(n), 1);
  for (int i = 0; i < n; ++i) f.at(i, 0) = std::sin(2 * kPi * mode * (static_cast<double>(i) / n - phase));
  return f;
}

std::vector<double> vec(const Field& f) { return {f.values().begin(), f.values().end()}; }

double max_abs_diff(const Field& a, const Field& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

double pipeline_error(const Field& u0, const PhaseGrid& pg, double t, PhaseRecovery kind) {
  OracleConfig cfg;
  cfg.t = t;
  const Field v1 = evolve_phase_heat(warp_lift_exp(u0, pg), pg, cfg);
  return oracle::rel_l2(vec(recover_phase(v1, pg, kind)), vec(heat_exact(u0, cfg)));
}

// -Laplace(u) = 1 on the unit square with zero walls, double sine series at (x, y).
double poisson_series(double x, double y) {
  double acc = 0.0;
  for (int m = 1; m < 400; m += 2)
    for (int n = 1; n < 400; n += 2)
      acc += 16.0 / (std::pow(kPi, 4) * m * n * (m * m + n * n)) * std::sin(m * kPi * x) * std::sin(n * kPi * y);
  return acc;
}

}  // namespace

TEST_CASE("phase lifts") {
  PhaseGrid pg = PhaseGrid::symmetric(8.0, 64);
  Field ones(Grid(4), 1, {1, 1, 1, 1});
  Field v = warp_lift_exp(ones, pg);
  CHECK(pg.point(32) == 0.0);
  CHECK(v.at(0, 32) == 1.0);
  CHECK(pg.point(28) == -1.0);
  CHECK(pg.point(36) == 1.0);
  CHECK(v.at(2, 28) == doctest::Approx(0.36788).epsilon(1e-5));
  CHECK(v.at(2, 28) == v.at(2, 36));

  Field s = sine(64);
  Field vs = warp_lift_exp(s, pg);
  for (int x = 0; x < 64; ++x) CHECK(vs.at(x, 32) == s.at(x, 0));

  PhaseGrid pp{-kPi, kPi, 64};
  Field w = warp_lift_sin(s, pp);
  for (int x = 0; x < 64; ++x) {
    CHECK(w.at(x, 32) == 0.0);
    CHECK(w.at(x, 48) == doctest::Approx(s.at(x, 0)).epsilon(1e-15));
    for (int j = 1; j < 64; ++j) CHECK(w.at(x, 64 - j) == doctest::Approx(-w.at(x, j)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(warp_lift_sin(s, pg), UsageError);
  CHECK_THROWS_AS(warp_lift_exp(Field(Grid(4), 2), pg), UsageError);
  CHECK_THROWS_AS(PhaseGrid({-1, 1, 6}).validate(), UsageError);
  CHECK_THROWS_AS(PhaseGrid({0, 1, 8}).validate(), UsageError);
}

TEST_CASE("phase evolution") {
  PhaseGrid pg;
  OracleConfig cfg;
  Field u0 = sine(256);
  Field v0 = warp_lift_exp(u0, pg);
  cfg.t = 0.0;
  CHECK(max_abs_diff(evolve_phase_heat(v0, pg, cfg), v0) < 1e-12);
  cfg.t = 1.0;
  Field z = evolve_phase_heat(Field(Grid(256), pg.n_p), pg, cfg);
  for (double x : z.values()) CHECK(x == 0.0);
  CHECK(pipeline_error(u0, pg, 0.0, PhaseRecovery::delta) < 1e-12);
  CHECK_THROWS_AS(parse_phase_recovery("gauss"), UsageError);
}

TEST_CASE("phase recovery") {
  PhaseGrid pg;
  Field u0 = sine(128, 2);
  Field v0 = warp_lift_exp(u0, pg);
  CHECK(max_abs_diff(recover_phase(v0, pg, PhaseRecovery::delta), u0) == 0.0);
  CHECK(oracle::rel_l2(vec(recover_phase(v0, pg, PhaseRecovery::step)), vec(u0)) < 1e-3);
  Field z = recover_phase(Field(Grid(128), pg.n_p), pg, PhaseRecovery::delta);
  for (double x : z.values()) CHECK(x == 0.0);
}

TEST_CASE("step-recovered pipeline matches the analytic heat solution") {
  PhaseGrid pg;
  Rng rng(3);
  for (int trial = 0; trial < 3; ++trial) {
    // modes 1..2 keep the characteristic shift c (2 pi k)^2 t inside the p-box at t = 1
    BandLimited c = draw_band_limited(rng);
    for (int i = 4; i < 16; ++i) c[i] = 0.0;
    Field u0 = eval_band_limited(c, Grid(256));
    CHECK(pipeline_error(u0, pg, 1.0, PhaseRecovery::step) < 1e-3);
  }
  double prev = 1.0;
  for (double pmax : {16.0, 32.0, 64.0}) {
    const double e = pipeline_error(sine(256), PhaseGrid::symmetric(pmax, static_cast<int>(8 * pmax)), 1.0,
                                    PhaseRecovery::step);
    CHECK(e < prev);
    prev = e;
  }
}

TEST_CASE("delta-recovered pipeline converges as the p spacing shrinks") {
  double prev = 1.0;
  for (int n_p : {64, 128, 256, 512}) {
    const double e = pipeline_error(sine(256), PhaseGrid::symmetric(16.0, n_p), 1.0, PhaseRecovery::delta);
    CHECK(e < prev);
    prev = e;
  }
  // all 8 modes stay inside the box at short times
  Rng rng(8);
  Field u0 = eval_band_limited(draw_band_limited(rng), Grid(256));
  CHECK(pipeline_error(u0, PhaseGrid::symmetric(16.0, 512), 0.05, PhaseRecovery::step) < 1e-3);
}

TEST_CASE("heat dataset") {
  OracleConfig cfg;
  Field u1 = heat_exact(sine(128), cfg);
  const double decay = std::exp(-0.05 * 4 * kPi * kPi);
  CHECK(decay == doctest::Approx(0.13896).epsilon(1e-4));
  for (int i = 0; i < 128; ++i) CHECK(std::abs(u1.at(i, 0) - decay * sine(128).at(i, 0)) < 1e-14);
  Field zero = heat_exact(Field(Grid(64), 1), cfg);
  for (double x : zero.values()) CHECK(x == 0.0);

  auto d1 = gen_heat_dataset(8, Grid(128), cfg, 42);
  auto d2 = gen_heat_dataset(8, Grid(128), cfg, 42, 3);
  CHECK(d1.a == d2.a);
  CHECK(d1.u == d2.u);
  for (int i = 0; i < 8; ++i) CHECK(max_abs_diff(heat_exact(d1.input(i), cfg), d1.target(i)) < 1e-12);
  // resolution-independent sampling: the 256 grid contains the 128 grid
  auto fine = gen_heat_dataset(8, Grid(256), cfg, 42);
  for (int i = 0; i < 128; ++i) CHECK(fine.a[2 * i] == doctest::Approx(d1.a[i]).epsilon(1e-13));
}

TEST_CASE("advection dataset") {
  OracleConfig cfg;
  Field ones(Grid(32), 1, std::vector<double>(32, 1.0));
  CHECK(max_abs_diff(translate(ones, 0.37), ones) < 1e-14);
  CHECK(max_abs_diff(translate(sine(64), 0.05), sine(64, 1, 0.05)) < 1e-13);
  Rng rng(1);
  Field u0 = eval_band_limited(draw_band_limited(rng), Grid(64));
  CHECK(max_abs_diff(translate(u0, 1.0), u0) < 1e-12);

  auto ds = gen_advection_dataset(3, Grid(64), cfg, 20, 5);
  CHECK(ds.a_channels == 10);
  CHECK(ds.u_channels == 10);
  Rng r0(derive_seed(5, 1));
  const auto c = draw_band_limited(r0);
  Field a = ds.input(1), u = ds.target(1);
  for (int x = 0; x < 64; x += 7) {
    CHECK(std::abs(a.at(x, 3) - eval_band_limited(c, Grid(64), 0.15).at(x, 0)) < 1e-12);
    CHECK(std::abs(u.at(x, 9) - eval_band_limited(c, Grid(64), 0.95).at(x, 0)) < 1e-12);
  }
}

TEST_CASE("fourier resample") {
  Rng rng(4);
  const auto c = draw_band_limited(rng);
  Field coarse = eval_band_limited(c, Grid(64));
  Field fine = eval_band_limited(c, Grid(256));
  CHECK(max_abs_diff(fourier_resample(coarse, 256), fine) < 1e-12);
  CHECK(max_abs_diff(fourier_resample(fine, 64), coarse) < 1e-12);
}

TEST_CASE("burgers solver") {
  const double nu = 0.1;
  Field k(Grid(64), 1, std::vector<double>(64, 0.7));
  CHECK(max_abs_diff(burgers_solve(k, nu, 0.2), k) < 1e-13);

  Rng rng(6);
  const auto c = draw_band_limited(rng);
  std::vector<double> energy;
  BurgersOptions opt;
  opt.energy_trace = &energy;
  Field u128 = burgers_solve(eval_band_limited(c, Grid(128)), nu, 1.0, opt);
  CHECK(energy.size() == 10000);
  bool monotone = true;
  for (std::size_t i = 1; i < energy.size(); ++i) monotone = monotone && energy[i] <= energy[i - 1];
  CHECK(monotone);

  Field u256 = burgers_solve(eval_band_limited(c, Grid(256)), nu, 1.0);
  std::vector<double> shared(128);
  for (int i = 0; i < 128; ++i) shared[i] = u256.at(2 * i, 0);
  CHECK(oracle::rel_l2(vec(u128), shared) < 1e-6);

  BurgersOptions half;
  half.dt = 5e-5;
  Field fine_dt = burgers_solve(eval_band_limited(c, Grid(128)), nu, 1.0, half);
  CHECK(oracle::rel_l2(vec(fine_dt), vec(u128)) < 1e-8);

  // grids above the solve cap are interpolated from the capped solution
  Field u512 = burgers_solve(eval_band_limited(c, Grid(512)), nu, 1.0);
  for (int i = 0; i < 128; ++i) shared[i] = u512.at(4 * i, 0);
  CHECK(oracle::rel_l2(vec(u128), shared) < 1e-6);

  Field blow(Grid(64), 1);
  for (int i = 0; i < 64; ++i) blow.at(i, 0) = 1e200 * std::sin(2 * kPi * i / 64);
  CHECK_THROWS_AS(burgers_solve(blow, nu, 0.01), NumericError);
}

TEST_CASE("darcy solver") {
  Grid g(64, 64);
  Field ones(g, 1, std::vector<double>(g.points(), 1.0));
  auto r = darcy_solve(ones);
  const double center = 0.25 * (r.u.at(31 * 64 + 31, 0) + r.u.at(31 * 64 + 32, 0) + r.u.at(32 * 64 + 31, 0) +
                                r.u.at(32 * 64 + 32, 0));
  const double series = poisson_series(0.5, 0.5);
  CHECK(series == doctest::Approx(0.07367).epsilon(2e-4 / 0.07367));
  CHECK(std::abs(center - series) < 2e-4);
  CHECK(std::abs(center - 0.07367) < 2e-4);
  CHECK(darcy_residual(ones, r.u) < 1e-8);

  Rng rng(2);
  Grid g32(32, 32);
  Field a = darcy_coefficient(g32, rng);
  Field a2(g32, 1);
  for (std::size_t i = 0; i < g32.points(); ++i) a2.at(i, 0) = 2.0 * a.at(i, 0);
  auto r1 = darcy_solve(a), r2 = darcy_solve(a2);
  for (std::size_t i = 0; i < g32.points(); ++i)
    CHECK(std::abs(r2.u.at(i, 0) - 0.5 * r1.u.at(i, 0)) < 1e-9 * std::abs(r1.u.at(i, 0)) + 1e-14);
  CHECK(darcy_residual(a, r1.u) < 1e-8);

  Field bad = a;
  bad.at(5, 0) = 0.0;
  CHECK_THROWS_AS(darcy_solve(bad), UsageError);
}

TEST_CASE("darcy dataset") {
  Grid g(32, 32);
  auto d1 = gen_darcy_dataset(100, g, 77);
  std::size_t high = 0;
  bool two_valued = true;
  for (double v : d1.a) {
    two_valued = two_valued && (v == 3.0 || v == 12.0);
    high += v == 12.0;
  }
  CHECK(two_valued);
  const double frac = static_cast<double>(high) / d1.a.size();
  CHECK(frac >= 0.35);
  CHECK(frac <= 0.65);
  auto d2 = gen_darcy_dataset(4, g, 77);
  CHECK(std::equal(d2.a.begin(), d2.a.end(), d1.a.begin()));
  CHECK(std::equal(d2.u.begin(), d2.u.end(), d1.u.begin()));
}
