#include "skno/generators.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <cmath>
#include <numbers>

#include "skno/error.hpp"
#include "skno/fft.hpp"
#include "skno/parallel.hpp"

namespace skno {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_1d(const Grid& g, const char* what) {
  if (g.dims() != 1) throw UsageError(std::string(what) + " needs a 1D grid");
}

std::vector<cdouble> to_complex(std::span<const double> v) { return {v.begin(), v.end()}; }

}  // namespace

BandLimited draw_band_limited(Rng& rng) {
  BandLimited c{};
  for (auto& x : c) x = rng.normal();
  return c;
}

Field eval_band_limited(const BandLimited& coeffs, const Grid& grid, double shift) {
  require_1d(grid, "band-limited sampler");
  const int n = grid.resolution(0);
  Field u(grid, 1);
  for (int i = 0; i < n; ++i) {
    const double x = grid.length(0) * i / n - shift;
    double acc = 0.0;
    for (int k = 1; k <= 8; ++k) {
      const double ang = kTwoPi * k * x / grid.length(0);
      acc += (coeffs[2 * (k - 1)] * std::cos(ang) + coeffs[2 * (k - 1) + 1] * std::sin(ang)) / k;
    }
    u.at(i, 0) = acc;
  }
  return u;
}

Field translate(const Field& u, double shift) {
  require_1d(u.grid(), "translate");
  const int n = u.grid().resolution(0);
  Spectrum s = dft_spatial(u);
  auto v = s.values_mut();
  for (int b = 0; b < n; ++b) {
    const int f = signed_frequency(b, n);
    // the Nyquist bin of a real signal must stay real
    const double xi = (2 * f == n) ? 0.0 : kTwoPi * f / u.grid().length(0);
    for (int c = 0; c < u.aux_len(); ++c) v[b * u.aux_len() + c] *= std::polar(1.0, -xi * shift);
  }
  if (n % 2 == 0)
    for (int c = 0; c < u.aux_len(); ++c)
      v[(n / 2) * u.aux_len() + c] *= std::cos(kTwoPi * (n / 2) * shift / u.grid().length(0));
  return idft_spatial(s);
}

Field fourier_resample(const Field& u, int n) {
  require_1d(u.grid(), "fourier_resample");
  const int m = u.grid().resolution(0);
  if (n == m) return u;
  if (u.aux_len() != 1) throw UsageError("fourier_resample expects one channel");
  std::vector<cdouble> hat = to_complex(u.values());
  fft_rows_inplace(hat, m, 1, FftDirection::forward);
  std::vector<cdouble> out(n, 0.0);
  const int keep = std::min(m, n) / 2;
  for (int f = 1 - keep; f < keep; ++f) out[(f + n) % n] = hat[(f + m) % m];
  if (m < n) {
    // split the source Nyquist bin evenly between +keep and -keep
    out[keep] = 0.5 * hat[keep];
    out[n - keep] = 0.5 * hat[keep];
  } else {
    out[keep] = hat[keep] + hat[m - keep];
  }
  fft_rows_inplace(out, n, 1, FftDirection::inverse);
  Field r(Grid(n, u.grid().length(0)), 1);
  for (int i = 0; i < n; ++i) r.at(i, 0) = out[i].real() / m;
  return r;
}

Field burgers_solve(const Field& u0, double nu, double t_end, const BurgersOptions& opt) {
  require_1d(u0.grid(), "burgers_solve");
  if (u0.aux_len() != 1) throw UsageError("burgers_solve expects one channel");
  if (!(nu > 0.0) || !(t_end >= 0.0) || !(opt.dt > 0.0)) throw UsageError("invalid Burgers parameters");
  const int n_out = u0.grid().resolution(0);
  if (n_out > opt.max_solve_resolution) {
    const Field coarse = fourier_resample(u0, opt.max_solve_resolution);
    return fourier_resample(burgers_solve(coarse, nu, t_end, opt), n_out);
  }
  const int n = n_out;
  const double len = u0.grid().length(0);
  const int steps = static_cast<int>(std::ceil(t_end / opt.dt - 1e-9));
  const double h = steps > 0 ? t_end / steps : 0.0;

  std::vector<double> k(n), lin_half(n), lin_full(n), dealias(n);
  for (int b = 0; b < n; ++b) {
    const int f = signed_frequency(b, n);
    k[b] = kTwoPi * f / len;
    lin_half[b] = std::exp(-nu * k[b] * k[b] * h / 2);
    lin_full[b] = lin_half[b] * lin_half[b];
    dealias[b] = (3 * std::abs(f) < n && 2 * f != n) ? 1.0 : 0.0;
  }
  std::vector<cdouble> uh = to_complex(u0.values());
  fft_rows_inplace(uh, n, 1, FftDirection::forward);

  std::vector<cdouble> work(n);
  // -d/dx (u^2 / 2) in Fourier space, dealiased
  auto nonlinear = [&](const std::vector<cdouble>& in, std::vector<cdouble>& out) {
    for (int b = 0; b < n; ++b) work[b] = in[b] * dealias[b];
    fft_rows_inplace(work, n, 1, FftDirection::inverse);
    for (int i = 0; i < n; ++i) {
      const double u = work[i].real() / n;
      work[i] = 0.5 * u * u;
    }
    fft_rows_inplace(work, n, 1, FftDirection::forward);
    out.resize(n);
    for (int b = 0; b < n; ++b) out[b] = cdouble(0.0, -k[b]) * work[b] * dealias[b];
  };

  std::vector<cdouble> k1, k2, k3, k4, stage(n), phys(n);
  for (int s = 0; s < steps; ++s) {
    nonlinear(uh, k1);
    for (int b = 0; b < n; ++b) stage[b] = lin_half[b] * (uh[b] + 0.5 * h * k1[b]);
    nonlinear(stage, k2);
    for (int b = 0; b < n; ++b) stage[b] = lin_half[b] * uh[b] + 0.5 * h * k2[b];
    nonlinear(stage, k3);
    for (int b = 0; b < n; ++b) stage[b] = lin_full[b] * uh[b] + h * lin_half[b] * k3[b];
    nonlinear(stage, k4);
    for (int b = 0; b < n; ++b)
      uh[b] = lin_full[b] * uh[b] +
              h / 6.0 * (lin_full[b] * k1[b] + 2.0 * lin_half[b] * (k2[b] + k3[b]) + k4[b]);
    bool finite = true;
    for (const auto& z : uh) finite = finite && std::isfinite(z.real()) && std::isfinite(z.imag());
    if (!finite) throw NumericError("Burgers state became non-finite at step " + std::to_string(s + 1));
    if (opt.energy_trace) {
      double e = 0.0;
      for (const auto& z : uh) e += std::norm(z);
      opt.energy_trace->push_back(e / n);
    }
  }
  phys = uh;
  fft_rows_inplace(phys, n, 1, FftDirection::inverse);
  Field out(u0.grid(), 1);
  for (int i = 0; i < n; ++i) out.at(i, 0) = phys[i].real() / n;
  return out;
}

namespace {

struct DarcySystem {
  Eigen::SparseMatrix<double> matrix;
  int n = 0;
};

DarcySystem assemble_darcy(const Field& a) {
  const Grid& g = a.grid();
  if (g.dims() != 2) throw UsageError("darcy_solve needs a 2D grid");
  if (g.resolution(0) != g.resolution(1)) throw UsageError("darcy_solve needs a square grid");
  if (a.aux_len() != 1) throw UsageError("darcy coefficient must have one channel");
  for (double v : a.values())
    if (!(v > 0.0)) throw UsageError("darcy coefficient must be strictly positive");
  const int n = g.resolution(0);
  const double inv_h2 = 1.0 / (g.spacing(0) * g.spacing(0));
  auto coef = [&](int i, int j) { return a.at(static_cast<std::size_t>(i) * n + j, 0); };
  auto face = [](double x, double y) { return 2.0 * x * y / (x + y); };
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(5) * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int row = i * n + j;
      const double ac = coef(i, j);
      double diag = 0.0;
      const int di[4] = {-1, 1, 0, 0}, dj[4] = {0, 0, -1, 1};
      for (int q = 0; q < 4; ++q) {
        const int ii = i + di[q], jj = j + dj[q];
        if (ii < 0 || ii >= n || jj < 0 || jj >= n) {
          diag += 2.0 * ac * inv_h2;  // wall half a cell away
          continue;
        }
        const double w = face(ac, coef(ii, jj)) * inv_h2;
        diag += w;
        trip.emplace_back(row, ii * n + jj, -w);
      }
      trip.emplace_back(row, row, diag);
    }
  DarcySystem sys;
  sys.n = n;
  sys.matrix.resize(n * n, n * n);
  sys.matrix.setFromTriplets(trip.begin(), trip.end());
  return sys;
}

}  // namespace

DarcyResult darcy_solve(const Field& a) {
  const DarcySystem sys = assemble_darcy(a);
  const int unknowns = sys.n * sys.n;
  Eigen::VectorXd f = Eigen::VectorXd::Ones(unknowns);
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(1e-10);
  cg.setMaxIterations(10 * unknowns);
  cg.compute(sys.matrix);
  Eigen::VectorXd u = cg.solve(f);
  if (cg.info() != Eigen::Success)
    throw NumericError("darcy CG did not converge in " + std::to_string(10 * unknowns) +
                       " iterations (residual " + std::to_string(cg.error()) + ")");
  DarcyResult r{Field(a.grid(), 1, std::vector<double>(u.data(), u.data() + unknowns)),
                static_cast<int>(cg.iterations()), cg.error()};
  return r;
}

double darcy_residual(const Field& a, const Field& u) {
  const DarcySystem sys = assemble_darcy(a);
  Eigen::Map<const Eigen::VectorXd> uv(u.values().data(), static_cast<Eigen::Index>(u.values().size()));
  Eigen::VectorXd r = Eigen::VectorXd::Ones(uv.size()) - sys.matrix * uv;
  return r.cwiseAbs().maxCoeff();
}

Field darcy_coefficient(const Grid& grid, Rng& rng) {
  if (grid.dims() != 2) throw UsageError("darcy coefficient needs a 2D grid");
  const int n0 = grid.resolution(0), n1 = grid.resolution(1);
  std::vector<cdouble> hat(static_cast<std::size_t>(n0) * n1);
  for (int b0 = 0; b0 < n0; ++b0)
    for (int b1 = 0; b1 < n1; ++b1) {
      const double re = rng.normal(), im = rng.normal();
      const double k0 = kTwoPi * signed_frequency(b0, n0) / grid.length(0);
      const double k1 = kTwoPi * signed_frequency(b1, n1) / grid.length(1);
      const double amp = (b0 == 0 && b1 == 0) ? 0.0 : 1.0 / (k0 * k0 + k1 * k1 + 9.0);
      hat[static_cast<std::size_t>(b0) * n1 + b1] = amp * cdouble(re, im);
    }
  const int shape[2] = {n0, n1};
  fft_axis_inplace(hat, shape, 0, FftDirection::inverse);
  fft_axis_inplace(hat, shape, 1, FftDirection::inverse);
  Field a(grid, 1);
  for (std::size_t i = 0; i < hat.size(); ++i) a.at(i, 0) = hat[i].real() >= 0.0 ? 12.0 : 3.0;
  return a;
}

Dataset gen_heat_dataset(int n_samples, const Grid& grid, const OracleConfig& cfg, std::uint64_t seed,
                         int threads) {
  cfg.validate();
  require_1d(grid, "heat generator");
  Dataset ds("heat", grid, n_samples, 1, 1);
  parallel_for(static_cast<std::size_t>(n_samples), threads, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    const auto coeffs = draw_band_limited(rng);
    BandLimited decayed = coeffs;
    for (int k = 1; k <= 8; ++k) {
      const double xi = kTwoPi * k / grid.length(0);
      const double f = std::exp(-cfg.c * xi * xi * cfg.t);
      decayed[2 * (k - 1)] *= f;
      decayed[2 * (k - 1) + 1] *= f;
    }
    ds.set_sample(static_cast<int>(i), eval_band_limited(coeffs, grid), eval_band_limited(decayed, grid));
  });
  ds.meta = {{"benchmark", "heat"}, {"seed", seed}, {"c", cfg.c}, {"t", cfg.t}};
  return ds;
}

Dataset gen_advection_dataset(int n_samples, const Grid& grid, const OracleConfig& cfg, int n_steps,
                              std::uint64_t seed, int threads, double dt) {
  cfg.validate();
  require_1d(grid, "advection generator");
  if (n_steps < 2 || n_steps % 2 != 0) throw UsageError("advection needs an even n_steps >= 2");
  const int half = n_steps / 2;
  Dataset ds("advection", grid, n_samples, half, half);
  const std::size_t pts = grid.points();
  parallel_for(static_cast<std::size_t>(n_samples), threads, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    const Field u0 = eval_band_limited(draw_band_limited(rng), grid);
    Field in(grid, half), out(grid, half);
    for (int s = 0; s < n_steps; ++s) {
      const Field snap = translate(u0, cfg.beta * dt * s);
      Field& dst = s < half ? in : out;
      for (std::size_t x = 0; x < pts; ++x) dst.at(x, s % half) = snap.at(x, 0);
    }
    ds.set_sample(static_cast<int>(i), in, out);
  });
  ds.meta = {{"benchmark", "advection"}, {"seed", seed}, {"beta", cfg.beta}, {"dt", dt}, {"n_steps", n_steps}};
  return ds;
}

Dataset gen_burgers_dataset(int n_samples, const Grid& grid, const OracleConfig& cfg, std::uint64_t seed,
                            int threads) {
  cfg.validate();
  require_1d(grid, "Burgers generator");
  Dataset ds("burgers", grid, n_samples, 1, 1);
  parallel_for(static_cast<std::size_t>(n_samples), threads, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    const Field u0 = eval_band_limited(draw_band_limited(rng), grid);
    ds.set_sample(static_cast<int>(i), u0, burgers_solve(u0, cfg.nu, cfg.t));
  });
  ds.meta = {{"benchmark", "burgers"}, {"seed", seed}, {"nu", cfg.nu}, {"t", cfg.t}};
  return ds;
}

Dataset gen_darcy_dataset(int n_samples, const Grid& grid, std::uint64_t seed, int threads) {
  if (grid.dims() != 2) throw UsageError("darcy generator needs a 2D grid");
  Dataset ds("darcy", grid, n_samples, 1, 1);
  parallel_for(static_cast<std::size_t>(n_samples), threads, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    const Field a = darcy_coefficient(grid, rng);
    ds.set_sample(static_cast<int>(i), a, darcy_solve(a).u);
  });
  ds.meta = {{"benchmark", "darcy"}, {"seed", seed}};
  return ds;
}

}  // namespace skno
