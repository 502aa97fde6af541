#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "skno/dataset.hpp"
#include "skno/oracle.hpp"
#include "skno/rng.hpp"

namespace skno {

/// Coefficients (alpha_k, beta_k), k = 1..8, of
/// u0(x) = sum_k (alpha_k cos(2 pi k x) + beta_k sin(2 pi k x)) / k.
using BandLimited = std::array<double, 16>;

BandLimited draw_band_limited(Rng& rng);

/// Evaluates the series at the grid points, translated by `shift`: u0(x - shift).
Field eval_band_limited(const BandLimited& coeffs, const Grid& grid, double shift = 0.0);

/// Exact periodic translation u(x) -> u(x - shift) by a spectral phase shift.
Field translate(const Field& u, double shift);

/// Pseudo-spectral viscous Burgers solver: integrating-factor RK4, 2/3 dealiasing.
struct BurgersOptions {
  double dt = 1e-4;
  /// Grids finer than this are solved here and Fourier-interpolated upward.
  int max_solve_resolution = 256;
  std::vector<double>* energy_trace = nullptr;  // sum u^2 after every step, if set
};
Field burgers_solve(const Field& u0, double nu, double t_end, const BurgersOptions& opt = {});

/// Zero-padded Fourier interpolation of a periodic 1D field to `n` points.
Field fourier_resample(const Field& u, int n);

/// -div(a grad u) = f on the unit square, u = 0 on the boundary, f = 1.
/// Cell-centred 5-point scheme with harmonic-mean faces; Jacobi-preconditioned CG.
struct DarcyResult {
  Field u;
  int iterations = 0;
  double relative_residual = 0.0;
};
DarcyResult darcy_solve(const Field& a);

/// Max-abs of f + div(a grad u) under the same stencil.
double darcy_residual(const Field& a, const Field& u);

/// Sign-thresholded Gaussian random field: 12 where the field is >= 0, else 3.
Field darcy_coefficient(const Grid& grid, Rng& rng);

Dataset gen_heat_dataset(int n_samples, const Grid& grid, const OracleConfig& cfg, std::uint64_t seed,
                         int threads = 1);
/// Trajectories of n_steps snapshots spaced dt; input = first half, target = second half.
Dataset gen_advection_dataset(int n_samples, const Grid& grid, const OracleConfig& cfg, int n_steps,
                              std::uint64_t seed, int threads = 1, double dt = 0.05);
Dataset gen_burgers_dataset(int n_samples, const Grid& grid, const OracleConfig& cfg, std::uint64_t seed,
                            int threads = 1);
Dataset gen_darcy_dataset(int n_samples, const Grid& grid, std::uint64_t seed, int threads = 1);

}  // namespace skno
