#pragma once

// Phase-space (x, p) pipeline for the heat equation: lift u0 to v0(x, p),
// evolve the (d+1)-dimensional state exactly in Fourier space, recover u.

#include <string>
#include <string_view>
#include <vector>

#include "skno/tensor.hpp"

namespace skno {

/// Uniform periodic grid on [p_min, p_max) with n_p points; p_j = p_min + j * spacing.
struct PhaseGrid {
  double p_min = -16.0;
  double p_max = 16.0;
  int n_p = 128;

  static PhaseGrid symmetric(double p_max, int n_p) { return {-p_max, p_max, n_p}; }

  double spacing() const { return (p_max - p_min) / n_p; }
  double point(int j) const { return p_min + j * spacing(); }
  double length() const { return p_max - p_min; }
  void validate() const;
};

struct OracleConfig {
  double c = 0.05;     // diffusivity
  double beta = 1.0;   // advection speed
  double nu = 0.1;     // viscosity
  double t = 1.0;      // evolution time
  void validate() const;
};

enum class PhaseRecovery { delta, step };
PhaseRecovery parse_phase_recovery(std::string_view name);

/// v0(x, p_j) = exp(-|p_j|) u0(x).
Field warp_lift_exp(const Field& u0, const PhaseGrid& pg);

/// v0(x, p_j) = sin(p_j) u0(x); the p-box must be [-pi, pi).
Field warp_lift_sin(const Field& u0, const PhaseGrid& pg);

/// Multiplies the (x, p) double spectrum by exp(i t c mu xi^2) and transforms back.
Field evolve_phase_heat(const Field& v0, const PhaseGrid& pg, const OracleConfig& cfg);

/// delta: v1 at the first p_j >= 0. step: trapezoid over p >= 0, weights scaled
/// so that the recovery of exp(-|p|) u0 returns u0 on this grid.
Field recover_phase(const Field& v1, const PhaseGrid& pg, PhaseRecovery kind);

/// Exact periodic heat solution u(x, t) by spectral decay exp(-c xi^2 t).
Field heat_exact(const Field& u0, const OracleConfig& cfg);

struct VerifyRow {
  std::string check;     // accuracy | convergence | t0
  std::string recovery;  // delta | step
  double p_max = 0.0;
  int n_p = 0;
  double t = 0.0;
  double rel_l2 = 0.0;
  double tolerance = 0.0;  // convergence rows: error of the previous, smaller box
  bool pass = false;
};

struct VerifyReport {
  std::vector<VerifyRow> rows;
  bool pass = true;
  std::string table() const;  // CSV: check,recovery,p_max,n_p,t,rel_l2,tolerance,pass
};

struct VerifyOptions {
  int resolution = 256;
  PhaseGrid phase;
  OracleConfig oracle;
  std::vector<PhaseRecovery> recoveries{PhaseRecovery::delta, PhaseRecovery::step};
  int doublings = 2;         // p_max and n_p doubled together this many times
  double tolerance = 1e-3;
};

/// Lift, evolve and recover u0(x) = sin(2 pi x) against the exact heat solution.
VerifyReport oracle_verify(const VerifyOptions& opt = {});

}  // namespace skno
