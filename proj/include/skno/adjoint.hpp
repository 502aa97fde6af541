#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "skno/model.hpp"

namespace skno {

struct GradCheckRow {
  std::string tensor;
  double analytic_norm = 0.0;
  double fd_norm = 0.0;
  double max_rel_error = 0.0;
  bool pass = false;
};

struct GradCheckReport {
  std::vector<GradCheckRow> rows;
  bool pass = true;
  std::string csv() const;
};

struct GradCheckOptions {
  double eps = 1e-5;
  double tolerance = 1e-6;
  double scale_floor = 1e-4;       // absolute floor on the per-tensor scale
  bool training = false;           // dropout active, masks replayed from one recorded draw
  std::uint64_t dropout_seed = 0;
  /// Test hook applied to the analytic gradients before comparison.
  std::function<void(GradientSet&)> corrupt;
};

/// Central finite differences of the relative-L2 loss against backward, per learnable tensor.
/// Error per tensor: max_i |g_i - fd_i| / max(max|fd|, max|g|, scale_floor).
GradCheckReport grad_check(const SknoModel& model, const Grid& grid, int batch, std::span<const double> a,
                           std::span<const double> u, const GradCheckOptions& opt = {});

struct AdjointReport {
  double recover_max_rel = 0.0;
  double lift_max_rel = 0.0;
  int draws = 0;
  bool lift_checked = false;
};

/// <Q[v], r>_x against <v, Q*[r]>_{x,p} with Q*[r](x, p) = chi(p) r(x), and the same for a
/// linear lift, over random v, r drawn on `grid`.
AdjointReport adjoint_identity_check(const SknoModel& model, const Grid& grid, int draws, std::uint64_t seed);

}  // namespace skno
