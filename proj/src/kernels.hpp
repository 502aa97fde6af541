#pragma once

// Batched building blocks shared by the model engine and the standalone block API.
// Hidden states are row-major [batch * points, channels] matrices.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "skno/arch.hpp"
#include "skno/model.hpp"

namespace skno::detail {

using cd = std::complex<double>;

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }
inline double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}
inline Mat gelu(const Mat& x) { return x.unaryExpr([](double v) { return gelu(v); }); }
inline Mat gelu_grad(const Mat& x) { return x.unaryExpr([](double v) { return gelu_grad(v); }); }

using MapC = Eigen::Map<const Mat>;
using MapM = Eigen::Map<Mat>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using MapRow = Eigen::Map<const RowVec>;

inline MapC view(const Param& p, int rows, int cols) { return MapC(p.data.data(), rows, cols); }
inline MapM view(Param& p, int rows, int cols) { return MapM(p.data.data(), rows, cols); }
inline MapRow row_view(const Param& p) { return MapRow(p.data.data(), static_cast<Eigen::Index>(p.size())); }

/// Flat spatial bin and output weight of each retained mode on `grid`.
struct ModeLayout {
  std::vector<std::size_t> bin;
  std::vector<double> weight;
};
ModeLayout layout_modes(const ModeSet& modes, const Grid& grid);

/// out += spectral path of v (F_x^-1 restrict F_p^-1 A F_p F_x); s_cache receives F_p F_x v on modes.
void spectral_forward(const Mat& v, const Grid& grid, int batch, const ModeSet& modes, ATildeForm form,
                      const Param& a_re, const Param& a_im, Mat& out, std::vector<cd>* s_cache);

/// Adjoint of spectral_forward: accumulates weight gradients and g_v.
void spectral_backward(const Mat& g_out, const Grid& grid, int batch, const ModeSet& modes, ATildeForm form,
                       const Param& a_re, const Param& a_im, const std::vector<cd>& s, Param& g_re, Param& g_im,
                       Mat& g_v);

/// d[x, p] = sum_axes (1/dx) sum_o stencil[axis, p, o] v[x + (o - 1) e_axis, p], periodic.
Mat stencil_forward(const Mat& v, const Grid& grid, int batch, const Param& stencil);
void stencil_backward(const Mat& g_d, const Mat& v, const Grid& grid, int batch, const Param& stencil,
                      Param& g_stencil, Mat& g_v);

}  // namespace skno::detail
