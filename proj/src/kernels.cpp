#include "kernels.hpp"

#include "skno/error.hpp"
#include "skno/fft.hpp"

namespace skno::detail {
namespace {

std::vector<int> batch_shape(const Grid& grid, int batch, int channels) {
  std::vector<int> s{batch};
  for (int r : grid.shape()) s.push_back(r);
  s.push_back(channels);
  return s;
}

void fft_spatial(std::vector<cd>& buf, const Grid& grid, int batch, int channels, FftDirection dir) {
  const auto shape = batch_shape(grid, batch, channels);
  for (int a = 0; a < grid.dims(); ++a) fft_axis_inplace(buf, shape, a + 1, dir);
}

}  // namespace

ModeLayout layout_modes(const ModeSet& modes, const Grid& grid) {
  ModeLayout l;
  const int d = grid.dims();
  const int n_last = grid.resolution(d - 1);
  for (const auto& f : modes.freq) {
    const int last = f[d - 1];
    double w = (last == 0 || 2 * last == n_last) ? 1.0 : 2.0;
    std::size_t bin = 0;
    if (d == 1) {
      bin = static_cast<std::size_t>(last);
    } else {
      const int n0 = grid.resolution(0);
      // +k and -k share a bin when the axis has exactly 2k points; keep one copy
      if (f[0] < 0 && 2 * (-f[0]) == n0) w = 0.0;
      bin = static_cast<std::size_t>((f[0] + n0) % n0) * n_last + static_cast<std::size_t>(last);
    }
    l.bin.push_back(bin);
    l.weight.push_back(w);
  }
  return l;
}

void spectral_forward(const Mat& v, const Grid& grid, int batch, const ModeSet& modes, ATildeForm form,
                      const Param& a_re, const Param& a_im, Mat& out, std::vector<cd>* s_cache) {
  const int P = static_cast<int>(v.cols());
  const std::size_t X = grid.points();
  const int H = modes.count();
  const auto lay = layout_modes(modes, grid);

  std::vector<cd> buf(v.data(), v.data() + v.size());
  fft_spatial(buf, grid, batch, P, FftDirection::forward);

  std::vector<cd> s(static_cast<std::size_t>(batch) * H * P);
  for (int b = 0; b < batch; ++b)
    for (int h = 0; h < H; ++h)
      std::copy_n(buf.begin() + (b * X + lay.bin[h]) * P, P, s.begin() + (static_cast<std::size_t>(b) * H + h) * P);
  fft_rows_inplace(s, P, batch * H, FftDirection::forward);

  std::vector<cd> t(s.size());
  for (int b = 0; b < batch; ++b)
    for (int h = 0; h < H; ++h) {
      const cd* sp = s.data() + (static_cast<std::size_t>(b) * H + h) * P;
      cd* tp = t.data() + (static_cast<std::size_t>(b) * H + h) * P;
      if (form == ATildeForm::diag) {
        for (int p = 0; p < P; ++p) tp[p] = cd(a_re.data[h * P + p], a_im.data[h * P + p]) * sp[p];
      } else {
        const std::size_t base = static_cast<std::size_t>(h) * P * P;
        for (int i = 0; i < P; ++i) {
          cd acc = 0.0;
          for (int j = 0; j < P; ++j) acc += cd(a_re.data[base + i * P + j], a_im.data[base + i * P + j]) * sp[j];
          tp[i] = acc;
        }
      }
    }
  fft_rows_inplace(t, P, batch * H, FftDirection::inverse);

  std::fill(buf.begin(), buf.end(), cd(0.0));
  const double inv_p = 1.0 / P;
  for (int b = 0; b < batch; ++b)
    for (int h = 0; h < H; ++h) {
      if (lay.weight[h] == 0.0) continue;
      const cd* tp = t.data() + (static_cast<std::size_t>(b) * H + h) * P;
      cd* dst = buf.data() + (b * X + lay.bin[h]) * P;
      const double w = lay.weight[h] * inv_p;
      for (int p = 0; p < P; ++p) dst[p] += w * tp[p];
    }
  fft_spatial(buf, grid, batch, P, FftDirection::inverse);
  const double inv_x = 1.0 / static_cast<double>(X);
  double* o = out.data();
  for (std::size_t i = 0; i < buf.size(); ++i) o[i] += buf[i].real() * inv_x;
  if (s_cache) *s_cache = std::move(s);
}

void spectral_backward(const Mat& g_out, const Grid& grid, int batch, const ModeSet& modes, ATildeForm form,
                       const Param& a_re, const Param& a_im, const std::vector<cd>& s, Param& g_re, Param& g_im,
                       Mat& g_v) {
  const int P = static_cast<int>(g_out.cols());
  const std::size_t X = grid.points();
  const int H = modes.count();
  const auto lay = layout_modes(modes, grid);

  std::vector<cd> buf(g_out.data(), g_out.data() + g_out.size());
  fft_spatial(buf, grid, batch, P, FftDirection::forward);

  // gradient w.r.t. the pre-scatter values, then through F_p^-1 (adjoint = F_p / P)
  std::vector<cd> gt(static_cast<std::size_t>(batch) * H * P);
  const double inv_x = 1.0 / static_cast<double>(X);
  for (int b = 0; b < batch; ++b)
    for (int h = 0; h < H; ++h) {
      const double w = lay.weight[h] * inv_x / P;
      const cd* src = buf.data() + (b * X + lay.bin[h]) * P;
      cd* dst = gt.data() + (static_cast<std::size_t>(b) * H + h) * P;
      for (int p = 0; p < P; ++p) dst[p] = w * src[p];
    }
  fft_rows_inplace(gt, P, batch * H, FftDirection::forward);

  std::vector<cd> gs(gt.size());
  for (int b = 0; b < batch; ++b)
    for (int h = 0; h < H; ++h) {
      const std::size_t off = (static_cast<std::size_t>(b) * H + h) * P;
      const cd* g = gt.data() + off;
      const cd* sp = s.data() + off;
      cd* out = gs.data() + off;
      if (form == ATildeForm::diag) {
        for (int p = 0; p < P; ++p) {
          const cd ga = g[p] * std::conj(sp[p]);
          g_re.data[h * P + p] += ga.real();
          g_im.data[h * P + p] += ga.imag();
          out[p] = std::conj(cd(a_re.data[h * P + p], a_im.data[h * P + p])) * g[p];
        }
      } else {
        const std::size_t base = static_cast<std::size_t>(h) * P * P;
        for (int i = 0; i < P; ++i)
          for (int j = 0; j < P; ++j) {
            const cd ga = g[i] * std::conj(sp[j]);
            g_re.data[base + i * P + j] += ga.real();
            g_im.data[base + i * P + j] += ga.imag();
          }
        for (int j = 0; j < P; ++j) {
          cd acc = 0.0;
          for (int i = 0; i < P; ++i) acc += std::conj(cd(a_re.data[base + i * P + j], a_im.data[base + i * P + j])) * g[i];
          out[j] = acc;
        }
      }
    }
  // adjoint of F_p is the unnormalized inverse transform
  fft_rows_inplace(gs, P, batch * H, FftDirection::inverse);

  std::fill(buf.begin(), buf.end(), cd(0.0));
  for (int b = 0; b < batch; ++b)
    for (int h = 0; h < H; ++h) {
      const cd* src = gs.data() + (static_cast<std::size_t>(b) * H + h) * P;
      cd* dst = buf.data() + (b * X + lay.bin[h]) * P;
      for (int p = 0; p < P; ++p) dst[p] += src[p];
    }
  fft_spatial(buf, grid, batch, P, FftDirection::inverse);
  double* o = g_v.data();
  for (std::size_t i = 0; i < buf.size(); ++i) o[i] += buf[i].real();
}

namespace {

// Flat index of the periodic neighbour of `pt` at `offset` along `axis`.
inline std::size_t neighbour(const Grid& g, std::size_t pt, int axis, int offset) {
  if (g.dims() == 1) {
    const int n = g.resolution(0);
    return static_cast<std::size_t>((static_cast<int>(pt) + offset + n) % n);
  }
  const int n0 = g.resolution(0), n1 = g.resolution(1);
  int i = static_cast<int>(pt) / n1, j = static_cast<int>(pt) % n1;
  if (axis == 0) i = (i + offset + n0) % n0;
  else j = (j + offset + n1) % n1;
  return static_cast<std::size_t>(i) * n1 + j;
}

}  // namespace

Mat stencil_forward(const Mat& v, const Grid& grid, int batch, const Param& stencil) {
  for (int a = 0; a < grid.dims(); ++a)
    if (grid.resolution(a) < 3) throw UsageError("local propagator needs resolution >= 3 per axis");
  const int P = static_cast<int>(v.cols());
  const std::size_t X = grid.points();
  Mat d = Mat::Zero(v.rows(), P);
  for (int a = 0; a < grid.dims(); ++a) {
    const double inv_dx = 1.0 / grid.spacing(a);
    const double* w = stencil.data.data() + static_cast<std::size_t>(a) * P * 3;
    for (int b = 0; b < batch; ++b)
      for (std::size_t x = 0; x < X; ++x) {
        const double* lo = v.data() + (b * X + neighbour(grid, x, a, -1)) * P;
        const double* mid = v.data() + (b * X + x) * P;
        const double* hi = v.data() + (b * X + neighbour(grid, x, a, 1)) * P;
        double* out = d.data() + (b * X + x) * P;
        for (int p = 0; p < P; ++p)
          out[p] += inv_dx * (w[3 * p] * lo[p] + w[3 * p + 1] * mid[p] + w[3 * p + 2] * hi[p]);
      }
  }
  return d;
}

void stencil_backward(const Mat& g_d, const Mat& v, const Grid& grid, int batch, const Param& stencil,
                      Param& g_stencil, Mat& g_v) {
  const int P = static_cast<int>(v.cols());
  const std::size_t X = grid.points();
  for (int a = 0; a < grid.dims(); ++a) {
    const double inv_dx = 1.0 / grid.spacing(a);
    const double* w = stencil.data.data() + static_cast<std::size_t>(a) * P * 3;
    double* gw = g_stencil.data.data() + static_cast<std::size_t>(a) * P * 3;
    for (int b = 0; b < batch; ++b)
      for (std::size_t x = 0; x < X; ++x) {
        const std::size_t rows[3] = {b * X + neighbour(grid, x, a, -1), b * X + x, b * X + neighbour(grid, x, a, 1)};
        const double* g = g_d.data() + (b * X + x) * P;
        for (int o = 0; o < 3; ++o) {
          const double* src = v.data() + rows[o] * P;
          double* dst = g_v.data() + rows[o] * P;
          for (int p = 0; p < P; ++p) {
            gw[3 * p + o] += inv_dx * g[p] * src[p];
            dst[p] += inv_dx * w[3 * p + o] * g[p];
          }
        }
      }
  }
}

}  // namespace skno::detail
