#include "skno/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "skno/error.hpp"

namespace skno {
namespace {

// Plans are created once per (n, howmany, stride, dist, sign) and executed on
// caller arrays through the new-array interface, which is thread-safe.
// FFTW_UNALIGNED keeps execution independent of buffer alignment, so results
// are bit-reproducible across runs.
class PlanCache {
 public:
  using Key = std::tuple<int, int, int, int, int>;

  ~PlanCache() {
    for (auto& [k, p] : plans_) fftw_destroy_plan(p);
  }

  fftw_plan get(int n, int howmany, int stride, int dist, int sign) {
    const Key key{n, howmany, stride, dist, sign};
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    const std::size_t extent =
        static_cast<std::size_t>((n - 1) * stride + (howmany - 1) * dist + 1);
    auto* scratch = fftw_alloc_complex(extent);
    int dims[1] = {n};
    fftw_plan p = fftw_plan_many_dft(1, dims, howmany, scratch, nullptr, stride, dist, scratch,
                                     nullptr, stride, dist, sign,
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
    if (p == nullptr) throw NumericError("FFTW failed to create a plan");
    plans_.emplace(key, p);
    return p;
  }

 private:
  std::mutex mutex_;
  std::map<Key, fftw_plan> plans_;
};

PlanCache& plans() {
  static PlanCache cache;
  return cache;
}

fftw_complex* as_fftw(cdouble* p) { return reinterpret_cast<fftw_complex*>(p); }

int sign_of(FftDirection dir) { return dir == FftDirection::forward ? FFTW_FORWARD : FFTW_BACKWARD; }

void check_finite(std::span<const cdouble> v) {
  for (const auto& z : v)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw NumericError("non-finite value passed to DFT");
}

}  // namespace

void fft_axis_inplace(std::span<cdouble> data, std::span<const int> shape, int axis,
                      FftDirection dir) {
  if (axis < 0 || axis >= static_cast<int>(shape.size())) throw UsageError("fft axis out of range");
  std::size_t outer = 1, inner = 1;
  for (int a = 0; a < axis; ++a) outer *= static_cast<std::size_t>(shape[a]);
  for (std::size_t a = static_cast<std::size_t>(axis) + 1; a < shape.size(); ++a)
    inner *= static_cast<std::size_t>(shape[a]);
  const int n = shape[axis];
  if (outer * inner * static_cast<std::size_t>(n) != data.size())
    throw UsageError("fft data size does not match shape");
  fftw_plan p = plans().get(n, static_cast<int>(inner), static_cast<int>(inner), 1, sign_of(dir));
  const std::size_t block = static_cast<std::size_t>(n) * inner;
  for (std::size_t o = 0; o < outer; ++o) {
    auto* base = as_fftw(data.data() + o * block);
    fftw_execute_dft(p, base, base);
  }
}

void fft_rows_inplace(std::span<cdouble> data, int n, int rows, FftDirection dir) {
  if (static_cast<std::size_t>(n) * static_cast<std::size_t>(rows) != data.size())
    throw UsageError("fft row data size mismatch");
  if (rows == 0) return;
  fftw_plan p = plans().get(n, rows, 1, n, sign_of(dir));
  fftw_execute_dft(p, as_fftw(data.data()), as_fftw(data.data()));
}

Spectrum dft_axis(const Field& field, Axis axis) { return dft_axis(Spectrum::from_field(field), axis); }

Spectrum dft_axis(const Spectrum& spectrum, Axis axis) {
  const auto shape = spectrum.shape();
  if (axis.index < 0 || axis.index >= static_cast<int>(shape.size()))
    throw UsageError("axis index out of range");
  if (shape[axis.index] < 2) throw UsageError("DFT axis length must be >= 2");
  if (spectrum.is_transformed(axis)) throw UsageError("axis already transformed");
  check_finite(spectrum.values());
  std::vector<cdouble> v(spectrum.values().begin(), spectrum.values().end());
  fft_axis_inplace(v, shape, axis.index, FftDirection::forward);
  return Spectrum(spectrum.grid(), spectrum.aux_len(), std::move(v),
                  spectrum.transformed_mask() | (1u << axis.index), spectrum.from_real());
}

Spectrum idft_axis(const Spectrum& spectrum, Axis axis) {
  const auto shape = spectrum.shape();
  if (axis.index < 0 || axis.index >= static_cast<int>(shape.size()))
    throw UsageError("axis index out of range");
  if (!spectrum.is_transformed(axis)) throw UsageError("axis is not in frequency representation");
  check_finite(spectrum.values());
  std::vector<cdouble> v(spectrum.values().begin(), spectrum.values().end());
  fft_axis_inplace(v, shape, axis.index, FftDirection::inverse);
  const double scale = 1.0 / shape[axis.index];
  for (auto& z : v) z *= scale;
  return Spectrum(spectrum.grid(), spectrum.aux_len(), std::move(v),
                  spectrum.transformed_mask() & ~(1u << axis.index), spectrum.from_real());
}

Field idft_to_field(const Spectrum& spectrum, Axis axis) {
  Spectrum s = idft_axis(spectrum, axis);
  if (s.transformed_mask() != 0) throw UsageError("spectrum still has transformed axes");
  std::vector<double> re(s.values().size());
  double worst = 0.0;
  for (std::size_t i = 0; i < re.size(); ++i) {
    re[i] = s.values()[i].real();
    worst = std::max(worst, std::abs(s.values()[i].imag()));
  }
  if (worst >= 1e-10)
    throw SymmetryError("inverse transform left imaginary residue " + std::to_string(worst));
  return Field(s.grid(), s.aux_len(), std::move(re));
}

Spectrum dft_spatial(const Field& field) {
  Spectrum s = Spectrum::from_field(field);
  for (int a = 0; a < field.grid().dims(); ++a) s = dft_axis(s, Axis::spatial(a));
  return s;
}

Field idft_spatial(const Spectrum& spectrum) {
  const int d = spectrum.grid().dims();
  Spectrum s = spectrum;
  for (int a = 0; a + 1 < d; ++a) s = idft_axis(s, Axis::spatial(a));
  return idft_to_field(s, Axis::spatial(d - 1));
}

Spectrum truncate_modes(const Spectrum& spectrum, int k) {
  const Grid& g = spectrum.grid();
  for (int a = 0; a < g.dims(); ++a) {
    if (!spectrum.is_transformed(Axis::spatial(a)))
      throw UsageError("truncate_modes needs every spatial axis transformed");
    if (k < 1 || 2 * k > g.resolution(a))
      throw UsageError("mode count " + std::to_string(k) + " out of range [1, " +
                       std::to_string(g.resolution(a) / 2) + "]");
  }
  std::vector<cdouble> v(spectrum.values().begin(), spectrum.values().end());
  const int aux = spectrum.aux_len();
  const std::size_t pts = g.points();
  for (std::size_t pt = 0; pt < pts; ++pt) {
    bool keep = true;
    if (g.dims() == 1) {
      keep = std::abs(signed_frequency(static_cast<int>(pt), g.resolution(0))) <= k;
    } else {
      const int n1 = g.resolution(1);
      const int b0 = static_cast<int>(pt / n1), b1 = static_cast<int>(pt % n1);
      keep = std::abs(signed_frequency(b0, g.resolution(0))) <= k &&
             std::abs(signed_frequency(b1, n1)) <= k;
    }
    if (!keep)
      for (int c = 0; c < aux; ++c) v[pt * aux + c] = 0.0;
  }
  return Spectrum(g, aux, std::move(v), spectrum.transformed_mask(), spectrum.from_real());
}

}  // namespace skno
