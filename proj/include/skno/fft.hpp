#pragma once

#include <span>
#include <vector>

#include "skno/tensor.hpp"

namespace skno {

enum class FftDirection { forward, inverse };

/// In-place unnormalized DFT along `axis` of a row-major array of `shape`.
/// The inverse direction applies no 1/n factor.
void fft_axis_inplace(std::span<cdouble> data, std::span<const int> shape, int axis,
                      FftDirection dir);

/// `rows` contiguous transforms of length `n`, unnormalized.
void fft_rows_inplace(std::span<cdouble> data, int n, int rows, FftDirection dir);

/// Forward DFT along one axis; unnormalized.
Spectrum dft_axis(const Field& field, Axis axis);
Spectrum dft_axis(const Spectrum& spectrum, Axis axis);

/// Inverse DFT along one axis with the 1/n factor.
Spectrum idft_axis(const Spectrum& spectrum, Axis axis);

/// Inverse along `axis` that must leave no transformed axis, returning a real Field.
/// Throws SymmetryError if the discarded imaginary part exceeds 1e-10.
Field idft_to_field(const Spectrum& spectrum, Axis axis);

/// Forward transform over every spatial axis (not the aux axis).
Spectrum dft_spatial(const Field& field);
/// Inverse of dft_spatial back to a real field.
Field idft_spatial(const Spectrum& spectrum);

/// Signed frequency of FFT bin `b` on an axis of `n` points, in (-n/2, n/2].
inline int signed_frequency(int b, int n) { return 2 * b > n ? b - n : b; }

/// Zero every spatial mode whose signed frequency exceeds `k` in magnitude on
/// any spatial axis. Requires all spatial axes transformed and 1 <= k <= n/2.
Spectrum truncate_modes(const Spectrum& spectrum, int k);

}  // namespace skno
