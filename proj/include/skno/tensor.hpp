#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace skno {

using cdouble = std::complex<double>;

/// Uniform periodic grid over a box in one or two spatial dimensions.
class Grid {
 public:
  Grid() = default;
  /// 1D grid with `n` points over [0, length).
  explicit Grid(int n, double length = 1.0);
  /// 2D grid, row-major with axis 0 slowest.
  Grid(int n0, int n1, double length0 = 1.0, double length1 = 1.0);

  int dims() const { return dims_; }
  int resolution(int axis) const { return resolution_.at(static_cast<std::size_t>(axis)); }
  double length(int axis) const { return length_.at(static_cast<std::size_t>(axis)); }
  double spacing(int axis) const { return length(axis) / resolution(axis); }
  std::size_t points() const;
  std::vector<int> shape() const;

  /// Same box, every axis refined or coarsened to `n` points.
  Grid with_resolution(int n) const;

  bool operator==(const Grid&) const = default;
  std::string describe() const;

 private:
  int dims_ = 1;
  std::array<int, 2> resolution_{2, 1};
  std::array<double, 2> length_{1.0, 1.0};
};

/// Axis selector: spatial axes are 0..dims-1, the auxiliary/channel axis is last.
struct Axis {
  int index = 0;
  static Axis spatial(int i) { return Axis{i}; }
  static Axis aux(const Grid& g) { return Axis{g.dims()}; }
  bool operator==(const Axis&) const = default;
};

/// Real samples over grid points times an auxiliary axis (p-grid or channels).
///
/// Layout is [spatial points row-major, aux] with the aux index fastest.
class Field {
 public:
  Field() = default;
  Field(Grid grid, int aux_len);  // zero-filled
  Field(Grid grid, int aux_len, std::vector<double> values);

  const Grid& grid() const { return grid_; }
  int aux_len() const { return aux_len_; }
  std::size_t points() const { return grid_.points(); }
  std::span<const double> values() const { return values_; }
  std::span<double> values_mut() { return values_; }
  std::vector<double>&& take_values() && { return std::move(values_); }

  double at(std::size_t point, int aux) const { return values_[point * aux_len_ + aux]; }
  double& at(std::size_t point, int aux) { return values_[point * aux_len_ + aux]; }

  /// Shape as {resolution..., aux_len}.
  std::vector<int> shape() const;

 private:
  Grid grid_;
  int aux_len_ = 1;
  std::vector<double> values_;
};

/// Complex image of a Field with a record of which axes are in frequency space.
class Spectrum {
 public:
  Spectrum() = default;
  Spectrum(Grid grid, int aux_len, std::vector<cdouble> values, std::uint32_t transformed_mask,
           bool from_real);

  static Spectrum from_field(const Field& f);

  const Grid& grid() const { return grid_; }
  int aux_len() const { return aux_len_; }
  std::span<const cdouble> values() const { return values_; }
  std::span<cdouble> values_mut() { return values_; }
  std::uint32_t transformed_mask() const { return mask_; }
  bool is_transformed(Axis a) const { return (mask_ >> a.index) & 1u; }
  bool from_real() const { return from_real_; }
  std::vector<int> shape() const;

  cdouble at(std::size_t point, int aux) const { return values_[point * aux_len_ + aux]; }

 private:
  Grid grid_;
  int aux_len_ = 1;
  std::vector<cdouble> values_;
  std::uint32_t mask_ = 0;
  bool from_real_ = false;
};

/// Normalized coordinate of grid point `point` along `axis`, in [0, 1).
double grid_coordinate(const Grid& g, std::size_t point, int axis);

}  // namespace skno
