#include "skno/tensor.hpp"

#include <cmath>
#include <sstream>

#include "skno/error.hpp"

namespace skno {
namespace {

void check_axis(int n, double length) {
  if (n < 2) throw UsageError("grid resolution must be >= 2, got " + std::to_string(n));
  if (!(length > 0.0) || !std::isfinite(length))
    throw UsageError("grid length must be positive and finite");
}

void check_finite(std::span<const double> v) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i]))
      throw NumericError("non-finite field value at flat index " + std::to_string(i));
}

}  // namespace

Grid::Grid(int n, double length) : dims_(1), resolution_{n, 1}, length_{length, 1.0} {
  check_axis(n, length);
}

Grid::Grid(int n0, int n1, double length0, double length1)
    : dims_(2), resolution_{n0, n1}, length_{length0, length1} {
  check_axis(n0, length0);
  check_axis(n1, length1);
}

std::size_t Grid::points() const {
  std::size_t n = 1;
  for (int a = 0; a < dims_; ++a) n *= static_cast<std::size_t>(resolution_[a]);
  return n;
}

std::vector<int> Grid::shape() const {
  return std::vector<int>(resolution_.begin(), resolution_.begin() + dims_);
}

Grid Grid::with_resolution(int n) const {
  return dims_ == 1 ? Grid(n, length_[0]) : Grid(n, n, length_[0], length_[1]);
}

std::string Grid::describe() const {
  std::ostringstream os;
  os << resolution_[0];
  if (dims_ == 2) os << "x" << resolution_[1];
  return os.str();
}

Field::Field(Grid grid, int aux_len)
    : grid_(grid), aux_len_(aux_len), values_(grid.points() * static_cast<std::size_t>(aux_len)) {
  if (aux_len < 1) throw UsageError("aux_len must be >= 1");
}

Field::Field(Grid grid, int aux_len, std::vector<double> values)
    : grid_(grid), aux_len_(aux_len), values_(std::move(values)) {
  if (aux_len < 1) throw UsageError("aux_len must be >= 1");
  if (values_.size() != grid_.points() * static_cast<std::size_t>(aux_len))
    throw UsageError("field value count " + std::to_string(values_.size()) +
                     " does not match grid " + grid_.describe() + " x aux " +
                     std::to_string(aux_len));
  check_finite(values_);
}

std::vector<int> Field::shape() const {
  auto s = grid_.shape();
  s.push_back(aux_len_);
  return s;
}

Spectrum::Spectrum(Grid grid, int aux_len, std::vector<cdouble> values,
                   std::uint32_t transformed_mask, bool from_real)
    : grid_(grid), aux_len_(aux_len), values_(std::move(values)), mask_(transformed_mask),
      from_real_(from_real) {
  if (values_.size() != grid_.points() * static_cast<std::size_t>(aux_len))
    throw UsageError("spectrum value count does not match its shape");
}

Spectrum Spectrum::from_field(const Field& f) {
  std::vector<cdouble> v(f.values().begin(), f.values().end());
  return Spectrum(f.grid(), f.aux_len(), std::move(v), 0u, true);
}

std::vector<int> Spectrum::shape() const {
  auto s = grid_.shape();
  s.push_back(aux_len_);
  return s;
}

double grid_coordinate(const Grid& g, std::size_t point, int axis) {
  if (g.dims() == 1) return static_cast<double>(point) / g.resolution(0);
  const std::size_t n1 = static_cast<std::size_t>(g.resolution(1));
  const std::size_t i = axis == 0 ? point / n1 : point % n1;
  return static_cast<double>(i) / g.resolution(axis);
}

}  // namespace skno
