#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "skno/tensor.hpp"

namespace skno {

/// Paired input/target samples on one grid, stored sample-major:
/// a is [count, points, a_channels], u is [count, points, u_channels].
struct Dataset {
  std::string name;
  Grid grid;
  int count = 0;
  int a_channels = 1;
  int u_channels = 1;
  std::vector<double> a;
  std::vector<double> u;
  nlohmann::json meta = nlohmann::json::object();

  Dataset() = default;
  Dataset(std::string name, Grid grid, int count, int a_channels, int u_channels);

  std::size_t a_stride() const { return grid.points() * static_cast<std::size_t>(a_channels); }
  std::size_t u_stride() const { return grid.points() * static_cast<std::size_t>(u_channels); }
  Field input(int i) const;
  Field target(int i) const;
  void set_sample(int i, const Field& a_i, const Field& u_i);

  /// First `n` samples.
  Dataset head(int n) const;
};

/// Writes `<dir>/<name>_a.skt`, `<dir>/<name>_u.skt` and `<dir>/<name>.json`.
/// Refuses to overwrite unless `force`. Returns the paths written.
std::vector<std::filesystem::path> save_dataset(const std::filesystem::path& dir, const Dataset& ds,
                                                bool force);
Dataset load_dataset(const std::filesystem::path& dir, const std::string& name);

}  // namespace skno
