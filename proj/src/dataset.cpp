#include "skno/dataset.hpp"

#include <fstream>

#include "skno/error.hpp"
#include "skno/skt_io.hpp"

namespace skno {
namespace fs = std::filesystem;

Dataset::Dataset(std::string name_, Grid grid_, int count_, int a_channels_, int u_channels_)
    : name(std::move(name_)), grid(grid_), count(count_), a_channels(a_channels_),
      u_channels(u_channels_), a(static_cast<std::size_t>(count_) * a_stride()),
      u(static_cast<std::size_t>(count_) * u_stride()) {}

Field Dataset::input(int i) const {
  const auto off = static_cast<std::size_t>(i) * a_stride();
  return Field(grid, a_channels, std::vector<double>(a.begin() + off, a.begin() + off + a_stride()));
}

Field Dataset::target(int i) const {
  const auto off = static_cast<std::size_t>(i) * u_stride();
  return Field(grid, u_channels, std::vector<double>(u.begin() + off, u.begin() + off + u_stride()));
}

void Dataset::set_sample(int i, const Field& a_i, const Field& u_i) {
  if (a_i.values().size() != a_stride() || u_i.values().size() != u_stride())
    throw UsageError("sample shape does not match dataset " + name);
  std::copy(a_i.values().begin(), a_i.values().end(), a.begin() + i * a_stride());
  std::copy(u_i.values().begin(), u_i.values().end(), u.begin() + i * u_stride());
}

Dataset Dataset::head(int n) const {
  if (n > count) throw UsageError("dataset " + name + " has only " + std::to_string(count) + " samples");
  Dataset d(name, grid, n, a_channels, u_channels);
  std::copy(a.begin(), a.begin() + n * a_stride(), d.a.begin());
  std::copy(u.begin(), u.begin() + n * u_stride(), d.u.begin());
  d.meta = meta;
  return d;
}

namespace {

std::vector<std::uint64_t> sample_shape(const Dataset& ds, int channels) {
  std::vector<std::uint64_t> s{static_cast<std::uint64_t>(ds.count)};
  for (int r : ds.grid.shape()) s.push_back(static_cast<std::uint64_t>(r));
  s.push_back(static_cast<std::uint64_t>(channels));
  return s;
}

}  // namespace

std::vector<fs::path> save_dataset(const fs::path& dir, const Dataset& ds, bool force) {
  const std::vector<fs::path> paths{dir / (ds.name + "_a.skt"), dir / (ds.name + "_u.skt"),
                                    dir / (ds.name + ".json")};
  if (!force)
    for (const auto& p : paths)
      if (fs::exists(p)) throw UsageError(p.string() + " exists (use --force to overwrite)");
  fs::create_directories(dir);
  write_skt(paths[0], make_real_tensor(sample_shape(ds, ds.a_channels), ds.a));
  write_skt(paths[1], make_real_tensor(sample_shape(ds, ds.u_channels), ds.u));
  nlohmann::json side = ds.meta;
  side["name"] = ds.name;
  side["count"] = ds.count;
  side["resolution"] = ds.grid.shape();
  side["a_channels"] = ds.a_channels;
  side["u_channels"] = ds.u_channels;
  std::ofstream(paths[2]) << side.dump(2) << "\n";
  return paths;
}

Dataset load_dataset(const fs::path& dir, const std::string& name) {
  const auto ta = read_skt(dir / (name + "_a.skt"));
  const auto tu = read_skt(dir / (name + "_u.skt"));
  if (ta.dtype != SktDtype::real64 || tu.dtype != SktDtype::real64)
    throw UsageError("dataset tensors must be real64");
  if (ta.shape.size() != tu.shape.size() || ta.shape.size() < 3 || ta.shape.size() > 4)
    throw UsageError("dataset tensors must have shape [n, res..., channels]");
  for (std::size_t i = 0; i + 1 < ta.shape.size(); ++i)
    if (ta.shape[i] != tu.shape[i]) throw UsageError("dataset input/target shapes disagree");
  const Grid grid = ta.shape.size() == 3
                        ? Grid(static_cast<int>(ta.shape[1]))
                        : Grid(static_cast<int>(ta.shape[1]), static_cast<int>(ta.shape[2]));
  Dataset ds(name, grid, static_cast<int>(ta.shape[0]), static_cast<int>(ta.shape.back()),
             static_cast<int>(tu.shape.back()));
  ds.a = ta.real;
  ds.u = tu.real;
  if (ds.count == 0) throw UsageError("dataset " + name + " is empty");
  const auto side = dir / (name + ".json");
  if (fs::exists(side)) ds.meta = nlohmann::json::parse(std::ifstream(side));
  return ds;
}

}  // namespace skno
