#include "skno/skt_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "skno/error.hpp"

namespace skno {
namespace {

constexpr char kMagic[8] = {'S', 'K', 'N', 'O', 'T', 'E', 'N', 'S'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "SKT1 encoding assumes a little-endian host");

template <class T>
void put(std::vector<std::uint8_t>& out, T value) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

template <class T>
T take(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw UsageError("SKT1 file truncated");
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

std::uint64_t SktTensor::element_count() const {
  std::uint64_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

std::vector<std::uint8_t> encode_skt(const SktTensor& t) {
  const auto n = t.element_count();
  if (t.dtype == SktDtype::real64 && t.real.size() != n)
    throw UsageError("SKT1 real payload does not match shape");
  if (t.dtype == SktDtype::complex128 && t.complex.size() != n)
    throw UsageError("SKT1 complex payload does not match shape");
  if (t.shape.size() > 255) throw UsageError("SKT1 supports at most 255 axes");
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put(out, kVersion);
  put(out, static_cast<std::uint8_t>(t.dtype));
  put(out, static_cast<std::uint8_t>(t.shape.size()));
  for (auto s : t.shape) put(out, s);
  if (t.dtype == SktDtype::real64) {
    for (double v : t.real) put(out, v);
  } else {
    for (const auto& z : t.complex) {
      put(out, z.real());
      put(out, z.imag());
    }
  }
  return out;
}

SktTensor decode_skt(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    throw UsageError("not an SKT1 file (bad magic)");
  std::size_t pos = 8;
  const auto version = take<std::uint32_t>(bytes, pos);
  if (version != kVersion) throw UsageError("unsupported SKT1 version " + std::to_string(version));
  SktTensor t;
  const auto dtype = take<std::uint8_t>(bytes, pos);
  if (dtype > 1) throw UsageError("unknown SKT1 dtype " + std::to_string(dtype));
  t.dtype = static_cast<SktDtype>(dtype);
  const auto ndim = take<std::uint8_t>(bytes, pos);
  for (int i = 0; i < ndim; ++i) t.shape.push_back(take<std::uint64_t>(bytes, pos));
  const auto n = t.element_count();
  const std::size_t width = t.dtype == SktDtype::real64 ? 8 : 16;
  if (bytes.size() - pos != n * width) throw UsageError("SKT1 payload size mismatch");
  if (t.dtype == SktDtype::real64) {
    t.real.resize(n);
    std::memcpy(t.real.data(), bytes.data() + pos, n * 8);
  } else {
    t.complex.resize(n);
    std::memcpy(reinterpret_cast<double*>(t.complex.data()), bytes.data() + pos, n * 16);
  }
  return t;
}

void write_skt(const std::filesystem::path& path, const SktTensor& t) {
  const auto bytes = encode_skt(t);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot open " + tmp + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw UsageError("failed writing " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

SktTensor read_skt(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_skt(bytes);
}

SktTensor make_real_tensor(std::vector<std::uint64_t> shape, std::vector<double> values) {
  SktTensor t;
  t.dtype = SktDtype::real64;
  t.shape = std::move(shape);
  t.real = std::move(values);
  if (t.real.size() != t.element_count()) throw UsageError("tensor values do not match shape");
  return t;
}

SktTensor field_to_skt(const Field& f) {
  std::vector<std::uint64_t> shape;
  for (int s : f.shape()) shape.push_back(static_cast<std::uint64_t>(s));
  return make_real_tensor(std::move(shape), std::vector<double>(f.values().begin(), f.values().end()));
}

Field skt_to_field(const SktTensor& t, const Grid& grid) {
  if (t.dtype != SktDtype::real64) throw UsageError("expected a real64 tensor for a field");
  if (t.shape.size() != static_cast<std::size_t>(grid.dims()) + 1)
    throw UsageError("tensor rank does not match grid dims + 1");
  for (int a = 0; a < grid.dims(); ++a)
    if (t.shape[a] != static_cast<std::uint64_t>(grid.resolution(a)))
      throw UsageError("tensor shape does not match grid " + grid.describe());
  return Field(grid, static_cast<int>(t.shape.back()), t.real);
}

SktTensor spectrum_to_skt(const Spectrum& s) {
  SktTensor t;
  t.dtype = SktDtype::complex128;
  for (int v : s.shape()) t.shape.push_back(static_cast<std::uint64_t>(v));
  t.complex.assign(s.values().begin(), s.values().end());
  return t;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw UsageError("cannot open " + tmp + " for writing");
    out << text;
    if (!out) throw UsageError("failed writing " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace skno
