#pragma once

// SKT1 binary tensor files.
//
//   bytes 0..7   magic "SKNOTENS"
//   u32 LE       version (1)
//   u8           dtype (0 = real64, 1 = complex128 interleaved re/im)
//   u8           ndim
//   ndim x u64   axis lengths, little-endian
//   payload      row-major, little-endian

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "skno/tensor.hpp"

namespace skno {

enum class SktDtype : std::uint8_t { real64 = 0, complex128 = 1 };

struct SktTensor {
  SktDtype dtype = SktDtype::real64;
  std::vector<std::uint64_t> shape;
  std::vector<double> real;       // used when dtype == real64
  std::vector<cdouble> complex;   // used when dtype == complex128

  std::uint64_t element_count() const;
};

std::vector<std::uint8_t> encode_skt(const SktTensor& t);
SktTensor decode_skt(const std::vector<std::uint8_t>& bytes);

void write_skt(const std::filesystem::path& path, const SktTensor& t);
/// Writes via a temporary sibling and rename.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
SktTensor read_skt(const std::filesystem::path& path);

SktTensor make_real_tensor(std::vector<std::uint64_t> shape, std::vector<double> values);

/// Field stored as [resolution..., aux].
SktTensor field_to_skt(const Field& f);
Field skt_to_field(const SktTensor& t, const Grid& grid);
SktTensor spectrum_to_skt(const Spectrum& s);

}  // namespace skno
