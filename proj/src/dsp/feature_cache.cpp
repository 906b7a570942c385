#include "ser/dsp/feature_cache.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ser/error.hpp"

namespace ser::dsp {

namespace {

constexpr char kMagic[8] = {'F', 'C', 'A', 'C', 'H', 'E', '1', '\0'};
constexpr std::size_t kHeaderBytes = 8 + 4 * 4;

void put32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint32_t get32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}

}  // namespace

std::vector<unsigned char> encode_feature_cache(const FeatureMatrix& fm) {
  std::vector<unsigned char> out(kMagic, kMagic + 8);
  out.reserve(kHeaderBytes + fm.data.size() * 4);
  put32(out, static_cast<std::uint32_t>(fm.frames));
  put32(out, static_cast<std::uint32_t>(fm.dims));
  put32(out, static_cast<std::uint32_t>(fm.valid_frames));
  put32(out, static_cast<std::uint32_t>(fm.kind));
  for (double v : fm.data) put32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

FeatureMatrix decode_feature_cache(std::span<const unsigned char> bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw UnsupportedFormatError("not a feature cache file");
  }
  FeatureMatrix fm;
  fm.frames = get32(bytes.data() + 8);
  fm.dims = get32(bytes.data() + 12);
  fm.valid_frames = get32(bytes.data() + 16);
  const std::uint32_t kind = get32(bytes.data() + 20);
  if (kind > 1) throw UnsupportedFormatError("unknown feature kind code " + std::to_string(kind));
  fm.kind = static_cast<FeatureKind>(kind);
  if (fm.valid_frames > fm.frames) throw UnsupportedFormatError("valid_frames exceeds frame count");
  const std::size_t n = fm.frames * fm.dims;
  if (bytes.size() != kHeaderBytes + 4 * n) throw UnsupportedFormatError("feature cache size mismatch");
  fm.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    fm.data[i] = std::bit_cast<float>(get32(bytes.data() + kHeaderBytes + 4 * i));
  }
  return fm;
}

void write_feature_cache(const std::filesystem::path& path, const FeatureMatrix& fm) {
  const auto bytes = encode_feature_cache(fm);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

FeatureMatrix read_feature_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_feature_cache(bytes);
}

void quantize_to_f32(FeatureMatrix& fm) {
  for (auto& v : fm.data) v = static_cast<float>(v);
}

}  // namespace ser::dsp
