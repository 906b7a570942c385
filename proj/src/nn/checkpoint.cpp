#include "ser/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ser/error.hpp"

namespace ser::nn {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'S', 'E', 'R', 'C', 'N', 'N', '1', '\0'};

void put32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint32_t get32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}

template <typename Params>
auto stored_arrays(Params& p) {
  using Span = std::conditional_t<std::is_const_v<Params>, std::span<const double>, std::span<double>>;
  std::vector<Span> out = {
      p.conv_a.weight, p.conv_a.bias, p.bn_a.gamma, p.bn_a.beta, p.bn_a.running_mean, p.bn_a.running_var,
      p.conv_b.weight, p.conv_b.bias, p.bn_b.gamma, p.bn_b.beta, p.bn_b.running_mean, p.bn_b.running_var,
      p.fc.weight,     p.fc.bias,
  };
  if (p.aux) {
    out.emplace_back(p.aux->weight);
    out.emplace_back(p.aux->bias);
  }
  return out;
}

}  // namespace

json dims_to_json(const ModelDims& d) {
  return {{"in_ch", d.in_ch},         {"length", d.length},           {"filters_a", d.filters_a},
          {"kernel_a", d.kernel_a},   {"padding_a", d.padding_a},     {"filters_b", d.filters_b},
          {"kernel_b", d.kernel_b},   {"padding_b", d.padding_b},     {"pool_kernel", d.pool_kernel},
          {"pool_stride", d.pool_stride}, {"n_classes", d.n_classes}, {"aux_classes", d.aux_classes}};
}

ModelDims dims_from_json(const json& j) {
  ModelDims d;
  d.in_ch = j.at("in_ch");
  d.length = j.at("length");
  d.filters_a = j.at("filters_a");
  d.kernel_a = j.at("kernel_a");
  d.padding_a = j.at("padding_a");
  d.filters_b = j.at("filters_b");
  d.kernel_b = j.at("kernel_b");
  d.padding_b = j.at("padding_b");
  d.pool_kernel = j.at("pool_kernel");
  d.pool_stride = j.at("pool_stride");
  d.n_classes = j.at("n_classes");
  d.aux_classes = j.value("aux_classes", std::size_t{0});
  return d;
}

std::vector<unsigned char> encode_checkpoint(const ModelParams& model, const CheckpointMeta& meta) {
  const json header = {{"dims", dims_to_json(model.dims)},
                       {"features", meta.feature_config},
                       {"norm", meta.norm},
                       {"seed", meta.seed},
                       {"epoch", meta.epoch}};
  const std::string text = header.dump();
  std::vector<unsigned char> out(kMagic, kMagic + 8);
  put32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (auto arr : stored_arrays(model)) {
    for (double v : arr) put32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

ModelParams decode_checkpoint(std::span<const unsigned char> bytes, CheckpointMeta* meta) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw UnsupportedFormatError("not a model checkpoint");
  }
  const std::uint32_t header_len = get32(bytes.data() + 8);
  if (bytes.size() < 12 + std::size_t{header_len}) throw UnsupportedFormatError("truncated checkpoint header");
  json header;
  try {
    header = json::parse(bytes.begin() + 12, bytes.begin() + 12 + header_len);
  } catch (const json::exception& e) {
    throw UnsupportedFormatError(std::string("checkpoint header: ") + e.what());
  }
  ModelParams model = init_params(dims_from_json(header.at("dims")), 0);
  std::size_t pos = 12 + header_len;
  for (auto arr : stored_arrays(model)) {
    if (pos + 4 * arr.size() > bytes.size()) throw UnsupportedFormatError("truncated checkpoint body");
    for (auto& v : arr) {
      v = std::bit_cast<float>(get32(bytes.data() + pos));
      pos += 4;
    }
  }
  if (pos != bytes.size()) throw UnsupportedFormatError("trailing bytes after checkpoint body");
  if (meta) {
    meta->seed = header.value("seed", std::uint64_t{0});
    meta->epoch = header.value("epoch", 0);
    meta->feature_config = header.value("features", json::object());
    meta->norm = header.value("norm", json::object());
  }
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& model, const CheckpointMeta& meta) {
  const auto bytes = encode_checkpoint(model, meta);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes, meta);
}

}  // namespace ser::nn
