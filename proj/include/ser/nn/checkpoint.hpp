#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "ser/nn/model.hpp"

namespace ser::nn {

struct CheckpointMeta {
  std::uint64_t seed = 0;
  int epoch = 0;
  nlohmann::json feature_config = nlohmann::json::object();
  nlohmann::json norm = nlohmann::json::object();  // {"mean": [...], "std": [...]}
};

// Layout: "SERCNN1\0", LE u32 header length, JSON header {dims, features,
// norm, seed, epoch}, then every array as LE f32 in this order:
//   conv_a.weight conv_a.bias bn_a.gamma bn_a.beta bn_a.running_mean bn_a.running_var
//   conv_b.weight conv_b.bias bn_b.gamma bn_b.beta bn_b.running_mean bn_b.running_var
//   fc.weight fc.bias [aux.weight aux.bias]
std::vector<unsigned char> encode_checkpoint(const ModelParams& model, const CheckpointMeta& meta);
ModelParams decode_checkpoint(std::span<const unsigned char> bytes, CheckpointMeta* meta = nullptr);

void save_checkpoint(const std::filesystem::path& path, const ModelParams& model, const CheckpointMeta& meta);
ModelParams load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);

nlohmann::json dims_to_json(const ModelDims& d);
ModelDims dims_from_json(const nlohmann::json& j);

}  // namespace ser::nn
