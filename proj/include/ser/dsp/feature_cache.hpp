#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "ser/dsp/features.hpp"

namespace ser::dsp {

// "FCACHE1\0", then LE u32 s, d, valid_frames, kind (0 mfcc13, 1 logmel26),
// then s*d LE f32 row-major.
std::vector<unsigned char> encode_feature_cache(const FeatureMatrix& fm);
FeatureMatrix decode_feature_cache(std::span<const unsigned char> bytes);

void write_feature_cache(const std::filesystem::path& path, const FeatureMatrix& fm);
FeatureMatrix read_feature_cache(const std::filesystem::path& path);

// Round every value through f32, so fresh and cached features agree exactly.
void quantize_to_f32(FeatureMatrix& fm);

}  // namespace ser::dsp
