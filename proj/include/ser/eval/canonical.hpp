#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

namespace ser::eval {

// Sorted keys, two-space indent, scalar arrays on one line, floating-point
// numbers with exactly six decimals (non-finite values become null).
// Ends with a newline.
std::string canonical_dump(const nlohmann::json& j);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

// 16 lowercase hex digits.
std::string hex64(std::uint64_t v);

}  // namespace ser::eval
