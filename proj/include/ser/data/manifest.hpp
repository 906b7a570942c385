#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include "ser/data/corpus.hpp"

namespace ser::data {

struct ManifestLoad {
  Corpus corpus;
  // Records whose emotion has no 4-class mapping, keyed by raw label.
  std::map<std::string, std::size_t> dropped_by_label;
  std::size_t dropped() const;
};

// JSON Lines manifest. Relative wav paths resolve against base_dir.
// Malformed lines raise ParseError with the line number; invariant
// violations and duplicate ids raise ValidationError.
ManifestLoad parse_manifest(std::istream& in, const std::filesystem::path& base_dir = {});
ManifestLoad parse_manifest(const std::filesystem::path& path);

void write_manifest_line(std::ostream& out, const UtteranceRecord& r);

}  // namespace ser::data
