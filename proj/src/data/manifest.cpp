#include "ser/data/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include <json.hpp>

#include "ser/error.hpp"

namespace ser::data {

using nlohmann::json;

std::string_view to_string(Emotion e) {
  switch (e) {
    case Emotion::angry: return "angry";
    case Emotion::happy: return "happy";
    case Emotion::sad: return "sad";
    case Emotion::neutral: return "neutral";
  }
  return "?";
}

std::string_view to_string(Scenario s) {
  return s == Scenario::improvised ? "improvised" : "scripted";
}

std::string_view to_string(Gender g) { return g == Gender::male ? "male" : "female"; }

std::string_view to_string(DimensionClass c) {
  switch (c) {
    case DimensionClass::low: return "low";
    case DimensionClass::medium: return "medium";
    case DimensionClass::high: return "high";
  }
  return "?";
}

std::optional<Emotion> map_emotion_label(std::string_view raw) {
  if (raw == "angry") return Emotion::angry;
  if (raw == "happy" || raw == "excited") return Emotion::happy;
  if (raw == "sad") return Emotion::sad;
  if (raw == "neutral") return Emotion::neutral;
  return std::nullopt;
}

std::optional<Scenario> parse_scenario(std::string_view raw) {
  if (raw == "improvised") return Scenario::improvised;
  if (raw == "scripted") return Scenario::scripted;
  return std::nullopt;
}

std::optional<Gender> parse_gender(std::string_view raw) {
  if (raw == "male") return Gender::male;
  if (raw == "female") return Gender::female;
  return std::nullopt;
}

const UtteranceRecord& Corpus::at(std::string_view id) const {
  auto it = std::find_if(records.begin(), records.end(), [&](const auto& r) { return r.id == id; });
  if (it == records.end()) throw Error("no record with id '" + std::string(id) + "'");
  return *it;
}

std::array<std::size_t, kNumEmotions> Corpus::class_counts() const {
  std::array<std::size_t, kNumEmotions> counts{};
  for (const auto& r : records) ++counts[static_cast<int>(r.emotion)];
  return counts;
}

namespace {

void check_dimension(const std::optional<double>& v, const char* name, const std::string& id) {
  if (v && !(*v >= 1.0 && *v <= 5.0)) {
    throw ValidationError("record '" + id + "': " + name + " " + std::to_string(*v) +
                          " outside [1,5]");
  }
}

}  // namespace

void validate(const UtteranceRecord& r) {
  if (r.id.empty()) throw ValidationError("record with empty id");
  if (r.session < 1 || r.session > 5) {
    throw ValidationError("record '" + r.id + "': session " + std::to_string(r.session) +
                          " outside 1..5");
  }
  check_dimension(r.valence, "valence", r.id);
  check_dimension(r.activation, "activation", r.id);
  check_dimension(r.dominance, "dominance", r.id);
  if (r.sample_count && *r.sample_count < 1) {
    throw ValidationError("record '" + r.id + "': empty audio");
  }
}

void validate(const Corpus& c) {
  std::unordered_set<std::string> seen;
  for (const auto& r : c.records) {
    validate(r);
    if (!seen.insert(r.id).second) throw ValidationError("duplicate id '" + r.id + "'");
  }
}

DimensionClass discretize_dimension(double v) {
  if (!(v >= 1.0 && v <= 5.0)) {
    throw RangeError("dimensional label " + std::to_string(v) + " outside [1,5]");
  }
  if (v <= 2.0) return DimensionClass::low;
  if (v < 4.0) return DimensionClass::medium;
  return DimensionClass::high;
}

Corpus filter_improvised(const Corpus& corpus) {
  Corpus out;
  out.sample_rate = corpus.sample_rate;
  std::copy_if(corpus.records.begin(), corpus.records.end(), std::back_inserter(out.records),
               [](const auto& r) { return r.scenario == Scenario::improvised; });
  return out;
}

std::size_t ManifestLoad::dropped() const {
  return std::accumulate(dropped_by_label.begin(), dropped_by_label.end(), std::size_t{0},
                         [](std::size_t acc, const auto& kv) { return acc + kv.second; });
}

namespace {

std::optional<double> optional_real(const json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw ParseError(std::string("'") + key + "' must be a number", line);
  return it->get<double>();
}

std::string required_string(const json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw ParseError(std::string("missing or non-string '") + key + "'", line);
  }
  return it->get<std::string>();
}

}  // namespace

ManifestLoad parse_manifest(std::istream& in, const std::filesystem::path& base_dir) {
  ManifestLoad load;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(e.what(), line_no);
    }
    if (!j.is_object()) throw ParseError("expected a JSON object", line_no);

    const std::string raw_emotion = required_string(j, "emotion", line_no);
    UtteranceRecord r;
    r.id = required_string(j, "id", line_no);
    std::filesystem::path wav = required_string(j, "wav", line_no);
    r.wav_path = (wav.is_relative() && !base_dir.empty() ? base_dir / wav : wav).string();
    auto session = j.find("session");
    if (session == j.end() || !session->is_number_integer()) {
      throw ParseError("missing or non-integer 'session'", line_no);
    }
    r.session = session->get<int>();
    r.speaker = required_string(j, "speaker", line_no);
    const std::string scenario = required_string(j, "scenario", line_no);
    auto sc = parse_scenario(scenario);
    if (!sc) throw ParseError("unknown scenario '" + scenario + "'", line_no);
    r.scenario = *sc;
    r.valence = optional_real(j, "valence", line_no);
    r.activation = optional_real(j, "activation", line_no);
    r.dominance = optional_real(j, "dominance", line_no);
    if (auto g = j.find("gender"); g != j.end() && !g->is_null()) {
      auto parsed = g->is_string() ? parse_gender(g->get<std::string>()) : std::nullopt;
      if (!parsed) throw ParseError("gender must be \"male\", \"female\" or null", line_no);
      r.gender = parsed;
    }

    auto emotion = map_emotion_label(raw_emotion);
    if (!emotion) {
      ++load.dropped_by_label[raw_emotion];
      continue;
    }
    r.emotion = *emotion;
    try {
      validate(r);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
    load.corpus.records.push_back(std::move(r));
  }
  validate(load.corpus);
  return load;
}

ManifestLoad parse_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  return parse_manifest(in, path.parent_path());
}

void write_manifest_line(std::ostream& out, const UtteranceRecord& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j = {
      {"id", r.id},
      {"wav", r.wav_path},
      {"session", r.session},
      {"speaker", r.speaker},
      {"emotion", to_string(r.emotion)},
      {"scenario", to_string(r.scenario)},
      {"valence", opt(r.valence)},
      {"activation", opt(r.activation)},
      {"dominance", opt(r.dominance)},
      {"gender", r.gender ? json(to_string(*r.gender)) : json(nullptr)},
  };
  out << j.dump() << '\n';
}

}  // namespace ser::data
