#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ser::data {

enum class Emotion { angry = 0, happy = 1, sad = 2, neutral = 3 };
inline constexpr int kNumEmotions = 4;

enum class Scenario { improvised, scripted };
enum class Gender { male, female };

// Discretized valence/activation/dominance.
enum class DimensionClass { low = 0, medium = 1, high = 2 };

std::string_view to_string(Emotion e);
std::string_view to_string(Scenario s);
std::string_view to_string(Gender g);
std::string_view to_string(DimensionClass c);

// Raw corpus label to the 4-class set. "excited" merges into happy; any other
// label outside {angry, happy, sad, neutral} has no mapping.
std::optional<Emotion> map_emotion_label(std::string_view raw);

std::optional<Scenario> parse_scenario(std::string_view raw);
std::optional<Gender> parse_gender(std::string_view raw);

struct UtteranceRecord {
  std::string id;
  std::string wav_path;
  int session = 1;
  std::string speaker;
  Emotion emotion = Emotion::neutral;
  Scenario scenario = Scenario::improvised;
  std::optional<double> valence;
  std::optional<double> activation;
  std::optional<double> dominance;
  std::optional<Gender> gender;
  // Known once the audio has been read or generated.
  std::optional<std::size_t> sample_count;
};

struct Corpus {
  std::vector<UtteranceRecord> records;
  int sample_rate = 16000;

  // Index of the record with this id; throws ser::Error when absent.
  const UtteranceRecord& at(std::string_view id) const;
  std::array<std::size_t, kNumEmotions> class_counts() const;
};

// Throws ValidationError on a broken record invariant or duplicate id.
void validate(const UtteranceRecord& r);
void validate(const Corpus& c);

// v in [1,2] -> low, (2,4) -> medium, [4,5] -> high. RangeError outside [1,5].
DimensionClass discretize_dimension(double v);

Corpus filter_improvised(const Corpus& corpus);

}  // namespace ser::data
