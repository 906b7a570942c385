#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ser/data/folds.hpp"
#include "ser/data/manifest.hpp"
#include "ser/data/synth.hpp"
#include "ser/data/wav.hpp"
#include "ser/error.hpp"

using namespace ser;
using namespace ser::data;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ser_test_data_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string line(const std::string& id, int session, const std::string& emotion,
                 const std::string& scenario = "improvised", const std::string& extra = "") {
  return R"({"id": ")" + id + R"(", "wav": ")" + id + R"(.wav", "session": )" + std::to_string(session) +
         R"(, "speaker": "Ses0)" + std::to_string(session) + R"(F", "emotion": ")" + emotion +
         R"(", "scenario": ")" + scenario + "\"" + extra + "}\n";
}

Corpus grid_corpus(int per_session_per_class) {
  Corpus c;
  for (int s = 1; s <= 5; ++s) {
    for (int e = 0; e < kNumEmotions; ++e) {
      for (int k = 0; k < per_session_per_class; ++k) {
        UtteranceRecord r;
        r.id = "s" + std::to_string(s) + "_e" + std::to_string(e) + "_" + std::to_string(k);
        r.wav_path = r.id + ".wav";
        r.session = s;
        r.speaker = "spk" + std::to_string(s);
        r.emotion = static_cast<Emotion>(e);
        c.records.push_back(r);
      }
    }
  }
  return c;
}

}  // namespace

TEST_CASE("manifest: excited merges into happy and unknown labels are dropped with counts") {
  std::istringstream in(line("a", 1, "excited") + line("b", 2, "angry") + line("c", 3, "frustrated") +
                        line("d", 3, "frustrated") + line("e", 4, "xxx"));
  const auto load = parse_manifest(in, "/data");
  REQUIRE(load.corpus.records.size() == 2);
  CHECK(load.corpus.records[0].emotion == Emotion::happy);
  CHECK(load.corpus.records[1].emotion == Emotion::angry);
  CHECK(load.dropped() == 3);
  CHECK(load.dropped_by_label.at("frustrated") == 2);
  CHECK(load.corpus.records[0].wav_path == "/data/a.wav");
}

TEST_CASE("manifest: empty input gives an empty corpus") {
  std::istringstream in("");
  CHECK(parse_manifest(in).corpus.records.empty());
  std::istringstream blank("\n\n");
  CHECK(parse_manifest(blank).corpus.records.empty());
}

TEST_CASE("manifest: optional fields") {
  std::istringstream in(line("a", 1, "sad", "scripted",
                             R"(, "valence": 2.5, "activation": null, "dominance": 4, "gender": "male")"));
  const auto& r = parse_manifest(in).corpus.records.at(0);
  CHECK(r.scenario == Scenario::scripted);
  CHECK(r.valence == doctest::Approx(2.5));
  CHECK_FALSE(r.activation.has_value());
  CHECK(*r.dominance == 4.0);
  CHECK(r.gender == Gender::male);
}

TEST_CASE("manifest: errors") {
  SUBCASE("session 6") {
    std::istringstream in(line("a", 6, "sad"));
    CHECK_THROWS_AS(parse_manifest(in), ValidationError);
  }
  SUBCASE("malformed line reports its number") {
    std::istringstream in(line("a", 1, "sad") + "{not json\n");
    try {
      parse_manifest(in);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line == 2);
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  SUBCASE("duplicate id") {
    std::istringstream in(line("a", 1, "sad") + line("a", 2, "happy"));
    CHECK_THROWS_AS(parse_manifest(in), ValidationError);
  }
  SUBCASE("dimension outside [1,5]") {
    std::istringstream in(line("a", 1, "sad", "improvised", R"(, "valence": 5.5)"));
    CHECK_THROWS_AS(parse_manifest(in), ValidationError);
  }
  SUBCASE("missing key") {
    std::istringstream in(R"({"id": "a", "wav": "a.wav", "session": 1, "speaker": "x", "emotion": "sad"})" "\n");
    CHECK_THROWS_AS(parse_manifest(in), ParseError);
  }
}

TEST_CASE("manifest: write then parse round-trips") {
  UtteranceRecord r;
  r.id = "x1";
  r.wav_path = "/abs/x1.wav";
  r.session = 3;
  r.speaker = "Ses03M";
  r.emotion = Emotion::neutral;
  r.valence = 1.25;
  r.gender = Gender::female;
  std::ostringstream out;
  write_manifest_line(out, r);
  std::istringstream in(out.str());
  const auto back = parse_manifest(in).corpus.records.at(0);
  CHECK(back.id == r.id);
  CHECK(back.wav_path == r.wav_path);
  CHECK(back.session == 3);
  CHECK(back.emotion == Emotion::neutral);
  CHECK(*back.valence == 1.25);
  CHECK(back.gender == Gender::female);
  CHECK_FALSE(back.dominance.has_value());
}

TEST_CASE("label mapping is idempotent on the four classes") {
  for (int e = 0; e < kNumEmotions; ++e) {
    const auto name = to_string(static_cast<Emotion>(e));
    REQUIRE(map_emotion_label(name).has_value());
    CHECK(*map_emotion_label(to_string(*map_emotion_label(name))) == static_cast<Emotion>(e));
  }
  CHECK(map_emotion_label("excited") == Emotion::happy);
  for (const char* other : {"frustrated", "surprised", "fear", "disgust", "other", "xxx", "Angry"}) {
    CHECK_FALSE(map_emotion_label(other).has_value());
  }
}

TEST_CASE("wav: decode values, round trip and format checks") {
  const auto dir = scratch("wav");
  SUBCASE("zeros") {
    write_wav(dir / "z.wav", std::vector<double>(160, 0.0));
    const auto w = read_wav(dir / "z.wav");
    CHECK(w.samples == std::vector<double>(160, 0.0));
    CHECK(w.sample_rate == 16000);
    CHECK(w.original_length == 160);
  }
  SUBCASE("full scale negative is -1") {
    const auto bytes = encode_wav(std::vector<double>{-1.0, 0.5, 0.999});
    const auto w = decode_wav(bytes);
    CHECK(w.samples[0] == -1.0);
    CHECK(w.samples[1] == 0.5);
    CHECK(w.samples[2] == doctest::Approx(32735.0 / 32768.0));
  }
  SUBCASE("unsupported layouts") {
    auto bytes = encode_wav(std::vector<double>(10, 0.1));
    auto patched = [&](std::size_t offset, std::uint32_t value, int width) {
      auto b = bytes;
      for (int i = 0; i < width; ++i) b[offset + i] = static_cast<unsigned char>(value >> (8 * i));
      return b;
    };
    CHECK_THROWS_AS(decode_wav(patched(22, 2, 2)), UnsupportedFormatError);      // stereo
    CHECK_THROWS_AS(decode_wav(patched(24, 8000, 4)), UnsupportedFormatError);   // 8 kHz
    CHECK_THROWS_AS(decode_wav(patched(34, 8, 2)), UnsupportedFormatError);      // 8-bit
    CHECK_THROWS_AS(decode_wav(patched(20, 3, 2)), UnsupportedFormatError);      // float
    CHECK_THROWS_AS(decode_wav(std::vector<unsigned char>(12, 0)), UnsupportedFormatError);
  }
}

TEST_CASE("filter_improvised") {
  Corpus c = grid_corpus(1);
  c.records.resize(5);
  c.records[1].scenario = Scenario::scripted;
  c.records[3].scenario = Scenario::scripted;
  CHECK(filter_improvised(c).records.size() == 3);
  for (auto& r : c.records) r.scenario = Scenario::scripted;
  CHECK(filter_improvised(c).records.empty());
  for (auto& r : c.records) r.scenario = Scenario::improvised;
  const auto same = filter_improvised(c);
  REQUIRE(same.records.size() == c.records.size());
  for (std::size_t i = 0; i < c.records.size(); ++i) CHECK(same.records[i].id == c.records[i].id);
}

TEST_CASE("discretize_dimension boundaries") {
  CHECK(discretize_dimension(1.0) == DimensionClass::low);
  CHECK(discretize_dimension(2.0) == DimensionClass::low);
  CHECK(discretize_dimension(std::nextafter(2.0, 3.0)) == DimensionClass::medium);
  CHECK(discretize_dimension(3.0) == DimensionClass::medium);
  CHECK(discretize_dimension(std::nextafter(4.0, 3.0)) == DimensionClass::medium);
  CHECK(discretize_dimension(4.0) == DimensionClass::high);
  CHECK(discretize_dimension(5.0) == DimensionClass::high);
  CHECK_THROWS_AS(discretize_dimension(0.99), RangeError);
  CHECK_THROWS_AS(discretize_dimension(5.01), RangeError);
  CHECK_THROWS_AS(discretize_dimension(std::nan("")), RangeError);
}

TEST_CASE("session folds: 5 sessions x 20 records, fraction 0.2") {
  // 20 records per session = 5 per class per session.
  const Corpus c = grid_corpus(5);
  const auto folds = make_session_folds(c, 0.2, 3);
  REQUIRE(folds.size() == 5);
  std::set<std::string> all_test;
  for (const auto& f : folds) {
    CHECK(f.train_ids.size() == 64);
    CHECK(f.validation_ids.size() == 16);
    CHECK(f.test_ids.size() == 20);
    std::set<std::string> seen;
    for (const auto* ids : {&f.train_ids, &f.validation_ids, &f.test_ids}) {
      for (const auto& id : *ids) CHECK(seen.insert(id).second);
    }
    CHECK(seen.size() == c.records.size());
    for (const auto& id : f.test_ids) {
      CHECK(c.at(id).session == f.fold_index);
      all_test.insert(id);
    }
    for (const auto& id : f.train_ids) CHECK(c.at(id).session != f.fold_index);
    std::array<int, kNumEmotions> val_per_class{};
    for (const auto& id : f.validation_ids) ++val_per_class[static_cast<int>(c.at(id).emotion)];
    for (int n : val_per_class) CHECK(n == 4);
  }
  CHECK(all_test.size() == c.records.size());

  const auto again = make_session_folds(c, 0.2, 3);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(again[k].train_ids == folds[k].train_ids);
    CHECK(again[k].validation_ids == folds[k].validation_ids);
  }
  const auto other = make_session_folds(c, 0.2, 4);
  bool differs = false;
  for (std::size_t k = 0; k < 5; ++k) differs |= other[k].validation_ids != folds[k].validation_ids;
  CHECK(differs);
}

TEST_CASE("session folds: errors") {
  Corpus c = grid_corpus(2);
  CHECK_THROWS_AS(make_session_folds(c, 0.0, 1), RangeError);
  CHECK_THROWS_AS(make_session_folds(c, 0.5, 1), RangeError);
  std::erase_if(c.records, [](const UtteranceRecord& r) { return r.session == 4; });
  CHECK_THROWS_AS(make_session_folds(c, 0.2, 1), ValidationError);
}

TEST_CASE("synthetic corpus: counts, durations, determinism") {
  const auto dir = scratch("synth");
  SynthOptions opts;
  opts.n_per_class = 1;
  opts.min_seconds = 2.0;
  opts.max_seconds = 2.0;
  opts.seed = 7;
  const auto c = generate_synthetic_corpus(opts, dir / "a");
  REQUIRE(c.records.size() == 4);
  for (const auto& r : c.records) CHECK(read_wav(r.wav_path).samples.size() == 32000);

  generate_synthetic_corpus(opts, dir / "b");
  for (const auto& r : c.records) {
    const fs::path name = fs::path(r.wav_path).filename();
    auto slurp = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      return std::string(std::istreambuf_iterator<char>(in), {});
    };
    CHECK(slurp(dir / "a" / "wav" / name) == slurp(dir / "b" / "wav" / name));
  }

  opts.n_per_class = 100;
  opts.min_seconds = 1.0;
  opts.max_seconds = 1.5;
  const auto big = generate_synthetic_corpus(opts, dir / "c");
  const auto loaded = parse_manifest(dir / "c" / "manifest.jsonl");
  CHECK(loaded.corpus.records.size() == 400);
  for (auto n : loaded.corpus.class_counts()) CHECK(n == 100);
  std::map<int, std::set<std::string>> speakers;
  std::map<int, int> per_session;
  for (const auto& r : big.records) {
    speakers[r.session].insert(r.speaker);
    ++per_session[r.session];
    CHECK(r.scenario == Scenario::improvised);
    const double secs = static_cast<double>(*r.sample_count) / 16000.0;
    CHECK(secs >= 1.0 - 1e-9);
    CHECK(secs <= 1.5 + 1e-9);
  }
  CHECK(per_session.size() == 5);
  for (const auto& [s, n] : per_session) CHECK(n == 80);
  for (const auto& [s, set] : speakers) CHECK(set.size() == 2);
}

TEST_CASE("synthetic classes peak at their fundamentals") {
  // Naive DFT magnitude at 200 (k+1) Hz beats the other classes' fundamentals.
  const std::size_t n = 16000;
  for (int k = 0; k < kNumEmotions; ++k) {
    const auto x = synthesize_utterance(static_cast<Emotion>(k), n, 99);
    auto mag = [&](double hz) {
      std::complex<double> acc = 0.0;
      for (std::size_t t = 0; t < n; ++t) acc += x[t] * std::polar(1.0, -2.0 * M_PI * hz * static_cast<double>(t) / 16000.0);
      return std::abs(acc);
    };
    const double own = mag(200.0 * (k + 1));
    for (int j = 0; j < kNumEmotions; ++j) {
      if (j == k) continue;
      const double f = 200.0 * (j + 1);
      // A lower class's fundamental can be our harmonic only when it is a multiple of ours.
      if (std::fmod(f, 200.0 * (k + 1)) == 0.0) continue;
      CHECK(own > 5.0 * mag(f));
    }
  }
}
