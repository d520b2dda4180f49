#include <cmath>

#include "doctest.h"
#include "support.hpp"

using namespace cor;
using noise::Severity;

TEST_CASE("edit distance and CER over code points") {
  CHECK(noise::edit_distance(U"kitten", U"sitting") == 3);
  CHECK(noise::edit_distance(U"", U"abc") == 3);
  CHECK(noise::cer("abcd", "abcd") == 0.0);
  CHECK(noise::cer("abcd", "abxd") == doctest::Approx(0.25));
  CHECK(noise::cer("餐廳5", "參廳5") == doctest::Approx(1.0 / 3.0));
  CHECK(noise::cer("ab", "") == doctest::Approx(1.0));
  CHECK_THROWS_AS(noise::cer("", "x"), DataError);
}

TEST_CASE("severity buckets") {
  const noise::SeverityThresholds t;
  CHECK(noise::classify_cer(0.0, t) == Severity::Perfect);
  CHECK(noise::classify_cer(0.01, t) == Severity::Minor);
  CHECK(noise::classify_cer(0.05, t) == Severity::Minor);
  CHECK(noise::classify_cer(0.051, t) == Severity::Moderate);
  CHECK(noise::classify_cer(0.15, t) == Severity::Moderate);
  CHECK(noise::classify_cer(0.30, t) == Severity::Major);
  CHECK(noise::classify_cer(0.31, t) == Severity::Severe);
  CHECK(noise::classify_cer(0.9, t) == Severity::Severe);
  noise::SeverityThresholds bad;
  bad.moderate_max = 0.01;
  CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("edited mask marks altered spans only") {
  const std::string ref = "I am at park 4, bar 2 is on my right";
  const std::string hyp = "I am at park 4, 982 is on my right";
  const auto mask = noise::edited_mask(ref, hyp);
  const auto bar = ref.find("bar 2");
  CHECK(noise::span_edited(mask, ref, {bar, bar + 5}));
  CHECK_FALSE(noise::span_edited(mask, ref, {8, 14}));
}

TEST_CASE("corrupt hits the edit budget and reports an honest CER") {
  const std::string text = "I am at Academic Building A, Student Activity Center 1 is in front of me";
  for (double target : {0.0, 0.05, 0.1, 0.2, 0.4}) {
    noise::CorruptionConfig c;
    c.target_cer = target;
    c.seed = 11;
    const auto out = noise::corrupt(text, c, testing::en());
    CAPTURE(target);
    CHECK(out.achieved_cer == doctest::Approx(noise::cer(text, out.transcript)));
    CHECK(out.edits == static_cast<std::size_t>(std::llround(target * static_cast<double>(text::length(text)))));
    CHECK(std::fabs(out.achieved_cer - target) <= 0.02);
  }
}

TEST_CASE("relation phrases survive corruption when protected") {
  const std::string text = "我在公館捷運站1號出口，餐廳4在我前面，公館捷運站2號出口在我後面";
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    noise::CorruptionConfig c;
    c.target_cer = 0.3;
    c.seed = seed;
    const auto out = noise::corrupt(text, c, testing::zh());
    CHECK(out.transcript.find("在我前面") != std::string::npos);
    CHECK(out.transcript.find("在我後面") != std::string::npos);
  }
}

TEST_CASE("confusion swaps replace whole mentions") {
  noise::CorruptionConfig c;
  c.target_cer = 0.3;
  c.confusion_bias = 1.0;
  c.landmark_corruption_rate = 1.0;
  std::size_t swapped = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    c.seed = seed;
    const auto out = noise::corrupt("I am at park 4, and bar 2 is on my right", c, testing::en());
    swapped += !out.confusions.empty();
  }
  CHECK(swapped > 0);
}

TEST_CASE("corruption config validation") {
  noise::CorruptionConfig c;
  c.target_cer = 1.5;
  CHECK_THROWS_AS(c.validate(), UsageError);
  c.target_cer = 0.1;
  c.edit_mix = {0, 0, 0};
  CHECK_THROWS_AS(c.validate(), UsageError);
}

TEST_CASE("largest-remainder allocation reproduces the published counts") {
  CHECK(noise::allocate_counts(noise::SeverityMixture::main_test(), 696) ==
        std::array<std::size_t, 5>{101, 222, 258, 102, 13});
  CHECK(noise::allocate_counts(noise::SeverityMixture::cross_domain(), 540) ==
        std::array<std::size_t, 5>{143, 207, 156, 32, 2});
  CHECK(noise::allocate_counts(noise::SeverityMixture::clean(), 10) == std::array<std::size_t, 5>{10, 0, 0, 0, 0});
  const auto a = noise::allocate_counts(noise::SeverityMixture::main_test(), 1001);
  CHECK(a[0] + a[1] + a[2] + a[3] + a[4] == 1001);
}

TEST_CASE("feasible edit counts respect bucket bounds") {
  const noise::SeverityThresholds t;
  CHECK(noise::feasible_edits(Severity::Minor, 19, t).empty());
  CHECK(noise::feasible_edits(Severity::Minor, 20, t) == std::vector<std::size_t>{1});
  CHECK(noise::feasible_edits(Severity::Perfect, 5, t) == std::vector<std::size_t>{0});
  for (auto k : noise::feasible_edits(Severity::Major, 40, t)) {
    CHECK(noise::classify_cer(static_cast<double>(k) / 40.0, t) == Severity::Major);
  }
}

TEST_CASE("calibration realises the mixture exactly and reclassifies honestly") {
  std::vector<noise::CalibrationItem> items;
  for (const auto& inst : testing::default_dataset()) {
    if (inst.language != "zh-TW" || text::length(inst.utterance) < 20) continue;
    items.push_back({inst.utterance, &testing::zh(), inst.seed});
    if (items.size() == 696) break;
  }
  REQUIRE(items.size() == 696);
  const noise::SeverityThresholds t;
  const auto out = noise::calibrate(items, noise::SeverityMixture::main_test(), {}, t, 5);
  std::array<std::size_t, 5> counts{};
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(noise::classify_severity(items[i].text, out[i].corruption.transcript, t) == out[i].severity);
    ++counts[static_cast<std::size_t>(out[i].severity)];
  }
  CHECK(counts == std::array<std::size_t, 5>{101, 222, 258, 102, 13});
}

TEST_CASE("calibration refuses texts too short for a bucket") {
  std::vector<noise::CalibrationItem> items(10, {"短句", &testing::zh(), 1});
  noise::SeverityMixture minor_only;
  minor_only.weights = {0, 1, 0, 0, 0};
  CHECK_THROWS_AS(noise::calibrate(items, minor_only, {}, {}, 1), DataError);
}

TEST_CASE("serial and parallel calibration agree") {
  std::vector<noise::CalibrationItem> items;
  for (const auto& inst : testing::default_dataset()) {
    if (text::length(inst.utterance) >= 20) items.push_back({inst.utterance, &testing::zh(), inst.seed});
    if (items.size() == 300) break;
  }
  const auto a = noise::calibrate(items, noise::SeverityMixture::cross_domain(), {}, {}, 9, Policy::Serial);
  const auto b = noise::calibrate(items, noise::SeverityMixture::cross_domain(), {}, {}, 9, Policy::Parallel);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].severity == b[i].severity);
    CHECK(a[i].corruption.transcript == b[i].corruption.transcript);
  }
}
