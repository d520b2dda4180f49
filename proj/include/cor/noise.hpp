#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cor/lexicon.hpp"
#include "cor/parallel.hpp"
#include "cor/rng.hpp"
#include "cor/text.hpp"

// Text-level ASR noise: character error rate, CER-targeted corruption and severity buckets.
namespace cor::noise {

enum class Severity { Perfect = 0, Minor = 1, Moderate = 2, Major = 3, Severe = 4 };

inline constexpr std::array<Severity, 5> kAllSeverities = {
    Severity::Perfect, Severity::Minor, Severity::Moderate, Severity::Major, Severity::Severe};

std::string_view to_string(Severity s);
std::optional<Severity> parse_severity(std::string_view s);

/// Perfect is exactly CER 0; each other bucket is (previous cut, cut].
struct SeverityThresholds {
  double minor_max = 0.05;
  double moderate_max = 0.15;
  double major_max = 0.30;
  /// Highest CER the calibrator targets for the severe bucket.
  double severe_max = 0.45;

  void validate() const;
};

struct EditMix {
  double substitute = 0.6;
  double insert = 0.2;
  double erase = 0.2;
};

struct CorruptionConfig {
  double target_cer = 0.0;
  EditMix edit_mix;
  /// Probability of using a confusion_table entry where one applies.
  double confusion_bias = 0.7;
  bool protect_relation_phrases = true;
  /// Probability that a landmark mention with a confusion entry is considered for a
  /// whole-mention swap.
  double landmark_corruption_rate = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Unit-cost Levenshtein distance over code points.
std::size_t edit_distance(std::u32string_view a, std::u32string_view b);

/// Throws DataError for an empty reference.
double cer(std::string_view reference, std::string_view hypothesis);

/// Per reference code point: true when a minimum-cost alignment substitutes or deletes it,
/// or inserts text directly before it.
std::vector<bool> edited_mask(std::string_view reference, std::string_view hypothesis);

/// Whether any code point inside the byte span `bytes` of `reference` is marked in `mask`.
bool span_edited(const std::vector<bool>& mask, std::string_view reference, text::Span bytes);

Severity classify_cer(double cer_value, const SeverityThresholds& thresholds);
Severity classify_severity(std::string_view reference, std::string_view hypothesis,
                           const SeverityThresholds& thresholds);

struct Corruption {
  std::string transcript;
  double achieved_cer = 0.0;
  std::size_t edits = 0;
  /// Confusion-table keys replaced as whole mentions.
  std::vector<std::string> confusions;
};

/// Spends round(target_cer * length) edits; achieved_cer is recomputed from the output.
Corruption corrupt(std::string_view text, const CorruptionConfig& config, const Lexicon& lex);

/// Same, with an explicit edit budget. The output is at exactly `edits` edit distance
/// whenever the text admits it.
Corruption corrupt_to_edits(std::string_view text, std::size_t edits, const CorruptionConfig& config,
                            const Lexicon& lex);

/// Bucket weights, normalised on use.
struct SeverityMixture {
  std::array<double, 5> weights{1, 0, 0, 0, 0};

  static SeverityMixture clean();
  /// 101 / 222 / 258 / 102 / 13 of 696.
  static SeverityMixture main_test();
  /// 143 / 207 / 156 / 32 / 2 of 540.
  static SeverityMixture cross_domain();

  void validate() const;
};

/// Largest-remainder apportionment of n items; ties go to the lower bucket.
std::array<std::size_t, 5> allocate_counts(const SeverityMixture& mixture, std::size_t n);

/// Integer edit counts k such that k / length falls in `bucket`.
std::vector<std::size_t> feasible_edits(Severity bucket, std::size_t length,
                                        const SeverityThresholds& thresholds);

struct CalibrationItem {
  std::string text;
  const Lexicon* lexicon = nullptr;
  std::uint64_t seed = 0;
};

struct CalibratedTranscript {
  Severity severity = Severity::Perfect;
  Corruption corruption;
};

/// Assigns buckets in the exact mixture proportions (largest remainder), draws an edit
/// count inside each item's bucket and corrupts to it. Throws DataError when the texts are
/// too short to realise a bucket.
std::vector<CalibratedTranscript> calibrate(const std::vector<CalibrationItem>& items,
                                            const SeverityMixture& mixture,
                                            const CorruptionConfig& base,
                                            const SeverityThresholds& thresholds, std::uint64_t seed,
                                            Policy policy = Policy::Parallel);

}  // namespace cor::noise
