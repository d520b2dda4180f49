#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cor/dataset.hpp"
#include "cor/parallel.hpp"
#include "cor/resolver.hpp"
#include "cor/trace.hpp"
#include "json.hpp"

// Scoring model outputs against gold instances.
namespace cor::eval {

enum class ErrorLabel { DirectionUnderstanding, RelationExtraction, AsrMisrecognition };

inline constexpr std::array<ErrorLabel, 3> kAllLabels = {
    ErrorLabel::DirectionUnderstanding, ErrorLabel::RelationExtraction, ErrorLabel::AsrMisrecognition};

std::string_view to_string(ErrorLabel l);

struct InstanceScore {
  std::string instance_id;
  bool parse_ok = false;
  bool correct = false;
  std::array<bool, 3> step_matches{};
  double reasoning_quality = 0.0;
  std::set<ErrorLabel> taxonomy;
  std::string format_error;
  std::optional<CardinalDirection> predicted;
};

struct ModelOutput {
  std::string instance_id;
  std::string output_text;
};

/// Line-delimited {instance_id, output_text}; errors carry `source:line`.
std::vector<ModelOutput> parse_outputs(std::string_view text, const std::string& source);
std::vector<ModelOutput> read_outputs(const std::filesystem::path& path);

class Scorer {
 public:
  explicit Scorer(const dataset::Resources& res);

  /// Parse failures fold into the score.
  InstanceScore score(const dataset::Instance& gold, std::string_view output_text) const;

  /// Labels for an incorrect parsed trace; empty for a correct one.
  std::set<ErrorLabel> classify(const dataset::Instance& gold, const trace::ReasoningTrace& trace) const;

  const MentionResolver& resolver(const std::string& env_id) const;

 private:
  struct Analysis {
    std::array<bool, 3> steps{};
    bool step1_unresolved = false;
    std::vector<std::pair<Relation, std::string>> predicted_only;
    std::vector<std::pair<Relation, std::string>> gold_only;
  };
  Analysis analyse(const dataset::Instance& gold, const trace::ReasoningTrace& trace) const;
  std::set<ErrorLabel> labels(const dataset::Instance& gold, const Analysis& a) const;

  const dataset::Resources* res_;
  std::map<std::string, MentionResolver> resolvers_;
};

/// One score per instance, in instance order. Instances without an output score as format
/// errors; outputs naming an unknown or repeated instance throw DataError.
std::vector<InstanceScore> score_all(const std::vector<dataset::Instance>& instances,
                                     const std::vector<ModelOutput>& outputs, const Scorer& scorer,
                                     Policy policy = Policy::Parallel);

struct SeverityRow {
  noise::Severity severity = noise::Severity::Perfect;
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
};

struct EvaluationReport {
  std::size_t total = 0;
  std::size_t correct = 0;
  std::size_t format_errors = 0;
  double accuracy = 0.0;
  double format_error_rate = 0.0;
  double mean_reasoning_quality = 0.0;
  /// A label counts once for every instance carrying it.
  std::map<ErrorLabel, std::size_t> taxonomy;
  /// Keyed by the exact label set, e.g. "direction_understanding+relation_extraction".
  std::map<std::string, std::size_t> taxonomy_exclusive;
  /// Incorrect instances that parsed but received no label.
  std::size_t unclassified = 0;
  std::vector<SeverityRow> severity;
  std::vector<InstanceScore> scores;
};

/// Throws DataError on empty input or when scores and instances are misaligned.
EvaluationReport aggregate(const std::vector<InstanceScore>& scores, const std::vector<dataset::Instance>& instances);

nlohmann::json to_json(const InstanceScore& s);
nlohmann::json to_json(const EvaluationReport& r);
std::string format_table(const EvaluationReport& r);

}  // namespace cor::eval
