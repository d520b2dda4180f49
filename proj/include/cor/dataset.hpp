#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cor/direction.hpp"
#include "cor/grid_env.hpp"
#include "cor/lexicon.hpp"
#include "cor/noise.hpp"
#include "cor/parallel.hpp"
#include "cor/trace.hpp"
#include "cor/utterance.hpp"
#include "json.hpp"

namespace cor::dataset {

enum class Split { Train, Validation, Test };
enum class Subset { Main, CrossDomain, LinguisticVariation, ReferentialAmbiguity };

std::string_view to_string(Split s);
std::string_view to_string(Subset s);
std::optional<Split> parse_split(std::string_view s);
std::optional<Subset> parse_subset(std::string_view s);

struct InstanceCue {
  Relation relation = Relation::Front;
  std::string landmark_id;
  CardinalDirection abs_dir = CardinalDirection::North;

  bool operator==(const InstanceCue&) const = default;
};

struct Instance {
  std::string id;
  std::string env_id;
  std::string anchor_landmark_id;
  Coord user_pos;
  CardinalDirection facing = CardinalDirection::North;
  /// Surface order.
  std::vector<InstanceCue> cues;
  std::string utterance;
  std::string transcript;
  std::string coords_block;
  std::string multimodal_input;
  trace::ReasoningTrace gold_trace;
  std::string gold_trace_text;
  Split split = Split::Train;
  Subset subset = Subset::Main;
  noise::Severity severity = noise::Severity::Perfect;
  std::string language;
  std::uint64_t seed = 0;
  utterance::Variation variation = utterance::Variation::None;
  double transcript_cer = 0.0;
  bool code_switched = false;

  bool operator==(const Instance&) const = default;
};

nlohmann::json to_json(const Instance& inst);
Instance instance_from_json(const nlohmann::json& j);

/// One compact JSON object per line, keys sorted, trailing newline.
std::string to_jsonl(const std::vector<Instance>& instances);
/// `source` names the input in error messages, which carry 1-based line numbers.
std::vector<Instance> parse_jsonl(std::string_view text, const std::string& source);
std::vector<Instance> read_jsonl(const std::filesystem::path& path);

/// Set of distinct relations.
struct Combination {
  std::uint8_t mask = 0;

  std::vector<Relation> relations() const;
  std::size_t size() const;
  bool contains(Relation r) const { return (mask >> static_cast<int>(r)) & 1U; }
  /// "front+back"
  std::string name() const;
  static std::optional<Combination> parse(std::string_view name);
  static Combination of(const std::vector<Relation>& rels);

  auto operator<=>(const Combination&) const = default;
};

/// The 15 non-empty combinations: singles, pairs, triples, then the quadruple.
std::vector<Combination> all_combinations();

struct Site {
  std::string anchor_id;
  Coord anchor_pos;
  CardinalDirection facing = CardinalDirection::North;
  std::map<Relation, std::string> available;
};

/// Every (anchor landmark, facing) pair with the relations its occupied neighbours realise.
std::vector<Site> enumerate_sites(const GridEnvironment& env);

struct GenerationPlan {
  std::vector<std::pair<Combination, std::size_t>> combination_counts;
  std::size_t train = 3216;
  std::size_t validation = 688;
  std::size_t test = 696;
  std::size_t variation_quota = 400;
  std::size_t ambiguity_quota = 200;
  std::size_t cross_domain_quota = 540;
  std::string main_env = "gongguan";
  std::string cross_domain_env = "taipei_station";
  std::string ambiguity_env = "gongguan";
  std::map<std::string, double> language_mix{{"zh-TW", 1.0}};
  double code_switch_rate = 0.047;
  double cross_domain_code_switch_rate = 0.465;
  noise::CorruptionConfig corruption;
  noise::SeverityThresholds thresholds;
  noise::SeverityMixture main_mixture = noise::SeverityMixture::main_test();
  noise::SeverityMixture cross_domain_mixture = noise::SeverityMixture::cross_domain();
  std::uint64_t seed = 20250101;

  static GenerationPlan defaults();
  std::size_t main_total() const;
  /// Throws UsageError.
  void validate() const;
};

class UnsatisfiablePlan : public DataError {
 public:
  using DataError::DataError;
};

struct Resources {
  std::vector<GridEnvironment> environments;
  std::vector<Lexicon> lexicons;

  const GridEnvironment& environment(std::string_view id) const;
  const Lexicon& lexicon(std::string_view language) const;
};

/// Instances in canonical order: train, validation, test, cross-domain, ambiguity.
/// Deterministic in the plan; the policy only changes speed.
std::vector<Instance> generate(const GenerationPlan& plan, const Resources& res,
                               Policy policy = Policy::Parallel);

/// Checks the oracle round trip, relation distinctness, cue count, the coordinates block
/// and the multimodal serialisation. Throws InvariantError.
void verify_instance(const Instance& inst, const GridEnvironment& env);

struct RenderedTrace {
  trace::ReasoningTrace trace;
  std::string text;
};

/// Gold trace with landmark names in `lex.language`.
RenderedTrace render_gold_trace(const Instance& inst, const GridEnvironment& env, const Lexicon& lex);

struct Multimodal {
  std::string coords_block;
  std::string text;
};

/// T lists `id(x,y)` for the anchor and then each cue landmark; M = "Audio: " + A' +
/// " | Coordinates: " + T.
Multimodal serialize_multimodal(std::string_view transcript,
                                const std::vector<std::pair<std::string, Coord>>& coords);

/// Inverse of the coordinates block. Throws ParseError.
std::vector<std::pair<std::string, Coord>> parse_coords_block(std::string_view block);

/// Relations recovered from the clean utterance. Mentions the text cannot resolve are bound
/// to the coordinates block by position, so vague references still recover their cue.
std::vector<std::pair<Relation, std::optional<std::string>>> recover_cues(const Instance& inst,
                                                                          const Lexicon& lex,
                                                                          const MentionResolver& resolver);

enum class Stage { S1, S2, S3, S4 };
std::string_view to_string(Stage s);
std::optional<Stage> parse_stage(std::string_view s);

struct StageRecord {
  std::string instance_id;
  Stage stage = Stage::S1;
  std::string input;
  std::string target;
};

std::vector<StageRecord> emit_stage_records(const std::vector<Instance>& instances, Stage stage,
                                            const Resources& res);
nlohmann::json to_json(const StageRecord& rec);

enum class Protocol { B1, B2, B3, B4 };
std::string_view to_string(Protocol p);
std::optional<Protocol> parse_protocol(std::string_view s);

std::string emit_baseline_prompt(const Instance& inst, Protocol protocol);

}  // namespace cor::dataset
