#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cor/direction.hpp"
#include "cor/error.hpp"
#include "cor/grid_env.hpp"
#include "cor/lexicon.hpp"
#include "cor/oracle.hpp"
#include "cor/resolver.hpp"
#include "json.hpp"

// Three-step reasoning traces: relation extraction, absolute directions, facing inference.
namespace cor::trace {

struct Step1Entry {
  Relation relation = Relation::Front;
  std::string mention;
  std::optional<std::string> landmark_id;

  bool operator==(const Step1Entry&) const = default;
};

struct Step2Entry {
  std::string mention;
  std::optional<std::string> landmark_id;
  Coord from;
  Coord to;
  oracle::Vec2 vector;
  CardinalDirection direction = CardinalDirection::North;

  bool operator==(const Step2Entry&) const = default;
};

struct Step3Entry {
  std::string mention;
  std::optional<std::string> landmark_id;
  CardinalDirection abs_dir = CardinalDirection::North;
  Relation relation = Relation::Front;
  CardinalDirection facing = CardinalDirection::North;

  bool operator==(const Step3Entry&) const = default;
};

struct ReasoningTrace {
  std::vector<Step1Entry> step1;
  std::vector<Step2Entry> step2;
  std::vector<Step3Entry> step3;
  CardinalDirection final_answer = CardinalDirection::North;

  bool operator==(const ReasoningTrace&) const = default;
};

/// Output that does not follow the three-step schema. `line` is 1-based, 0 when the
/// problem is an absent element.
class FormatError : public DataError {
 public:
  FormatError(const std::string& what, std::size_t line, std::string span)
      : DataError(line ? "line " + std::to_string(line) + ": " + what + ": " + span : what),
        line_(line),
        span_(std::move(span)) {}

  std::size_t line() const { return line_; }
  const std::string& span() const { return span_; }

 private:
  std::size_t line_;
  std::string span_;
};

struct GoldCue {
  Relation relation = Relation::Front;
  std::string landmark_id;
  std::string mention;
  Coord position;
};

/// Trace the oracle derives for `cues` seen from `user`; mentions are used verbatim, and
/// capitalised at the start of step-3 sentences.
ReasoningTrace derive_trace(Coord user, const std::vector<GoldCue>& cues);

std::string render_trace(const ReasoningTrace& trace, const Lexicon& lex);

/// Accepts step headers and vocabulary from any of `lexicons`, numbered or bulleted lines,
/// full-width punctuation and markdown emphasis. Mentions are resolved through `resolver`
/// when given.
ReasoningTrace parse_trace(std::string_view text, const std::vector<Lexicon>& lexicons,
                           const MentionResolver* resolver = nullptr);

nlohmann::json to_json(const ReasoningTrace& trace);
ReasoningTrace trace_from_json(const nlohmann::json& j);

}  // namespace cor::trace
