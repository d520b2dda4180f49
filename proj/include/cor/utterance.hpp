#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cor/direction.hpp"
#include "cor/grid_env.hpp"
#include "cor/lexicon.hpp"
#include "cor/resolver.hpp"
#include "cor/text.hpp"

namespace cor::utterance {

enum class Variation {
  None,
  WordOrder,
  Synonym,
  ReferentialAmbiguity,
  Incomplete,
  Underspecified,
};

/// "none", "word_order", "synonym", "referential_ambiguity", "incomplete", "underspecified"
std::string_view to_string(Variation v);
std::optional<Variation> parse_variation(std::string_view s);

struct UtteranceSpec {
  std::string anchor_landmark_id;
  std::vector<std::pair<Relation, std::string>> cues;
  Variation variation = Variation::None;
  std::string language = "zh-TW";
  std::uint64_t seed = 0;
  /// Per-mention probability of using the English display name instead.
  double code_switch_rate = 0.0;
  /// Renders at least one mention in English.
  bool force_code_switch = false;
};

struct CueSpan {
  Relation relation = Relation::Front;
  std::string landmark_id;
  /// Byte span of the landmark mention in the rendered text.
  text::Span mention;
  std::string surface;
};

struct RenderedUtterance {
  std::string text;
  text::Span anchor;
  std::string anchor_surface;
  /// In surface order.
  std::vector<CueSpan> cues;
  bool code_switched = false;
  /// Transform notes, e.g. that a variation found no site and left the text unchanged.
  std::vector<std::string> notes;
};

/// Throws DataError for unknown ids, missing names, an empty or repeated relation list.
RenderedUtterance render(const UtteranceSpec& spec, const GridEnvironment& env, const Lexicon& lex);

/// Applies a variation to existing text. Texts that do not decompose into the lexicon's
/// templates only support the synonym variation; other kinds leave them unchanged.
/// Landmark categories for vague references come from `env` when given.
std::string apply_variation(std::string_view text, Variation kind, const Lexicon& lex,
                            std::uint64_t seed, const GridEnvironment* env = nullptr);

struct ExtractedRelation {
  Relation relation = Relation::Front;
  /// Unset when the mention did not resolve.
  std::optional<std::string> landmark_id;
  std::string mention;
  text::Span phrase;

  bool resolved() const { return landmark_id.has_value(); }
};

std::vector<ExtractedRelation> extract_relations(std::string_view text, const Lexicon& lex,
                                                 const MentionResolver& resolver);
std::vector<ExtractedRelation> extract_relations(std::string_view text, const Lexicon& lex,
                                                 const GridEnvironment& env);

}  // namespace cor::utterance
