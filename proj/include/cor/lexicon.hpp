#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cor/direction.hpp"

namespace cor {

/// Surface strings used when rendering and parsing three-step traces.
struct TraceVocabulary {
  std::vector<std::string> step_headers;
  std::string step1_line;
  std::string step2_line;
  std::string step3_line;
  std::string final_line;
  /// First entry is the rendering form.
  std::map<Relation, std::vector<std::string>> relation_terms;
  std::map<CardinalDirection, std::vector<std::string>> direction_words;
  std::vector<std::string> step_header_words;
  std::vector<std::string> relation_labels;
  std::vector<std::string> landmark_labels;
  std::vector<std::string> direction_labels;
  std::vector<std::string> located_markers;
  std::vector<std::string> facing_markers;
  std::vector<std::string> final_markers;
  std::string from_to_pattern;
};

struct StageTemplates {
  std::string s1_line;
  std::string s2_input;
  std::string s2_target;
  std::string s3_input;
  std::string s3_target;
};

struct VagueReferences {
  std::vector<std::string> referential_anchor;
  std::vector<std::string> referential_landmark;
  std::vector<std::string> underspecified_anchor;
  std::vector<std::string> underspecified_landmark;
};

struct LexiconPatterns;

/// Language resources for one language tag. Load through load_lexicon, which validates
/// and precompiles the template patterns.
struct Lexicon {
  std::string language;
  /// First entry per relation is canonical.
  std::map<Relation, std::vector<std::string>> relation_phrases;
  std::vector<std::string> anchor_templates;
  std::map<Relation, std::vector<std::string>> cue_templates;
  std::map<Relation, std::vector<std::string>> hedged_cue_templates;
  std::string list_separator;
  std::string final_conjunction;
  std::vector<std::string> clause_separators;
  std::vector<std::string> stopwords;
  std::vector<std::string> articles;
  std::map<std::string, std::vector<std::string>> synonym_table;
  std::map<std::string, std::vector<std::string>> confusion_table;
  std::vector<std::string> filler_tokens;
  std::vector<std::string> uncertainty_markers;
  VagueReferences vague;
  std::map<std::string, std::string> category_names;
  TraceVocabulary trace;
  StageTemplates stages;

  std::shared_ptr<const LexiconPatterns> patterns;

  const std::string& canonical_phrase(Relation r) const;
  const std::string& relation_term(Relation r) const;
  const std::string& direction_word(CardinalDirection d) const;

  /// Every relation phrase (canonical, short forms and synonym_table variants of them),
  /// lowered, longest first.
  const std::vector<std::pair<std::string, Relation>>& phrase_inventory() const;

  /// Re-validates and rebuilds `patterns`; call after editing fields by hand.
  void compile();
};

Lexicon load_lexicon(std::string_view json_text);
Lexicon load_lexicon_file(const std::filesystem::path& path);

/// Picks the lexicon for `language`; throws DataError when absent.
const Lexicon& lexicon_for(const std::vector<Lexicon>& lexicons, std::string_view language);

}  // namespace cor
