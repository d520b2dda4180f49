#include "cor/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "cor/error.hpp"
#include "cor/text.hpp"
#include "json.hpp"
#include "lexicon_patterns.hpp"

namespace cor {

using nlohmann::json;

std::string regex_escape(std::string_view s) {
  static const std::string_view meta = R"(\^$.|?*+()[]{}/)";
  std::string out;
  for (char c : s) {
    if (meta.find(c) != std::string_view::npos) out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

TemplatePattern compile_template(const std::string& tmpl, const std::vector<std::string>& markers) {
  TemplatePattern p;
  p.source = tmpl;
  std::string re = "^";
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i);
      if (close != std::string::npos) {
        std::string slot = tmpl.substr(i + 1, close - i - 1);
        if (slot == "cue_clauses") {
          re += "(.+)";
        } else if (slot == "marker") {
          std::string alt;
          for (const auto& m : markers) {
            if (!alt.empty()) alt += "|";
            alt += regex_escape(m);
          }
          re += "(" + alt + ")";
        } else {
          re += "(.+?)";
        }
        p.slots.push_back(std::move(slot));
        i = close + 1;
        continue;
      }
    }
    re += regex_escape(std::string_view(&tmpl[i], 1));
    ++i;
  }
  re += "$";
  p.re = std::regex(re, std::regex::ECMAScript | std::regex::icase);
  return p;
}

const std::string& Lexicon::canonical_phrase(Relation r) const {
  return relation_phrases.at(r).front();
}

const std::string& Lexicon::relation_term(Relation r) const {
  return trace.relation_terms.at(r).front();
}

const std::string& Lexicon::direction_word(CardinalDirection d) const {
  return trace.direction_words.at(d).front();
}

const std::vector<std::pair<std::string, Relation>>& Lexicon::phrase_inventory() const {
  if (!patterns) throw InvariantError("lexicon " + language + " used before compile()");
  return patterns->phrases;
}

namespace {

void require(bool ok, const std::string& language, const std::string& what) {
  if (!ok) throw ValidationError("lexicon " + language + ": " + what);
}

bool has_slot(const std::string& tmpl, std::string_view slot) {
  return tmpl.find("{" + std::string(slot) + "}") != std::string::npos;
}

}  // namespace

void Lexicon::compile() {
  require(!language.empty(), language, "missing language tag");
  for (auto r : kAllRelations) {
    const std::string name(to_string(r));
    require(relation_phrases.count(r) && !relation_phrases.at(r).empty(), language,
            "no relation phrase for " + name);
    require(cue_templates.count(r) && !cue_templates.at(r).empty(), language,
            "no cue template for " + name);
    for (const auto& t : cue_templates.at(r)) {
      require(has_slot(t, "landmark"), language, "cue template without {landmark}: " + t);
    }
    if (hedged_cue_templates.count(r)) {
      for (const auto& t : hedged_cue_templates.at(r)) {
        require(has_slot(t, "landmark") && has_slot(t, "marker"), language,
                "hedged template needs {landmark} and {marker}: " + t);
        require(!uncertainty_markers.empty(), language, "hedged templates need uncertainty markers");
      }
    }
    require(trace.relation_terms.count(r) && !trace.relation_terms.at(r).empty(), language,
            "no trace term for " + name);
  }
  for (auto a : kAllRelations) {
    for (auto b : kAllRelations) {
      if (a == b) continue;
      const auto pa = text::ascii_lower(canonical_phrase(a));
      const auto pb = text::ascii_lower(canonical_phrase(b));
      require(pa.find(pb) == std::string::npos, language,
              "canonical phrases overlap: '" + pa + "' contains '" + pb + "'");
    }
  }
  for (auto d : kAllDirections) {
    require(trace.direction_words.count(d) && !trace.direction_words.at(d).empty(), language,
            "no direction word for " + std::string(to_string(d)));
  }
  require(!anchor_templates.empty(), language, "no anchor templates");
  for (const auto& t : anchor_templates) {
    require(has_slot(t, "anchor") && has_slot(t, "cue_clauses"), language,
            "anchor template needs {anchor} and {cue_clauses}: " + t);
  }
  require(trace.step_headers.size() == 3, language, "trace needs exactly three step headers");
  require(!list_separator.empty(), language, "empty list separator");

  auto p = std::make_shared<LexiconPatterns>();
  for (auto r : kAllRelations) {
    for (const auto& phrase : relation_phrases.at(r)) {
      p->phrases.emplace_back(text::ascii_lower(phrase), r);
      for (const auto& [key, subs] : synonym_table) {
        const auto hits = text::find_all_ci(phrase, key);
        if (hits.empty()) continue;
        for (const auto& sub : subs) {
          std::string variant = phrase;
          for (auto it = hits.rbegin(); it != hits.rend(); ++it) {
            variant.replace(it->begin, it->size(), sub);
          }
          p->phrases.emplace_back(text::ascii_lower(variant), r);
        }
      }
    }
  }
  std::stable_sort(p->phrases.begin(), p->phrases.end(),
                   [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
  p->phrases.erase(std::unique(p->phrases.begin(), p->phrases.end()), p->phrases.end());
  for (std::size_t i = 0; i < p->phrases.size(); ++i) {
    for (std::size_t j = i + 1; j < p->phrases.size(); ++j) {
      require(p->phrases[i].first != p->phrases[j].first, language,
              "relation phrase '" + p->phrases[i].first + "' maps to two relations");
    }
  }

  for (const auto& t : anchor_templates) p->anchors.push_back(compile_template(t, {}));
  for (auto r : kAllRelations) {
    for (const auto& t : cue_templates.at(r)) p->cues[r].push_back(compile_template(t, {}));
    if (hedged_cue_templates.count(r)) {
      for (const auto& t : hedged_cue_templates.at(r)) {
        p->hedged[r].push_back(compile_template(t, uncertainty_markers));
      }
    }
  }
  if (!trace.from_to_pattern.empty()) {
    try {
      p->from_to = std::regex(trace.from_to_pattern, std::regex::ECMAScript | std::regex::icase);
    } catch (const std::regex_error& e) {
      throw ValidationError("lexicon " + language + ": bad from_to_pattern: " + e.what());
    }
  }
  patterns = std::move(p);
}

namespace {

template <class Key, class Parse>
std::map<Key, std::vector<std::string>> keyed_lists(const json& j, Parse parse,
                                                    const std::string& field) {
  std::map<Key, std::vector<std::string>> out;
  for (const auto& [k, v] : j.items()) {
    auto key = parse(k);
    if (!key) throw ParseError("lexicon field " + field + ": unknown key '" + k + "'");
    out[*key] = v.template get<std::vector<std::string>>();
  }
  return out;
}

std::vector<std::string> strings(const json& j, const char* key) {
  return j.contains(key) ? j.at(key).get<std::vector<std::string>>() : std::vector<std::string>{};
}

std::string str(const json& j, const char* key) {
  return j.contains(key) ? j.at(key).get<std::string>() : std::string{};
}

}  // namespace

Lexicon load_lexicon(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("lexicon document: ") + e.what());
  }
  Lexicon lex;
  try {
    lex.language = doc.at("language").get<std::string>();
    lex.relation_phrases = keyed_lists<Relation>(doc.at("relation_phrases"), parse_relation,
                                                 "relation_phrases");
    lex.anchor_templates = strings(doc, "anchor_templates");
    lex.cue_templates = keyed_lists<Relation>(doc.at("cue_templates"), parse_relation, "cue_templates");
    if (doc.contains("hedged_cue_templates")) {
      lex.hedged_cue_templates = keyed_lists<Relation>(doc.at("hedged_cue_templates"),
                                                       parse_relation, "hedged_cue_templates");
    }
    lex.list_separator = str(doc, "list_separator");
    lex.final_conjunction = str(doc, "final_conjunction");
    lex.clause_separators = strings(doc, "clause_separators");
    lex.stopwords = strings(doc, "stopwords");
    lex.articles = strings(doc, "articles");
    if (doc.contains("synonym_table")) {
      lex.synonym_table = doc.at("synonym_table").get<std::map<std::string, std::vector<std::string>>>();
    }
    if (doc.contains("confusion_table")) {
      lex.confusion_table =
          doc.at("confusion_table").get<std::map<std::string, std::vector<std::string>>>();
    }
    lex.filler_tokens = strings(doc, "filler_tokens");
    lex.uncertainty_markers = strings(doc, "uncertainty_markers");
    if (doc.contains("vague_references")) {
      const auto& v = doc.at("vague_references");
      lex.vague.referential_anchor = strings(v, "referential_anchor");
      lex.vague.referential_landmark = strings(v, "referential_landmark");
      lex.vague.underspecified_anchor = strings(v, "underspecified_anchor");
      lex.vague.underspecified_landmark = strings(v, "underspecified_landmark");
    }
    if (doc.contains("category_names")) {
      lex.category_names = doc.at("category_names").get<std::map<std::string, std::string>>();
    }
    const auto& t = doc.at("trace");
    lex.trace.step_headers = strings(t, "step_headers");
    lex.trace.step1_line = str(t, "step1_line");
    lex.trace.step2_line = str(t, "step2_line");
    lex.trace.step3_line = str(t, "step3_line");
    lex.trace.final_line = str(t, "final_line");
    lex.trace.relation_terms = keyed_lists<Relation>(t.at("relation_terms"), parse_relation,
                                                     "trace.relation_terms");
    lex.trace.direction_words = keyed_lists<CardinalDirection>(
        t.at("direction_words"), parse_direction, "trace.direction_words");
    lex.trace.step_header_words = strings(t, "step_header_words");
    lex.trace.relation_labels = strings(t, "relation_labels");
    lex.trace.landmark_labels = strings(t, "landmark_labels");
    lex.trace.direction_labels = strings(t, "direction_labels");
    lex.trace.located_markers = strings(t, "located_markers");
    lex.trace.facing_markers = strings(t, "facing_markers");
    lex.trace.final_markers = strings(t, "final_markers");
    lex.trace.from_to_pattern = str(t, "from_to_pattern");
    if (doc.contains("stages")) {
      const auto& s = doc.at("stages");
      lex.stages = {str(s, "s1_line"), str(s, "s2_input"), str(s, "s2_target"), str(s, "s3_input"),
                    str(s, "s3_target")};
    }
  } catch (const json::exception& e) {
    throw ParseError("lexicon " + lex.language + ": " + e.what());
  }
  lex.compile();
  return lex;
}

Lexicon load_lexicon_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open lexicon file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return load_lexicon(ss.str());
  } catch (const Error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

const Lexicon& lexicon_for(const std::vector<Lexicon>& lexicons, std::string_view language) {
  for (const auto& lex : lexicons) {
    if (lex.language == language) return lex;
  }
  throw DataError("no lexicon loaded for language " + std::string(language));
}

}  // namespace cor
