#include "cor/utterance.hpp"

#include <algorithm>
#include <regex>

#include "cor/error.hpp"
#include "cor/rng.hpp"
#include "lexicon_patterns.hpp"

namespace cor::utterance {

std::string_view to_string(Variation v) {
  switch (v) {
    case Variation::None: return "none";
    case Variation::WordOrder: return "word_order";
    case Variation::Synonym: return "synonym";
    case Variation::ReferentialAmbiguity: return "referential_ambiguity";
    case Variation::Incomplete: return "incomplete";
    case Variation::Underspecified: return "underspecified";
  }
  return "none";
}

std::optional<Variation> parse_variation(std::string_view s) {
  for (auto v : {Variation::None, Variation::WordOrder, Variation::Synonym,
                 Variation::ReferentialAmbiguity, Variation::Incomplete, Variation::Underspecified}) {
    if (text::equals_ci(text::trim(s), to_string(v))) return v;
  }
  return std::nullopt;
}

namespace {

struct Clause {
  Relation relation = Relation::Front;
  std::string mention;
  std::optional<std::string> id;
  std::size_t tmpl = 0;
  bool hedged = false;
  std::string marker;
};

struct Parts {
  std::size_t anchor_tmpl = 0;
  std::string filler;
  std::string anchor_mention;
  std::optional<std::string> anchor_id;
  std::vector<Clause> clauses;
  bool conjunction = true;
  /// (key, replacement) applied to every rendered piece.
  std::vector<std::pair<std::string, std::string>> subs;
};

std::string substitute(std::string_view piece, const std::vector<std::pair<std::string, std::string>>& subs) {
  std::string out(piece);
  for (const auto& [key, repl] : subs) {
    const auto hits = text::find_all_ci(out, key);
    for (auto it = hits.rbegin(); it != hits.rend(); ++it) out.replace(it->begin, it->size(), repl);
  }
  return out;
}

class Composer {
 public:
  explicit Composer(const Parts& parts) : parts_(parts) {}

  void literal(std::string_view s) { out_ += substitute(s, parts_.subs); }

  text::Span mention(std::string_view s) {
    const std::size_t begin = out_.size();
    out_ += substitute(s, parts_.subs);
    return {begin, out_.size()};
  }

  void insert_before_trailing_space(std::string_view s) {
    std::size_t ws = out_.size();
    while (ws > 0 && text::is_space(out_[ws - 1])) --ws;
    out_.insert(ws, s);
  }

  std::string& out() { return out_; }

 private:
  const Parts& parts_;
  std::string out_;
};

/// Calls on_literal / on_slot over the pieces of a `{slot}` template.
template <class Lit, class Slot>
void walk_template(std::string_view tmpl, Lit on_literal, Slot on_slot) {
  std::size_t i = 0;
  std::size_t lit = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        if (i > lit) on_literal(tmpl.substr(lit, i - lit));
        on_slot(tmpl.substr(i + 1, close - i - 1));
        i = close + 1;
        lit = i;
        continue;
      }
    }
    ++i;
  }
  if (lit < tmpl.size()) on_literal(tmpl.substr(lit));
}

RenderedUtterance compose(const Parts& parts, const Lexicon& lex) {
  RenderedUtterance r;
  Composer c(parts);
  const std::string& tmpl = lex.anchor_templates.at(parts.anchor_tmpl);
  const bool clauses_last = tmpl.size() >= 13 && tmpl.compare(tmpl.size() - 13, 13, "{cue_clauses}") == 0;
  walk_template(
      tmpl, [&](std::string_view s) { c.literal(s); },
      [&](std::string_view slot) {
        if (slot == "anchor") {
          if (!parts.filler.empty()) c.insert_before_trailing_space(parts.filler);
          r.anchor = c.mention(parts.anchor_mention);
        } else if (slot == "cue_clauses") {
          for (std::size_t i = 0; i < parts.clauses.size(); ++i) {
            const auto& cl = parts.clauses[i];
            if (i > 0) c.literal(lex.list_separator);
            if (parts.conjunction && clauses_last && i + 1 == parts.clauses.size()) {
              c.literal(lex.final_conjunction);
            }
            const auto& pool = cl.hedged ? lex.hedged_cue_templates.at(cl.relation)
                                         : lex.cue_templates.at(cl.relation);
            CueSpan span;
            span.relation = cl.relation;
            span.landmark_id = cl.id.value_or("");
            walk_template(
                pool.at(cl.tmpl), [&](std::string_view s) { c.literal(s); },
                [&](std::string_view inner) {
                  if (inner == "landmark") {
                    span.mention = c.mention(cl.mention);
                  } else if (inner == "marker") {
                    c.literal(cl.marker);
                  }
                });
            r.cues.push_back(std::move(span));
          }
        }
      });
  r.text = std::move(c.out());
  r.anchor_surface = r.text.substr(r.anchor.begin, r.anchor.size());
  for (auto& cue : r.cues) cue.surface = r.text.substr(cue.mention.begin, cue.mention.size());
  return r;
}

std::optional<Parts> decompose(std::string_view input, const Lexicon& lex) {
  const auto& pats = *lex.patterns;
  const std::string s(text::trim(input));
  for (std::size_t a = 0; a < pats.anchors.size(); ++a) {
    std::smatch m;
    if (!std::regex_match(s, m, pats.anchors[a].re)) continue;
    Parts parts;
    parts.anchor_tmpl = a;
    parts.conjunction = false;
    std::string clauses_text;
    for (std::size_t g = 0; g < pats.anchors[a].slots.size(); ++g) {
      if (pats.anchors[a].slots[g] == "anchor") parts.anchor_mention = m[g + 1].str();
      if (pats.anchors[a].slots[g] == "cue_clauses") clauses_text = m[g + 1].str();
    }
    std::vector<std::string> pieces;
    std::size_t start = 0;
    while (true) {
      auto pos = clauses_text.find(lex.list_separator, start);
      pieces.push_back(clauses_text.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
      if (pos == std::string::npos) break;
      start = pos + lex.list_separator.size();
    }
    bool ok = true;
    for (auto& piece : pieces) {
      if (!lex.final_conjunction.empty() && text::starts_with_ci(piece, lex.final_conjunction)) {
        piece.erase(0, lex.final_conjunction.size());
        parts.conjunction = true;
      }
      std::optional<Clause> found;
      auto try_pool = [&](const std::map<Relation, std::vector<TemplatePattern>>& pool, bool hedged) {
        for (const auto& [rel, list] : pool) {
          for (std::size_t t = 0; t < list.size() && !found; ++t) {
            std::smatch cm;
            if (!std::regex_match(piece, cm, list[t].re)) continue;
            Clause cl;
            cl.relation = rel;
            cl.tmpl = t;
            cl.hedged = hedged;
            for (std::size_t g = 0; g < list[t].slots.size(); ++g) {
              if (list[t].slots[g] == "landmark") cl.mention = cm[g + 1].str();
              if (list[t].slots[g] == "marker") cl.marker = cm[g + 1].str();
            }
            found = std::move(cl);
          }
        }
      };
      try_pool(pats.cues, false);
      if (!found) try_pool(pats.hedged, true);
      if (!found) {
        ok = false;
        break;
      }
      parts.clauses.push_back(std::move(*found));
    }
    if (ok) return parts;
  }
  return std::nullopt;
}

template <class T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[rng.index(v.size())];
}

std::string vague_landmark(const std::vector<std::string>& pool, const std::optional<std::string>& id,
                           const Lexicon& lex, const GridEnvironment* env, Rng& rng) {
  std::string category;
  if (id && env) {
    if (const auto* lm = env->find(*id)) {
      if (auto it = lex.category_names.find(lm->category); it != lex.category_names.end()) {
        category = it->second;
      }
    }
  }
  std::vector<std::string> usable;
  for (const auto& t : pool) {
    const bool needs = t.find("{category}") != std::string::npos;
    if (!needs || !category.empty()) usable.push_back(t);
  }
  if (usable.empty()) return category.empty() ? std::string{} : category;
  return text::fill(pick(usable, rng), {{"category", category}});
}

std::vector<std::pair<std::string, std::string>> synonym_sites(const std::string& canonical,
                                                               const Lexicon& lex, Rng& rng) {
  std::vector<const std::pair<const std::string, std::vector<std::string>>*> present;
  for (const auto& entry : lex.synonym_table) {
    if (!entry.second.empty() && !text::find_all_ci(canonical, entry.first).empty()) {
      present.push_back(&entry);
    }
  }
  std::vector<std::pair<std::string, std::string>> chosen;
  if (present.empty()) return chosen;
  for (const auto* entry : present) {
    if (rng.chance(0.5)) chosen.emplace_back(entry->first, pick(entry->second, rng));
  }
  if (chosen.empty()) {
    const auto* entry = present[rng.index(present.size())];
    chosen.emplace_back(entry->first, pick(entry->second, rng));
  }
  return chosen;
}

void transform(Parts& parts, Variation kind, const Lexicon& lex, const GridEnvironment* env, Rng& rng,
               std::vector<std::string>& notes) {
  switch (kind) {
    case Variation::None:
      return;
    case Variation::WordOrder: {
      bool changed = false;
      const std::size_t n = parts.clauses.size();
      if (n >= 2) {
        auto before = parts.clauses;
        rng.shuffle(parts.clauses.begin(), parts.clauses.end());
        bool same = true;
        for (std::size_t i = 0; i < n; ++i) same = same && parts.clauses[i].relation == before[i].relation;
        if (same) std::swap(parts.clauses[0], parts.clauses[1 + rng.index(n - 1)]);
        changed = true;
      }
      if (lex.anchor_templates.size() > 1 && (n < 2 || rng.chance(0.5))) {
        parts.anchor_tmpl = (parts.anchor_tmpl + 1 + rng.index(lex.anchor_templates.size() - 1)) %
                            lex.anchor_templates.size();
        changed = true;
      }
      for (auto& cl : parts.clauses) {
        const auto& pool = lex.cue_templates.at(cl.relation);
        if (!cl.hedged && pool.size() > 1 && rng.chance(0.5)) {
          cl.tmpl = (cl.tmpl + 1 + rng.index(pool.size() - 1)) % pool.size();
          changed = true;
        }
      }
      if (!changed) notes.push_back("word_order: nothing to reorder");
      return;
    }
    case Variation::Synonym: {
      parts.subs = synonym_sites(compose(parts, lex).text, lex, rng);
      if (parts.subs.empty()) notes.push_back("synonym: no substitution site");
      return;
    }
    case Variation::ReferentialAmbiguity:
    case Variation::Underspecified: {
      const bool ref = kind == Variation::ReferentialAmbiguity;
      const auto& anchors = ref ? lex.vague.referential_anchor : lex.vague.underspecified_anchor;
      const auto& marks = ref ? lex.vague.referential_landmark : lex.vague.underspecified_landmark;
      if (anchors.empty() && marks.empty()) {
        notes.push_back(std::string(to_string(kind)) + ": lexicon has no vague references");
        return;
      }
      if (!anchors.empty()) parts.anchor_mention = pick(anchors, rng);
      for (auto& cl : parts.clauses) {
        auto vague = vague_landmark(marks, cl.id, lex, env, rng);
        if (!vague.empty()) cl.mention = std::move(vague);
      }
      parts.conjunction = false;
      return;
    }
    case Variation::Incomplete: {
      if (lex.filler_tokens.empty() && lex.hedged_cue_templates.empty()) {
        notes.push_back("incomplete: lexicon has no fillers or hedged templates");
        return;
      }
      if (!lex.filler_tokens.empty()) parts.filler = pick(lex.filler_tokens, rng);
      std::vector<std::size_t> hedgeable;
      for (std::size_t i = 0; i < parts.clauses.size(); ++i) {
        if (lex.hedged_cue_templates.count(parts.clauses[i].relation)) hedgeable.push_back(i);
      }
      if (!hedgeable.empty()) {
        bool any = false;
        for (auto i : hedgeable) {
          if (rng.chance(0.5)) {
            parts.clauses[i].hedged = true;
            any = true;
          }
        }
        if (!any) parts.clauses[hedgeable[rng.index(hedgeable.size())]].hedged = true;
        for (auto& cl : parts.clauses) {
          if (!cl.hedged) continue;
          cl.tmpl = rng.index(lex.hedged_cue_templates.at(cl.relation).size());
          cl.marker = pick(lex.uncertainty_markers, rng);
        }
      }
      parts.conjunction = false;
      return;
    }
  }
}

}  // namespace

RenderedUtterance render(const UtteranceSpec& spec, const GridEnvironment& env, const Lexicon& lex) {
  if (spec.cues.empty()) throw DataError("utterance spec has no cues");
  if (spec.cues.size() > kAllRelations.size()) throw DataError("utterance spec has more than four cues");
  for (std::size_t i = 0; i < spec.cues.size(); ++i) {
    for (std::size_t j = i + 1; j < spec.cues.size(); ++j) {
      if (spec.cues[i].first == spec.cues[j].first) {
        throw DataError("utterance spec repeats relation " + std::string(cor::to_string(spec.cues[i].first)));
      }
    }
  }
  if (lex.language != spec.language) {
    throw DataError("lexicon " + lex.language + " does not cover language " + spec.language);
  }
  Rng rng(spec.seed, "utterance");

  auto name_of = [&](const std::string& id) -> const Landmark& {
    const auto& lm = env.get(id);
    if (!lm.has_name(spec.language)) {
      throw DataError("landmark " + id + " has no " + spec.language + " display name");
    }
    return lm;
  };
  std::vector<const Landmark*> mentioned{&name_of(spec.anchor_landmark_id)};
  for (const auto& [rel, id] : spec.cues) mentioned.push_back(&name_of(id));

  std::vector<bool> english(mentioned.size(), false);
  if (spec.language != "en") {
    for (std::size_t i = 0; i < mentioned.size(); ++i) {
      english[i] = spec.code_switch_rate > 0 && rng.chance(spec.code_switch_rate);
    }
    if (spec.force_code_switch) english[rng.index(mentioned.size())] = true;
  }
  bool switched = false;
  auto surface = [&](std::size_t i) {
    const Landmark& lm = *mentioned[i];
    if (english[i] && lm.has_name("en") && lm.name("en") != lm.name(spec.language)) {
      switched = true;
      return lm.name("en");
    }
    return lm.name(spec.language);
  };

  Parts parts;
  parts.anchor_mention = surface(0);
  parts.anchor_id = spec.anchor_landmark_id;
  for (std::size_t i = 0; i < spec.cues.size(); ++i) {
    Clause cl;
    cl.relation = spec.cues[i].first;
    cl.id = spec.cues[i].second;
    cl.mention = surface(i + 1);
    parts.clauses.push_back(std::move(cl));
  }
  std::vector<std::string> notes;
  transform(parts, spec.variation, lex, &env, rng, notes);
  auto out = compose(parts, lex);
  for (std::size_t i = 0; i < out.cues.size(); ++i) out.cues[i].landmark_id = *parts.clauses[i].id;
  out.code_switched = switched;
  out.notes = std::move(notes);
  return out;
}

std::string apply_variation(std::string_view input, Variation kind, const Lexicon& lex, std::uint64_t seed,
                            const GridEnvironment* env) {
  Rng rng(seed, "variation");
  if (kind == Variation::None) return std::string(input);
  auto parts = decompose(input, lex);
  if (!parts) {
    if (kind != Variation::Synonym) return std::string(input);
    const std::string s(input);
    return substitute(s, synonym_sites(s, lex, rng));
  }
  if (env) {
    MentionResolver resolver(*env, {lex});
    parts->anchor_id = resolver.resolve(parts->anchor_mention);
    for (auto& cl : parts->clauses) cl.id = resolver.resolve(cl.mention);
  }
  std::vector<std::string> notes;
  transform(*parts, kind, lex, env, rng, notes);
  return compose(*parts, lex).text;
}

std::vector<ExtractedRelation> extract_relations(std::string_view input, const Lexicon& lex,
                                                 const MentionResolver& resolver) {
  const auto mentions = resolver.find_all(input);
  const std::string lower = text::ascii_lower(input);

  struct Phrase {
    text::Span span;
    Relation relation;
  };
  std::vector<Phrase> phrases;
  const auto& inventory = lex.phrase_inventory();
  for (std::size_t pos = 0; pos < input.size();) {
    bool hit = false;
    for (const auto& [form, rel] : inventory) {
      if (!text::match_at(input, lower, pos, form)) continue;
      text::Span span{pos, pos + form.size()};
      const bool inside_mention = std::any_of(mentions.begin(), mentions.end(),
                                              [&](const auto& m) { return m.span.overlaps(span); });
      if (inside_mention) continue;
      phrases.push_back({span, rel});
      pos = span.end;
      hit = true;
      break;
    }
    if (!hit) ++pos;
  }
  if (phrases.empty()) return {};

  std::vector<text::Span> clauses;
  {
    std::size_t start = 0;
    std::size_t pos = 0;
    while (pos < input.size()) {
      std::size_t len = 0;
      for (const auto& sep : lex.clause_separators) {
        if (!sep.empty() && input.compare(pos, sep.size(), sep) == 0) {
          len = std::max(len, sep.size());
        }
      }
      if (len > 0) {
        clauses.push_back({start, pos});
        pos += len;
        start = pos;
      } else {
        ++pos;
      }
    }
    clauses.push_back({start, input.size()});
  }
  auto clause_of = [&](const text::Span& s) {
    for (const auto& c : clauses) {
      if (s.begin >= c.begin && s.begin < c.end) return c;
    }
    return text::Span{0, input.size()};
  };

  std::vector<std::string> removable = lex.stopwords;
  removable.insert(removable.end(), lex.articles.begin(), lex.articles.end());
  std::stable_sort(removable.begin(), removable.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });

  std::vector<bool> claimed(mentions.size(), false);
  std::vector<ExtractedRelation> out;
  for (const auto& ph : phrases) {
    const auto clause = clause_of(ph.span);
    std::size_t best = mentions.size();
    std::size_t best_gap = 0;
    for (std::size_t i = 0; i < mentions.size(); ++i) {
      const auto& m = mentions[i].span;
      if (claimed[i] || m.begin < clause.begin || m.end > clause.end) continue;
      const std::size_t gap = m.end <= ph.span.begin ? ph.span.begin - m.end : m.begin - ph.span.end;
      if (best == mentions.size() || gap < best_gap) {
        best = i;
        best_gap = gap;
      }
    }
    ExtractedRelation rel;
    rel.relation = ph.relation;
    rel.phrase = ph.span;
    if (best < mentions.size()) {
      claimed[best] = true;
      rel.landmark_id = mentions[best].landmark_id;
      rel.mention = std::string(input.substr(mentions[best].span.begin, mentions[best].span.size()));
    } else {
      std::string rest = std::string(input.substr(clause.begin, ph.span.begin - clause.begin)) + " " +
                         std::string(input.substr(ph.span.end, clause.end - ph.span.end));
      for (const auto& w : removable) {
        const auto hits = text::find_all_ci(rest, w);
        for (auto it = hits.rbegin(); it != hits.rend(); ++it) rest.replace(it->begin, it->size(), " ");
      }
      std::string collapsed;
      for (char ch : rest) {
        if (text::is_space(ch) && (collapsed.empty() || collapsed.back() == ' ')) continue;
        collapsed.push_back(text::is_space(ch) ? ' ' : ch);
      }
      rel.mention = std::string(text::trim(collapsed));
    }
    out.push_back(std::move(rel));
  }
  return out;
}

std::vector<ExtractedRelation> extract_relations(std::string_view text, const Lexicon& lex,
                                                 const GridEnvironment& env) {
  return extract_relations(text, lex, MentionResolver(env, {lex}));
}

}  // namespace cor::utterance
