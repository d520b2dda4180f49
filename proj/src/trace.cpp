#include "cor/trace.hpp"

#include <algorithm>
#include <regex>

#include "cor/text.hpp"
#include "lexicon_patterns.hpp"

namespace cor::trace {

ReasoningTrace derive_trace(Coord user, const std::vector<GoldCue>& cues) {
  oracle::OrientationProblem problem{user, {}};
  for (const auto& c : cues) problem.cues.push_back({c.relation, c.landmark_id, c.position});
  const auto sol = oracle::solve_detailed(problem);
  ReasoningTrace t;
  for (std::size_t i = 0; i < cues.size(); ++i) {
    const auto& c = cues[i];
    const auto& v = sol.verdicts[i];
    t.step1.push_back({c.relation, c.mention, c.landmark_id});
    t.step2.push_back({c.mention, c.landmark_id, user, c.position, v.delta, v.abs_dir});
    t.step3.push_back({text::capitalize(c.mention), c.landmark_id, v.abs_dir, c.relation, v.facing});
  }
  t.final_answer = sol.facing;
  return t;
}

std::string render_trace(const ReasoningTrace& t, const Lexicon& lex) {
  const auto& tv = lex.trace;
  auto dir = [&](CardinalDirection d) { return lex.direction_word(d); };
  std::string out = tv.step_headers.at(0) + "\n";
  for (std::size_t i = 0; i < t.step1.size(); ++i) {
    const auto& e = t.step1[i];
    out += text::fill(tv.step1_line, {{"i", std::to_string(i + 1)},
                                      {"relation", lex.relation_term(e.relation)},
                                      {"landmark", e.mention}}) +
           "\n";
  }
  out += tv.step_headers.at(1) + "\n";
  for (std::size_t i = 0; i < t.step2.size(); ++i) {
    const auto& e = t.step2[i];
    out += text::fill(tv.step2_line, {{"i", std::to_string(i + 1)},
                                      {"landmark", e.mention},
                                      {"to", to_string(e.to)},
                                      {"from", to_string(e.from)},
                                      {"vector", oracle::to_string(e.vector)},
                                      {"direction", dir(e.direction)}}) +
           "\n";
  }
  out += tv.step_headers.at(2) + "\n";
  for (const auto& e : t.step3) {
    out += text::fill(tv.step3_line, {{"Landmark", e.mention},
                                      {"direction", dir(e.abs_dir)},
                                      {"phrase", lex.canonical_phrase(e.relation)},
                                      {"relation", lex.relation_term(e.relation)},
                                      {"facing", dir(e.facing)}}) +
           "\n";
  }
  out += text::fill(tv.final_line, {{"facing", dir(t.final_answer)}});
  return out;
}

namespace {

struct Vocab {
  std::vector<std::pair<std::string, Relation>> relation_terms;
  std::vector<std::pair<std::string, CardinalDirection>> direction_words;
  std::vector<std::string> header_words;
  std::vector<std::string> relation_labels;
  std::vector<std::string> landmark_labels;
  std::vector<std::string> direction_labels;
  std::vector<std::string> located;
  std::vector<std::string> facing;
  std::vector<std::string> final_markers;
  std::vector<const std::regex*> from_to;
};

template <class T>
void longest_first(std::vector<T>& v) {
  std::stable_sort(v.begin(), v.end(), [](const T& a, const T& b) {
    if constexpr (std::is_same_v<T, std::string>) {
      return a.size() > b.size();
    } else {
      return a.first.size() > b.first.size();
    }
  });
}

Vocab build_vocab(const std::vector<Lexicon>& lexicons) {
  Vocab v;
  auto lowered = [](const std::vector<std::string>& in, std::vector<std::string>& out) {
    for (const auto& s : in) out.push_back(text::ascii_lower(s));
  };
  for (const auto& lex : lexicons) {
    const auto& t = lex.trace;
    for (const auto& [rel, terms] : t.relation_terms) {
      for (const auto& term : terms) v.relation_terms.emplace_back(text::ascii_lower(term), rel);
    }
    for (const auto& [d, words] : t.direction_words) {
      for (const auto& w : words) v.direction_words.emplace_back(text::ascii_lower(w), d);
    }
    lowered(t.step_header_words, v.header_words);
    lowered(t.relation_labels, v.relation_labels);
    lowered(t.landmark_labels, v.landmark_labels);
    lowered(t.direction_labels, v.direction_labels);
    lowered(t.located_markers, v.located);
    lowered(t.facing_markers, v.facing);
    lowered(t.final_markers, v.final_markers);
    if (lex.patterns && !t.from_to_pattern.empty()) v.from_to.push_back(&lex.patterns->from_to);
  }
  longest_first(v.relation_terms);
  longest_first(v.direction_words);
  longest_first(v.relation_labels);
  longest_first(v.landmark_labels);
  return v;
}

std::string normalize(std::string_view raw) {
  static const std::vector<std::pair<std::string_view, std::string_view>> table = {
      {"：", ":"}, {"，", ","}, {"＝", "="}, {"（", "("}, {"）", ")"}, {"。", "."}, {"　", " "},
      {"－", "-"}, {"“", "\""}, {"”", "\""}, {"``", "\""}, {"''", "\""}, {"**", ""}, {"__", ""},
      {"\t", " "}, {"\r", ""}};
  std::string s(raw);
  for (const auto& [from, to] : table) s = text::replace_all(std::move(s), from, to);
  std::string_view v = text::trim(s);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::string_view bullet : {"- ", "* ", "• ", "· ", "> "}) {
      if (v.substr(0, bullet.size()) == bullet) {
        v = text::trim(v.substr(bullet.size()));
        changed = true;
      }
    }
    std::size_t d = 0;
    const bool paren = !v.empty() && v[0] == '(';
    std::size_t k = paren ? 1 : 0;
    while (k + d < v.size() && v[k + d] >= '0' && v[k + d] <= '9') ++d;
    if (d > 0 && k + d < v.size()) {
      const char close = v[k + d];
      const bool ok = paren ? close == ')' : (close == '.' || close == ')');
      if (ok && k + d + 1 < v.size() && v[k + d + 1] == ' ') {
        v = text::trim(v.substr(k + d + 1));
        changed = true;
      }
    }
  }
  return std::string(v);
}

bool boundary_ok(std::string_view s, std::size_t begin, std::size_t end) {
  if (begin > 0 && text::is_ascii_alnum(s[begin]) && text::is_ascii_alnum(s[begin - 1])) return false;
  if (end < s.size() && end > 0 && text::is_ascii_alnum(s[end - 1]) && text::is_ascii_alnum(s[end])) return false;
  return true;
}

std::optional<CardinalDirection> direction_prefix(std::string_view s, const Vocab& v) {
  s = text::trim(s);
  for (const auto& [word, d] : v.direction_words) {
    if (text::starts_with_ci(s, word) && boundary_ok(s, 0, word.size())) return d;
  }
  return std::nullopt;
}

std::string strip_value(std::string_view s) {
  s = text::trim(s);
  while (!s.empty() && (s.back() == '.' || s.back() == ';' || s.back() == '"')) s.remove_suffix(1);
  while (!s.empty() && s.front() == '"') s.remove_prefix(1);
  return std::string(text::trim(s));
}

std::optional<CardinalDirection> direction_exact(std::string_view s, const Vocab& v) {
  const auto value = strip_value(s);
  for (const auto& [word, d] : v.direction_words) {
    if (text::equals_ci(value, word)) return d;
  }
  return std::nullopt;
}

std::optional<Relation> relation_exact(std::string_view s, const Vocab& v) {
  const auto value = strip_value(s);
  for (const auto& [term, r] : v.relation_terms) {
    if (text::equals_ci(value, term)) return r;
  }
  return std::nullopt;
}

/// Position of the first match of any marker, case-insensitive with word boundaries.
std::optional<std::pair<std::size_t, std::size_t>> find_marker(std::string_view line,
                                                               const std::vector<std::string>& markers,
                                                               bool last = false) {
  const std::string lower = text::ascii_lower(line);
  std::optional<std::pair<std::size_t, std::size_t>> best;
  for (const auto& m : markers) {
    std::size_t pos = 0;
    while ((pos = lower.find(m, pos)) != std::string::npos) {
      if (boundary_ok(line, pos, pos + m.size())) {
        const bool better = !best || (last ? pos > best->first : pos < best->first);
        if (better) best = std::make_pair(pos, pos + m.size());
      }
      ++pos;
    }
  }
  return best;
}

struct Pair {
  std::string label;
  std::string value;
};

std::vector<Pair> split_pairs(std::string_view line) {
  std::vector<std::string> fields;
  int depth = 0;
  bool quoted = false;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || (line[i] == ',' && depth == 0 && !quoted)) {
      fields.emplace_back(line.substr(start, i - start));
      start = i + 1;
      continue;
    }
    if (line[i] == '(') ++depth;
    if (line[i] == ')' && depth > 0) --depth;
    if (line[i] == '"') quoted = !quoted;
  }
  std::vector<Pair> out;
  for (const auto& f : fields) {
    auto eq = f.find('=');
    if (eq == std::string::npos) continue;
    out.push_back({std::string(text::trim(std::string_view(f).substr(0, eq))),
                   std::string(text::trim(std::string_view(f).substr(eq + 1)))});
  }
  return out;
}

/// Lowered label with trailing indices removed: "Reference landmark 1" -> "reference landmark".
std::string label_key(std::string_view label) {
  std::string s = text::ascii_lower(text::trim(label));
  while (!s.empty() && ((s.back() >= '0' && s.back() <= '9') || text::is_space(s.back()))) s.pop_back();
  return s;
}

bool label_is(const std::string& key, const std::vector<std::string>& labels, bool suffix) {
  for (const auto& l : labels) {
    if (suffix ? text::ends_with_ci(key, l) && boundary_ok(key, key.size() - l.size(), key.size())
               : key == l) {
      return true;
    }
  }
  return false;
}

struct Line {
  std::size_t number;
  std::string text;
};

std::optional<int> header_index(const std::string& line, const Vocab& v) {
  const std::string lower = text::ascii_lower(line);
  for (const auto& w : v.header_words) {
    if (lower.compare(0, w.size(), w) != 0) continue;
    std::string_view rest = text::trim(std::string_view(line).substr(w.size()));
    if (rest.empty()) continue;
    int n = 0;
    std::size_t used = 0;
    if (rest[0] >= '1' && rest[0] <= '3') {
      n = rest[0] - '0';
      used = 1;
    } else {
      static const std::vector<std::pair<std::string_view, int>> han = {{"一", 1}, {"二", 2}, {"三", 3}};
      for (const auto& [h, k] : han) {
        if (rest.substr(0, h.size()) == h) {
          n = k;
          used = h.size();
        }
      }
    }
    if (n == 0) continue;
    if (used < rest.size() && rest[used] >= '0' && rest[used] <= '9') continue;
    return n - 1;
  }
  return std::nullopt;
}

std::vector<Step1Entry> parse_step1(const std::vector<Line>& lines, const Vocab& v) {
  std::vector<Step1Entry> out;
  std::vector<Relation> pending_rel;
  std::optional<std::string> pending_mention;
  std::size_t pending_line = 0;
  for (const auto& ln : lines) {
    std::optional<Relation> rel;
    std::optional<std::string> mention;
    for (const auto& p : split_pairs(ln.text)) {
      const auto key = label_key(p.label);
      if (label_is(key, v.relation_labels, true)) {
        rel = relation_exact(p.value, v);
        if (!rel) throw FormatError("unknown relation term", ln.number, p.value);
      } else if (label_is(key, v.landmark_labels, true)) {
        mention = strip_value(p.value);
      }
    }
    if (rel && mention) {
      out.push_back({*rel, *mention, std::nullopt});
    } else if (rel) {
      if (pending_mention) {
        out.push_back({*rel, *pending_mention, std::nullopt});
        pending_mention.reset();
      } else {
        pending_rel = {*rel};
        pending_line = ln.number;
      }
    } else if (mention) {
      if (!pending_rel.empty()) {
        out.push_back({pending_rel.front(), *mention, std::nullopt});
        pending_rel.clear();
      } else {
        pending_mention = mention;
        pending_line = ln.number;
      }
    }
  }
  if (!pending_rel.empty() || pending_mention) throw FormatError("incomplete step-1 entry", pending_line, "");
  return out;
}

std::vector<Step2Entry> parse_step2(const std::vector<Line>& lines, const Vocab& v) {
  static const std::regex arith(
      R"(\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\)\s*-\s*\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\)\s*=\s*\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\))");
  std::vector<Step2Entry> out;
  std::vector<bool> has_dir;
  std::optional<std::string> pending_mention;
  for (const auto& ln : lines) {
    std::optional<std::string> mention;
    std::optional<CardinalDirection> dir;
    for (const auto& p : split_pairs(ln.text)) {
      const auto key = label_key(p.label);
      if (label_is(key, v.direction_labels, false)) {
        dir = direction_exact(p.value, v);
        if (!dir) throw FormatError("direction token outside vocabulary", ln.number, p.value);
      } else if (label_is(key, v.landmark_labels, true)) {
        mention = strip_value(p.value);
      }
    }
    if (!mention) {
      for (const auto* re : v.from_to) {
        std::smatch m;
        if (std::regex_search(ln.text, m, *re) && m.size() >= 3) {
          mention = strip_value(m[2].str());
          break;
        }
      }
    }
    std::smatch m;
    if (std::regex_search(ln.text, m, arith)) {
      Step2Entry e;
      e.mention = mention ? *mention : pending_mention.value_or("");
      e.to = {std::stoi(m[1].str()), std::stoi(m[2].str())};
      e.from = {std::stoi(m[3].str()), std::stoi(m[4].str())};
      e.vector = {std::stoi(m[5].str()), std::stoi(m[6].str())};
      if (dir) e.direction = *dir;
      out.push_back(std::move(e));
      has_dir.push_back(dir.has_value());
      pending_mention.reset();
    } else if (dir) {
      auto it = std::find(has_dir.begin(), has_dir.end(), false);
      if (it == has_dir.end()) throw FormatError("direction without a vector", ln.number, ln.text);
      const auto idx = static_cast<std::size_t>(it - has_dir.begin());
      out[idx].direction = *dir;
      has_dir[idx] = true;
    } else if (mention) {
      pending_mention = mention;
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!has_dir[i]) throw FormatError("step-2 entry without a direction", 0, out[i].mention);
  }
  return out;
}

std::optional<std::pair<Relation, CardinalDirection>> mapping_rule(std::string_view line, const Vocab& v) {
  for (std::size_t eq = line.find('='); eq != std::string_view::npos; eq = line.find('=', eq + 1)) {
    const auto left = text::trim(line.substr(0, eq));
    std::optional<Relation> rel;
    for (const auto& [term, r] : v.relation_terms) {
      if (text::ends_with_ci(left, term) && boundary_ok(left, left.size() - term.size(), left.size())) {
        rel = r;
        break;
      }
    }
    if (!rel) continue;
    if (auto d = direction_prefix(line.substr(eq + 1), v)) return std::make_pair(*rel, *d);
  }
  return std::nullopt;
}

std::vector<Step3Entry> parse_step3(const std::vector<Line>& lines, const Vocab& v) {
  std::vector<Step3Entry> out;
  std::vector<bool> has_rule;
  std::vector<bool> has_facing;
  for (const auto& ln : lines) {
    const auto located = find_marker(ln.text, v.located);
    const auto rule = mapping_rule(ln.text, v);
    std::optional<CardinalDirection> facing;
    if (rule) {
      if (auto fm = find_marker(ln.text, v.facing, true)) {
        facing = direction_prefix(std::string_view(ln.text).substr(fm->second), v);
        if (!facing) {
          throw FormatError("facing direction outside vocabulary", ln.number, ln.text.substr(fm->second));
        }
      }
    }
    if (located) {
      Step3Entry e;
      e.mention = strip_value(std::string_view(ln.text).substr(0, located->first));
      const auto abs = direction_prefix(std::string_view(ln.text).substr(located->second), v);
      if (!abs) throw FormatError("direction token outside vocabulary", ln.number, ln.text.substr(located->second));
      e.abs_dir = *abs;
      out.push_back(std::move(e));
      has_rule.push_back(false);
      has_facing.push_back(false);
    }
    if (!rule) continue;
    auto it = std::find(has_rule.begin(), has_rule.end(), false);
    if (it == has_rule.end()) {
      Step3Entry e;
      e.abs_dir = rule->second;
      out.push_back(std::move(e));
      has_rule.push_back(false);
      has_facing.push_back(false);
      it = has_rule.end() - 1;
    }
    const auto idx = static_cast<std::size_t>(it - has_rule.begin());
    out[idx].relation = rule->first;
    has_rule[idx] = true;
    if (facing) {
      out[idx].facing = *facing;
      has_facing[idx] = true;
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!has_rule[i]) throw FormatError("step-3 entry without a mapping rule", 0, out[i].mention);
    if (!has_facing[i]) throw FormatError("step-3 entry without a facing", 0, out[i].mention);
  }
  return out;
}

std::optional<CardinalDirection> first_direction(std::string_view s, const Vocab& v) {
  if (auto fm = find_marker(s, v.facing, true)) {
    auto d = direction_prefix(s.substr(fm->second), v);
    if (!d) throw FormatError("unparseable final answer", 0, std::string(s));
    return d;
  }
  const std::string lower = text::ascii_lower(s);
  for (std::size_t pos = 0; pos < s.size(); ++pos) {
    for (const auto& [word, d] : v.direction_words) {
      if (text::match_at(s, lower, pos, word)) return d;
    }
  }
  return std::nullopt;
}

CardinalDirection parse_final(const std::vector<Line>& all, const Vocab& v) {
  for (std::size_t i = all.size(); i-- > 0;) {
    const auto marker = find_marker(all[i].text, v.final_markers, true);
    if (!marker) continue;
    try {
      if (auto d = first_direction(std::string_view(all[i].text).substr(marker->second), v)) return *d;
      for (std::size_t j = i + 1; j < all.size(); ++j) {
        if (all[j].text.empty()) continue;
        if (auto d = first_direction(all[j].text, v)) return *d;
        break;
      }
    } catch (const FormatError&) {
      throw FormatError("unparseable final answer", all[i].number, all[i].text);
    }
    throw FormatError("unparseable final answer", all[i].number, all[i].text);
  }
  throw FormatError("missing final answer", 0, "");
}

void resolve_all(ReasoningTrace& t, const MentionResolver& r) {
  for (auto& e : t.step1) e.landmark_id = r.resolve(e.mention);
  for (auto& e : t.step2) e.landmark_id = r.resolve(e.mention);
  for (auto& e : t.step3) e.landmark_id = r.resolve(e.mention);
}

}  // namespace

ReasoningTrace parse_trace(std::string_view input, const std::vector<Lexicon>& lexicons,
                           const MentionResolver* resolver) {
  const Vocab v = build_vocab(lexicons);
  std::vector<Line> all;
  {
    std::size_t number = 0;
    std::size_t start = 0;
    while (start <= input.size()) {
      auto end = input.find('\n', start);
      if (end == std::string_view::npos) end = input.size();
      ++number;
      all.push_back({number, normalize(input.substr(start, end - start))});
      start = end + 1;
    }
  }
  std::array<std::vector<Line>, 3> sections;
  std::array<bool, 3> seen{};
  int current = -1;
  for (const auto& ln : all) {
    if (auto h = header_index(ln.text, v)) {
      current = *h;
      seen[static_cast<std::size_t>(current)] = true;
      continue;
    }
    if (current >= 0 && !ln.text.empty()) sections[static_cast<std::size_t>(current)].push_back(ln);
  }
  for (std::size_t s = 0; s < 3; ++s) {
    if (!seen[s]) throw FormatError("missing step " + std::to_string(s + 1), 0, "");
  }
  ReasoningTrace t;
  t.step1 = parse_step1(sections[0], v);
  if (t.step1.empty()) throw FormatError("empty step 1", 0, "");
  t.step2 = parse_step2(sections[1], v);
  if (t.step2.empty()) throw FormatError("empty step 2", 0, "");
  t.step3 = parse_step3(sections[2], v);
  if (t.step3.empty()) throw FormatError("empty step 3", 0, "");
  t.final_answer = parse_final(all, v);
  if (resolver) resolve_all(t, *resolver);
  return t;
}

namespace {

using nlohmann::json;

json opt_id(const std::optional<std::string>& id) { return id ? json(*id) : json(nullptr); }

std::optional<std::string> id_from(const json& j) {
  if (!j.contains("landmark_id") || j.at("landmark_id").is_null()) return std::nullopt;
  return j.at("landmark_id").get<std::string>();
}

Coord coord_from(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

template <class T, class F>
T parse_or_throw(const json& j, F parse, const char* what) {
  auto v = parse(j.get<std::string>());
  if (!v) throw ParseError(std::string("trace: bad ") + what + " '" + j.get<std::string>() + "'");
  return *v;
}

}  // namespace

json to_json(const ReasoningTrace& t) {
  json s1 = json::array(), s2 = json::array(), s3 = json::array();
  for (const auto& e : t.step1) {
    s1.push_back({{"relation", to_string(e.relation)}, {"mention", e.mention}, {"landmark_id", opt_id(e.landmark_id)}});
  }
  for (const auto& e : t.step2) {
    s2.push_back({{"mention", e.mention},
                  {"landmark_id", opt_id(e.landmark_id)},
                  {"from", {e.from.x, e.from.y}},
                  {"to", {e.to.x, e.to.y}},
                  {"vector", {e.vector.dx, e.vector.dy}},
                  {"direction", to_string(e.direction)}});
  }
  for (const auto& e : t.step3) {
    s3.push_back({{"mention", e.mention},
                  {"landmark_id", opt_id(e.landmark_id)},
                  {"abs_dir", to_string(e.abs_dir)},
                  {"relation", to_string(e.relation)},
                  {"facing", to_string(e.facing)}});
  }
  return {{"step1", s1}, {"step2", s2}, {"step3", s3}, {"final_answer", to_string(t.final_answer)}};
}

ReasoningTrace trace_from_json(const json& j) {
  ReasoningTrace t;
  try {
    for (const auto& e : j.at("step1")) {
      t.step1.push_back({parse_or_throw<Relation>(e.at("relation"), parse_relation, "relation"),
                         e.at("mention").get<std::string>(), id_from(e)});
    }
    for (const auto& e : j.at("step2")) {
      const auto& v = e.at("vector");
      t.step2.push_back({e.at("mention").get<std::string>(), id_from(e), coord_from(e.at("from")),
                         coord_from(e.at("to")), {v.at(0).get<int>(), v.at(1).get<int>()},
                         parse_or_throw<CardinalDirection>(e.at("direction"), parse_direction, "direction")});
    }
    for (const auto& e : j.at("step3")) {
      t.step3.push_back({e.at("mention").get<std::string>(), id_from(e),
                         parse_or_throw<CardinalDirection>(e.at("abs_dir"), parse_direction, "direction"),
                         parse_or_throw<Relation>(e.at("relation"), parse_relation, "relation"),
                         parse_or_throw<CardinalDirection>(e.at("facing"), parse_direction, "direction")});
    }
    t.final_answer = parse_or_throw<CardinalDirection>(j.at("final_answer"), parse_direction, "direction");
  } catch (const json::exception& e) {
    throw ParseError(std::string("trace: ") + e.what());
  }
  return t;
}

}  // namespace cor::trace
