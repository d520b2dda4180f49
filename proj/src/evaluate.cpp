#include "cor/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cor/noise.hpp"
#include "cor/oracle.hpp"

namespace cor::eval {

using nlohmann::json;

std::string_view to_string(ErrorLabel l) {
  switch (l) {
    case ErrorLabel::DirectionUnderstanding: return "direction_understanding";
    case ErrorLabel::RelationExtraction: return "relation_extraction";
    case ErrorLabel::AsrMisrecognition: return "asr_misrecognition";
  }
  return "direction_understanding";
}

std::vector<ModelOutput> parse_outputs(std::string_view textv, const std::string& source) {
  std::vector<ModelOutput> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < textv.size()) {
    auto end = textv.find('\n', start);
    if (end == std::string_view::npos) end = textv.size();
    ++line_no;
    const auto line = text::trim(textv.substr(start, end - start));
    start = end + 1;
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("instance_id") || !j.contains("output_text") ||
        !j.at("instance_id").is_string() || !j.at("output_text").is_string()) {
      throw ParseError(where + ": expected {\"instance_id\": string, \"output_text\": string}");
    }
    out.push_back({j.at("instance_id").get<std::string>(), j.at("output_text").get<std::string>()});
  }
  return out;
}

std::vector<ModelOutput> read_outputs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open outputs file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_outputs(ss.str(), path.string());
}

Scorer::Scorer(const dataset::Resources& res) : res_(&res) {
  for (const auto& env : res.environments) resolvers_.emplace(env.id(), MentionResolver(env, res.lexicons));
}

const MentionResolver& Scorer::resolver(const std::string& env_id) const {
  auto it = resolvers_.find(env_id);
  if (it == resolvers_.end()) throw DataError("no environment loaded with id " + env_id);
  return it->second;
}

namespace {

using Pair = std::pair<Relation, std::string>;

/// Step-1 landmark ids, with mentions the text resolver could not place bound through the
/// coordinates their own step-2 entries point at.
std::vector<std::optional<std::string>> bind_step1(const trace::ReasoningTrace& t,
                                                   const std::vector<std::pair<std::string, Coord>>& cues) {
  auto listed = [&](const std::string& id) {
    return std::any_of(cues.begin(), cues.end(), [&](const auto& c) { return c.first == id; });
  };
  std::vector<std::optional<std::string>> out;
  for (const auto& e : t.step1) {
    std::optional<std::string> id = e.landmark_id;
    if (!id || !listed(*id)) {
      for (const auto& s2 : t.step2) {
        if (!text::equals_ci(text::trim(s2.mention), text::trim(e.mention))) continue;
        auto c = std::find_if(cues.begin(), cues.end(), [&](const auto& c) { return c.second == s2.to; });
        if (c != cues.end()) {
          id = c->first;
          break;
        }
      }
    }
    out.push_back(id);
  }
  return out;
}

}  // namespace

Scorer::Analysis Scorer::analyse(const dataset::Instance& gold, const trace::ReasoningTrace& t) const {
  Analysis a;
  auto coords = dataset::parse_coords_block(gold.coords_block);
  std::vector<std::pair<std::string, Coord>> cues(coords.begin() + (coords.empty() ? 0 : 1), coords.end());
  const auto& env = resolver(gold.env_id).environment();
  auto position = [&](const std::string& id) -> std::optional<Coord> {
    for (const auto& c : cues) {
      if (c.first == id) return c.second;
    }
    if (const auto* lm = env.find(id)) return lm->position;
    return std::nullopt;
  };

  const auto ids = bind_step1(t, cues);
  std::vector<Pair> predicted;
  for (std::size_t i = 0; i < t.step1.size(); ++i) {
    if (ids[i]) {
      predicted.emplace_back(t.step1[i].relation, *ids[i]);
    } else {
      a.step1_unresolved = true;
    }
  }
  std::vector<Pair> expected;
  for (const auto& c : gold.cues) expected.emplace_back(c.relation, c.landmark_id);
  std::sort(predicted.begin(), predicted.end());
  std::sort(expected.begin(), expected.end());
  std::set_difference(predicted.begin(), predicted.end(), expected.begin(), expected.end(),
                      std::back_inserter(a.predicted_only));
  std::set_difference(expected.begin(), expected.end(), predicted.begin(), predicted.end(),
                      std::back_inserter(a.gold_only));
  a.steps[0] = !a.step1_unresolved && a.predicted_only.empty() && a.gold_only.empty();

  auto step2_for = [&](const std::string& id) -> const trace::Step2Entry* {
    for (const auto& s : t.step2) {
      if (s.landmark_id == id) return &s;
    }
    const auto pos = position(id);
    for (const auto& s : t.step2) {
      if (pos && s.to == *pos) return &s;
    }
    return nullptr;
  };
  a.steps[1] = std::all_of(gold.cues.begin(), gold.cues.end(), [&](const auto& c) {
    const auto* s = step2_for(c.landmark_id);
    return s && s->direction == c.abs_dir;
  });

  bool consistent = true;
  for (std::size_t i = 0; i < t.step1.size(); ++i) {
    const trace::Step2Entry* s = ids[i] ? step2_for(*ids[i]) : nullptr;
    if (!s) {
      for (const auto& cand : t.step2) {
        if (text::equals_ci(text::trim(cand.mention), text::trim(t.step1[i].mention))) {
          s = &cand;
          break;
        }
      }
    }
    if (!s && i < t.step2.size()) s = &t.step2[i];
    if (!s || oracle::infer_facing(s->direction, t.step1[i].relation) != t.final_answer) consistent = false;
  }
  a.steps[2] = consistent && t.final_answer == gold.facing;
  return a;
}

std::set<ErrorLabel> Scorer::labels(const dataset::Instance& gold, const Analysis& a) const {
  // Gold landmarks whose surface form the transcript altered.
  std::set<std::string> corrupted;
  if (gold.transcript != gold.utterance && !gold.utterance.empty()) {
    const auto mask = noise::edited_mask(gold.utterance, gold.transcript);
    for (const auto& m : resolver(gold.env_id).find_all(gold.utterance)) {
      const bool is_cue = std::any_of(gold.cues.begin(), gold.cues.end(),
                                      [&](const auto& c) { return c.landmark_id == m.landmark_id; });
      if (is_cue && noise::span_edited(mask, gold.utterance, m.span)) corrupted.insert(m.landmark_id);
    }
  }
  auto outside = [&](const std::vector<Pair>& v) {
    return std::any_of(v.begin(), v.end(), [&](const Pair& p) { return !corrupted.count(p.second); });
  };
  std::set<ErrorLabel> out;
  if (outside(a.predicted_only) || outside(a.gold_only) || (a.step1_unresolved && corrupted.empty())) {
    out.insert(ErrorLabel::RelationExtraction);
  }
  if (a.steps[0] && !a.steps[2]) out.insert(ErrorLabel::DirectionUnderstanding);
  if (!corrupted.empty() && (!a.steps[0] || !a.steps[1])) out.insert(ErrorLabel::AsrMisrecognition);
  return out;
}

std::set<ErrorLabel> Scorer::classify(const dataset::Instance& gold, const trace::ReasoningTrace& t) const {
  if (t.final_answer == gold.facing) return {};
  return labels(gold, analyse(gold, t));
}

InstanceScore Scorer::score(const dataset::Instance& gold, std::string_view output_text) const {
  InstanceScore s;
  s.instance_id = gold.id;
  trace::ReasoningTrace t;
  try {
    t = trace::parse_trace(output_text, res_->lexicons, &resolver(gold.env_id));
  } catch (const trace::FormatError& e) {
    s.format_error = e.what();
    return s;
  }
  s.parse_ok = true;
  s.predicted = t.final_answer;
  s.correct = t.final_answer == gold.facing;
  const auto a = analyse(gold, t);
  s.step_matches = a.steps;
  s.reasoning_quality = static_cast<double>(std::count(a.steps.begin(), a.steps.end(), true)) / 3.0;
  if (!s.correct) s.taxonomy = labels(gold, a);
  return s;
}

std::vector<InstanceScore> score_all(const std::vector<dataset::Instance>& instances,
                                     const std::vector<ModelOutput>& outputs, const Scorer& scorer, Policy policy) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < instances.size(); ++i) index.emplace(instances[i].id, i);
  std::vector<const ModelOutput*> by_instance(instances.size(), nullptr);
  for (const auto& o : outputs) {
    auto it = index.find(o.instance_id);
    if (it == index.end()) throw DataError("output references unknown instance_id " + o.instance_id);
    if (by_instance[it->second]) throw DataError("more than one output for instance_id " + o.instance_id);
    by_instance[it->second] = &o;
  }
  std::vector<InstanceScore> scores(instances.size());
  for_each_index(instances.size(), policy, [&](std::size_t i) {
    if (by_instance[i]) {
      scores[i] = scorer.score(instances[i], by_instance[i]->output_text);
    } else {
      scores[i].instance_id = instances[i].id;
      scores[i].format_error = "no output for instance";
    }
  });
  return scores;
}

EvaluationReport aggregate(const std::vector<InstanceScore>& scores, const std::vector<dataset::Instance>& instances) {
  if (scores.empty()) throw DataError("nothing to aggregate");
  if (scores.size() != instances.size()) {
    throw DataError("score count " + std::to_string(scores.size()) + " != instance count " +
                    std::to_string(instances.size()));
  }
  EvaluationReport r;
  r.total = scores.size();
  r.scores = scores;
  std::map<noise::Severity, SeverityRow> rows;
  double quality = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& s = scores[i];
    if (s.instance_id != instances[i].id) {
      throw DataError("score " + s.instance_id + " is not aligned with instance " + instances[i].id);
    }
    r.correct += s.correct;
    r.format_errors += !s.parse_ok;
    quality += s.reasoning_quality;
    auto& row = rows[instances[i].severity];
    row.severity = instances[i].severity;
    ++row.total;
    row.correct += s.correct;
    for (auto l : s.taxonomy) ++r.taxonomy[l];
    if (!s.taxonomy.empty()) {
      std::string key;
      for (auto l : s.taxonomy) key += (key.empty() ? "" : "+") + std::string(to_string(l));
      ++r.taxonomy_exclusive[key];
    } else if (s.parse_ok && !s.correct) {
      ++r.unclassified;
    }
  }
  const auto n = static_cast<double>(r.total);
  r.accuracy = static_cast<double>(r.correct) / n;
  r.format_error_rate = static_cast<double>(r.format_errors) / n;
  r.mean_reasoning_quality = quality / n;
  for (auto l : kAllLabels) r.taxonomy.emplace(l, 0);
  for (auto& [sev, row] : rows) {
    row.accuracy = static_cast<double>(row.correct) / static_cast<double>(row.total);
    r.severity.push_back(row);
  }
  return r;
}

json to_json(const InstanceScore& s) {
  json labels = json::array();
  for (auto l : s.taxonomy) labels.push_back(to_string(l));
  json j = {{"instance_id", s.instance_id},
            {"parse_ok", s.parse_ok},
            {"correct", s.correct},
            {"step_matches", s.step_matches},
            {"reasoning_quality", s.reasoning_quality},
            {"taxonomy", labels}};
  j["predicted"] = s.predicted ? json(to_string(*s.predicted)) : json(nullptr);
  if (!s.format_error.empty()) j["format_error"] = s.format_error;
  return j;
}

json to_json(const EvaluationReport& r) {
  json tax = json::object();
  for (const auto& [l, n] : r.taxonomy) tax[std::string(to_string(l))] = n;
  json sev = json::array();
  for (const auto& row : r.severity) {
    sev.push_back({{"severity", noise::to_string(row.severity)},
                   {"total", row.total},
                   {"correct", row.correct},
                   {"accuracy", row.accuracy}});
  }
  json per = json::array();
  for (const auto& s : r.scores) per.push_back(to_json(s));
  return {{"total", r.total},
          {"correct", r.correct},
          {"format_errors", r.format_errors},
          {"accuracy", r.accuracy},
          {"format_error_rate", r.format_error_rate},
          {"mean_reasoning_quality", r.mean_reasoning_quality},
          {"taxonomy", tax},
          {"taxonomy_exclusive", r.taxonomy_exclusive},
          {"unclassified_errors", r.unclassified},
          {"severity", sev},
          {"instances", per}};
}

std::string format_table(const EvaluationReport& r) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-24s %10s\n", "metric", "value");
  out << buf;
  std::snprintf(buf, sizeof buf, "%-24s %9.1f%%\n", "accuracy", 100.0 * r.accuracy);
  out << buf;
  std::snprintf(buf, sizeof buf, "%-24s %9.1f%%\n", "format errors", 100.0 * r.format_error_rate);
  out << buf;
  std::snprintf(buf, sizeof buf, "%-24s %10.3f\n", "reasoning quality", r.mean_reasoning_quality);
  out << buf;
  std::snprintf(buf, sizeof buf, "%-24s %10zu\n", "instances", r.total);
  out << buf;
  out << "\nresidual errors\n";
  for (const auto& [l, n] : r.taxonomy) {
    std::snprintf(buf, sizeof buf, "  %-30s %6zu\n", std::string(to_string(l)).c_str(), n);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "  %-30s %6zu\n", "unclassified", r.unclassified);
  out << buf;
  if (!r.taxonomy_exclusive.empty()) {
    out << "\nexclusive label sets\n";
    for (const auto& [k, n] : r.taxonomy_exclusive) {
      std::snprintf(buf, sizeof buf, "  %-50s %6zu\n", k.c_str(), n);
      out << buf;
    }
  }
  out << "\nseverity      total  correct  accuracy\n";
  for (const auto& row : r.severity) {
    std::snprintf(buf, sizeof buf, "%-12s %6zu %8zu %8.1f%%\n", std::string(noise::to_string(row.severity)).c_str(),
                  row.total, row.correct, 100.0 * row.accuracy);
    out << buf;
  }
  return out.str();
}

}  // namespace cor::eval
