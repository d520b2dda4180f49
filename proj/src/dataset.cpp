#include "cor/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>

#include "cor/oracle.hpp"
#include "cor/rng.hpp"

namespace cor::dataset {

using nlohmann::json;

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
  }
  return "train";
}

std::string_view to_string(Subset s) {
  switch (s) {
    case Subset::Main: return "main";
    case Subset::CrossDomain: return "cross_domain";
    case Subset::LinguisticVariation: return "linguistic_variation";
    case Subset::ReferentialAmbiguity: return "referential_ambiguity";
  }
  return "main";
}

std::optional<Split> parse_split(std::string_view s) {
  for (auto v : {Split::Train, Split::Validation, Split::Test}) {
    if (s == to_string(v)) return v;
  }
  return std::nullopt;
}

std::optional<Subset> parse_subset(std::string_view s) {
  for (auto v : {Subset::Main, Subset::CrossDomain, Subset::LinguisticVariation, Subset::ReferentialAmbiguity}) {
    if (s == to_string(v)) return v;
  }
  return std::nullopt;
}

// ---- serialisation ----

json to_json(const Instance& inst) {
  json cues = json::array();
  for (const auto& c : inst.cues) {
    cues.push_back({{"relation", to_string(c.relation)}, {"landmark_id", c.landmark_id}, {"abs_dir", to_string(c.abs_dir)}});
  }
  return {{"id", inst.id},
          {"env_id", inst.env_id},
          {"anchor_landmark_id", inst.anchor_landmark_id},
          {"user_pos", {inst.user_pos.x, inst.user_pos.y}},
          {"facing", to_string(inst.facing)},
          {"cues", std::move(cues)},
          {"utterance", inst.utterance},
          {"transcript", inst.transcript},
          {"coords_block", inst.coords_block},
          {"multimodal_input", inst.multimodal_input},
          {"gold_trace", trace::to_json(inst.gold_trace)},
          {"gold_trace_text", inst.gold_trace_text},
          {"split", to_string(inst.split)},
          {"subset", to_string(inst.subset)},
          {"severity", noise::to_string(inst.severity)},
          {"language", inst.language},
          {"seed", inst.seed},
          {"variation", utterance::to_string(inst.variation)},
          {"transcript_cer", inst.transcript_cer},
          {"code_switched", inst.code_switched}};
}

namespace {

template <class T, class F>
T enum_field(const json& j, const char* key, F parse) {
  const auto s = j.at(key).get<std::string>();
  auto v = parse(s);
  if (!v) throw ParseError(std::string("field ") + key + ": unknown value '" + s + "'");
  return *v;
}

}  // namespace

Instance instance_from_json(const json& j) {
  Instance inst;
  try {
    inst.id = j.at("id").get<std::string>();
    inst.env_id = j.at("env_id").get<std::string>();
    inst.anchor_landmark_id = j.at("anchor_landmark_id").get<std::string>();
    inst.user_pos = {j.at("user_pos").at(0).get<int>(), j.at("user_pos").at(1).get<int>()};
    inst.facing = enum_field<CardinalDirection>(j, "facing", parse_direction);
    for (const auto& c : j.at("cues")) {
      inst.cues.push_back({enum_field<Relation>(c, "relation", parse_relation), c.at("landmark_id").get<std::string>(),
                           enum_field<CardinalDirection>(c, "abs_dir", parse_direction)});
    }
    inst.utterance = j.at("utterance").get<std::string>();
    inst.transcript = j.at("transcript").get<std::string>();
    inst.coords_block = j.at("coords_block").get<std::string>();
    inst.multimodal_input = j.at("multimodal_input").get<std::string>();
    inst.gold_trace = trace::trace_from_json(j.at("gold_trace"));
    inst.gold_trace_text = j.at("gold_trace_text").get<std::string>();
    inst.split = enum_field<Split>(j, "split", parse_split);
    inst.subset = enum_field<Subset>(j, "subset", parse_subset);
    inst.severity = enum_field<noise::Severity>(j, "severity", noise::parse_severity);
    inst.language = j.at("language").get<std::string>();
    inst.seed = j.at("seed").get<std::uint64_t>();
    inst.variation = enum_field<utterance::Variation>(j, "variation", utterance::parse_variation);
    inst.transcript_cer = j.at("transcript_cer").get<double>();
    inst.code_switched = j.at("code_switched").get<bool>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("instance ") + (inst.id.empty() ? "?" : inst.id) + ": " + e.what());
  }
  return inst;
}

std::string to_jsonl(const std::vector<Instance>& instances) {
  std::string out;
  for (const auto& inst : instances) {
    out += to_json(inst).dump();
    out += '\n';
  }
  return out;
}

std::vector<Instance> parse_jsonl(std::string_view textv, const std::string& source) {
  std::vector<Instance> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < textv.size()) {
    auto end = textv.find('\n', start);
    if (end == std::string_view::npos) end = textv.size();
    ++line_no;
    const auto line = text::trim(textv.substr(start, end - start));
    start = end + 1;
    if (line.empty()) continue;
    try {
      out.push_back(instance_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Instance> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_jsonl(ss.str(), path.string());
}

// ---- combinations and sites ----

std::vector<Relation> Combination::relations() const {
  std::vector<Relation> out;
  for (auto r : kAllRelations) {
    if (contains(r)) out.push_back(r);
  }
  return out;
}

std::size_t Combination::size() const { return relations().size(); }

std::string Combination::name() const {
  std::string out;
  for (auto r : relations()) {
    if (!out.empty()) out += "+";
    out += to_string(r);
  }
  return out;
}

std::optional<Combination> Combination::parse(std::string_view name) {
  Combination c;
  for (const auto& part : text::split(name, '+')) {
    auto r = parse_relation(part);
    if (!r || c.contains(*r)) return std::nullopt;
    c.mask |= static_cast<std::uint8_t>(1U << static_cast<int>(*r));
  }
  if (c.mask == 0) return std::nullopt;
  return c;
}

Combination Combination::of(const std::vector<Relation>& rels) {
  Combination c;
  for (auto r : rels) c.mask |= static_cast<std::uint8_t>(1U << static_cast<int>(r));
  return c;
}

std::vector<Combination> all_combinations() {
  std::vector<Combination> out;
  for (std::size_t k = 1; k <= 4; ++k) {
    for (std::uint8_t m = 1; m < 16; ++m) {
      Combination c{m};
      if (c.size() == k) out.push_back(c);
    }
  }
  // Within a size, order by relation sequence (front < back < left < right).
  std::stable_sort(out.begin(), out.end(), [](const Combination& a, const Combination& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    const auto ra = a.relations();
    const auto rb = b.relations();
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });
  return out;
}

std::vector<Site> enumerate_sites(const GridEnvironment& env) {
  std::vector<Site> out;
  for (const auto& lm : env.landmarks()) {
    const auto around = env.neighbors(lm.position);
    for (auto facing : kAllDirections) {
      Site s{lm.id, lm.position, facing, {}};
      for (auto q : kAllRelations) {
        auto it = around.find(oracle::landmark_dir(facing, q));
        if (it != around.end()) s.available.emplace(q, it->second->id);
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

// ---- plan ----

GenerationPlan GenerationPlan::defaults() {
  GenerationPlan p;
  for (const auto& c : all_combinations()) {
    std::size_t n = 302;
    if (c.size() == 1) n = 320;
    if (c.size() == 4 || c.name() == "back+left+right") n = 301;
    p.combination_counts.emplace_back(c, n);
  }
  return p;
}

std::size_t GenerationPlan::main_total() const {
  std::size_t n = 0;
  for (const auto& [c, k] : combination_counts) n += k;
  return n;
}

void GenerationPlan::validate() const {
  if (combination_counts.empty()) throw UsageError("plan: no combination counts");
  for (std::size_t i = 0; i < combination_counts.size(); ++i) {
    if (combination_counts[i].first.mask == 0 || combination_counts[i].first.mask > 15) {
      throw UsageError("plan: invalid relation combination");
    }
    for (std::size_t j = i + 1; j < combination_counts.size(); ++j) {
      if (combination_counts[i].first == combination_counts[j].first) {
        throw UsageError("plan: combination " + combination_counts[i].first.name() + " listed twice");
      }
    }
  }
  if (train + validation + test != main_total()) {
    throw UsageError("plan: split sizes " + std::to_string(train) + "+" + std::to_string(validation) + "+" +
                     std::to_string(test) + " do not sum to the " + std::to_string(main_total()) +
                     " planned instances");
  }
  if (variation_quota > main_total()) throw UsageError("plan: variation quota exceeds the main set");
  if (language_mix.empty()) throw UsageError("plan: empty language mix");
  double sum = 0;
  for (const auto& [lang, w] : language_mix) {
    if (w < 0) throw UsageError("plan: negative language weight for " + lang);
    sum += w;
  }
  if (sum <= 0) throw UsageError("plan: language weights sum to zero");
  for (double r : {code_switch_rate, cross_domain_code_switch_rate}) {
    if (r < 0 || r > 1) throw UsageError("plan: code-switch rates must lie in [0, 1]");
  }
  corruption.validate();
  thresholds.validate();
  main_mixture.validate();
  cross_domain_mixture.validate();
}

const GridEnvironment& Resources::environment(std::string_view id) const {
  for (const auto& e : environments) {
    if (e.id() == id) return e;
  }
  throw DataError("no environment loaded with id " + std::string(id));
}

const Lexicon& Resources::lexicon(std::string_view language) const { return lexicon_for(lexicons, language); }

// ---- serialisation helpers ----

Multimodal serialize_multimodal(std::string_view transcript, const std::vector<std::pair<std::string, Coord>>& coords) {
  Multimodal m;
  for (const auto& [id, pos] : coords) {
    if (!m.coords_block.empty()) m.coords_block += ", ";
    m.coords_block += id + to_string(pos);
  }
  m.text = "Audio: " + std::string(transcript) + " | Coordinates: " + m.coords_block;
  return m;
}

std::vector<std::pair<std::string, Coord>> parse_coords_block(std::string_view block) {
  static const std::regex entry(R"(^\s*(.+?)\s*\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\)\s*$)");
  std::vector<std::pair<std::string, Coord>> out;
  if (text::trim(block).empty()) return out;
  // Split on ", " outside parentheses.
  int depth = 0;
  std::size_t start = 0;
  std::vector<std::string> parts;
  for (std::size_t i = 0; i <= block.size(); ++i) {
    if (i == block.size() || (block[i] == ',' && depth == 0)) {
      parts.emplace_back(block.substr(start, i - start));
      start = i + 1;
      continue;
    }
    if (block[i] == '(') ++depth;
    if (block[i] == ')') --depth;
  }
  for (const auto& p : parts) {
    std::smatch m;
    if (!std::regex_match(p, m, entry)) throw ParseError("coordinates block: malformed entry '" + p + "'");
    out.emplace_back(m[1].str(), Coord{std::stoi(m[2].str()), std::stoi(m[3].str())});
  }
  return out;
}

namespace {

std::vector<std::pair<std::string, Coord>> coords_of(const Instance& inst, const GridEnvironment& env) {
  std::vector<std::pair<std::string, Coord>> coords{{inst.anchor_landmark_id, inst.user_pos}};
  for (const auto& c : inst.cues) coords.emplace_back(c.landmark_id, env.get(c.landmark_id).position);
  return coords;
}

}  // namespace

RenderedTrace render_gold_trace(const Instance& inst, const GridEnvironment& env, const Lexicon& lex) {
  std::vector<trace::GoldCue> cues;
  for (const auto& c : inst.cues) {
    const auto& lm = env.get(c.landmark_id);
    cues.push_back({c.relation, c.landmark_id, lm.name(lex.language), lm.position});
  }
  RenderedTrace r;
  r.trace = trace::derive_trace(inst.user_pos, cues);
  r.text = trace::render_trace(r.trace, lex);
  return r;
}

void verify_instance(const Instance& inst, const GridEnvironment& env) {
  auto fail = [&](const std::string& what) { throw InvariantError("instance " + inst.id + ": " + what); };
  if (inst.cues.empty() || inst.cues.size() > 4) fail("cue count out of range");
  oracle::OrientationProblem problem{inst.user_pos, {}};
  for (std::size_t i = 0; i < inst.cues.size(); ++i) {
    for (std::size_t j = i + 1; j < inst.cues.size(); ++j) {
      if (inst.cues[i].relation == inst.cues[j].relation) fail("repeated relation");
    }
    const auto* lm = env.find(inst.cues[i].landmark_id);
    if (!lm) fail("unknown landmark " + inst.cues[i].landmark_id);
    problem.cues.push_back({inst.cues[i].relation, lm->id, lm->position});
  }
  oracle::Solution sol;
  try {
    sol = oracle::solve_detailed(problem);
  } catch (const DataError& e) {
    fail(std::string("oracle rejects cues: ") + e.what());
  }
  if (sol.facing != inst.facing) fail("oracle facing " + std::string(to_string(sol.facing)) + " != stored facing");
  for (std::size_t i = 0; i < inst.cues.size(); ++i) {
    if (sol.verdicts[i].abs_dir != inst.cues[i].abs_dir) fail("stored abs_dir disagrees with oracle");
  }
  const auto m = serialize_multimodal(inst.transcript, coords_of(inst, env));
  if (m.coords_block != inst.coords_block) fail("coordinates block mismatch");
  if (m.text != inst.multimodal_input) fail("multimodal input mismatch");
  if (inst.gold_trace.final_answer != inst.facing) fail("gold trace final answer disagrees with facing");
}

std::vector<std::pair<Relation, std::optional<std::string>>> recover_cues(const Instance& inst, const Lexicon& lex,
                                                                          const MentionResolver& resolver) {
  const auto extracted = utterance::extract_relations(inst.utterance, lex, resolver);
  auto coords = parse_coords_block(inst.coords_block);
  std::vector<std::string> cue_ids;
  for (std::size_t i = 1; i < coords.size(); ++i) cue_ids.push_back(coords[i].first);
  std::vector<std::pair<Relation, std::optional<std::string>>> out;
  for (std::size_t i = 0; i < extracted.size(); ++i) {
    std::optional<std::string> id = extracted[i].landmark_id;
    const bool listed = id && std::find(cue_ids.begin(), cue_ids.end(), *id) != cue_ids.end();
    if (!listed) id = i < cue_ids.size() ? std::optional<std::string>(cue_ids[i]) : std::nullopt;
    out.emplace_back(extracted[i].relation, id);
  }
  return out;
}

// ---- generation ----

namespace {

struct PlanItem {
  std::string id;
  const GridEnvironment* env = nullptr;
  const Lexicon* lex = nullptr;
  Split split = Split::Train;
  Subset subset = Subset::Main;
  Site site;
  Combination combo;
  utterance::Variation variation = utterance::Variation::None;
  std::uint64_t seed = 0;
  bool code_switch = false;
};

std::string numbered(std::string_view prefix, std::size_t k) {
  std::string n = std::to_string(k);
  if (n.size() < 4) n.insert(0, 4 - n.size(), '0');
  return std::string(prefix) + "-" + n;
}

/// Largest-remainder apportionment of n over weights; ties go to the earlier entry.
std::vector<std::size_t> apportion(const std::vector<double>& weights, std::size_t n) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> out(weights.size());
  std::vector<double> rem(weights.size());
  std::size_t given = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double q = weights[i] * static_cast<double>(n) / sum;
    out[i] = static_cast<std::size_t>(std::floor(q + 1e-9));
    rem[i] = q - static_cast<double>(out[i]);
    given += out[i];
  }
  while (given < n) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < rem.size(); ++i) {
      if (rem[i] > rem[best] + 1e-12) best = i;
    }
    ++out[best];
    rem[best] = -1.0;
    ++given;
  }
  return out;
}

/// Cycles through a shuffled list of the sites that realise each combination.
class SitePicker {
 public:
  SitePicker(const GridEnvironment& env, std::uint64_t seed) : env_(env), seed_(seed), sites_(enumerate_sites(env)) {}

  const Site& next(Combination c) {
    auto& pool = pools_[c.mask];
    if (!pool.ready) {
      for (std::size_t i = 0; i < sites_.size(); ++i) {
        bool ok = true;
        for (auto r : c.relations()) ok = ok && sites_[i].available.count(r);
        if (ok) pool.order.push_back(i);
      }
      if (pool.order.empty()) {
        throw UnsatisfiablePlan("combination " + c.name() + " has no realising site in environment " + env_.id());
      }
      Rng rng(seed_, "sites:" + env_.id() + ":" + c.name());
      rng.shuffle(pool.order.begin(), pool.order.end());
      pool.ready = true;
    }
    return sites_[pool.order[pool.cursor++ % pool.order.size()]];
  }

 private:
  struct Pool {
    bool ready = false;
    std::vector<std::size_t> order;
    std::size_t cursor = 0;
  };
  const GridEnvironment& env_;
  std::uint64_t seed_;
  std::vector<Site> sites_;
  std::map<std::uint8_t, Pool> pools_;
};

void assign_languages(std::vector<PlanItem*>& group, const GenerationPlan& plan, const Resources& res,
                      const std::string& stream) {
  std::vector<std::string> langs;
  std::vector<double> weights;
  for (const auto& [lang, w] : plan.language_mix) {
    langs.push_back(lang);
    weights.push_back(w);
  }
  const auto counts = apportion(weights, group.size());
  std::vector<const Lexicon*> labels;
  for (std::size_t i = 0; i < langs.size(); ++i) {
    const Lexicon& lex = res.lexicon(langs[i]);
    labels.insert(labels.end(), counts[i], &lex);
  }
  Rng rng(plan.seed, "languages:" + stream);
  rng.shuffle(labels.begin(), labels.end());
  for (std::size_t i = 0; i < group.size(); ++i) group[i]->lex = labels[i];
}

void assign_code_switch(std::vector<PlanItem*>& group, double rate, const GenerationPlan& plan,
                        const std::string& stream) {
  if (rate <= 0) return;
  std::vector<PlanItem*> eligible;
  for (auto* it : group) {
    const bool vague = it->variation == utterance::Variation::ReferentialAmbiguity ||
                       it->variation == utterance::Variation::Underspecified;
    if (it->lex->language != "en" && !vague) eligible.push_back(it);
  }
  const auto want = std::min<std::size_t>(eligible.size(),
                                          static_cast<std::size_t>(std::llround(rate * static_cast<double>(group.size()))));
  Rng rng(plan.seed, "code_switch:" + stream);
  rng.shuffle(eligible.begin(), eligible.end());
  for (std::size_t i = 0; i < want; ++i) eligible[i]->code_switch = true;
}

}  // namespace

std::vector<Instance> generate(const GenerationPlan& plan, const Resources& res, Policy policy) {
  plan.validate();
  std::vector<PlanItem> items;
  items.reserve(plan.main_total() + plan.cross_domain_quota + plan.ambiguity_quota);

  // Main set: combination-major order, splits dealt by running largest deficit so every
  // combination is spread over the splits in proportion.
  {
    const auto& env = res.environment(plan.main_env);
    SitePicker picker(env, plan.seed);
    const std::array<double, 3> share = {static_cast<double>(plan.train), static_cast<double>(plan.validation),
                                         static_cast<double>(plan.test)};
    const double total = static_cast<double>(plan.main_total());
    std::array<std::size_t, 3> dealt{};
    std::array<std::vector<PlanItem>, 3> by_split;
    std::size_t k = 0;
    for (const auto& [combo, count] : plan.combination_counts) {
      for (std::size_t j = 0; j < count; ++j, ++k) {
        std::size_t best = 0;
        double best_deficit = -1e300;
        for (std::size_t s = 0; s < 3; ++s) {
          const double deficit = share[s] / total * static_cast<double>(k + 1) - static_cast<double>(dealt[s]);
          if (deficit > best_deficit + 1e-12) {
            best = s;
            best_deficit = deficit;
          }
        }
        ++dealt[best];
        PlanItem it;
        it.env = &env;
        it.split = static_cast<Split>(best);
        it.subset = Subset::Main;
        it.site = picker.next(combo);
        it.combo = combo;
        by_split[best].push_back(std::move(it));
      }
    }
    const auto var_counts = apportion({share[0], share[1], share[2]}, plan.variation_quota);
    for (std::size_t s = 0; s < 3; ++s) {
      auto& list = by_split[s];
      std::vector<std::size_t> idx(list.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      Rng rng(plan.seed, "variation:" + std::string(to_string(static_cast<Split>(s))));
      rng.shuffle(idx.begin(), idx.end());
      idx.resize(std::min(var_counts[s], idx.size()));
      std::sort(idx.begin(), idx.end());
      for (std::size_t r = 0; r < idx.size(); ++r) {
        auto& it = list[idx[r]];
        it.subset = Subset::LinguisticVariation;
        it.variation = r % 2 == 0 ? utterance::Variation::WordOrder : utterance::Variation::Synonym;
      }
      for (std::size_t i = 0; i < list.size(); ++i) {
        list[i].id = numbered(to_string(static_cast<Split>(s)), i + 1);
        items.push_back(std::move(list[i]));
      }
    }
  }

  const auto combos = all_combinations();
  auto add_subset = [&](const std::string& env_id, std::size_t quota, Subset subset, const char* prefix,
                        const std::vector<utterance::Variation>& variations) {
    const auto& env = res.environment(env_id);
    SitePicker picker(env, derive_seed(plan.seed, prefix));
    for (std::size_t k = 0; k < quota; ++k) {
      PlanItem it;
      it.id = numbered(prefix, k + 1);
      it.env = &env;
      it.split = Split::Test;
      it.subset = subset;
      it.combo = combos[k % combos.size()];
      it.site = picker.next(it.combo);
      it.variation = variations[k % variations.size()];
      items.push_back(std::move(it));
    }
  };
  add_subset(plan.cross_domain_env, plan.cross_domain_quota, Subset::CrossDomain, "cross_domain",
             {utterance::Variation::None});
  add_subset(plan.ambiguity_env, plan.ambiguity_quota, Subset::ReferentialAmbiguity, "ambiguity",
             {utterance::Variation::ReferentialAmbiguity, utterance::Variation::Incomplete,
              utterance::Variation::Underspecified});

  // Groups drive language, code-switch and severity allocation.
  enum Group { kTrain, kValidation, kTest, kCross, kAmbiguity, kGroups };
  const std::array<const char*, kGroups> group_names = {"train", "validation", "test", "cross_domain", "ambiguity"};
  auto group_of = [](const PlanItem& it) {
    if (it.subset == Subset::CrossDomain) return kCross;
    if (it.subset == Subset::ReferentialAmbiguity) return kAmbiguity;
    return static_cast<Group>(static_cast<int>(it.split));
  };
  std::array<std::vector<PlanItem*>, kGroups> groups;
  for (std::size_t i = 0; i < items.size(); ++i) {
    items[i].seed = derive_seed(plan.seed, "instance", i);
    groups[group_of(items[i])].push_back(&items[i]);
  }
  for (int g = 0; g < kGroups; ++g) {
    assign_languages(groups[g], plan, res, group_names[g]);
    const double rate = g == kTrain ? 0.0 : g == kCross ? plan.cross_domain_code_switch_rate : plan.code_switch_rate;
    assign_code_switch(groups[g], rate, plan, group_names[g]);
  }

  std::vector<Instance> out(items.size());
  for_each_index(items.size(), policy, [&](std::size_t i) {
    const auto& it = items[i];
    utterance::UtteranceSpec spec;
    spec.anchor_landmark_id = it.site.anchor_id;
    for (auto r : it.combo.relations()) spec.cues.emplace_back(r, it.site.available.at(r));
    spec.variation = it.variation;
    spec.language = it.lex->language;
    spec.seed = it.seed;
    spec.force_code_switch = it.code_switch;
    const auto rendered = utterance::render(spec, *it.env, *it.lex);

    Instance& inst = out[i];
    inst.id = it.id;
    inst.env_id = it.env->id();
    inst.anchor_landmark_id = it.site.anchor_id;
    inst.user_pos = it.site.anchor_pos;
    inst.facing = it.site.facing;
    for (const auto& c : rendered.cues) {
      const auto d = oracle::delta(inst.user_pos, it.env->get(c.landmark_id).position);
      inst.cues.push_back({c.relation, c.landmark_id, oracle::abs_dir(d)});
    }
    inst.utterance = rendered.text;
    inst.transcript = rendered.text;
    inst.split = it.split;
    inst.subset = it.subset;
    inst.language = it.lex->language;
    inst.seed = it.seed;
    inst.variation = it.variation;
    inst.code_switched = rendered.code_switched;
  });

  for (int g = kValidation; g < kGroups; ++g) {
    if (groups[g].empty()) continue;
    std::vector<noise::CalibrationItem> cal;
    std::vector<std::size_t> where;
    for (auto* it : groups[g]) {
      const auto i = static_cast<std::size_t>(it - items.data());
      cal.push_back({out[i].utterance, it->lex, it->seed});
      where.push_back(i);
    }
    const auto& mix = g == kCross ? plan.cross_domain_mixture : plan.main_mixture;
    const auto result = noise::calibrate(cal, mix, plan.corruption, plan.thresholds,
                                         derive_seed(plan.seed, std::string("severity:") + group_names[g]), policy);
    for (std::size_t k = 0; k < where.size(); ++k) {
      auto& inst = out[where[k]];
      inst.transcript = result[k].corruption.transcript;
      inst.transcript_cer = result[k].corruption.achieved_cer;
      inst.severity = result[k].severity;
    }
  }

  for_each_index(items.size(), policy, [&](std::size_t i) {
    auto& inst = out[i];
    const auto& env = *items[i].env;
    const auto m = serialize_multimodal(inst.transcript, coords_of(inst, env));
    inst.coords_block = m.coords_block;
    inst.multimodal_input = m.text;
    auto gold = render_gold_trace(inst, env, *items[i].lex);
    inst.gold_trace = std::move(gold.trace);
    inst.gold_trace_text = std::move(gold.text);
    verify_instance(inst, env);
  });
  return out;
}

// ---- stage records and prompts ----

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::S1: return "S1";
    case Stage::S2: return "S2";
    case Stage::S3: return "S3";
    case Stage::S4: return "S4";
  }
  return "S1";
}

std::optional<Stage> parse_stage(std::string_view s) {
  for (auto v : {Stage::S1, Stage::S2, Stage::S3, Stage::S4}) {
    if (text::equals_ci(text::trim(s), to_string(v))) return v;
  }
  return std::nullopt;
}

std::vector<StageRecord> emit_stage_records(const std::vector<Instance>& instances, Stage stage,
                                            const Resources& res) {
  std::map<std::string, MentionResolver> resolvers;
  std::vector<StageRecord> out;
  for (const auto& inst : instances) {
    const auto& lex = res.lexicon(inst.language);
    const auto& st = lex.stages;
    auto dir = [&](CardinalDirection d) { return lex.direction_word(d); };
    switch (stage) {
      case Stage::S1: {
        auto it = resolvers.find(inst.env_id);
        if (it == resolvers.end()) {
          it = resolvers.emplace(inst.env_id, MentionResolver(res.environment(inst.env_id), res.lexicons)).first;
        }
        const auto extracted = utterance::extract_relations(inst.utterance, lex, it->second);
        std::string target;
        for (std::size_t i = 0; i < extracted.size(); ++i) {
          if (i > 0) target += "\n";
          target += text::fill(st.s1_line, {{"i", std::to_string(i + 1)},
                                            {"relation", lex.relation_term(extracted[i].relation)},
                                            {"landmark", extracted[i].mention}});
        }
        out.push_back({inst.id, stage, inst.utterance, target});
        break;
      }
      case Stage::S2:
        for (const auto& e : inst.gold_trace.step2) {
          out.push_back({inst.id, stage,
                         text::fill(st.s2_input, {{"from", to_string(e.from)}, {"to", to_string(e.to)}}),
                         text::fill(st.s2_target, {{"from", to_string(e.from)},
                                                   {"to", to_string(e.to)},
                                                   {"vector", oracle::to_string(e.vector)},
                                                   {"direction", dir(e.direction)}})});
        }
        break;
      case Stage::S3:
        for (const auto& e : inst.gold_trace.step3) {
          out.push_back({inst.id, stage,
                         text::fill(st.s3_input, {{"direction", dir(e.abs_dir)},
                                                  {"relation", lex.relation_term(e.relation)}}),
                         text::fill(st.s3_target, {{"direction", dir(e.abs_dir)},
                                                   {"phrase", lex.canonical_phrase(e.relation)},
                                                   {"relation", lex.relation_term(e.relation)},
                                                   {"facing", dir(e.facing)}})});
        }
        break;
      case Stage::S4:
        out.push_back({inst.id, stage, inst.multimodal_input, inst.gold_trace_text});
        break;
    }
  }
  return out;
}

json to_json(const StageRecord& rec) {
  return {{"instance_id", rec.instance_id}, {"stage", to_string(rec.stage)}, {"input", rec.input}, {"target", rec.target}};
}

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::B1: return "B1";
    case Protocol::B2: return "B2";
    case Protocol::B3: return "B3";
    case Protocol::B4: return "B4";
  }
  return "B1";
}

std::optional<Protocol> parse_protocol(std::string_view s) {
  for (auto v : {Protocol::B1, Protocol::B2, Protocol::B3, Protocol::B4}) {
    if (text::equals_ci(text::trim(s), to_string(v))) return v;
  }
  return std::nullopt;
}

namespace {

constexpr std::string_view kB2Head =
    "Instruction: Based on the audio description and coordinate information, determine which direction the user "
    "is facing.\n"
    "\n"
    "Example: Audio: I am at the gym, and the pharmacy is in front of me | Coordinates: gym(4,6), pharmacy(4,7)\n"
    "Answer: North\n"
    "\n"
    "Example: Audio: I am at the park, and the water park is behind me | Coordinates: park(0,0), water_park(0,1)\n"
    "Answer: South\n"
    "\n"
    "Example: Audio: I am at the foundation, and the high school is on my right | Coordinates: foundation(0,7), "
    "high_school(0,6)\n"
    "Answer: East\n"
    "\n"
    "Example: Audio: I am at the cooperative store, and the theater is on my left | Coordinates: "
    "cooperative_store(8,8), theater(8,7)\n"
    "Answer: West\n"
    "\n"
    "Question: ";

constexpr std::string_view kB3Head =
    "Instruction: Use three-step reasoning to determine the user's facing direction given the audio description "
    "and coordinates.\n"
    "\n"
    "Example 1\n"
    "Input: Audio: I am at the gym, and the pharmacy is in front of me | Coordinates: gym(4,6), pharmacy(4,7)\n"
    "Output:\n"
    "Step 1: Extract spatial relations\n"
    "    Spatial relation = front\n"
    "    Reference landmark = pharmacy\n"
    "Step 2: Calculate absolute directions\n"
    "    Direction vector from gym to pharmacy: (4,7) - (4,6) = (0,1)\n"
    "    Direction = North\n"
    "Step 3: Infer user orientation\n"
    "    The pharmacy is to the North, and the user describes it as \"in front of me.\"\n"
    "    Spatial mapping rules indicate front = North when the user is facing North.\n"
    "    Therefore, the user is facing North.\n"
    "\n"
    "Example 2\n"
    "Input: Audio: I am at the park, and the water park is behind me | Coordinates: park(0,0), water_park(0,1)\n"
    "Output:\n"
    "Step 1: Extract spatial relations\n"
    "    Spatial relation = behind\n"
    "    Reference landmark = water park\n"
    "Step 2: Calculate absolute directions\n"
    "    Direction vector from park to water park: (0,1) - (0,0) = (0,1)\n"
    "    Direction = North\n"
    "Step 3: Infer user orientation\n"
    "    The water park is to the North, and the user describes it as \"behind me.\"\n"
    "    Spatial mapping rules indicate behind = North when the user is facing South.\n"
    "    Therefore, the user is facing South.\n"
    "\n"
    "Now use the same three-step reasoning:\n"
    "Input: ";

}  // namespace

std::string emit_baseline_prompt(const Instance& inst, Protocol protocol) {
  const std::string& m = inst.multimodal_input;
  switch (protocol) {
    case Protocol::B1:
      return "Question: " + m + "\nWhich direction is the user facing? Please answer North, South, East, or West.\nAnswer:";
    case Protocol::B2:
      return std::string(kB2Head) + m + "\nAnswer:";
    case Protocol::B3:
      return std::string(kB3Head) + m + "\nOutput:";
    case Protocol::B4:
      return "USER: " + m + "\nASSISTANT:";
  }
  return {};
}

}  // namespace cor::dataset
