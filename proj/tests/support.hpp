#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cor/dataset.hpp"
#include "cor/evaluate.hpp"
#include "cor/noise.hpp"
#include "cor/oracle.hpp"
#include "cor/trace.hpp"

namespace cor::testing {

inline const dataset::Resources& resources() {
  static const dataset::Resources res = [] {
    const std::string data = COR_DATA_DIR;
    dataset::Resources r;
    r.environments.push_back(load_environment_file(data + "/environments/gongguan.json"));
    r.environments.push_back(load_environment_file(data + "/environments/taipei_station.json"));
    r.lexicons.push_back(load_lexicon_file(data + "/lexicons/en.json"));
    r.lexicons.push_back(load_lexicon_file(data + "/lexicons/zh-TW.json"));
    return r;
  }();
  return res;
}

inline const GridEnvironment& gongguan() { return resources().environment("gongguan"); }
inline const GridEnvironment& taipei() { return resources().environment("taipei_station"); }
inline const Lexicon& en() { return resources().lexicon("en"); }
inline const Lexicon& zh() { return resources().lexicon("zh-TW"); }

/// The default corpus, generated once per process.
inline const std::vector<dataset::Instance>& default_dataset() {
  static const auto data = dataset::generate(dataset::GenerationPlan::defaults(), resources(), Policy::Parallel);
  return data;
}

inline std::vector<dataset::Instance> select(const std::vector<dataset::Instance>& all, std::string_view prefix) {
  std::vector<dataset::Instance> out;
  for (const auto& inst : all) {
    if (inst.id.rfind(std::string(prefix) + "-", 0) == 0) out.push_back(inst);
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// A hand-built instance for a scene; the gold answer comes from the oracle.
inline dataset::Instance make_instance(const std::string& id, const GridEnvironment& env, const std::string& anchor,
                                       const std::vector<std::pair<Relation, std::string>>& cues,
                                       const std::string& utterance, const std::string& transcript,
                                       const Lexicon& lex) {
  dataset::Instance inst;
  inst.id = id;
  inst.env_id = env.id();
  inst.anchor_landmark_id = anchor;
  inst.user_pos = env.get(anchor).position;
  oracle::OrientationProblem problem{inst.user_pos, {}};
  for (const auto& [rel, lm] : cues) problem.cues.push_back({rel, lm, env.get(lm).position});
  const auto sol = oracle::solve_detailed(problem);
  inst.facing = sol.facing;
  for (const auto& v : sol.verdicts) inst.cues.push_back({v.cue.relation, v.cue.landmark_id, v.abs_dir});
  inst.utterance = utterance;
  inst.transcript = transcript;
  std::vector<std::pair<std::string, Coord>> coords{{anchor, inst.user_pos}};
  for (const auto& [rel, lm] : cues) coords.emplace_back(lm, env.get(lm).position);
  const auto m = dataset::serialize_multimodal(transcript, coords);
  inst.coords_block = m.coords_block;
  inst.multimodal_input = m.text;
  inst.split = dataset::Split::Test;
  inst.language = lex.language;
  inst.transcript_cer = utterance == transcript ? 0.0 : noise::cer(utterance, transcript);
  inst.severity = noise::classify_cer(inst.transcript_cer, noise::SeverityThresholds{});
  auto gold = dataset::render_gold_trace(inst, env, lex);
  inst.gold_trace = gold.trace;
  inst.gold_trace_text = gold.text;
  return inst;
}

/// Scenes of the three published residual-error examples, with their model outputs.
struct ErrorCase {
  dataset::Instance instance;
  std::string output;
};

inline ErrorCase direction_error_case() {
  return {make_instance("case-direction", taipei(), "Taipei_Main_Station_Exit_S2",
                        {{Relation::Front, "restaurant_5"}, {Relation::Left, "Taipei_Main_Station_Exit_S3"}},
                        "I am at Taipei Main Station Exit S2, restaurant 5 is in front of me, and Taipei Main Station "
                        "Exit S3 is on my left",
                        "I am at Taipei Main Station Exit S2, restaurant 5 is in front of me, and Taipei Main Station "
                        "Exit S3 is on my left",
                        en()),
          read_file(COR_FIXTURES "/outputs/direction_error.txt")};
}

inline ErrorCase relation_error_case() {
  const std::string text =
      "I am at bus stop 2, Taipei Main Station Exit S3 is in front of me, Taipei Main Station Exit K7 is on my "
      "left, and sports store 1 is on my right";
  return {make_instance("case-relation", taipei(), "bus_stop_2",
                        {{Relation::Front, "Taipei_Main_Station_Exit_S3"},
                         {Relation::Left, "Taipei_Main_Station_Exit_K7"},
                         {Relation::Right, "sports_store_1"}},
                        text, text, en()),
          read_file(COR_FIXTURES "/outputs/relation_error.txt")};
}

inline ErrorCase asr_error_case() {
  return {make_instance("case-asr", gongguan(), "park_4",
                        {{Relation::Front, "drink_shop_4"},
                         {Relation::Back, "bar_1"},
                         {Relation::Left, "bakery_3"},
                         {Relation::Right, "bar_2"}},
                        "I am at park 4, drink shop 4 is in front of me, bar 1 is behind me, bakery 3 is on my left, "
                        "and bar 2 is on my right",
                        "I am at park 4, yin-liu-dian 4 is in front of me, 981 is behind me, nian-bao-dian 3 is on my "
                        "left, and 982 is on my right",
                        en()),
          read_file(COR_FIXTURES "/outputs/asr_error.txt")};
}

struct PlantedRun {
  std::vector<dataset::Instance> instances;
  std::vector<eval::ModelOutput> outputs;
  std::size_t step3_flips = 0;
  std::size_t relation_swaps = 0;
  std::size_t confusions = 0;
};

/// Gold outputs for `instances` with planted mistakes: step-3 flips, step-1 relation swaps
/// carried through a self-consistent step 3, and landmark names replaced by their confusion
/// entry in the transcript and misplaced by the trace. `shared` of the swaps land on the
/// second cue of a two-cue confusion instance, so that output carries both mistakes.
inline PlantedRun plant_errors(std::vector<dataset::Instance> instances, std::size_t flips, std::size_t swaps,
                               std::size_t confusions, std::size_t shared = 0) {
  const auto& res = resources();
  PlantedRun run;
  std::vector<bool> used(instances.size(), false);
  auto lex_of = [&](const dataset::Instance& i) -> const Lexicon& { return res.lexicon(i.language); };
  auto clean = [&](const dataset::Instance& i, std::size_t cues) {
    return i.cues.size() == cues && i.severity == noise::Severity::Perfect &&
           i.variation == utterance::Variation::None;
  };
  auto clean_single = [&](const dataset::Instance& i) { return clean(i, 1); };

  // The first pass plants the shared cases on two-cue instances.
  for (int pass = 0; pass < 2; ++pass)
  for (std::size_t k = 0; k < instances.size() && run.confusions < confusions; ++k) {
    auto& inst = instances[k];
    const bool pair = pass == 0;
    if (pair && run.relation_swaps >= std::min(shared, swaps)) break;
    if (used[k] || !clean(inst, pair ? 2 : 1) || inst.code_switched) continue;
    const auto& env = res.environment(inst.env_id);
    const auto& lex = lex_of(inst);
    const auto& cue = inst.cues.front();
    const auto name = env.get(cue.landmark_id).name(lex.language);
    std::string confused;
    for (const auto& [key, subs] : lex.confusion_table) {
      if (text::length(key) < 2 || name.find(key) == std::string::npos) continue;
      confused = text::replace_all(name, key, subs.front());
      break;
    }
    const auto pos = inst.utterance.rfind(name);
    if (confused.empty() || pos == std::string::npos) continue;
    const MentionResolver resolver(env, res.lexicons);
    if (resolver.resolve(confused)) continue;
    used[k] = true;
    ++run.confusions;
    inst.transcript = inst.utterance;
    inst.transcript.replace(pos, name.size(), confused);
    inst.transcript_cer = noise::cer(inst.utterance, inst.transcript);
    inst.severity = noise::classify_cer(inst.transcript_cer, noise::SeverityThresholds{});
    const auto m = dataset::serialize_multimodal(inst.transcript, dataset::parse_coords_block(inst.coords_block));
    inst.multimodal_input = m.text;
    // The misheard name is placed on the opposite side of the user.
    auto t = inst.gold_trace;
    const auto wrong_dir = opposite(cue.abs_dir);
    const auto d = oracle::delta(inst.user_pos, env.get(cue.landmark_id).position);
    t.step1[0].mention = confused;
    t.step1[0].landmark_id.reset();
    t.step2[0].mention = confused;
    t.step2[0].to = {inst.user_pos.x - d.dx, inst.user_pos.y - d.dy};
    t.step2[0].vector = {-d.dx, -d.dy};
    t.step2[0].direction = wrong_dir;
    t.step3[0].mention = text::capitalize(confused);
    t.step3[0].abs_dir = wrong_dir;
    t.step3[0].facing = oracle::infer_facing(wrong_dir, cue.relation);
    t.final_answer = t.step3[0].facing;
    if (pair) {
      const auto swapped = static_cast<Relation>(static_cast<int>(t.step1[1].relation) ^ 1);
      t.step1[1].relation = swapped;
      t.step3[1].relation = swapped;
      t.step3[1].facing = oracle::infer_facing(t.step3[1].abs_dir, swapped);
      t.final_answer = t.step3[1].facing;
      ++run.relation_swaps;
    }
    run.outputs.push_back({inst.id, trace::render_trace(t, lex)});
  }

  for (std::size_t k = 0; k < instances.size() && run.relation_swaps < swaps; ++k) {
    auto& inst = instances[k];
    if (used[k] || !clean_single(inst)) continue;
    used[k] = true;
    ++run.relation_swaps;
    auto t = inst.gold_trace;
    const Relation swapped = static_cast<Relation>(static_cast<int>(t.step1[0].relation) ^ 1);
    t.step1[0].relation = swapped;
    t.step3[0].relation = swapped;
    t.step3[0].facing = oracle::infer_facing(t.step3[0].abs_dir, swapped);
    t.final_answer = t.step3[0].facing;
    run.outputs.push_back({inst.id, trace::render_trace(t, lex_of(inst))});
  }

  for (std::size_t k = 0; k < instances.size() && run.step3_flips < flips; ++k) {
    auto& inst = instances[k];
    if (used[k]) continue;
    used[k] = true;
    ++run.step3_flips;
    auto t = inst.gold_trace;
    const auto wrong = cw90(t.final_answer);
    for (auto& e : t.step3) e.facing = wrong;
    t.final_answer = wrong;
    run.outputs.push_back({inst.id, trace::render_trace(t, lex_of(inst))});
  }

  for (std::size_t k = 0; k < instances.size(); ++k) {
    if (!used[k]) run.outputs.push_back({instances[k].id, instances[k].gold_trace_text});
  }
  run.instances = std::move(instances);
  return run;
}

}  // namespace cor::testing
