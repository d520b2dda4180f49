#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <unistd.h>

#include "CLI11.hpp"
#include "cor/config.hpp"
#include "cor/dataset.hpp"
#include "cor/evaluate.hpp"
#include "cor/noise.hpp"
#include "cor/oracle.hpp"
#include "cor/trace.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cor;

namespace {

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw DataError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

/// Writes to `path`, or stdout when it is empty or "-".
void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
  } else {
    write_atomic(path, content);
  }
}

std::vector<dataset::Instance> read_datasets(const std::vector<std::string>& paths) {
  std::vector<dataset::Instance> out;
  for (const auto& p : paths) {
    auto part = dataset::read_jsonl(p);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

struct Common {
  std::string config_path;
  std::vector<std::string> environments;
  std::vector<std::string> lexicons;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  bool serial = false;

  void attach(CLI::App* app, bool with_output_dir) {
    app->add_option("--config", config_path, "JSON run config (default: $COR_CONFIG, then built-in defaults)");
    app->add_option("--environment", environments, "environment file; repeat for several")->check(CLI::ExistingFile);
    app->add_option("--lexicon", lexicons, "lexicon file; repeat for several")->check(CLI::ExistingFile);
    if (with_output_dir) app->add_option("--output-dir", output_dir, "directory for written files");
    app->add_option("--seed", seed, "64-bit seed");
    app->add_flag("--serial", serial, "run per-instance kernels on one thread");
  }

  RunConfig load() const {
    RunConfig c = RunConfig::defaults();
    if (!config_path.empty()) {
      c = load_config(config_path);
    } else if (const char* env = std::getenv(kConfigEnvVar); env && *env) {
      c = load_config(env);
    }
    if (!environments.empty()) c.environment_paths.assign(environments.begin(), environments.end());
    if (!lexicons.empty()) c.lexicon_paths.assign(lexicons.begin(), lexicons.end());
    if (!output_dir.empty()) c.output_dir = output_dir;
    if (seed) {
      c.seed = seed;
      c.plan.seed = *seed;
    }
    c.validate();
    return c;
  }

  Policy policy() const { return serial ? Policy::Serial : Policy::Parallel; }
};

int cmd_generate(const Common& common, const std::vector<std::string>& languages) {
  RunConfig config = common.load();
  if (!config.seed) throw UsageError("generate needs a seed");
  if (!languages.empty()) {
    config.plan.language_mix.clear();
    for (const auto& l : languages) config.plan.language_mix[l] += 1.0;
  }
  const auto res = config.load_resources();
  const auto instances = dataset::generate(config.plan, res, common.policy());

  const std::array<std::string, 5> files = {"train", "validation", "test", "cross_domain", "ambiguity"};
  std::map<std::string, std::vector<dataset::Instance>> parts;
  for (const auto& inst : instances) parts[inst.id.substr(0, inst.id.rfind('-'))].push_back(inst);
  json counts = json::object();
  for (const auto& f : files) {
    write_atomic(config.output_dir / (f + ".jsonl"), dataset::to_jsonl(parts[f]));
    counts[f] = parts[f].size();
  }
  json embedded = to_json(config);
  embedded.erase("output_dir");
  const json manifest = {{"counts", counts},
                         {"seed", *config.seed},
                         {"config_hash", config_hash(config)},
                         {"config", embedded}};
  write_atomic(config.output_dir / "manifest.json", manifest.dump(2) + "\n");
  std::cout << manifest["counts"].dump() << "\n";
  return 0;
}

struct CorruptArgs {
  std::string text;
  std::string input;
  std::string output;
  std::string language = "zh-TW";
  double target_cer = 0.1;
};

int cmd_corrupt(const Common& common, const CorruptArgs& args) {
  const RunConfig config = common.load();
  if (!config.seed) throw UsageError("corrupt needs a seed");
  if (args.text.empty() == args.input.empty()) throw UsageError("corrupt takes exactly one of --text or --input");
  const auto res = config.load_resources();
  noise::CorruptionConfig cc = config.plan.corruption;
  cc.target_cer = args.target_cer;
  cc.validate();

  if (!args.text.empty()) {
    cc.seed = derive_seed(*config.seed, "corrupt");
    const auto c = noise::corrupt(args.text, cc, res.lexicon(args.language));
    const json j = {{"transcript", c.transcript},
                    {"achieved_cer", c.achieved_cer},
                    {"edits", c.edits},
                    {"severity", noise::to_string(noise::classify_cer(c.achieved_cer, config.plan.thresholds))}};
    emit(args.output, j.dump() + "\n");
    return 0;
  }
  auto instances = dataset::read_jsonl(args.input);
  for_each_index(instances.size(), common.policy(), [&](std::size_t i) {
    auto& inst = instances[i];
    auto local = cc;
    local.seed = derive_seed(*config.seed, "corrupt", i);
    const auto c = noise::corrupt(inst.utterance, local, res.lexicon(inst.language));
    inst.transcript = c.transcript;
    inst.transcript_cer = c.achieved_cer;
    inst.severity = noise::classify_cer(c.achieved_cer, config.plan.thresholds);
    const auto coords = dataset::parse_coords_block(inst.coords_block);
    const auto m = dataset::serialize_multimodal(inst.transcript, coords);
    inst.multimodal_input = m.text;
    dataset::verify_instance(inst, res.environment(inst.env_id));
  });
  emit(args.output, dataset::to_jsonl(instances));
  return 0;
}

struct OracleArgs {
  std::string env_id;
  std::string at;
  std::string user;
  std::vector<std::string> cues;
  std::string language = "en";
};

int cmd_oracle(const Common& common, const OracleArgs& args) {
  const RunConfig config = common.load();
  const auto res = config.load_resources();
  const auto& env = args.env_id.empty() ? res.environments.front() : res.environment(args.env_id);
  const auto& lex = res.lexicon(args.language);

  Coord user;
  if (!args.at.empty()) {
    const auto* lm = env.find(args.at);
    if (!lm) throw DataError("unknown landmark " + args.at + " in " + env.id());
    user = lm->position;
  } else if (!args.user.empty()) {
    int x = 0;
    int y = 0;
    char comma = 0;
    std::istringstream in(args.user);
    if (!(in >> x >> comma >> y) || comma != ',') throw UsageError("--user expects x,y");
    user = {x, y};
  } else {
    throw UsageError("oracle needs --at or --user");
  }

  oracle::OrientationProblem problem{user, {}};
  std::vector<trace::GoldCue> gold;
  for (const auto& spec : args.cues) {
    const auto sep = spec.find_first_of(":=");
    if (sep == std::string::npos) throw UsageError("--cue expects relation:landmark_id, got " + spec);
    const auto rel = parse_relation(spec.substr(0, sep));
    if (!rel) throw UsageError("unknown relation in --cue " + spec);
    const auto id = spec.substr(sep + 1);
    const auto* lm = env.find(id);
    if (!lm) throw DataError("unknown landmark " + id + " in " + env.id());
    problem.cues.push_back({*rel, lm->id, lm->position});
    gold.push_back({*rel, lm->id, lm->name(lex.language), lm->position});
  }
  oracle::solve_detailed(problem);
  std::cout << trace::render_trace(trace::derive_trace(user, gold), lex) << "\n";
  return 0;
}

int cmd_emit_prompts(const Common& common, const std::vector<std::string>& datasets, const std::string& protocol,
                     const std::string& output) {
  common.load();
  const auto p = dataset::parse_protocol(protocol);
  if (!p) throw UsageError("unknown protocol " + protocol + " (expected B1, B2, B3 or B4)");
  std::string out;
  for (const auto& inst : read_datasets(datasets)) {
    out += json{{"instance_id", inst.id}, {"protocol", dataset::to_string(*p)},
                {"prompt", dataset::emit_baseline_prompt(inst, *p)}}
               .dump();
    out += "\n";
  }
  emit(output, out);
  return 0;
}

int cmd_emit_stages(const Common& common, const std::vector<std::string>& datasets, const std::string& stage,
                    const std::string& output) {
  const auto config = common.load();
  const auto s = dataset::parse_stage(stage);
  if (!s) throw UsageError("unknown stage " + stage + " (expected S1, S2, S3 or S4)");
  const auto res = config.load_resources();
  std::string out;
  for (const auto& rec : dataset::emit_stage_records(read_datasets(datasets), *s, res)) {
    out += dataset::to_json(rec).dump();
    out += "\n";
  }
  emit(output, out);
  return 0;
}

int cmd_score(const Common& common, const std::vector<std::string>& datasets, const std::string& outputs,
              const std::string& report_dir) {
  const auto config = common.load();
  const auto res = config.load_resources();
  const auto instances = read_datasets(datasets);
  const eval::Scorer scorer(res);
  const auto scores = eval::score_all(instances, eval::read_outputs(outputs), scorer, common.policy());
  const auto report = eval::aggregate(scores, instances);
  const auto table = eval::format_table(report);
  const fs::path dir = report_dir.empty() ? config.output_dir : fs::path(report_dir);
  write_atomic(dir / "report.json", eval::to_json(report).dump(2) + "\n");
  write_atomic(dir / "report.txt", table);
  std::cout << table;
  return 0;
}

int cmd_stats(const std::vector<std::string>& datasets, bool as_json) {
  const auto instances = read_datasets(datasets);
  if (instances.empty()) throw DataError("no instances to summarise");
  struct Tally {
    std::size_t n = 0;
    std::size_t code_switched = 0;
    std::array<std::size_t, 5> severity{};
    std::map<std::string, std::size_t> combos;
    std::map<std::string, std::size_t> variations;
  };
  std::map<std::string, Tally> by_subset;
  for (const auto& inst : instances) {
    for (const std::string key : {std::string("all"), std::string(dataset::to_string(inst.subset))}) {
      auto& t = by_subset[key];
      ++t.n;
      t.code_switched += inst.code_switched;
      ++t.severity[static_cast<std::size_t>(inst.severity)];
      std::vector<Relation> rels;
      for (const auto& c : inst.cues) rels.push_back(c.relation);
      ++t.combos[dataset::Combination::of(rels).name()];
      ++t.variations[std::string(utterance::to_string(inst.variation))];
    }
  }
  if (as_json) {
    json j = json::object();
    for (const auto& [k, t] : by_subset) {
      json sev = json::object();
      for (auto s : noise::kAllSeverities) sev[std::string(noise::to_string(s))] = t.severity[static_cast<int>(s)];
      j[k] = {{"instances", t.n},
              {"code_switch_rate", static_cast<double>(t.code_switched) / static_cast<double>(t.n)},
              {"severity", sev},
              {"combinations", t.combos},
              {"variations", t.variations}};
    }
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  char buf[200];
  for (const auto& [k, t] : by_subset) {
    std::printf("== %s (%zu instances, code-switched %.1f%%)\n", k.c_str(), t.n,
                100.0 * static_cast<double>(t.code_switched) / static_cast<double>(t.n));
    std::printf("  %-10s %6s %7s\n", "severity", "count", "share");
    for (auto s : noise::kAllSeverities) {
      const auto c = t.severity[static_cast<int>(s)];
      std::snprintf(buf, sizeof buf, "  %-10s %6zu %6.1f%%\n", std::string(noise::to_string(s)).c_str(), c,
                    100.0 * static_cast<double>(c) / static_cast<double>(t.n));
      std::cout << buf;
    }
    std::printf("  %-26s %6s\n", "combination", "count");
    for (const auto& [name, c] : t.combos) std::printf("  %-26s %6zu\n", name.c_str(), c);
    std::printf("  %-26s %6s\n", "variation", "count");
    for (const auto& [name, c] : t.variations) std::printf("  %-26s %6zu\n", name.c_str(), c);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Orientation reasoning benchmark toolkit"};
  app.require_subcommand(1);

  Common common;
  std::vector<std::string> languages;
  auto* gen = app.add_subcommand("generate", "generate the dataset splits and manifest");
  common.attach(gen, true);
  gen->add_option("--language", languages, "language tag; repeat for an even mix");

  CorruptArgs corrupt_args;
  auto* cor_cmd = app.add_subcommand("corrupt", "inject ASR-style noise at a target CER");
  common.attach(cor_cmd, false);
  cor_cmd->add_option("--text", corrupt_args.text, "single utterance to corrupt");
  cor_cmd->add_option("--input", corrupt_args.input, "dataset JSONL whose transcripts are regenerated")
      ->check(CLI::ExistingFile);
  cor_cmd->add_option("--output", corrupt_args.output, "output file (default stdout)");
  cor_cmd->add_option("--language", corrupt_args.language, "lexicon for --text");
  cor_cmd->add_option("--cer", corrupt_args.target_cer, "target character error rate")->check(CLI::Range(0.0, 1.0));

  OracleArgs oracle_args;
  auto* orc = app.add_subcommand("oracle", "solve an orientation query and print the derivation");
  common.attach(orc, false);
  orc->add_option("--env", oracle_args.env_id, "environment id (default: first loaded)");
  orc->add_option("--at", oracle_args.at, "landmark the user stands at");
  orc->add_option("--user", oracle_args.user, "user position as x,y");
  orc->add_option("--cue", oracle_args.cues, "relation:landmark_id; repeat per cue")->required();
  orc->add_option("--language", oracle_args.language, "trace language");

  std::vector<std::string> datasets;
  std::string protocol;
  std::string stage;
  std::string output;
  auto* prompts = app.add_subcommand("emit-prompts", "write baseline prompts for a dataset");
  common.attach(prompts, false);
  prompts->add_option("--dataset", datasets, "dataset JSONL")->required()->check(CLI::ExistingFile);
  prompts->add_option("--protocol", protocol, "B1, B2, B3 or B4")->required();
  prompts->add_option("--output", output, "output file (default stdout)");

  auto* stages = app.add_subcommand("emit-stages", "write curriculum stage records for a dataset");
  common.attach(stages, false);
  stages->add_option("--dataset", datasets, "dataset JSONL")->required()->check(CLI::ExistingFile);
  stages->add_option("--stage", stage, "S1, S2, S3 or S4")->required();
  stages->add_option("--output", output, "output file (default stdout)");

  std::string outputs;
  std::string report_dir;
  auto* score = app.add_subcommand("score", "score model outputs against a dataset");
  common.attach(score, false);
  score->add_option("--dataset", datasets, "dataset JSONL")->required()->check(CLI::ExistingFile);
  score->add_option("--outputs", outputs, "model outputs JSONL {instance_id, output_text}")
      ->required()
      ->check(CLI::ExistingFile);
  score->add_option("--report-dir", report_dir, "where report.json and report.txt go (default: output dir)");

  bool stats_json = false;
  auto* stats = app.add_subcommand("stats", "severity and composition tables");
  stats->add_option("--dataset", datasets, "dataset JSONL; repeat for several")->required()->check(CLI::ExistingFile);
  stats->add_flag("--json", stats_json, "print JSON instead of tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_generate(common, languages);
    if (*cor_cmd) return cmd_corrupt(common, corrupt_args);
    if (*orc) return cmd_oracle(common, oracle_args);
    if (*prompts) return cmd_emit_prompts(common, datasets, protocol, output);
    if (*stages) return cmd_emit_stages(common, datasets, stage, output);
    if (*score) return cmd_score(common, datasets, outputs, report_dir);
    if (*stats) return cmd_stats(datasets, stats_json);
  } catch (const Error& e) {
    std::cerr << "cor: " << e.what() << "\n";
    return e.exit_code();
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "cor: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "cor: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "cor: internal error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
