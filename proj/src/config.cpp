#include "cor/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "cor/rng.hpp"

namespace cor {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw UsageError("config: " + where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw UsageError("config: unknown key '" + k + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError("config: " + where + "." + key + " has the wrong type");
  }
}

std::array<std::string, 5> severity_names() {
  std::array<std::string, 5> out;
  for (std::size_t i = 0; i < 5; ++i) out[i] = std::string(noise::to_string(noise::kAllSeverities[i]));
  return out;
}

}  // namespace

json to_json(const noise::CorruptionConfig& c) {
  return {{"target_cer", c.target_cer},
          {"edit_mix", {{"substitute", c.edit_mix.substitute}, {"insert", c.edit_mix.insert}, {"delete", c.edit_mix.erase}}},
          {"confusion_bias", c.confusion_bias},
          {"protect_relation_phrases", c.protect_relation_phrases},
          {"landmark_corruption_rate", c.landmark_corruption_rate},
          {"seed", c.seed}};
}

json to_json(const noise::SeverityThresholds& t) {
  return {{"minor_max", t.minor_max}, {"moderate_max", t.moderate_max}, {"major_max", t.major_max},
          {"severe_max", t.severe_max}};
}

json to_json(const noise::SeverityMixture& m) {
  json j = json::object();
  const auto names = severity_names();
  for (std::size_t i = 0; i < 5; ++i) j[names[i]] = m.weights[i];
  return j;
}

json to_json(const dataset::GenerationPlan& p) {
  json counts = json::object();
  for (const auto& [c, n] : p.combination_counts) counts[c.name()] = n;
  return {{"combination_counts", counts},
          {"train", p.train},
          {"validation", p.validation},
          {"test", p.test},
          {"variation_quota", p.variation_quota},
          {"ambiguity_quota", p.ambiguity_quota},
          {"cross_domain_quota", p.cross_domain_quota},
          {"main_env", p.main_env},
          {"cross_domain_env", p.cross_domain_env},
          {"ambiguity_env", p.ambiguity_env},
          {"language_mix", p.language_mix},
          {"code_switch_rate", p.code_switch_rate},
          {"cross_domain_code_switch_rate", p.cross_domain_code_switch_rate},
          {"corruption", to_json(p.corruption)},
          {"thresholds", to_json(p.thresholds)},
          {"main_mixture", to_json(p.main_mixture)},
          {"cross_domain_mixture", to_json(p.cross_domain_mixture)},
          {"seed", p.seed}};
}

json to_json(const RunConfig& c) {
  json envs = json::array();
  for (const auto& p : c.environment_paths) envs.push_back(p.string());
  json lexs = json::array();
  for (const auto& p : c.lexicon_paths) lexs.push_back(p.string());
  json j = {{"environments", envs}, {"lexicons", lexs}, {"output_dir", c.output_dir.string()},
            {"plan", to_json(c.plan)}};
  j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  return j;
}

void merge(noise::CorruptionConfig& c, const json& j) {
  const std::string w = "corruption";
  check_keys(j, {"target_cer", "edit_mix", "confusion_bias", "protect_relation_phrases", "landmark_corruption_rate", "seed"}, w);
  read(j, "target_cer", c.target_cer, w);
  if (j.contains("edit_mix")) {
    const auto& m = j.at("edit_mix");
    check_keys(m, {"substitute", "insert", "delete"}, w + ".edit_mix");
    read(m, "substitute", c.edit_mix.substitute, w + ".edit_mix");
    read(m, "insert", c.edit_mix.insert, w + ".edit_mix");
    read(m, "delete", c.edit_mix.erase, w + ".edit_mix");
  }
  read(j, "confusion_bias", c.confusion_bias, w);
  read(j, "protect_relation_phrases", c.protect_relation_phrases, w);
  read(j, "landmark_corruption_rate", c.landmark_corruption_rate, w);
  read(j, "seed", c.seed, w);
}

void merge(noise::SeverityThresholds& t, const json& j) {
  const std::string w = "thresholds";
  check_keys(j, {"minor_max", "moderate_max", "major_max", "severe_max"}, w);
  read(j, "minor_max", t.minor_max, w);
  read(j, "moderate_max", t.moderate_max, w);
  read(j, "major_max", t.major_max, w);
  read(j, "severe_max", t.severe_max, w);
}

void merge(noise::SeverityMixture& m, const json& j) {
  const auto names = severity_names();
  check_keys(j, {names.begin(), names.end()}, "mixture");
  for (std::size_t i = 0; i < 5; ++i) read(j, names[i].c_str(), m.weights[i], "mixture");
}

void merge(dataset::GenerationPlan& p, const json& j) {
  const std::string w = "plan";
  check_keys(j, {"combination_counts", "train", "validation", "test", "variation_quota", "ambiguity_quota",
                 "cross_domain_quota", "main_env", "cross_domain_env", "ambiguity_env", "language_mix",
                 "code_switch_rate", "cross_domain_code_switch_rate", "corruption", "thresholds", "main_mixture",
                 "cross_domain_mixture", "seed"},
             w);
  if (j.contains("combination_counts")) {
    const auto& cc = j.at("combination_counts");
    if (!cc.is_object()) throw UsageError("config: plan.combination_counts must be an object");
    p.combination_counts.clear();
    for (const auto& c : dataset::all_combinations()) {
      if (cc.contains(c.name())) {
        if (!cc.at(c.name()).is_number_unsigned()) {
          throw UsageError("config: count for " + c.name() + " must be a non-negative integer");
        }
        p.combination_counts.emplace_back(c, cc.at(c.name()).get<std::size_t>());
      }
    }
    for (const auto& [k, v] : cc.items()) {
      if (!dataset::Combination::parse(k)) throw UsageError("config: unknown relation combination '" + k + "'");
      const auto c = *dataset::Combination::parse(k);
      if (c.name() != k) throw UsageError("config: write combination '" + k + "' as '" + c.name() + "'");
    }
  }
  read(j, "train", p.train, w);
  read(j, "validation", p.validation, w);
  read(j, "test", p.test, w);
  read(j, "variation_quota", p.variation_quota, w);
  read(j, "ambiguity_quota", p.ambiguity_quota, w);
  read(j, "cross_domain_quota", p.cross_domain_quota, w);
  read(j, "main_env", p.main_env, w);
  read(j, "cross_domain_env", p.cross_domain_env, w);
  read(j, "ambiguity_env", p.ambiguity_env, w);
  read(j, "language_mix", p.language_mix, w);
  read(j, "code_switch_rate", p.code_switch_rate, w);
  read(j, "cross_domain_code_switch_rate", p.cross_domain_code_switch_rate, w);
  if (j.contains("corruption")) merge(p.corruption, j.at("corruption"));
  if (j.contains("thresholds")) merge(p.thresholds, j.at("thresholds"));
  if (j.contains("main_mixture")) merge(p.main_mixture, j.at("main_mixture"));
  if (j.contains("cross_domain_mixture")) merge(p.cross_domain_mixture, j.at("cross_domain_mixture"));
  read(j, "seed", p.seed, w);
}

RunConfig RunConfig::defaults() {
  const std::filesystem::path data = COR_DATA_DIR;
  RunConfig c;
  c.environment_paths = {data / "environments" / "gongguan.json", data / "environments" / "taipei_station.json"};
  c.lexicon_paths = {data / "lexicons" / "en.json", data / "lexicons" / "zh-TW.json"};
  c.plan = dataset::GenerationPlan::defaults();
  c.seed = c.plan.seed;
  return c;
}

void RunConfig::validate() const {
  if (environment_paths.empty()) throw UsageError("config: no environment files");
  if (lexicon_paths.empty()) throw UsageError("config: no lexicon files");
  for (const auto* list : {&environment_paths, &lexicon_paths}) {
    for (const auto& p : *list) {
      if (!std::filesystem::is_regular_file(p)) throw UsageError("config: file not found: " + p.string());
    }
  }
  plan.validate();
}

dataset::Resources RunConfig::load_resources() const {
  dataset::Resources res;
  for (const auto& p : environment_paths) res.environments.push_back(load_environment_file(p));
  for (const auto& p : lexicon_paths) res.lexicons.push_back(load_lexicon_file(p));
  return res;
}

RunConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  check_keys(j, {"environments", "lexicons", "output_dir", "plan", "seed"}, "config");
  RunConfig c = RunConfig::defaults();
  auto paths = [&](const char* key, std::vector<std::filesystem::path>& out) {
    if (!j.contains(key)) return;
    std::vector<std::string> raw;
    read(j, key, raw, "config");
    out.clear();
    for (const auto& r : raw) {
      std::filesystem::path p(r);
      out.push_back(p.is_absolute() ? p : base_dir / p);
    }
  };
  paths("environments", c.environment_paths);
  paths("lexicons", c.lexicon_paths);
  if (j.contains("output_dir")) {
    std::string out;
    read(j, "output_dir", out, "config");
    std::filesystem::path p(out);
    c.output_dir = p.is_absolute() ? p : base_dir / p;
  }
  if (j.contains("plan")) merge(c.plan, j.at("plan"));
  if (j.contains("seed")) {
    if (j.at("seed").is_null()) {
      c.seed.reset();
    } else {
      std::uint64_t s = 0;
      read(j, "seed", s, "config");
      c.seed = s;
      c.plan.seed = s;
    }
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

std::string config_hash(const RunConfig& config) {
  auto j = to_json(config);
  j.erase("output_dir");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

}  // namespace cor
