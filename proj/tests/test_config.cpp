#include "doctest.h"
#include "support.hpp"
#include "cor/config.hpp"

using namespace cor;
using nlohmann::json;

TEST_CASE("shipped config equals the built-in defaults") {
  const auto file = load_config(COR_DATA_DIR "/config/default.json");
  const auto builtin = RunConfig::defaults();
  CHECK(to_json(file.plan) == to_json(builtin.plan));
  CHECK(file.seed == builtin.seed);
  CHECK_NOTHROW(file.validate());
  CHECK(file.load_resources().environments.size() == 2);
}

TEST_CASE("partial configs keep defaults for absent fields") {
  const auto c = config_from_json(json::parse(R"({"seed": 5, "plan": {"corruption": {"confusion_bias": 0.2}}})"), ".");
  CHECK(c.seed == std::optional<std::uint64_t>(5));
  CHECK(c.plan.seed == 5);
  CHECK(c.plan.corruption.confusion_bias == 0.2);
  CHECK(c.plan.corruption.landmark_corruption_rate == 0.5);
  CHECK(c.plan.train == 3216);
}

TEST_CASE("config errors are usage errors") {
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"sede": 5})"), "."), UsageError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"plan": {"train": "many"}})"), "."), UsageError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"plan": {"combination_counts": {"up": 3}}})"), "."), UsageError);
  CHECK_THROWS_AS(load_config("/no/such/config.json"), UsageError);
  auto c = RunConfig::defaults();
  c.environment_paths.push_back("/no/such/env.json");
  CHECK_THROWS_AS(c.validate(), UsageError);
}

TEST_CASE("config hash tracks content, not the output directory") {
  auto a = RunConfig::defaults();
  auto b = a;
  b.output_dir = "elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  b.plan.seed = 1;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(config_hash(a).size() == 16);
}

TEST_CASE("plan json round trip") {
  const auto plan = dataset::GenerationPlan::defaults();
  dataset::GenerationPlan copy;
  copy.combination_counts.clear();
  merge(copy, to_json(plan));
  CHECK(to_json(copy) == to_json(plan));
}
