#include <map>
#include <set>

#include "doctest.h"
#include "support.hpp"

using namespace cor;
using dataset::Instance;

TEST_CASE("default plan sizes") {
  const auto plan = dataset::GenerationPlan::defaults();
  CHECK(plan.main_total() == 4600);
  CHECK(plan.combination_counts.size() == 15);
  for (const auto& [c, n] : plan.combination_counts) {
    if (c.size() == 1) CHECK(n == 320);
  }
  CHECK_NOTHROW(plan.validate());
  auto bad = plan;
  bad.train = 1;
  CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("combinations") {
  const auto all = dataset::all_combinations();
  REQUIRE(all.size() == 15);
  CHECK(all.front().name() == "front");
  CHECK(all.back().name() == "front+back+left+right");
  CHECK(dataset::Combination::parse("back+left")->name() == "back+left");
  CHECK_FALSE(dataset::Combination::parse("left+left").has_value());
  CHECK_FALSE(dataset::Combination::parse("up").has_value());
}

TEST_CASE("both environments realise every combination") {
  for (const auto* env : {&testing::gongguan(), &testing::taipei()}) {
    const auto sites = dataset::enumerate_sites(*env);
    for (const auto& c : dataset::all_combinations()) {
      const bool found = std::any_of(sites.begin(), sites.end(), [&](const dataset::Site& s) {
        const auto rels = c.relations();
        return std::all_of(rels.begin(), rels.end(), [&](Relation r) { return s.available.count(r) > 0; });
      });
      CAPTURE(env->id());
      CAPTURE(c.name());
      CHECK(found);
    }
  }
}

TEST_CASE("generated corpus composition") {
  const auto& all = testing::default_dataset();
  std::map<std::string, std::size_t> groups;
  std::map<std::string, std::size_t> singles;
  std::set<std::string> ids;
  for (const auto& inst : all) {
    ++groups[inst.id.substr(0, inst.id.rfind('-'))];
    ids.insert(inst.id);
    if (inst.subset == dataset::Subset::Main || inst.subset == dataset::Subset::LinguisticVariation) {
      if (inst.cues.size() == 1) ++singles[std::string(to_string(inst.cues[0].relation))];
    }
  }
  CHECK(ids.size() == all.size());
  CHECK(groups["train"] == 3216);
  CHECK(groups["validation"] == 688);
  CHECK(groups["test"] == 696);
  CHECK(groups["cross_domain"] == 540);
  CHECK(groups["ambiguity"] == 200);
  for (const auto& [r, n] : singles) CHECK(n == 320);
  std::size_t variants = 0;
  for (const auto& inst : all) variants += inst.subset == dataset::Subset::LinguisticVariation;
  CHECK(variants == 400);
}

TEST_CASE("every instance passes the oracle round trip") {
  const auto& res = testing::resources();
  for (const auto& inst : testing::default_dataset()) {
    CHECK_NOTHROW(dataset::verify_instance(inst, res.environment(inst.env_id)));
  }
}

TEST_CASE("verify_instance catches tampering") {
  auto inst = testing::select(testing::default_dataset(), "test").front();
  const auto& env = testing::resources().environment(inst.env_id);
  auto wrong = inst;
  wrong.facing = cw90(wrong.facing);
  CHECK_THROWS_AS(dataset::verify_instance(wrong, env), InvariantError);
  wrong = inst;
  wrong.multimodal_input += " ";
  CHECK_THROWS_AS(dataset::verify_instance(wrong, env), InvariantError);
  wrong = inst;
  wrong.cues[0].landmark_id = "ghost";
  CHECK_THROWS_AS(dataset::verify_instance(wrong, env), InvariantError);
}

TEST_CASE("severity mixes per group") {
  std::map<std::string, std::array<std::size_t, 5>> counts;
  std::map<std::string, std::size_t> switched;
  for (const auto& inst : testing::default_dataset()) {
    const auto g = inst.id.substr(0, inst.id.rfind('-'));
    ++counts[g][static_cast<std::size_t>(inst.severity)];
    switched[g] += inst.code_switched;
    if (inst.severity == noise::Severity::Perfect) {
      CHECK(inst.transcript == inst.utterance);
    } else {
      CHECK(noise::classify_cer(inst.transcript_cer, {}) == inst.severity);
    }
  }
  CHECK(counts["test"] == std::array<std::size_t, 5>{101, 222, 258, 102, 13});
  CHECK(counts["cross_domain"] == std::array<std::size_t, 5>{143, 207, 156, 32, 2});
  CHECK(counts["train"][0] == 3216);
  CHECK(switched["test"] == 33);
  CHECK(switched["cross_domain"] == 251);
  CHECK(switched["train"] == 0);
}

TEST_CASE("generation is deterministic and policy independent") {
  auto plan = dataset::GenerationPlan::defaults();
  plan.seed = 77;
  const auto a = dataset::generate(plan, testing::resources(), Policy::Serial);
  const auto b = dataset::generate(plan, testing::resources(), Policy::Parallel);
  CHECK(dataset::to_jsonl(a) == dataset::to_jsonl(b));
  CHECK(dataset::to_jsonl(a) != dataset::to_jsonl(testing::default_dataset()));
}

TEST_CASE("unsatisfiable plans name the combination") {
  const GridEnvironment tiny("tiny", 3, 3,
                             {{"a", {{"en", "a"}, {"zh-TW", "a"}}, {1, 1}, "shop"},
                              {"b", {{"en", "b"}, {"zh-TW", "b"}}, {1, 2}, "shop"}});
  dataset::Resources res = testing::resources();
  res.environments.push_back(tiny);
  auto plan = dataset::GenerationPlan::defaults();
  plan.main_env = "tiny";
  try {
    dataset::generate(plan, res, Policy::Serial);
    FAIL("expected UnsatisfiablePlan");
  } catch (const dataset::UnsatisfiablePlan& e) {
    CHECK(std::string(e.what()).find("front+back") != std::string::npos);
  }
}

TEST_CASE("jsonl round trip and line-numbered errors") {
  const auto test = testing::select(testing::default_dataset(), "test");
  const auto text = dataset::to_jsonl(test);
  CHECK(dataset::parse_jsonl(text, "mem") == test);
  try {
    dataset::parse_jsonl(text.substr(0, text.find('\n') + 1) + "{broken\n", "mem");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("mem:2") != std::string::npos);
  }
}

TEST_CASE("multimodal serialisation and coordinate parsing") {
  const auto m = dataset::serialize_multimodal("I am at the gym, and the pharmacy is in front of me",
                                               {{"gym", {4, 6}}, {"pharmacy", {4, 7}}});
  CHECK(m.text ==
        "Audio: I am at the gym, and the pharmacy is in front of me | Coordinates: gym(4,6), pharmacy(4,7)");
  const auto coords = dataset::parse_coords_block(m.coords_block);
  REQUIRE(coords.size() == 2);
  CHECK(coords[1].first == "pharmacy");
  CHECK(coords[1].second == Coord{4, 7});
  CHECK_THROWS_AS(dataset::parse_coords_block("gym(4,6), pharmacy"), ParseError);
}

TEST_CASE("ambiguous utterances resolve through the coordinates block") {
  const auto& res = testing::resources();
  for (const auto& inst : testing::select(testing::default_dataset(), "ambiguity")) {
    const MentionResolver resolver(res.environment(inst.env_id), res.lexicons);
    auto got = dataset::recover_cues(inst, res.lexicon(inst.language), resolver);
    std::vector<std::pair<Relation, std::optional<std::string>>> want;
    for (const auto& c : inst.cues) want.emplace_back(c.relation, c.landmark_id);
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    CAPTURE(inst.utterance);
    CHECK(got == want);
  }
}

TEST_CASE("stage records") {
  const auto inst = testing::make_instance(
      "s", testing::gongguan(), "academic_building_a",
      {{Relation::Front, "student_activity_center_1"}, {Relation::Back, "academic_building_b"},
       {Relation::Left, "parking_lot_2"}, {Relation::Right, "small_plaza_2"}},
      "I am at Academic Building A, Student Activity Center 1 is in front of me, Academic Building B is behind me, "
      "Parking Lot 2 is on my left, and Small Plaza 2 is on my right",
      "I am at Academic Building A, Student Activity Center 1 is in front of me, Academic Building B is behind me, "
      "Parking Lot 2 is on my left, and Small Plaza 2 is on my right",
      testing::en());
  const auto& res = testing::resources();
  const auto s1 = dataset::emit_stage_records({inst}, dataset::Stage::S1, res);
  REQUIRE(s1.size() == 1);
  CHECK(s1[0].target ==
        "Spatial relation 1 = front, Reference landmark 1 = Student Activity Center 1\n"
        "Spatial relation 2 = behind, Reference landmark 2 = Academic Building B\n"
        "Spatial relation 3 = left, Reference landmark 3 = Parking Lot 2\n"
        "Spatial relation 4 = right, Reference landmark 4 = Small Plaza 2");
  const auto s2 = dataset::emit_stage_records({inst}, dataset::Stage::S2, res);
  REQUIRE(s2.size() == 4);
  CHECK(s2[1].input == "From = (7,1), To = (8,1)");
  CHECK(s2[1].target == "Direction vector: (8,1) - (7,1) = (1,0), Direction = East");
  const auto s3 = dataset::emit_stage_records({inst}, dataset::Stage::S3, res);
  REQUIRE(s3.size() == 4);
  CHECK(s3[1].input == "Landmark absolute direction = East\nSpatial relation = behind");
  CHECK(s3[1].target ==
        "Analysis: The landmark is to the East, and the user describes it as \"behind me.\" Spatial mapping rules "
        "indicate behind = East when the user is facing West. Therefore, the user is facing West.");
  const auto s4 = dataset::emit_stage_records({inst}, dataset::Stage::S4, res);
  REQUIRE(s4.size() == 1);
  CHECK(s4[0].input == inst.multimodal_input);
  CHECK(s4[0].target == inst.gold_trace_text);
}

TEST_CASE("baseline prompts match the fixtures byte for byte") {
  auto inst = testing::make_instance("b", testing::gongguan(), "Gongguan_MRT_Exit_3",
                                     {{Relation::Right, "Dormitory_2"}},
                                     "I am at Gongguan MRT Exit 3, and Dormitory 2 is on my right",
                                     "I am at Gongguan MRT Exit 3, and Dormitory 2 is on my right", testing::en());
  CHECK(inst.multimodal_input == testing::read_file(COR_FIXTURES "/prompts/B1_input.txt"));
  CHECK(inst.facing == CardinalDirection::North);
  for (auto p : {dataset::Protocol::B1, dataset::Protocol::B2, dataset::Protocol::B3, dataset::Protocol::B4}) {
    const auto tmpl =
        testing::read_file(std::string(COR_FIXTURES "/prompts/") + std::string(dataset::to_string(p)) + ".txt");
    CAPTURE(dataset::to_string(p));
    CHECK(dataset::emit_baseline_prompt(inst, p) == text::replace_all(tmpl, "{user_input}", inst.multimodal_input));
  }
  CHECK(dataset::parse_protocol("b3") == dataset::Protocol::B3);
  CHECK_FALSE(dataset::parse_protocol("B5").has_value());
}
