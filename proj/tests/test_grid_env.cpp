#include "doctest.h"
#include <functional>

#include "support.hpp"

using namespace cor;

namespace {

Landmark lm(std::string id, Coord p) { return {std::move(id), {{"en", "x"}}, p, "shop"}; }

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("shipped environments load and keep the quoted coordinates") {
  const auto& g = testing::gongguan();
  CHECK(g.width() == 10);
  CHECK(g.height() == 10);
  CHECK(g.get("security_office").position == Coord{7, 3});
  CHECK(g.get("dormitory_6").position == Coord{7, 4});
  CHECK(g.get("gym").position == Coord{4, 6});
  CHECK(g.get("pharmacy").position == Coord{4, 7});
  CHECK(g.get("restaurant_5").name("zh-TW") == "餐廳5");
  const auto& t = testing::taipei();
  CHECK(t.get("Taipei_Main_Station_Exit_S2").position == Coord{4, 4});
  CHECK(t.get("bus_stop_2").name("fr") == "bus stop 2");
}

TEST_CASE("neighbors reports occupied cells only") {
  const auto& g = testing::gongguan();
  const auto n = g.neighbors({8, 5});
  REQUIRE(n.size() == 4);
  CHECK(n.at(CardinalDirection::West)->id == "drink_shop_4");
  CHECK(n.at(CardinalDirection::East)->id == "bar_1");
  CHECK(n.at(CardinalDirection::South)->id == "bakery_3");
  CHECK(n.at(CardinalDirection::North)->id == "bar_2");
  CHECK_THROWS_AS(g.neighbors({10, 0}), DataError);
  GridEnvironment sparse("s", 3, 3, {lm("a", {1, 1}), lm("b", {1, 2})});
  const auto m = sparse.neighbors({1, 1});
  CHECK(m.size() == 1);
  CHECK(m.at(CardinalDirection::North)->id == "b");
}

TEST_CASE("construction rejects invalid layouts with id and location") {
  CHECK(message_of([] { GridEnvironment("e", 3, 3, {lm("a", {1, 1}), lm("a", {2, 2})}); }).find("a") !=
        std::string::npos);
  const auto shared = message_of([] { GridEnvironment("e", 3, 3, {lm("a", {1, 1}), lm("b", {1, 1})}); });
  CHECK(shared.find("b") != std::string::npos);
  CHECK(shared.find("(1,1)") != std::string::npos);
  const auto oob = message_of([] { GridEnvironment("e", 3, 3, {lm("far", {3, 0})}); });
  CHECK(oob.find("far") != std::string::npos);
  CHECK(oob.find("(3,0)") != std::string::npos);
  CHECK_THROWS_AS(GridEnvironment("e", 3, 3, {lm("n", {-1, 0})}), ValidationError);
  CHECK_THROWS_AS(GridEnvironment("e", 0, 3, {}), ValidationError);
}

TEST_CASE("load_environment reports malformed documents") {
  CHECK_THROWS_AS(load_environment("{"), ParseError);
  CHECK_THROWS_AS(load_environment(R"({"id": "e", "width": 2})"), ParseError);
  CHECK_THROWS_AS(load_environment(R"({"id":"e","width":2,"height":2,"landmarks":[
      {"id":"a","category":"c","names":{"en":"a"},"position":[5,5]}]})"),
                  ValidationError);
  CHECK_THROWS_AS(load_environment_file("/no/such/file.json"), DataError);
}

TEST_CASE("serialisation round-trips byte-identically") {
  for (const auto* env : {&testing::gongguan(), &testing::taipei()}) {
    const auto text = serialize_environment(*env);
    const auto back = load_environment(text);
    CHECK(back == *env);
    CHECK(serialize_environment(back) == text);
  }
}
