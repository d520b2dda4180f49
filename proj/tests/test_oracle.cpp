#include "doctest.h"
#include "support.hpp"

using namespace cor;
using D = CardinalDirection;
using R = Relation;

TEST_CASE("mapping table: landmark direction per facing and relation") {
  // Rows: facing; columns: front, back, right, left.
  const std::array<std::array<D, 4>, 4> table = {{
      {D::North, D::South, D::East, D::West},
      {D::East, D::West, D::South, D::North},
      {D::South, D::North, D::West, D::East},
      {D::West, D::East, D::North, D::South},
  }};
  const std::array<R, 4> cols = {R::Front, R::Back, R::Right, R::Left};
  for (std::size_t f = 0; f < 4; ++f) {
    for (std::size_t c = 0; c < 4; ++c) {
      CAPTURE(f);
      CAPTURE(c);
      CHECK(oracle::landmark_dir(kAllDirections[f], cols[c]) == table[f][c]);
      CHECK(oracle::infer_facing(table[f][c], cols[c]) == kAllDirections[f]);
    }
  }
}

TEST_CASE("infer_facing inverts landmark_dir in both orders") {
  for (auto d : kAllDirections) {
    for (auto q : kAllRelations) {
      CHECK(oracle::infer_facing(oracle::landmark_dir(d, q), q) == d);
      CHECK(oracle::landmark_dir(oracle::infer_facing(d, q), q) == d);
    }
  }
}

TEST_CASE("abs_dir picks the dominant axis") {
  CHECK(oracle::abs_dir({0, 1}) == D::North);
  CHECK(oracle::abs_dir({0, -1}) == D::South);
  CHECK(oracle::abs_dir({1, 0}) == D::East);
  CHECK(oracle::abs_dir({-1, 0}) == D::West);
  CHECK(oracle::abs_dir({3, -1}) == D::East);
  CHECK(oracle::abs_dir({-1, -4}) == D::South);
  CHECK_THROWS_AS(oracle::abs_dir({2, 2}), oracle::DiagonalAmbiguity);
  CHECK_THROWS_AS(oracle::abs_dir({-1, 1}), oracle::DiagonalAmbiguity);
  CHECK_THROWS_AS(oracle::abs_dir({0, 0}), oracle::DiagonalAmbiguity);
}

TEST_CASE("direction and relation names") {
  CHECK(to_string(D::West) == "West");
  CHECK(to_string(R::Back) == "back");
  CHECK(parse_direction("north") == D::North);
  CHECK(parse_relation("RIGHT") == R::Right);
  CHECK_FALSE(parse_direction("N").has_value());
  CHECK_FALSE(parse_relation("above").has_value());
  CHECK(cw90(D::West) == D::North);
  CHECK(ccw90(D::North) == D::West);
  CHECK(opposite(D::East) == D::West);
}

namespace {

oracle::Solution solve_scene(const GridEnvironment& env, const std::string& anchor,
                             const std::vector<std::pair<R, std::string>>& cues) {
  oracle::OrientationProblem p{env.get(anchor).position, {}};
  for (const auto& [r, id] : cues) p.cues.push_back({r, id, env.get(id).position});
  return oracle::solve_detailed(p);
}

std::string arithmetic(const oracle::CueVerdict& v, Coord user) {
  return to_string(v.cue.landmark_pos) + "-" + to_string(user) + " = " + oracle::to_string(v.delta);
}

}  // namespace

TEST_CASE("worked scenes reproduce their vectors and facings") {
  using testing::gongguan;
  using testing::taipei;
  SUBCASE("two cues at a station exit") {
    const auto s = solve_scene(taipei(), "Taipei_Main_Station_Exit_S2",
                               {{R::Front, "restaurant_5"}, {R::Left, "Taipei_Main_Station_Exit_S3"}});
    CHECK(arithmetic(s.verdicts[0], {4, 4}) == "(4,5)-(4,4) = (0,1)");
    CHECK(s.verdicts[0].abs_dir == D::North);
    CHECK(arithmetic(s.verdicts[1], {4, 4}) == "(3,4)-(4,4) = (-1,0)");
    CHECK(s.verdicts[1].abs_dir == D::West);
    CHECK(s.facing == D::North);
  }
  SUBCASE("three cues at a bus stop") {
    const auto s = solve_scene(taipei(), "bus_stop_2",
                               {{R::Front, "Taipei_Main_Station_Exit_S3"},
                                {R::Left, "Taipei_Main_Station_Exit_K7"},
                                {R::Right, "sports_store_1"}});
    CHECK(arithmetic(s.verdicts[0], {3, 3}) == "(3,4)-(3,3) = (0,1)");
    CHECK(s.verdicts[0].abs_dir == D::North);
    CHECK(arithmetic(s.verdicts[2], {3, 3}) == "(4,3)-(3,3) = (1,0)");
    CHECK(s.verdicts[2].abs_dir == D::East);
    CHECK(s.facing == D::North);
  }
  SUBCASE("four cues around a park") {
    const auto s = solve_scene(gongguan(), "park_4",
                               {{R::Front, "drink_shop_4"}, {R::Back, "bar_1"}, {R::Left, "bakery_3"},
                                {R::Right, "bar_2"}});
    CHECK(arithmetic(s.verdicts[0], {8, 5}) == "(7,5)-(8,5) = (-1,0)");
    CHECK(s.verdicts[0].abs_dir == D::West);
    CHECK(arithmetic(s.verdicts[2], {8, 5}) == "(8,4)-(8,5) = (0,-1)");
    CHECK(s.verdicts[2].abs_dir == D::South);
    CHECK(arithmetic(s.verdicts[3], {8, 5}) == "(8,6)-(8,5) = (0,1)");
    CHECK(s.verdicts[3].abs_dir == D::North);
    CHECK(s.facing == D::West);
  }
  SUBCASE("four cues at a teaching building") {
    const auto s = solve_scene(gongguan(), "academic_building_a",
                               {{R::Front, "student_activity_center_1"}, {R::Back, "academic_building_b"},
                                {R::Left, "parking_lot_2"}, {R::Right, "small_plaza_2"}});
    CHECK(arithmetic(s.verdicts[2], {7, 1}) == "(7,0)-(7,1) = (0,-1)");
    CHECK(s.verdicts[2].abs_dir == D::South);
    CHECK(s.facing == D::West);
  }
  SUBCASE("single-cue exemplars") {
    CHECK(solve_scene(gongguan(), "gym", {{R::Front, "pharmacy"}}).facing == D::North);
    CHECK(solve_scene(gongguan(), "park", {{R::Back, "water_park"}}).facing == D::South);
    CHECK(solve_scene(gongguan(), "foundation", {{R::Right, "high_school"}}).facing == D::East);
    CHECK(solve_scene(gongguan(), "Gongguan_MRT_Exit_3", {{R::Right, "Dormitory_2"}}).facing == D::North);
    CHECK(solve_scene(gongguan(), "security_office", {{R::Back, "dormitory_6"}}).facing == D::South);
  }
}

TEST_CASE("solve rejects diagonal, inconsistent and empty cue sets") {
  oracle::OrientationProblem diag{{0, 0}, {{R::Front, "x", {2, 2}}}};
  try {
    oracle::solve(diag);
    FAIL("expected DiagonalAmbiguity");
  } catch (const oracle::DiagonalAmbiguity& e) {
    CHECK(e.landmark_id() == "x");
    CHECK(e.delta() == oracle::Vec2{2, 2});
  }
  oracle::OrientationProblem bad{{5, 5}, {{R::Front, "a", {5, 6}}, {R::Front, "b", {6, 5}}}};
  try {
    oracle::solve(bad);
    FAIL("expected InconsistentCues");
  } catch (const oracle::InconsistentCues& e) {
    CHECK(e.verdicts().size() == 2);
    CHECK(e.verdicts()[0].facing == D::North);
    CHECK(e.verdicts()[1].facing == D::East);
  }
  CHECK_THROWS_AS(oracle::solve({{0, 0}, {}}), DataError);
}

TEST_CASE("single front cue at the northern neighbour faces north") {
  CHECK(oracle::solve({{3, 3}, {{R::Front, "n", {3, 4}}}}) == D::North);
}

TEST_CASE("solve agrees with landmark_dir on every neighbour configuration") {
  for (auto facing : kAllDirections) {
    oracle::OrientationProblem p{{5, 5}, {}};
    for (auto q : kAllRelations) {
      p.cues.push_back({q, std::string(to_string(q)), step({5, 5}, oracle::landmark_dir(facing, q))});
    }
    CHECK(oracle::solve(p) == facing);
  }
}
