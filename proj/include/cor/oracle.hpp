#pragma once

#include <string>
#include <vector>

#include "cor/direction.hpp"
#include "cor/error.hpp"
#include "cor/grid_env.hpp"

// Egocentric -> allocentric orientation rules on the Manhattan grid.
namespace cor::oracle {

struct Vec2 {
  int dx = 0;
  int dy = 0;

  bool operator==(const Vec2&) const = default;
};

/// "(dx,dy)"
std::string to_string(Vec2 v);

struct Cue {
  Relation relation = Relation::Front;
  std::string landmark_id;
  Coord landmark_pos;
};

struct OrientationProblem {
  Coord user_pos;
  std::vector<Cue> cues;
};

/// Per-cue intermediate values of a derivation.
struct CueVerdict {
  Cue cue;
  Vec2 delta;
  CardinalDirection abs_dir = CardinalDirection::North;
  CardinalDirection facing = CardinalDirection::North;
};

struct Solution {
  CardinalDirection facing = CardinalDirection::North;
  std::vector<CueVerdict> verdicts;
};

/// |dx| == |dy|, including the zero vector.
class DiagonalAmbiguity : public DataError {
 public:
  DiagonalAmbiguity(Vec2 delta, std::string landmark_id);
  Vec2 delta() const { return delta_; }
  const std::string& landmark_id() const { return landmark_id_; }

 private:
  Vec2 delta_;
  std::string landmark_id_;
};

class InconsistentCues : public DataError {
 public:
  explicit InconsistentCues(std::vector<CueVerdict> verdicts);
  const std::vector<CueVerdict>& verdicts() const { return verdicts_; }

 private:
  std::vector<CueVerdict> verdicts_;
};

/// landmark - user, componentwise.
constexpr Vec2 delta(Coord user, Coord landmark) {
  return {landmark.x - user.x, landmark.y - user.y};
}

/// Dominant axis decides; the sign picks the side. Throws DiagonalAmbiguity when
/// |dx| == |dy|.
CardinalDirection abs_dir(Vec2 d);

/// Where a landmark lies for a user facing `facing` who calls it `q`.
constexpr CardinalDirection landmark_dir(CardinalDirection facing, Relation q) {
  switch (q) {
    case Relation::Front: return facing;
    case Relation::Back: return opposite(facing);
    case Relation::Left: return ccw90(facing);
    case Relation::Right: return cw90(facing);
  }
  return facing;
}

/// Inverse of landmark_dir in its first argument: the facing that puts a landmark lying
/// toward `d_abs` at relation `q`.
constexpr CardinalDirection infer_facing(CardinalDirection d_abs, Relation q) {
  switch (q) {
    case Relation::Front: return d_abs;
    case Relation::Back: return opposite(d_abs);
    case Relation::Left: return cw90(d_abs);
    case Relation::Right: return ccw90(d_abs);
  }
  return d_abs;
}

/// Full derivation. Throws DiagonalAmbiguity for the first offending cue and
/// InconsistentCues when per-cue facings disagree. Requires at least one cue.
Solution solve_detailed(const OrientationProblem& problem);

CardinalDirection solve(const OrientationProblem& problem);

}  // namespace cor::oracle
