#include "cor/oracle.hpp"

#include <cstdlib>

namespace cor::oracle {

std::string to_string(Vec2 v) {
  return "(" + std::to_string(v.dx) + "," + std::to_string(v.dy) + ")";
}

DiagonalAmbiguity::DiagonalAmbiguity(Vec2 d, std::string landmark_id)
    : DataError("diagonal ambiguity: vector " + to_string(d) +
                (landmark_id.empty() ? std::string{} : " to landmark " + landmark_id) +
                " has no dominant axis"),
      delta_(d),
      landmark_id_(std::move(landmark_id)) {}

namespace {

std::string describe(const std::vector<CueVerdict>& verdicts) {
  std::string out = "inconsistent cues:";
  for (const auto& v : verdicts) {
    out += " [";
    out += std::string(cor::to_string(v.cue.relation)) + " " + v.cue.landmark_id + " " +
           cor::to_string(v.cue.landmark_pos) + " lies " + std::string(cor::to_string(v.abs_dir)) +
           " => facing " + std::string(cor::to_string(v.facing));
    out += "]";
  }
  return out;
}

}  // namespace

InconsistentCues::InconsistentCues(std::vector<CueVerdict> verdicts)
    : DataError(describe(verdicts)), verdicts_(std::move(verdicts)) {}

CardinalDirection abs_dir(Vec2 d) {
  const int ax = std::abs(d.dx);
  const int ay = std::abs(d.dy);
  if (ax == ay) throw DiagonalAmbiguity(d, {});
  if (ax > ay) return d.dx > 0 ? CardinalDirection::East : CardinalDirection::West;
  return d.dy > 0 ? CardinalDirection::North : CardinalDirection::South;
}

Solution solve_detailed(const OrientationProblem& problem) {
  if (problem.cues.empty()) throw DataError("orientation problem has no cues");
  Solution sol;
  sol.verdicts.reserve(problem.cues.size());
  for (const auto& cue : problem.cues) {
    CueVerdict v;
    v.cue = cue;
    v.delta = delta(problem.user_pos, cue.landmark_pos);
    const int ax = std::abs(v.delta.dx);
    const int ay = std::abs(v.delta.dy);
    if (ax == ay) throw DiagonalAmbiguity(v.delta, cue.landmark_id);
    v.abs_dir = abs_dir(v.delta);
    v.facing = infer_facing(v.abs_dir, cue.relation);
    sol.verdicts.push_back(std::move(v));
  }
  sol.facing = sol.verdicts.front().facing;
  for (const auto& v : sol.verdicts) {
    if (v.facing != sol.facing) throw InconsistentCues(sol.verdicts);
  }
  return sol;
}

CardinalDirection solve(const OrientationProblem& problem) {
  return solve_detailed(problem).facing;
}

}  // namespace cor::oracle
