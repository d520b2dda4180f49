#include "cor/direction.hpp"

#include "cor/text.hpp"

namespace cor {

std::string_view to_string(CardinalDirection d) {
  switch (d) {
    case CardinalDirection::North: return "North";
    case CardinalDirection::East: return "East";
    case CardinalDirection::South: return "South";
    case CardinalDirection::West: return "West";
  }
  return "?";
}

std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::Front: return "front";
    case Relation::Back: return "back";
    case Relation::Left: return "left";
    case Relation::Right: return "right";
  }
  return "?";
}

std::optional<CardinalDirection> parse_direction(std::string_view s) {
  s = text::trim(s);
  for (auto d : kAllDirections) {
    if (text::equals_ci(s, to_string(d))) return d;
  }
  return std::nullopt;
}

std::optional<Relation> parse_relation(std::string_view s) {
  s = text::trim(s);
  for (auto r : kAllRelations) {
    if (text::equals_ci(s, to_string(r))) return r;
  }
  return std::nullopt;
}

}  // namespace cor
