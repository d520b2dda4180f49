#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace cor {

/// Compass heading. Declaration order is clockwise, which cw90/ccw90 rely on.
enum class CardinalDirection : std::uint8_t { North = 0, East = 1, South = 2, West = 3 };

/// Egocentric relation between the speaker and a landmark.
enum class Relation : std::uint8_t { Front = 0, Back = 1, Left = 2, Right = 3 };

inline constexpr std::array<CardinalDirection, 4> kAllDirections = {
    CardinalDirection::North, CardinalDirection::East, CardinalDirection::South,
    CardinalDirection::West};

inline constexpr std::array<Relation, 4> kAllRelations = {Relation::Front, Relation::Back,
                                                          Relation::Left, Relation::Right};

constexpr CardinalDirection cw90(CardinalDirection d) {
  return static_cast<CardinalDirection>((static_cast<int>(d) + 1) % 4);
}

constexpr CardinalDirection ccw90(CardinalDirection d) {
  return static_cast<CardinalDirection>((static_cast<int>(d) + 3) % 4);
}

constexpr CardinalDirection opposite(CardinalDirection d) {
  return static_cast<CardinalDirection>((static_cast<int>(d) + 2) % 4);
}

/// "North", "East", ...
std::string_view to_string(CardinalDirection d);
/// "front", "back", "left", "right"
std::string_view to_string(Relation r);

/// Case-insensitive; accepts full English names only.
std::optional<CardinalDirection> parse_direction(std::string_view s);
std::optional<Relation> parse_relation(std::string_view s);

}  // namespace cor
