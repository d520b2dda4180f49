#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cor/direction.hpp"

namespace cor {

/// Integer grid cell; x grows eastward, y grows northward.
struct Coord {
  int x = 0;
  int y = 0;

  auto operator<=>(const Coord&) const = default;
};

/// "(x,y)" with no spaces.
std::string to_string(Coord c);

/// Unit step one cell toward `d`.
Coord step(Coord from, CardinalDirection d);

struct Landmark {
  std::string id;
  /// Language tag -> surface form, e.g. {"en": "restaurant 5", "zh-TW": "餐廳5"}.
  std::map<std::string, std::string> display_names;
  Coord position;
  std::string category;

  /// Display name for `language`, falling back to "en" then to the id.
  const std::string& name(std::string_view language) const;
  bool has_name(std::string_view language) const;

  bool operator==(const Landmark&) const = default;
};

/// Immutable landmark map on a width x height grid. Construction validates bounds, id
/// uniqueness and one-landmark-per-cell.
class GridEnvironment {
 public:
  GridEnvironment() = default;
  GridEnvironment(std::string id, int width, int height, std::vector<Landmark> landmarks);

  const std::string& id() const { return id_; }
  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<Landmark>& landmarks() const { return landmarks_; }

  bool in_bounds(Coord c) const {
    return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_;
  }

  const Landmark* find(std::string_view id) const;
  /// Throws DataError for unknown ids.
  const Landmark& get(std::string_view id) const;
  const Landmark* at(Coord c) const;

  /// Occupied four-neighbourhood of `c`; empty cells are absent. Throws for out-of-bounds.
  std::map<CardinalDirection, const Landmark*> neighbors(Coord c) const;

  bool operator==(const GridEnvironment& o) const {
    return id_ == o.id_ && width_ == o.width_ && height_ == o.height_ &&
           landmarks_ == o.landmarks_;
  }

 private:
  std::string id_;
  int width_ = 10;
  int height_ = 10;
  std::vector<Landmark> landmarks_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::map<Coord, std::size_t> by_pos_;
};

GridEnvironment load_environment(std::string_view json_text);
GridEnvironment load_environment_file(const std::filesystem::path& path);

/// Canonical form: two-space indented JSON, keys sorted, UTF-8, trailing newline.
/// load_environment(serialize_environment(e)) == e, and re-serialising is byte-identical.
std::string serialize_environment(const GridEnvironment& env);

}  // namespace cor
