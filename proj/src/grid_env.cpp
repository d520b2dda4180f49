#include "cor/grid_env.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "cor/error.hpp"

namespace cor {

using nlohmann::json;

std::string to_string(Coord c) {
  return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")";
}

Coord step(Coord from, CardinalDirection d) {
  switch (d) {
    case CardinalDirection::North: return {from.x, from.y + 1};
    case CardinalDirection::East: return {from.x + 1, from.y};
    case CardinalDirection::South: return {from.x, from.y - 1};
    case CardinalDirection::West: return {from.x - 1, from.y};
  }
  return from;
}

const std::string& Landmark::name(std::string_view language) const {
  if (auto it = display_names.find(std::string(language)); it != display_names.end()) {
    return it->second;
  }
  if (auto it = display_names.find("en"); it != display_names.end()) return it->second;
  return id;
}

bool Landmark::has_name(std::string_view language) const {
  return display_names.count(std::string(language)) > 0;
}

GridEnvironment::GridEnvironment(std::string id, int width, int height,
                                 std::vector<Landmark> landmarks)
    : id_(std::move(id)), width_(width), height_(height), landmarks_(std::move(landmarks)) {
  if (width_ <= 0 || height_ <= 0) {
    throw ValidationError("environment " + id_ + ": grid size must be positive, got " +
                          std::to_string(width_) + "x" + std::to_string(height_));
  }
  for (std::size_t i = 0; i < landmarks_.size(); ++i) {
    const auto& lm = landmarks_[i];
    if (lm.id.empty()) {
      throw ValidationError("environment " + id_ + ": landmark at " + to_string(lm.position) +
                            " has an empty id");
    }
    if (!in_bounds(lm.position)) {
      throw ValidationError("environment " + id_ + ": landmark " + lm.id + " at " +
                            to_string(lm.position) + " is outside the " +
                            std::to_string(width_) + "x" + std::to_string(height_) + " grid");
    }
    if (!by_id_.emplace(lm.id, i).second) {
      throw ValidationError("environment " + id_ + ": duplicate landmark id " + lm.id + " at " +
                            to_string(lm.position));
    }
    auto [it, fresh] = by_pos_.emplace(lm.position, i);
    if (!fresh) {
      throw ValidationError("environment " + id_ + ": landmarks " + landmarks_[it->second].id +
                            " and " + lm.id + " share position " + to_string(lm.position));
    }
  }
}

const Landmark* GridEnvironment::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &landmarks_[it->second];
}

const Landmark& GridEnvironment::get(std::string_view id) const {
  if (const auto* lm = find(id)) return *lm;
  throw DataError("environment " + id_ + ": unknown landmark id " + std::string(id));
}

const Landmark* GridEnvironment::at(Coord c) const {
  auto it = by_pos_.find(c);
  return it == by_pos_.end() ? nullptr : &landmarks_[it->second];
}

std::map<CardinalDirection, const Landmark*> GridEnvironment::neighbors(Coord c) const {
  if (!in_bounds(c)) {
    throw DataError("environment " + id_ + ": position " + to_string(c) + " is out of bounds");
  }
  std::map<CardinalDirection, const Landmark*> out;
  for (auto d : kAllDirections) {
    const Coord n = step(c, d);
    if (!in_bounds(n)) continue;
    if (const auto* lm = at(n)) out.emplace(d, lm);
  }
  return out;
}

namespace {

Landmark landmark_from_json(const json& j, std::size_t index) {
  const std::string where = "landmarks[" + std::to_string(index) + "]";
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  Landmark lm;
  try {
    lm.id = j.at("id").get<std::string>();
    const auto& pos = j.at("position");
    if (!pos.is_array() || pos.size() != 2) {
      throw ParseError(where + " (" + lm.id + "): position must be [x, y]");
    }
    lm.position = {pos[0].get<int>(), pos[1].get<int>()};
    if (j.contains("names")) {
      lm.display_names = j.at("names").get<std::map<std::string, std::string>>();
    }
    lm.category = j.value("category", std::string{});
  } catch (const json::exception& e) {
    throw ParseError(where + (lm.id.empty() ? "" : " (" + lm.id + ")") + ": " + e.what());
  }
  return lm;
}

}  // namespace

GridEnvironment load_environment(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("environment document: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("environment document: expected an object");
  std::string id;
  int width = 10;
  int height = 10;
  try {
    id = doc.at("id").get<std::string>();
    width = doc.value("width", 10);
    height = doc.value("height", 10);
  } catch (const json::exception& e) {
    throw ParseError(std::string("environment document: ") + e.what());
  }
  if (!doc.contains("landmarks")) throw ParseError("environment " + id + ": missing landmarks");
  const auto& arr = doc.at("landmarks");
  if (!arr.is_array()) throw ParseError("environment " + id + ": landmarks must be an array");
  std::vector<Landmark> landmarks;
  for (std::size_t i = 0; i < arr.size(); ++i) landmarks.push_back(landmark_from_json(arr[i], i));
  return GridEnvironment(std::move(id), width, height, std::move(landmarks));
}

GridEnvironment load_environment_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open environment file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_environment(ss.str());
}

std::string serialize_environment(const GridEnvironment& env) {
  json landmarks = json::array();
  for (const auto& lm : env.landmarks()) {
    landmarks.push_back({{"id", lm.id},
                         {"position", {lm.position.x, lm.position.y}},
                         {"names", lm.display_names},
                         {"category", lm.category}});
  }
  json doc = {{"id", env.id()},
              {"width", env.width()},
              {"height", env.height()},
              {"landmarks", std::move(landmarks)}};
  return doc.dump(2, ' ', false) + "\n";
}

}  // namespace cor
