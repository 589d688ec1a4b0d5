#pragma once

#include <string>

#include <json.hpp>

#include "mwnav/world.hpp"

namespace mwnav {

inline std::string save_map(const WorldMap& map) {
  nlohmann::ordered_json j;
  j["width"] = map.width;
  j["height"] = map.height;
  j["seed"] = map.seed;
  j["start"] = {map.start.row, map.start.col};
  j["goal"] = {map.goal.row, map.goal.col};
  auto cells = [](const auto& range) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& c : range) arr.push_back({c.row, c.col});
    return arr;
  };
  j["waypoints"] = cells(map.waypoints);
  j["obstacles"] = cells(map.obstacles);
  return j.dump(2) + "\n";
}

inline WorldMap load_map(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("load_map: malformed document: ") + e.what());
  }
  auto require = [&](const char* field) {
    if (!j.contains(field)) throw Error(std::string("load_map: missing field '") + field + "'");
    return j.at(field);
  };
  auto as_cell = [](const nlohmann::json& v, const char* field) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
      throw Error(std::string("load_map: field '") + field + "' must be [row, col]");
    return GridCell{v[0].get<int>(), v[1].get<int>()};
  };

  WorldMap map;
  try {
    map.width = require("width").get<int>();
    map.height = require("height").get<int>();
    map.seed = require("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("load_map: malformed document: ") + e.what());
  }
  map.start = as_cell(require("start"), "start");
  map.goal = as_cell(require("goal"), "goal");
  for (const auto& v : require("waypoints")) map.waypoints.push_back(as_cell(v, "waypoints"));
  for (const auto& v : require("obstacles")) map.obstacles.insert(as_cell(v, "obstacles"));

  if (map.width < 1 || map.height < 1) throw Error("load_map: non-positive grid dimensions");
  auto check_bounds = [&](const GridCell& c, const char* what) {
    if (!map.in_bounds(c))
      throw Error(std::string("load_map: ") + what + " (" + std::to_string(c.row) + "," +
                  std::to_string(c.col) + ") out of bounds");
  };
  check_bounds(map.start, "start");
  check_bounds(map.goal, "goal");
  for (const auto& c : map.waypoints) check_bounds(c, "waypoint");
  for (const auto& c : map.obstacles) check_bounds(c, "obstacle");
  if (map.is_obstacle(map.start) || map.is_obstacle(map.goal))
    throw Error("load_map: start/goal collides with an obstacle");
  for (const auto& c : map.waypoints)
    if (map.is_obstacle(c)) throw Error("load_map: waypoint collides with an obstacle");
  return map;
}

}  // namespace mwnav
