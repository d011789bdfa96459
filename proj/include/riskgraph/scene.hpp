#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "riskgraph/catalog.hpp"

namespace riskgraph {

using Vec3 = std::array<double, 3>;

double distance(const Vec3& a, const Vec3& b);

enum class RoomType : uint8_t { kitchen, living_room, bedroom, bathroom };

const char* to_string(RoomType room);
RoomType room_from_string(const std::string& name);

/// Room bounding box; positions live in [0,w] x [0,h], z = 0 for floor entities.
struct RoomBox {
  double width = 5.0;
  double height = 5.0;
};

RoomBox room_box(RoomType room);

/// Largest room dimension; used to scale positions in model features.
inline constexpr double kRoomScale = 5.0;

struct Entity {
  std::string id;
  int category = 0;  // index into Catalog
  Vec3 position{0, 0, 0};
  bool is_agent = false;
  uint8_t attributes = 0;    // static hazard attributes (catalog copy)
  uint8_t state_flags = 0;   // runtime flags, see StateFlag

  const CategoryInfo& info() const { return Catalog::instance().at(category); }
  const std::string& category_name() const { return info().name; }
};

/// Runtime entity state toggled by executed actions; never part of the
/// static hazard attributes or the model features.
enum StateFlag : uint8_t {
  kStateHeld = 1 << 0,
  kStateOpened = 1 << 1,
  kStateCooked = 1 << 2,
  kStateSecured = 1 << 3,
};

std::vector<std::string> state_flag_names(uint8_t mask);

struct Scene {
  std::string id;
  RoomType room_type = RoomType::kitchen;
  std::vector<Entity> entities;
  bool hazard_injected = false;
  uint64_t rng_seed = 0;

  const Entity* find_entity(const std::string& entity_id) const;
  Entity* find_entity(const std::string& entity_id);
  int robot_index() const;  // -1 when absent

  /// Stable content hash of the sorted entity states.
  uint64_t digest() const;

  std::string to_json_line() const;
  static Scene from_json_line(const std::string& line);

  /// Throws Error(BadConfig) when a structural invariant is broken.
  void check_invariants(size_t max_entities = 50) const;
};

enum class AgentPlacement : uint8_t { none, random, near_hazard };

struct SceneSpec {
  RoomType room_type = RoomType::kitchen;
  int min_objects = 10;
  int max_objects = 14;
  AgentPlacement agent_policy = AgentPlacement::random;
  double hazard_probability = 1.0;  // applies when agent_policy == near_hazard
  size_t max_entities = 50;
};

struct DatasetSplit {
  std::vector<Scene> train;
  std::vector<Scene> val;
  std::vector<Scene> test;

  std::vector<const Scene*> all() const;
};

/// Distance threshold shared with the safety graph; hazard injection places
/// the agent at Uniform(0.1*DT, 0.9*DT) from the chosen hazard source.
inline constexpr double kDefaultDT = 0.5;

Scene generate_scene(const SceneSpec& spec, uint64_t seed);

DatasetSplit generate_dataset(int n_scenes, const std::array<int, 3>& split, uint64_t seed,
                              const SceneSpec& base = SceneSpec{});

void write_scenes_jsonl(const std::vector<Scene>& scenes, const std::string& path);
std::vector<Scene> read_scenes_jsonl(const std::string& path);

/// One-line textual inventory of the scene, fed to planning backends.
std::string scene_summary(const Scene& scene);

}  // namespace riskgraph
