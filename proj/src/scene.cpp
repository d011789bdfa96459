#include "riskgraph/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "riskgraph/errors.hpp"
#include "riskgraph/rng.hpp"

namespace riskgraph {

using nlohmann::ordered_json;

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

const char* to_string(RoomType room) {
  switch (room) {
    case RoomType::kitchen: return "kitchen";
    case RoomType::living_room: return "living_room";
    case RoomType::bedroom: return "bedroom";
    case RoomType::bathroom: return "bathroom";
  }
  return "?";
}

RoomType room_from_string(const std::string& name) {
  if (name == "kitchen") return RoomType::kitchen;
  if (name == "living_room") return RoomType::living_room;
  if (name == "bedroom") return RoomType::bedroom;
  if (name == "bathroom") return RoomType::bathroom;
  fail(ErrorCode::BadConfig, "unknown room type '" + name + "'");
}

RoomBox room_box(RoomType room) {
  if (room == RoomType::kitchen) return {5.0, 4.0};
  return {5.0, 5.0};
}

std::vector<std::string> state_flag_names(uint8_t mask) {
  std::vector<std::string> out;
  if (mask & kStateHeld) out.push_back("held");
  if (mask & kStateOpened) out.push_back("opened");
  if (mask & kStateCooked) out.push_back("cooked");
  if (mask & kStateSecured) out.push_back("secured");
  return out;
}

namespace {

uint8_t state_flags_from_names(const std::vector<std::string>& names) {
  uint8_t mask = 0;
  for (const auto& n : names) {
    if (n == "held") mask |= kStateHeld;
    else if (n == "opened") mask |= kStateOpened;
    else if (n == "cooked") mask |= kStateCooked;
    else if (n == "secured") mask |= kStateSecured;
    else fail(ErrorCode::BadConfig, "unknown state flag '" + n + "'");
  }
  return mask;
}

struct RoomPool {
  std::vector<const char*> guaranteed;
  std::vector<const char*> fill;
};

const RoomPool& room_pool(RoomType room) {
  static const RoomPool kitchen{
      {"Fridge", "StoveBurner", "Sink", "Knife", "Apple", "Pan"},
      {"Kettle", "Oven", "Toaster", "Microwave", "CuttingBoard", "Plate", "Cup", "Scissors",
       "Candle", "Book", "Towel"}};
  static const RoomPool living{
      {"Sofa", "Television", "Lamp", "Book", "Candle"},
      {"Heater", "Cup", "Plate", "Pillow", "Apple", "Towel", "Scissors"}};
  static const RoomPool bedroom{
      {"Bed", "Lamp", "Pillow", "Book", "Heater"},
      {"Iron", "Candle", "Cup", "Towel", "Scissors", "Television"}};
  static const RoomPool bathroom{
      {"Bathtub", "Sink", "Towel", "HairDryer"},
      {"Scissors", "Candle", "Heater", "Cup", "Plate"}};
  switch (room) {
    case RoomType::kitchen: return kitchen;
    case RoomType::living_room: return living;
    case RoomType::bedroom: return bedroom;
    case RoomType::bathroom: return bathroom;
  }
  return kitchen;
}

Vec3 random_position(Rng& rng, const RoomBox& box) {
  return {rng.uniform(0.0, box.width), rng.uniform(0.0, box.height), 0.0};
}

std::string make_id(const std::string& kind, int ordinal) {
  return kind + "_" + std::to_string(ordinal);
}

Entity make_entity(const std::string& kind_name, int ordinal, const Vec3& pos) {
  const auto& catalog = Catalog::instance();
  int idx = catalog.require(kind_name);
  const auto& info = catalog.at(idx);
  Entity e;
  e.id = make_id(info.name, ordinal);
  e.category = idx;
  e.position = pos;
  e.is_agent = info.is_agent();
  e.attributes = info.attrs;
  return e;
}

/// Position at `dist` from `center` staying inside the box; tries random
/// directions first, then falls back to the direction of the room center.
Vec3 place_at_distance(Rng& rng, const RoomBox& box, const Vec3& center, double dist) {
  for (int attempt = 0; attempt < 32; ++attempt) {
    const double angle = rng.uniform(0.0, 2.0 * M_PI);
    Vec3 p{center[0] + dist * std::cos(angle), center[1] + dist * std::sin(angle), 0.0};
    if (p[0] >= 0.0 && p[0] <= box.width && p[1] >= 0.0 && p[1] <= box.height) return p;
  }
  double cx = box.width / 2.0 - center[0], cy = box.height / 2.0 - center[1];
  double norm = std::sqrt(cx * cx + cy * cy);
  if (norm < 1e-12) { cx = 1.0; cy = 0.0; norm = 1.0; }
  return {center[0] + dist * cx / norm, center[1] + dist * cy / norm, 0.0};
}

}  // namespace

const Entity* Scene::find_entity(const std::string& entity_id) const {
  for (const auto& e : entities)
    if (e.id == entity_id) return &e;
  return nullptr;
}

Entity* Scene::find_entity(const std::string& entity_id) {
  for (auto& e : entities)
    if (e.id == entity_id) return &e;
  return nullptr;
}

int Scene::robot_index() const {
  for (size_t i = 0; i < entities.size(); ++i)
    if (entities[i].info().agent_class == AgentClass::robot) return static_cast<int>(i);
  return -1;
}

uint64_t Scene::digest() const {
  std::vector<const Entity*> sorted;
  sorted.reserve(entities.size());
  for (const auto& e : entities) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(),
            [](const Entity* a, const Entity* b) { return a->id < b->id; });
  uint64_t h = fnv1a_str(id);
  for (const Entity* e : sorted) {
    h = fnv1a_str(e->id, h);
    h = fnv1a(&e->category, sizeof(e->category), h);
    h = fnv1a(e->position.data(), sizeof(double) * 3, h);
    h = fnv1a(&e->attributes, 1, h);
    h = fnv1a(&e->state_flags, 1, h);
  }
  return h;
}

std::string Scene::to_json_line() const {
  ordered_json j;
  j["id"] = id;
  j["room_type"] = to_string(room_type);
  j["hazard_injected"] = hazard_injected;
  j["rng_seed"] = rng_seed;
  auto& arr = j["entities"] = ordered_json::array();
  for (const auto& e : entities) {
    ordered_json je;
    je["id"] = e.id;
    je["category"] = e.category_name();
    je["position"] = {e.position[0], e.position[1], e.position[2]};
    je["is_agent"] = e.is_agent;
    je["attributes"] = attribute_names(e.attributes);
    if (e.state_flags != 0) je["state_flags"] = state_flag_names(e.state_flags);
    arr.push_back(std::move(je));
  }
  return j.dump();
}

Scene Scene::from_json_line(const std::string& line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::IoError, std::string("bad scene JSON: ") + e.what());
  }
  Scene s;
  s.id = j.at("id").get<std::string>();
  s.room_type = room_from_string(j.at("room_type").get<std::string>());
  s.hazard_injected = j.at("hazard_injected").get<bool>();
  s.rng_seed = j.at("rng_seed").get<uint64_t>();
  for (const auto& je : j.at("entities")) {
    Entity e;
    e.id = je.at("id").get<std::string>();
    e.category = Catalog::instance().require(je.at("category").get<std::string>());
    auto pos = je.at("position");
    e.position = {pos.at(0).get<double>(), pos.at(1).get<double>(), pos.at(2).get<double>()};
    e.is_agent = je.at("is_agent").get<bool>();
    e.attributes = attribute_mask_from_names(je.at("attributes").get<std::vector<std::string>>());
    if (je.contains("state_flags"))
      e.state_flags = state_flags_from_names(je.at("state_flags").get<std::vector<std::string>>());
    s.entities.push_back(std::move(e));
  }
  return s;
}

void Scene::check_invariants(size_t max_entities) const {
  if (entities.size() < 2 || entities.size() > max_entities)
    fail(ErrorCode::BadConfig, "scene '" + id + "' entity count out of range");
  std::set<std::string> ids;
  int robots = 0;
  const RoomBox box = room_box(room_type);
  for (const auto& e : entities) {
    if (!ids.insert(e.id).second) fail(ErrorCode::BadConfig, "duplicate entity id " + e.id);
    const auto& info = e.info();
    if (e.is_agent != info.is_agent())
      fail(ErrorCode::BadConfig, "is_agent mismatch for " + e.id);
    if (info.agent_class == AgentClass::robot) ++robots;
    for (double c : e.position)
      if (!std::isfinite(c)) fail(ErrorCode::BadConfig, "non-finite position for " + e.id);
    if (e.position[0] < -1e-9 || e.position[0] > box.width + 1e-9 || e.position[1] < -1e-9 ||
        e.position[1] > box.height + 1e-9)
      fail(ErrorCode::BadConfig, "position outside room for " + e.id);
  }
  if (robots != 1) fail(ErrorCode::BadConfig, "scene must contain exactly one Robot");
}

Scene generate_scene(const SceneSpec& spec, uint64_t seed) {
  if (spec.min_objects < 1 || spec.max_objects < spec.min_objects)
    fail(ErrorCode::BadConfig, "object count range is empty");
  if (spec.hazard_probability < 0.0 || spec.hazard_probability > 1.0)
    fail(ErrorCode::BadConfig, "hazard probability outside [0,1]");

  Rng rng(seed);
  const RoomBox box = room_box(spec.room_type);
  const RoomPool& pool = room_pool(spec.room_type);

  Scene scene;
  scene.room_type = spec.room_type;
  scene.rng_seed = seed;
  scene.id = "scene_" + std::to_string(seed & 0xffffffffULL);

  const int n_objects =
      spec.min_objects + static_cast<int>(rng.next_below(
                             static_cast<uint64_t>(spec.max_objects - spec.min_objects + 1)));
  int ordinal = 0;
  for (int k = 0; k < n_objects; ++k) {
    const char* kind = (k < static_cast<int>(pool.guaranteed.size()))
                           ? pool.guaranteed[static_cast<size_t>(k)]
                           : pool.fill[rng.next_below(pool.fill.size())];
    scene.entities.push_back(make_entity(kind, ordinal++, random_position(rng, box)));
  }

  scene.entities.push_back(make_entity("Robot", ordinal++, random_position(rng, box)));

  const bool inject = spec.agent_policy == AgentPlacement::near_hazard &&
                      rng.next_bool(spec.hazard_probability);
  if (inject) {
    // Prefer hot/sharp sources; any hazard attribute qualifies.
    std::vector<size_t> sources, preferred;
    for (size_t i = 0; i < scene.entities.size(); ++i) {
      const auto& e = scene.entities[i];
      if (e.is_agent || e.attributes == 0) continue;
      sources.push_back(i);
      if (e.attributes & (kAttrHot | kAttrSharp)) preferred.push_back(i);
    }
    if (sources.empty())
      fail(ErrorCode::NoHazardSource,
           std::string("no hazard-attributed object for room ") + to_string(spec.room_type));
    const auto& pick = preferred.empty() ? sources : preferred;
    const Entity& hazard = scene.entities[pick[rng.next_below(pick.size())]];
    const double dist = rng.uniform(0.1 * kDefaultDT, 0.9 * kDefaultDT);
    const char* agent_kind = rng.next_bool(0.7) ? "Baby" : "Pet";
    scene.entities.push_back(
        make_entity(agent_kind, ordinal++, place_at_distance(rng, box, hazard.position, dist)));
    scene.hazard_injected = true;
    if (rng.next_bool(0.3))
      scene.entities.push_back(make_entity("Adult", ordinal++, random_position(rng, box)));
  } else if (spec.agent_policy == AgentPlacement::random) {
    const int n_agents = 1 + static_cast<int>(rng.next_below(2));
    static const char* kAgentKinds[] = {"Baby", "Adult", "Pet"};
    for (int k = 0; k < n_agents; ++k)
      scene.entities.push_back(
          make_entity(kAgentKinds[rng.next_below(3)], ordinal++, random_position(rng, box)));
  }

  scene.check_invariants(spec.max_entities);
  return scene;
}

DatasetSplit generate_dataset(int n_scenes, const std::array<int, 3>& split, uint64_t seed,
                              const SceneSpec& base) {
  if (split[0] + split[1] + split[2] != n_scenes)
    fail(ErrorCode::BadSplit, "split sizes do not sum to scene count");
  if (split[0] < 0 || split[1] < 0 || split[2] < 0)
    fail(ErrorCode::BadSplit, "negative split size");

  static const RoomType kRooms[] = {RoomType::kitchen, RoomType::living_room, RoomType::bedroom,
                                    RoomType::bathroom};
  DatasetSplit out;
  for (int i = 0; i < n_scenes; ++i) {
    SceneSpec spec = base;
    spec.room_type = kRooms[i % 4];
    // hazard agents injected in half of the scenes
    spec.agent_policy = (i % 2 == 0) ? AgentPlacement::near_hazard : AgentPlacement::random;
    spec.hazard_probability = 1.0;
    Scene scene = generate_scene(spec, mix_seed(seed, static_cast<uint64_t>(i)));
    scene.id = "scene_" + std::string(i < 10 ? "000" : i < 100 ? "00" : i < 1000 ? "0" : "") +
               std::to_string(i);
    auto& bucket = (i < split[0]) ? out.train : (i < split[0] + split[1]) ? out.val : out.test;
    bucket.push_back(std::move(scene));
  }
  return out;
}

std::vector<const Scene*> DatasetSplit::all() const {
  std::vector<const Scene*> out;
  for (const auto& s : train) out.push_back(&s);
  for (const auto& s : val) out.push_back(&s);
  for (const auto& s : test) out.push_back(&s);
  return out;
}

void write_scenes_jsonl(const std::vector<Scene>& scenes, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  for (const auto& s : scenes) f << s.to_json_line() << "\n";
}

std::vector<Scene> read_scenes_jsonl(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot open " + path);
  std::vector<Scene> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    out.push_back(Scene::from_json_line(line));
  }
  return out;
}

std::string scene_summary(const Scene& scene) {
  std::ostringstream os;
  os << "Room: " << to_string(scene.room_type) << ". Entities:";
  for (const auto& e : scene.entities) {
    os << " " << e.id << " at (" << std::round(e.position[0] * 100.0) / 100.0 << ", "
       << std::round(e.position[1] * 100.0) / 100.0 << ")";
    auto attrs = attribute_names(e.attributes);
    if (!attrs.empty()) {
      os << " [";
      for (size_t i = 0; i < attrs.size(); ++i) os << (i ? " " : "") << attrs[i];
      os << "]";
    }
    os << ";";
  }
  return os.str();
}

}  // namespace riskgraph
