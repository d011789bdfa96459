#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "riskgraph/errors.hpp"
#include "riskgraph/rng.hpp"
#include "riskgraph/scene.hpp"

using namespace riskgraph;

namespace {

SceneSpec kitchen_spec(AgentPlacement policy) {
  SceneSpec spec;
  spec.room_type = RoomType::kitchen;
  spec.agent_policy = policy;
  return spec;
}

double min_hazard_distance(const Scene& scene, const Entity& agent) {
  double best = 1e30;
  for (const auto& e : scene.entities)
    if (!e.is_agent && e.attributes != 0)
      best = std::min(best, distance(agent.position, e.position));
  return best;
}

}  // namespace

TEST_CASE("near-hazard kitchen places a vulnerable agent next to a hazard source") {
  const Scene scene = generate_scene(kitchen_spec(AgentPlacement::near_hazard), 7);
  CHECK(scene.hazard_injected);
  const Entity* vulnerable = nullptr;
  for (const auto& e : scene.entities)
    if (e.info().agent_class == AgentClass::vulnerable) vulnerable = &e;
  REQUIRE(vulnerable != nullptr);
  // within DT of some hot/sharp kitchen object (stove, knife, pan, ...)
  bool close_to_hazard = false;
  for (const auto& e : scene.entities) {
    if (e.is_agent || !(e.attributes & (kAttrHot | kAttrSharp))) continue;
    if (distance(vulnerable->position, e.position) <= kDefaultDT) close_to_hazard = true;
  }
  CHECK(close_to_hazard);
}

TEST_CASE("agent policy none leaves the robot as the only agent") {
  for (uint64_t seed : {0ULL, 3ULL, 99ULL}) {
    const Scene scene = generate_scene(kitchen_spec(AgentPlacement::none), seed);
    for (const auto& e : scene.entities)
      if (e.is_agent) CHECK(e.info().agent_class == AgentClass::robot);
    CHECK_FALSE(scene.hazard_injected);
  }
}

TEST_CASE("same spec and seed give byte-identical scenes") {
  const SceneSpec spec = kitchen_spec(AgentPlacement::near_hazard);
  CHECK(generate_scene(spec, 1234).to_json_line() == generate_scene(spec, 1234).to_json_line());
  CHECK(generate_scene(spec, 1234).to_json_line() != generate_scene(spec, 1235).to_json_line());
}

TEST_CASE("scene invariants hold over 1000 random specs and seeds") {
  Rng rng(2024);
  static const RoomType kRooms[] = {RoomType::kitchen, RoomType::living_room, RoomType::bedroom,
                                    RoomType::bathroom};
  static const AgentPlacement kPolicies[] = {AgentPlacement::none, AgentPlacement::random,
                                             AgentPlacement::near_hazard};
  for (int i = 0; i < 1000; ++i) {
    SceneSpec spec;
    spec.room_type = kRooms[rng.next_below(4)];
    spec.agent_policy = kPolicies[rng.next_below(3)];
    spec.min_objects = 4 + static_cast<int>(rng.next_below(6));
    spec.max_objects = spec.min_objects + static_cast<int>(rng.next_below(8));
    const Scene scene = generate_scene(spec, rng.next_u64());
    CHECK_NOTHROW(scene.check_invariants(spec.max_entities));
    if (scene.hazard_injected) {
      const Entity* injected = nullptr;
      for (const auto& e : scene.entities)
        if (e.info().agent_class == AgentClass::vulnerable) injected = &e;
      REQUIRE(injected != nullptr);
      CHECK(min_hazard_distance(scene, *injected) <= kDefaultDT);
    }
  }
}

TEST_CASE("generate_scene rejects an empty object range") {
  SceneSpec spec = kitchen_spec(AgentPlacement::none);
  spec.min_objects = 5;
  spec.max_objects = 4;
  CHECK_THROWS_AS(generate_scene(spec, 1), Error);
}

TEST_CASE("near-hazard fails with NoHazardSource when the scene has no hazard object") {
  // a two-entity kitchen holds only the Fridge (inert) plus the robot
  SceneSpec spec = kitchen_spec(AgentPlacement::near_hazard);
  spec.min_objects = 1;
  spec.max_objects = 1;
  try {
    generate_scene(spec, 3);
    FAIL("expected NoHazardSource");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoHazardSource);
  }
}

TEST_CASE("dataset split sizes, hazard share and room cycling") {
  const DatasetSplit ds = generate_dataset(120, {90, 15, 15}, 1);
  CHECK(ds.train.size() == 90);
  CHECK(ds.val.size() == 15);
  CHECK(ds.test.size() == 15);
  size_t hazard = 0;
  std::set<std::string> ids;
  for (const Scene* s : ds.all()) {
    if (s->hazard_injected) ++hazard;
    CHECK(ids.insert(s->id).second);  // disjoint ids
  }
  CHECK(hazard == 60);  // half of the scenes

  const DatasetSplit tiny = generate_dataset(4, {2, 1, 1}, 0);
  std::set<RoomType> rooms;
  for (const Scene* s : tiny.all()) rooms.insert(s->room_type);
  CHECK(rooms.size() == 4);  // one scene per room type
}

TEST_CASE("dataset split mismatch raises BadSplit") {
  try {
    generate_dataset(10, {5, 3, 3}, 1);
    FAIL("expected BadSplit");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadSplit);
  }
}

TEST_CASE("dataset generation is deterministic in the seed") {
  const DatasetSplit a = generate_dataset(12, {8, 2, 2}, 77);
  const DatasetSplit b = generate_dataset(12, {8, 2, 2}, 77);
  for (size_t i = 0; i < a.train.size(); ++i)
    CHECK(a.train[i].to_json_line() == b.train[i].to_json_line());
}

TEST_CASE("scene JSONL files round-trip losslessly") {
  const DatasetSplit ds = generate_dataset(8, {4, 2, 2}, 5);
  const std::string path = "/tmp/riskgraph_test_scenes.jsonl";
  write_scenes_jsonl(ds.train, path);
  const auto back = read_scenes_jsonl(path);
  REQUIRE(back.size() == ds.train.size());
  for (size_t i = 0; i < back.size(); ++i)
    CHECK(back[i].to_json_line() == ds.train[i].to_json_line());
}

TEST_CASE("scene digest tracks entity state") {
  Scene scene = generate_scene(kitchen_spec(AgentPlacement::random), 9);
  const uint64_t before = scene.digest();
  scene.entities[0].position[0] += 0.25;
  CHECK(scene.digest() != before);
}

TEST_CASE("embedded catalog matches the reference data file") {
  std::ifstream f(std::string(RISKGRAPH_SOURCE_DIR) + "/data/catalog.json", std::ios::binary);
  REQUIRE(f.good());
  std::stringstream ss;
  ss << f.rdbuf();
  CHECK(ss.str() == Catalog::instance().to_json_string());
}

TEST_CASE("catalog lookups accept the Child alias and reject unknown kinds") {
  const auto& catalog = Catalog::instance();
  CHECK(catalog.find("Child").has_value());
  CHECK(*catalog.find("Child") == *catalog.find("Baby"));
  CHECK(catalog.find("baby").has_value());
  CHECK_FALSE(catalog.find("Dragon").has_value());
  CHECK(catalog.at(catalog.robot_index()).name == "Robot");
}
