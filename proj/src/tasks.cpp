#include "riskgraph/tasks.hpp"

#include <nlohmann/json.hpp>

#include "riskgraph/errors.hpp"

namespace riskgraph {

const char* to_string(TaskComplexity c) {
  switch (c) {
    case TaskComplexity::simple: return "simple";
    case TaskComplexity::intermediate: return "intermediate";
    case TaskComplexity::complex: return "complex";
  }
  return "?";
}

TaskComplexity complexity_from_string(const std::string& name) {
  if (name == "simple") return TaskComplexity::simple;
  if (name == "intermediate") return TaskComplexity::intermediate;
  if (name == "complex") return TaskComplexity::complex;
  fail(ErrorCode::BadConfig, "unknown complexity '" + name + "'");
}

const std::vector<TaskSpec>& benchmark_tasks() {
  static const std::vector<TaskSpec> kTasks = {
      {"tidy_up", TaskComplexity::simple, "Return a stray item to its place.", TaskKind::relocate},
      {"arrange_room", TaskComplexity::simple, "Arrange loose items around the room anchor.",
       TaskKind::gather},
      {"store_item", TaskComplexity::intermediate, "Store an item inside a container.",
       TaskKind::store},
      {"deliver_item", TaskComplexity::intermediate, "Carry an item across the room.",
       TaskKind::deliver},
      {"prepare_meal", TaskComplexity::complex, "Cook the meal.", TaskKind::cook},
  };
  return kTasks;
}

const TaskSpec& task_by_name(const std::string& name) {
  for (const auto& t : benchmark_tasks())
    if (t.name == name) return t;
  fail(ErrorCode::BadConfig, "unknown task '" + name + "'");
}

std::string tasks_to_json_string() {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& t : benchmark_tasks()) {
    nlohmann::ordered_json j;
    j["name"] = t.name;
    j["complexity"] = to_string(t.complexity);
    j["description"] = t.description;
    switch (t.kind) {
      case TaskKind::relocate: j["kind"] = "relocate"; break;
      case TaskKind::gather: j["kind"] = "gather"; break;
      case TaskKind::store: j["kind"] = "store"; break;
      case TaskKind::deliver: j["kind"] = "deliver"; break;
      case TaskKind::cook: j["kind"] = "cook"; break;
    }
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

namespace {

// Movable, hazard-free items the mock planner is willing to carry.
const std::vector<std::string>& tidyable_kinds() {
  static const std::vector<std::string> k = {"Book", "Pillow", "Towel", "Plate",
                                             "Cup", "Apple", "CuttingBoard"};
  return k;
}

const std::vector<std::string>& anchor_kinds() {
  static const std::vector<std::string> k = {"Sofa",    "Bed",   "Fridge", "Bathtub",
                                             "Sink", "Television"};
  return k;
}

const std::vector<std::string>& container_kinds() {
  static const std::vector<std::string> k = {"Fridge", "Oven", "Microwave"};
  return k;
}

const std::vector<std::string>& cookable_kinds() {
  static const std::vector<std::string> k = {"Pan", "StoveBurner", "Oven", "Toaster",
                                             "Microwave"};
  return k;
}

/// Ids of scene entities matching the kind preference list, in (kind,
/// entity-order) priority.
std::vector<std::string> find_by_kinds(const Scene& scene, const std::vector<std::string>& kinds,
                                       size_t limit) {
  std::vector<std::string> out;
  for (const auto& kind : kinds) {
    const int idx = Catalog::instance().require(kind);
    for (const auto& e : scene.entities) {
      if (e.category != idx) continue;
      out.push_back(e.id);
      if (out.size() >= limit) return out;
    }
  }
  return out;
}

}  // namespace

TaskBinding resolve_task(const TaskSpec& task, const Scene& scene) {
  TaskBinding b;
  const size_t want_items = task.kind == TaskKind::gather ? 2 : 1;
  auto items = find_by_kinds(scene, tidyable_kinds(), want_items);
  auto anchors = find_by_kinds(scene, anchor_kinds(), 2);
  auto containers = find_by_kinds(scene, container_kinds(), 1);
  auto cookables = find_by_kinds(scene, cookable_kinds(), 1);

  if (items.empty() || anchors.empty()) return b;
  b.items = items;
  b.anchor = anchors.front();
  if (task.kind == TaskKind::deliver && anchors.size() > 1) b.anchor = anchors.back();
  if (!containers.empty()) b.container = containers.front();
  if (!cookables.empty()) b.cookable = cookables.front();
  b.feasible = true;
  return b;
}

bool goal_satisfied(const TaskSpec& task, const Scene& final_scene) {
  TaskBinding b = resolve_task(task, final_scene);
  if (!b.feasible) return false;

  auto near_anchor = [&](const std::string& item_id, const std::string& target_id) {
    const Entity* item = final_scene.find_entity(item_id);
    const Entity* target = final_scene.find_entity(target_id);
    return item && target && distance(item->position, target->position) <= kGoalRadius;
  };

  switch (task.kind) {
    case TaskKind::relocate:
    case TaskKind::deliver:
      return near_anchor(b.items.front(), b.anchor);
    case TaskKind::gather: {
      for (const auto& item : b.items)
        if (!near_anchor(item, b.anchor)) return false;
      return true;
    }
    case TaskKind::store: {
      const std::string target = b.container.empty() ? b.anchor : b.container;
      if (!near_anchor(b.items.front(), target)) return false;
      if (!b.container.empty()) {
        const Entity* c = final_scene.find_entity(b.container);
        if (c && (c->state_flags & kStateOpened)) return false;  // left open
      }
      return true;
    }
    case TaskKind::cook: {
      if (b.cookable.empty())  // no cookware in this room; fall back to gathering
        return near_anchor(b.items.front(), b.anchor);
      for (const auto& e : final_scene.entities)
        if (e.state_flags & kStateCooked) return true;
      return false;
    }
  }
  return false;
}

TaskPlan mock_initial_plan(const TaskSpec& task, const Scene& scene) {
  TaskBinding b = resolve_task(task, scene);
  TaskPlan plan;
  plan.task_name = task.name;
  plan.revision = 0;

  auto push = [&plan](Verb verb, std::vector<std::string> args) {
    Action a;
    a.verb = verb;
    a.args = std::move(args);
    a.index = static_cast<int>(plan.steps.size());
    a.raw = render_action(a);
    plan.steps.push_back(std::move(a));
  };

  if (!b.feasible) {
    push(Verb::Done, {});
    return plan;
  }

  switch (task.kind) {
    case TaskKind::relocate:
    case TaskKind::deliver:
      push(Verb::Walk, {b.items.front()});
      push(Verb::PickUp, {b.items.front()});
      push(Verb::Place, {b.items.front(), b.anchor});
      break;
    case TaskKind::gather:
      for (const auto& item : b.items) {
        push(Verb::Walk, {item});
        push(Verb::PickUp, {item});
        push(Verb::Place, {item, b.anchor});
      }
      break;
    case TaskKind::store: {
      const std::string target = b.container.empty() ? b.anchor : b.container;
      if (!b.container.empty()) push(Verb::Open, {b.container});
      push(Verb::PickUp, {b.items.front()});
      push(Verb::Place, {b.items.front(), target});
      if (!b.container.empty()) push(Verb::Close, {b.container});
      break;
    }
    case TaskKind::cook:
      if (b.cookable.empty()) {
        push(Verb::Walk, {b.items.front()});
        push(Verb::PickUp, {b.items.front()});
        push(Verb::Place, {b.items.front(), b.anchor});
      } else {
        push(Verb::Walk, {to_string(scene.room_type)});
        push(Verb::PickUp, {b.items.front()});
        push(Verb::StartCook, {b.cookable});
      }
      break;
  }
  push(Verb::Done, {});
  return plan;
}

}  // namespace riskgraph
