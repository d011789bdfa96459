#pragma once

#include <optional>
#include <string>
#include <vector>

#include "riskgraph/plan.hpp"
#include "riskgraph/scene.hpp"

namespace riskgraph {

enum class TaskComplexity : uint8_t { simple, intermediate, complex };

const char* to_string(TaskComplexity c);
TaskComplexity complexity_from_string(const std::string& name);

/// What the task does; drives both the mock plan template and the goal
/// predicate, resolved against the scene by stable entity order.
enum class TaskKind : uint8_t { relocate, gather, store, deliver, cook };

struct TaskSpec {
  std::string name;
  TaskComplexity complexity = TaskComplexity::simple;
  std::string description;
  TaskKind kind = TaskKind::relocate;
};

/// The five benchmark household activities: two spatial-reorganization
/// (simple), two object-manipulation (intermediate), one cooking (complex).
const std::vector<TaskSpec>& benchmark_tasks();
const TaskSpec& task_by_name(const std::string& name);
std::string tasks_to_json_string();

/// Distance under which a relocated item counts as delivered.
inline constexpr double kGoalRadius = 0.8;

/// Entities the mock planner selects for a task, by stable entity order so
/// the goal stays decidable from the final scene alone.
struct TaskBinding {
  std::vector<std::string> items;       // objects to move (ids)
  std::string anchor;                   // destination entity id
  std::string container;                // openable destination, may be empty
  std::string cookable;                 // id, may be empty
  bool feasible = false;
};

TaskBinding resolve_task(const TaskSpec& task, const Scene& scene);

/// Goal predicate over the final scene state.
bool goal_satisfied(const TaskSpec& task, const Scene& final_scene);

/// Deterministic per-task template plan over the scene binding.
TaskPlan mock_initial_plan(const TaskSpec& task, const Scene& scene);

}  // namespace riskgraph
