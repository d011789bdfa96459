#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace riskgraph {

enum class Verb : uint8_t {
  Walk,
  PickUp,
  Place,
  Open,
  Close,
  StartCook,
  HandleSafetyIssue,
  EnsureSafe,
  SecureObject,
  Done,
};

const char* to_string(Verb verb);

struct Action {
  int index = 0;  // equals position in the plan
  Verb verb = Verb::Done;
  std::vector<std::string> args;  // entity ids, category names or room names
  std::string raw;                // original text line

  bool is_mitigation() const {
    return verb == Verb::EnsureSafe || verb == Verb::SecureObject ||
           verb == Verb::HandleSafetyIssue;
  }
  bool operator==(const Action& other) const {
    return verb == other.verb && args == other.args;
  }
};

struct TaskPlan {
  std::string task_name;
  std::vector<Action> steps;  // nonempty, last step is Done
  int revision = 0;

  bool operator==(const TaskPlan& other) const {
    return task_name == other.task_name && steps == other.steps && revision == other.revision;
  }
};

/// Parses numbered plan lines ("N. <verb phrase>") with a fixed keyword
/// table. Lines that are not numbered are treated as surrounding prose and
/// skipped; a numbered line that maps to no verb is an error. Parsing stops
/// at the first DONE step. HandleSafetyIssue phrases are normalized to
/// EnsureSafe (agent argument) or SecureObject (object argument) when the
/// argument resolves in the catalog.
TaskPlan parse_plan(const std::string& text, const std::string& task_name = "");

/// Canonical text form; parse_plan(render_plan(p)) == p on the action grammar.
std::string render_plan(const TaskPlan& plan);
std::string render_action(const Action& action);

}  // namespace riskgraph
