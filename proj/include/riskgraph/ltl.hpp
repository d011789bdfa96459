#pragma once

#include <string>
#include <vector>

#include "riskgraph/scene.hpp"

namespace riskgraph {

/// A safety-invariant distance rule: fires when an agent matching the
/// subject pattern is within max_distance of an entity matching the object
/// pattern. Patterns are category names, "*", or "attr:<name>".
struct LtlRule {
  std::string id;
  std::string subject_pattern;
  std::string object_pattern;
  double max_distance = 1.0;
  std::string message;
};

struct SafetySignal {
  bool safe = true;
  std::vector<std::string> violated_rules;
  std::vector<std::string> messages;

  /// Entity-id pairs (agent, object) behind each violation, aligned with
  /// violated_rules.
  std::vector<std::pair<std::string, std::string>> witnesses;
};

/// Runtime monitor for the invariant "always no rule violated", evaluated
/// against one scene state.
SafetySignal ltl_evaluate(const std::vector<LtlRule>& rules, const Scene& scene);

std::vector<LtlRule> load_rules(const std::string& path);
std::string rules_to_json_string(const std::vector<LtlRule>& rules);
std::vector<LtlRule> rules_from_json_string(const std::string& text);

/// Manually enumerated rule set covering every injected hazard pattern
/// (vulnerable agents near any hazard source, adults at contact range).
const std::vector<LtlRule>& full_rule_set();

/// Kitchen-only subset; misses hazards in other rooms by construction.
const std::vector<LtlRule>& partial_rule_set();

}  // namespace riskgraph
