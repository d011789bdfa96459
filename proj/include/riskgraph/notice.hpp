#pragma once

#include <string>

#include "riskgraph/risk.hpp"

namespace riskgraph {

/// A flagged high-risk edge, rendered for the planner.
struct SafetyNotice {
  std::string entity_a;  // agent endpoint first when one exists
  std::string entity_b;
  std::string category_a;
  std::string category_b;
  double probability = 0.0;
  RiskAnnotation annotation;
  std::string text;

  std::string edge_key() const {
    return entity_a <= entity_b ? entity_a + "|" + entity_b : entity_b + "|" + entity_a;
  }
};

/// "High-risk edge detected: A -> B (Risk level: L). Reason: ... [edge:a|b]"
std::string render_notice(const SafetyNotice& notice);

/// Recovers the edge identity from the machine-readable suffix tag.
std::pair<std::string, std::string> parse_notice_edge(const std::string& text);

}  // namespace riskgraph
