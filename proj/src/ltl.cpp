#include "riskgraph/ltl.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "riskgraph/errors.hpp"

namespace riskgraph {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool pattern_matches(const std::string& pattern, const Entity& e) {
  if (pattern == "*") return true;
  if (pattern.rfind("attr:", 0) == 0) {
    const uint8_t mask = attribute_mask_from_names({pattern.substr(5)});
    return (e.attributes & mask) != 0;
  }
  auto idx = Catalog::instance().find(pattern);
  return idx && *idx == e.category;
}

}  // namespace

SafetySignal ltl_evaluate(const std::vector<LtlRule>& rules, const Scene& scene) {
  SafetySignal signal;
  for (const auto& rule : rules) {
    if (rule.max_distance <= 0.0) fail(ErrorCode::BadConfig, "rule max_distance must be > 0");
    bool fired = false;
    for (const auto& subject : scene.entities) {
      if (!subject.is_agent || !pattern_matches(rule.subject_pattern, subject)) continue;
      for (const auto& object : scene.entities) {
        if (object.id == subject.id) continue;
        if (!pattern_matches(rule.object_pattern, object)) continue;
        if (distance(subject.position, object.position) <= rule.max_distance) {
          signal.violated_rules.push_back(rule.id);
          signal.messages.push_back(rule.message);
          signal.witnesses.emplace_back(subject.id, object.id);
          fired = true;
          break;
        }
      }
      if (fired) break;  // one witness per rule
    }
  }
  signal.safe = signal.violated_rules.empty();
  return signal;
}

std::string rules_to_json_string(const std::vector<LtlRule>& rules) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rules) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["subject"] = r.subject_pattern;
    j["object"] = r.object_pattern;
    j["max_distance"] = r.max_distance;
    j["message"] = r.message;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

std::vector<LtlRule> rules_from_json_string(const std::string& text) {
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::IoError, std::string("bad rules JSON: ") + e.what());
  }
  std::vector<LtlRule> out;
  for (const auto& j : arr) {
    LtlRule r;
    r.id = j.at("id").get<std::string>();
    r.subject_pattern = j.at("subject").get<std::string>();
    r.object_pattern = j.at("object").get<std::string>();
    r.max_distance = j.at("max_distance").get<double>();
    r.message = j.value("message", "");
    if (r.max_distance <= 0.0) fail(ErrorCode::BadConfig, "rule max_distance must be > 0");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<LtlRule> load_rules(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return rules_from_json_string(ss.str());
}

namespace {

std::vector<LtlRule> make_rules(const std::vector<std::string>& object_kinds,
                                const std::string& tag) {
  std::vector<LtlRule> rules;
  for (const auto& kind : object_kinds) {
    for (const char* subject : {"Baby", "Pet"}) {
      LtlRule r;
      r.id = tag + "_" + lower(subject) + "_" + lower(kind);
      r.subject_pattern = subject;
      r.object_pattern = kind;
      r.max_distance = 1.0;
      r.message = std::string(subject) + " too close to " + kind;
      rules.push_back(std::move(r));
    }
    LtlRule adult;
    adult.id = tag + "_adult_" + lower(kind);
    adult.subject_pattern = "Adult";
    adult.object_pattern = kind;
    adult.max_distance = 0.5;
    adult.message = "Adult at contact range of " + kind;
    rules.push_back(std::move(adult));
  }
  return rules;
}

std::vector<std::string> hazardous_kinds() {
  std::vector<std::string> kinds;
  for (const auto& k : Catalog::instance().kinds())
    if (!k.is_agent() && k.hazardous()) kinds.push_back(k.name);
  return kinds;
}

}  // namespace

const std::vector<LtlRule>& full_rule_set() {
  static const std::vector<LtlRule> rules = make_rules(hazardous_kinds(), "full");
  return rules;
}

const std::vector<LtlRule>& partial_rule_set() {
  // only the kitchen hazards anyone thought to write down
  static const std::vector<LtlRule> rules = make_rules(
      {"Knife", "StoveBurner", "Oven", "Kettle", "Toaster", "Pan", "Microwave"}, "kitchen");
  return rules;
}

}  // namespace riskgraph
