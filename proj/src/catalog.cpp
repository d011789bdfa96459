#include "riskgraph/catalog.hpp"

#include <algorithm>
#include <cctype>

#include <nlohmann/json.hpp>

#include "riskgraph/errors.hpp"
#include "riskgraph/rng.hpp"

namespace riskgraph {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

std::vector<std::string> attribute_names(uint8_t mask) {
  std::vector<std::string> out;
  if (mask & kAttrHot) out.push_back("hot");
  if (mask & kAttrSharp) out.push_back("sharp");
  if (mask & kAttrElectrical) out.push_back("electrical");
  if (mask & kAttrWaterSource) out.push_back("water_source");
  return out;
}

uint8_t attribute_mask_from_names(const std::vector<std::string>& names) {
  uint8_t mask = 0;
  for (const auto& n : names) {
    if (n == "hot") mask |= kAttrHot;
    else if (n == "sharp") mask |= kAttrSharp;
    else if (n == "electrical") mask |= kAttrElectrical;
    else if (n == "water_source") mask |= kAttrWaterSource;
    else fail(ErrorCode::BadConfig, "unknown attribute '" + n + "'");
  }
  return mask;
}

Catalog::Catalog() {
  version_ = "riskgraph-catalog-v1";
  kinds_ = {
      // objects
      {"Knife", AgentClass::none, kAttrSharp},
      {"Scissors", AgentClass::none, kAttrSharp},
      {"Kettle", AgentClass::none, kAttrHot | kAttrWaterSource},
      {"StoveBurner", AgentClass::none, kAttrHot},
      {"Oven", AgentClass::none, kAttrHot | kAttrElectrical},
      {"Toaster", AgentClass::none, kAttrHot | kAttrElectrical},
      {"Pan", AgentClass::none, kAttrHot},
      {"Microwave", AgentClass::none, kAttrHot | kAttrElectrical},
      {"Candle", AgentClass::none, kAttrHot},
      {"Iron", AgentClass::none, kAttrHot | kAttrElectrical},
      {"HairDryer", AgentClass::none, kAttrHot | kAttrElectrical},
      {"Heater", AgentClass::none, kAttrHot | kAttrElectrical},
      {"Lamp", AgentClass::none, kAttrElectrical},
      {"Television", AgentClass::none, kAttrElectrical},
      {"Sink", AgentClass::none, kAttrWaterSource},
      {"Bathtub", AgentClass::none, kAttrWaterSource},
      {"Fridge", AgentClass::none, 0},
      {"Apple", AgentClass::none, 0},
      {"Sofa", AgentClass::none, 0},
      {"Bed", AgentClass::none, 0},
      {"Pillow", AgentClass::none, 0},
      {"CuttingBoard", AgentClass::none, 0},
      {"Plate", AgentClass::none, 0},
      {"Cup", AgentClass::none, 0},
      {"Book", AgentClass::none, 0},
      {"Towel", AgentClass::none, 0},
      // agents
      {"Baby", AgentClass::vulnerable, 0},
      {"Pet", AgentClass::vulnerable, 0},
      {"Adult", AgentClass::capable, 0},
      {"Robot", AgentClass::robot, 0},
  };
  for (size_t i = 0; i < kinds_.size(); ++i) {
    if (kinds_[i].agent_class == AgentClass::robot) robot_index_ = static_cast<int>(i);
  }
  hash_ = fnv1a_str(to_json_string());
}

const Catalog& Catalog::instance() {
  static const Catalog catalog;
  return catalog;
}

std::optional<int> Catalog::find(const std::string& name) const {
  std::string key = lower(name);
  if (key == "child") key = "baby";  // paper uses Baby and Child interchangeably
  for (size_t i = 0; i < kinds_.size(); ++i) {
    if (lower(kinds_[i].name) == key) return static_cast<int>(i);
  }
  return std::nullopt;
}

int Catalog::require(const std::string& name) const {
  auto idx = find(name);
  if (!idx) fail(ErrorCode::BadConfig, "category '" + name + "' not in catalog");
  return *idx;
}

std::string Catalog::to_json_string() const {
  nlohmann::ordered_json j;
  j["version"] = version_;
  auto& arr = j["kinds"] = nlohmann::ordered_json::array();
  for (const auto& k : kinds_) {
    nlohmann::ordered_json e;
    e["name"] = k.name;
    switch (k.agent_class) {
      case AgentClass::none: e["agent_class"] = "none"; break;
      case AgentClass::vulnerable: e["agent_class"] = "vulnerable"; break;
      case AgentClass::capable: e["agent_class"] = "capable"; break;
      case AgentClass::robot: e["agent_class"] = "robot"; break;
    }
    e["attributes"] = attribute_names(k.attrs);
    arr.push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

}  // namespace riskgraph
