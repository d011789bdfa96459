#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace riskgraph {

/// Static hazard attributes an entity kind can carry.
enum Attribute : uint8_t {
  kAttrHot = 1 << 0,
  kAttrSharp = 1 << 1,
  kAttrElectrical = 1 << 2,
  kAttrWaterSource = 1 << 3,
};

std::vector<std::string> attribute_names(uint8_t mask);
uint8_t attribute_mask_from_names(const std::vector<std::string>& names);

enum class AgentClass : uint8_t {
  none,        // ordinary object
  vulnerable,  // Baby, Pet
  capable,     // Adult
  robot,       // the planning agent
};

struct CategoryInfo {
  std::string name;
  AgentClass agent_class = AgentClass::none;
  uint8_t attrs = 0;

  bool is_agent() const { return agent_class != AgentClass::none; }
  bool has(Attribute a) const { return (attrs & a) != 0; }
  bool hazardous() const { return attrs != 0; }
};

/// Closed, versioned entity-kind catalog. Index order is stable and is the
/// one-hot encoding order used by the model features and the checkpoint hash.
class Catalog {
public:
  static const Catalog& instance();

  const std::vector<CategoryInfo>& kinds() const { return kinds_; }
  size_t size() const { return kinds_.size(); }
  const CategoryInfo& at(int index) const { return kinds_.at(static_cast<size_t>(index)); }

  /// Case-insensitive name lookup; accepts documented aliases (Child -> Baby).
  std::optional<int> find(const std::string& name) const;
  /// As find(), but throws Error(BadConfig) when the name is unknown.
  int require(const std::string& name) const;

  int robot_index() const { return robot_index_; }
  const std::string& version() const { return version_; }
  /// Digest of the full kind table; checkpoints embed it.
  uint64_t hash() const { return hash_; }

  std::string to_json_string() const;

private:
  Catalog();
  std::vector<CategoryInfo> kinds_;
  int robot_index_ = -1;
  std::string version_;
  uint64_t hash_ = 0;
};

}  // namespace riskgraph
