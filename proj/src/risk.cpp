#include "riskgraph/risk.hpp"

#include <algorithm>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "riskgraph/errors.hpp"

namespace riskgraph {

using nlohmann::ordered_json;

const char* to_string(RiskLevel level) {
  switch (level) {
    case RiskLevel::low: return "low";
    case RiskLevel::medium: return "medium";
    case RiskLevel::high: return "high";
  }
  return "?";
}

RiskLevel risk_level_from_string(const std::string& label) {
  if (label == "low") return RiskLevel::low;
  if (label == "medium") return RiskLevel::medium;
  if (label == "high") return RiskLevel::high;
  fail(ErrorCode::UnknownRiskLevel, "'" + label + "'");
}

double risk_value(RiskLevel level) {
  switch (level) {
    case RiskLevel::low: return 0.25;
    case RiskLevel::medium: return 0.50;
    case RiskLevel::high: return 1.00;
  }
  fail(ErrorCode::UnknownRiskLevel, "invalid enum value");
}

double risk_value(const std::string& label) { return risk_value(risk_level_from_string(label)); }

bool known_risk_type(const std::string& name) {
  static const std::set<std::string> kVocabulary = {"thermal", "physical", "water",
                                                    "electrical", "sharp", "chemical"};
  return kVocabulary.count(name) > 0;
}

namespace {

/// Catalog spelling when the name resolves (Child -> Baby), raw otherwise.
std::string normalize_type(const std::string& name) {
  const auto& catalog = Catalog::instance();
  if (auto idx = catalog.find(name)) return catalog.at(*idx).name;
  return name;
}

}  // namespace

std::string canonical_pair_key(const std::string& type1, const std::string& type2) {
  const std::string a = normalize_type(type1);
  const std::string b = normalize_type(type2);
  return a <= b ? a + "|" + b : b + "|" + a;
}

namespace {

void canonicalize(RiskAnnotation& a) {
  if (a.type1 > a.type2) std::swap(a.type1, a.type2);
  std::sort(a.risk_type.begin(), a.risk_type.end());
  a.risk_type.erase(std::unique(a.risk_type.begin(), a.risk_type.end()), a.risk_type.end());
  a.unknown_risk_types.clear();
  for (const auto& t : a.risk_type)
    if (!known_risk_type(t)) a.unknown_risk_types.push_back(t);
}

void validate(const RiskAnnotation& a, const std::string& payload) {
  if (a.danger_level != RiskLevel::low && a.risk_type.empty())
    fail(ErrorCode::SchemaViolation,
         "risk_type must be nonempty for danger_level != low; payload: " + payload);
}

ordered_json annotation_to_json(const RiskAnnotation& a) {
  ordered_json j;
  j["type1"] = a.type1;
  j["type2"] = a.type2;
  j["danger_level"] = to_string(a.danger_level);
  j["risk_type"] = a.risk_type;
  j["llm_reason"] = a.llm_reason;
  j["source"] = a.source;
  if (!a.unknown_risk_types.empty()) j["unknown_risk_types"] = a.unknown_risk_types;
  return j;
}

RiskAnnotation annotation_from_json(const ordered_json& j, const std::string& payload) {
  RiskAnnotation a;
  try {
    a.type1 = j.at("type1").get<std::string>();
    a.type2 = j.at("type2").get<std::string>();
    a.danger_level = risk_level_from_string(j.at("danger_level").get<std::string>());
    a.risk_type = j.at("risk_type").get<std::vector<std::string>>();
    a.llm_reason = j.at("llm_reason").get<std::string>();
    if (j.contains("source")) a.source = j.at("source").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaViolation, std::string(e.what()) + "; payload: " + payload);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::UnknownRiskLevel)
      fail(ErrorCode::SchemaViolation, std::string(e.what()) + "; payload: " + payload);
    throw;
  }
  canonicalize(a);
  validate(a, payload);
  return a;
}

}  // namespace

RiskAnnotation parse_annotation_json(const std::string& payload) {
  ordered_json j;
  try {
    j = ordered_json::parse(payload);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaViolation, std::string(e.what()) + "; payload: " + payload);
  }
  RiskAnnotation a = annotation_from_json(j, payload);
  a.source = "llm";
  return a;
}

AnnotationCache::AnnotationCache(const AnnotationCache& other) {
  std::shared_lock lock(other.mutex_);
  entries_ = other.entries_;
}

AnnotationCache& AnnotationCache::operator=(const AnnotationCache& other) {
  if (this == &other) return *this;
  auto copy = other.entries();
  std::unique_lock lock(mutex_);
  entries_ = std::move(copy);
  return *this;
}

bool AnnotationCache::contains(const std::string& type1, const std::string& type2) const {
  std::shared_lock lock(mutex_);
  return entries_.count(canonical_pair_key(type1, type2)) > 0;
}

RiskAnnotation AnnotationCache::get(const std::string& type1, const std::string& type2) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(canonical_pair_key(type1, type2));
  if (it == entries_.end())
    fail(ErrorCode::MissingAnnotation, canonical_pair_key(type1, type2));
  return it->second;
}

void AnnotationCache::put(RiskAnnotation annotation) {
  canonicalize(annotation);
  std::unique_lock lock(mutex_);
  entries_[canonical_pair_key(annotation.type1, annotation.type2)] = std::move(annotation);
}

size_t AnnotationCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::map<std::string, RiskAnnotation> AnnotationCache::entries() const {
  std::shared_lock lock(mutex_);
  return entries_;
}

std::string AnnotationCache::to_json_string() const {
  ordered_json j = ordered_json::object();
  for (const auto& [key, a] : entries()) j[key] = annotation_to_json(a);
  return j.dump(2) + "\n";
}

AnnotationCache AnnotationCache::from_json_string(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::IoError, std::string("bad cache JSON: ") + e.what());
  }
  AnnotationCache cache;
  for (const auto& [key, value] : j.items()) cache.put(annotation_from_json(value, key));
  return cache;
}

void AnnotationCache::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  f << to_json_string();
}

AnnotationCache AnnotationCache::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return from_json_string(ss.str());
}

RiskAnnotation annotate_pair(const std::string& type1, const std::string& type2,
                             AnnotationBackend& backend, AnnotationCache& cache) {
  const auto& catalog = Catalog::instance();
  const std::string n1 = catalog.at(catalog.require(type1)).name;
  const std::string n2 = catalog.at(catalog.require(type2)).name;
  if (cache.contains(n1, n2)) return cache.get(n1, n2);
  RiskAnnotation a = backend.annotate(n1, n2);
  canonicalize(a);
  validate(a, "backend " + backend.id());
  cache.put(a);
  return cache.get(n1, n2);
}

void annotate_pairs(const std::vector<std::pair<std::string, std::string>>& pairs,
                    AnnotationBackend& backend, AnnotationCache& cache, int parallelism) {
  if (parallelism < 1) parallelism = 1;

  std::mutex mu;
  std::condition_variable cv;
  std::set<std::string> in_flight;
  size_t next = 0;

  auto worker = [&] {
    for (;;) {
      std::pair<std::string, std::string> pair;
      std::string key;
      {
        std::unique_lock lock(mu);
        for (;;) {
          if (next >= pairs.size()) return;
          pair = pairs[next];
          key = canonical_pair_key(pair.first, pair.second);
          ++next;
          if (cache.contains(pair.first, pair.second)) continue;
          if (in_flight.count(key)) continue;  // someone else is fetching it
          in_flight.insert(key);
          break;
        }
      }
      annotate_pair(pair.first, pair.second, backend, cache);
      {
        std::lock_guard lock(mu);
        in_flight.erase(key);
      }
      cv.notify_all();
    }
  };

  std::vector<std::thread> threads;
  for (int i = 0; i < parallelism; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
}

namespace {

std::string builtin_reason(const CategoryInfo& a, const CategoryInfo& b, RiskLevel level,
                           const std::vector<std::string>& types) {
  if (level == RiskLevel::low)
    return "Builtin rule: no hazardous attribute interaction between " + a.name + " and " +
           b.name + ".";
  std::string joined;
  for (size_t i = 0; i < types.size(); ++i) joined += (i ? ", " : "") + types[i];
  const CategoryInfo& agent = a.is_agent() ? a : b;
  const CategoryInfo& other = a.is_agent() ? b : a;
  if (agent.is_agent())
    return "Builtin rule: " + agent.name + " close to " + other.name +
           " carries " + joined + " risk.";
  return "Builtin rule: interaction between " + a.name + " and " + b.name + " carries " +
         joined + " risk.";
}

std::vector<std::string> risk_types_for_attrs(uint8_t attrs, bool include_physical) {
  std::vector<std::string> out;
  if (attrs & kAttrHot) out.push_back("thermal");
  if (attrs & kAttrSharp) out.push_back("sharp");
  if (attrs & kAttrElectrical) out.push_back("electrical");
  if (attrs & kAttrWaterSource) out.push_back("water");
  if (include_physical) out.push_back("physical");
  return out;
}

/// Attribute interaction rules behind the builtin table. Vulnerable agents
/// near any hazard source are high risk; Adults medium; the Robot is the
/// manipulator and is never treated as endangered. Water near electrical
/// appliances is medium. Self-pairs are low unless hot or sharp.
RiskAnnotation builtin_annotation(const CategoryInfo& a, const CategoryInfo& b) {
  RiskAnnotation ann;
  ann.type1 = a.name;
  ann.type2 = b.name;
  ann.source = "builtin";

  RiskLevel level = RiskLevel::low;
  std::vector<std::string> types;

  if (a.name == b.name) {
    if (a.attrs & (kAttrHot | kAttrSharp)) {
      level = RiskLevel::medium;
      types = risk_types_for_attrs(a.attrs & (kAttrHot | kAttrSharp), false);
    }
  } else if (a.is_agent() || b.is_agent()) {
    const CategoryInfo& agent = a.is_agent() ? a : b;
    const CategoryInfo& other = a.is_agent() ? b : a;
    const bool both_agents = a.is_agent() && b.is_agent();
    if (!both_agents && agent.agent_class != AgentClass::robot && other.hazardous()) {
      level = agent.agent_class == AgentClass::vulnerable ? RiskLevel::high : RiskLevel::medium;
      types = risk_types_for_attrs(other.attrs, true);
    }
  } else {
    const bool water_elec = (a.has(kAttrWaterSource) && b.has(kAttrElectrical)) ||
                            (b.has(kAttrWaterSource) && a.has(kAttrElectrical));
    if (water_elec) {
      level = RiskLevel::medium;
      types = {"water", "electrical"};
    }
  }

  ann.danger_level = level;
  ann.risk_type = types;
  ann.llm_reason = builtin_reason(a, b, level, types);
  return ann;
}

}  // namespace

RiskAnnotation BuiltinAnnotationBackend::annotate(const std::string& type1,
                                                  const std::string& type2) {
  ++calls_;
  const auto& catalog = Catalog::instance();
  return builtin_annotation(catalog.at(catalog.require(type1)),
                            catalog.at(catalog.require(type2)));
}

AnnotationCache builtin_risk_table() {
  AnnotationCache cache;
  const auto& kinds = Catalog::instance().kinds();
  for (size_t i = 0; i < kinds.size(); ++i)
    for (size_t j = i; j < kinds.size(); ++j)
      cache.put(builtin_annotation(kinds[i], kinds[j]));
  return cache;
}

}  // namespace riskgraph
