#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <vector>

#include "riskgraph/catalog.hpp"

namespace riskgraph {

enum class RiskLevel : uint8_t { low, medium, high };

const char* to_string(RiskLevel level);
RiskLevel risk_level_from_string(const std::string& label);

/// Numeric value of a risk label: low 0.25, medium 0.50, high 1.00.
double risk_value(RiskLevel level);
double risk_value(const std::string& label);

/// Fixed risk-type vocabulary; off-vocabulary strings from an LLM are kept
/// but flagged.
bool known_risk_type(const std::string& name);

struct RiskAnnotation {
  std::string type1;  // canonical: type1 <= type2 lexicographically
  std::string type2;
  RiskLevel danger_level = RiskLevel::low;
  std::vector<std::string> risk_type;
  std::string llm_reason;
  std::string source = "builtin";              // builtin | llm
  std::vector<std::string> unknown_risk_types;  // off-vocabulary entries, flagged

  double value() const { return risk_value(danger_level); }
};

std::string canonical_pair_key(const std::string& type1, const std::string& type2);

/// Parses + validates a backend JSON payload against the annotation schema.
/// Throws Error(SchemaViolation) with the raw payload attached.
RiskAnnotation parse_annotation_json(const std::string& payload);

class AnnotationBackend {
public:
  virtual ~AnnotationBackend() = default;
  virtual RiskAnnotation annotate(const std::string& type1, const std::string& type2) = 0;
  virtual std::string id() const = 0;
  /// Number of annotate() calls served so far (idempotence checks).
  virtual uint64_t calls() const = 0;
};

/// Pair-keyed annotation store; concurrent reads, serialized writes.
class AnnotationCache {
public:
  AnnotationCache() = default;
  AnnotationCache(const AnnotationCache& other);
  AnnotationCache& operator=(const AnnotationCache& other);

  bool contains(const std::string& type1, const std::string& type2) const;
  /// Throws Error(MissingAnnotation) when absent.
  RiskAnnotation get(const std::string& type1, const std::string& type2) const;
  void put(RiskAnnotation annotation);
  size_t size() const;

  std::map<std::string, RiskAnnotation> entries() const;

  /// Pretty-printed JSON map, canonical key order, stable field order.
  std::string to_json_string() const;
  static AnnotationCache from_json_string(const std::string& text);
  void save(const std::string& path) const;
  static AnnotationCache load(const std::string& path);

private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, RiskAnnotation> entries_;
};

/// Returns the cached annotation or queries the backend, validates,
/// canonicalizes, caches and returns. Symmetric in (type1, type2).
RiskAnnotation annotate_pair(const std::string& type1, const std::string& type2,
                             AnnotationBackend& backend, AnnotationCache& cache);

/// Annotates many pairs with bounded parallelism; a pair is queried at most
/// once even when requested concurrently.
void annotate_pairs(const std::vector<std::pair<std::string, std::string>>& pairs,
                    AnnotationBackend& backend, AnnotationCache& cache, int parallelism = 4);

/// Deterministic offline substitute for the LLM annotator.
class BuiltinAnnotationBackend : public AnnotationBackend {
public:
  RiskAnnotation annotate(const std::string& type1, const std::string& type2) override;
  std::string id() const override { return "builtin"; }
  uint64_t calls() const override { return calls_.load(); }

private:
  std::atomic<uint64_t> calls_{0};
};

/// Complete table over every unordered catalog pair including self-pairs.
AnnotationCache builtin_risk_table();

}  // namespace riskgraph
