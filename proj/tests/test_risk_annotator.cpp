#include <doctest.h>

#include <algorithm>
#include <thread>

#include "riskgraph/errors.hpp"
#include "riskgraph/risk.hpp"

using namespace riskgraph;

TEST_CASE("risk level values are the exact mapped constants") {
  CHECK(risk_value(RiskLevel::high) == 1.00);
  CHECK(risk_value(RiskLevel::medium) == 0.50);
  CHECK(risk_value(RiskLevel::low) == 0.25);
  CHECK(risk_value("high") == 1.00);
  try {
    risk_value("extreme");
    FAIL("expected UnknownRiskLevel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownRiskLevel);
  }
}

TEST_CASE("builtin table covers every unordered catalog pair plus self-pairs") {
  const AnnotationCache table = builtin_risk_table();
  const size_t n = Catalog::instance().size();
  CHECK(table.size() == n * (n - 1) / 2 + n);
}

TEST_CASE("builtin annotations match the attribute interaction rules") {
  const AnnotationCache table = builtin_risk_table();

  const RiskAnnotation baby_kettle = table.get("Baby", "Kettle");
  CHECK(baby_kettle.danger_level == RiskLevel::high);
  for (const char* t : {"thermal", "physical", "water"})
    CHECK(std::count(baby_kettle.risk_type.begin(), baby_kettle.risk_type.end(), t) == 1);

  CHECK(table.get("Child", "StoveBurner").danger_level == RiskLevel::high);  // alias for Baby
  CHECK(table.get("Sofa", "Apple").danger_level == RiskLevel::low);
  CHECK(table.get("Bed", "Sofa").danger_level == RiskLevel::low);
  CHECK(table.get("Sink", "Toaster").danger_level == RiskLevel::medium);  // water x electrical
  CHECK(table.get("Robot", "Knife").danger_level == RiskLevel::low);      // robot is the actor
  CHECK(table.get("Adult", "StoveBurner").danger_level == RiskLevel::medium);
  // self-pairs: low unless hot or sharp
  CHECK(table.get("Knife", "Knife").danger_level == RiskLevel::medium);
  CHECK(table.get("Sofa", "Sofa").danger_level == RiskLevel::low);
}

TEST_CASE("annotate_pair is symmetric and idempotent (no second backend call)") {
  BuiltinAnnotationBackend backend;
  AnnotationCache cache;
  const RiskAnnotation ab = annotate_pair("Kettle", "Baby", backend, cache);
  const uint64_t calls_after_first = backend.calls();
  const RiskAnnotation ba = annotate_pair("Baby", "Kettle", backend, cache);
  CHECK(backend.calls() == calls_after_first);  // served from cache
  CHECK(ab.type1 == ba.type1);
  CHECK(ab.type2 == ba.type2);
  CHECK(ab.danger_level == ba.danger_level);
  CHECK(ab.risk_type == ba.risk_type);
  CHECK(ab.llm_reason == ba.llm_reason);
  CHECK(ab.type1 == "Baby");  // canonical order
  CHECK(ab.type2 == "Kettle");
}

TEST_CASE("annotate_pair rejects categories outside the catalog") {
  BuiltinAnnotationBackend backend;
  AnnotationCache cache;
  CHECK_THROWS_AS(annotate_pair("Baby", "Unicorn", backend, cache), Error);
}

TEST_CASE("annotation JSON schema validation") {
  // shaped like the LLM reply format
  const std::string good = R"({
    "type1": "Baby",
    "type2": "Kettle",
    "danger_level": "high",
    "risk_type": ["thermal", "physical", "water"],
    "llm_reason": "hot liquid close to an infant"
  })";
  const RiskAnnotation a = parse_annotation_json(good);
  CHECK(a.danger_level == RiskLevel::high);
  CHECK(a.source == "llm");
  CHECK(a.unknown_risk_types.empty());

  auto expect_schema_violation = [](const std::string& payload) {
    try {
      parse_annotation_json(payload);
      FAIL("expected SchemaViolation for ", payload);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SchemaViolation);
      // raw payload is attached for debugging
      CHECK(std::string(e.what()).find("payload") != std::string::npos);
    }
  };
  expect_schema_violation("not json at all");
  expect_schema_violation(R"({"type1": "A", "type2": "B"})");
  expect_schema_violation(
      R"({"type1": "A", "type2": "B", "danger_level": "catastrophic", "risk_type": [], "llm_reason": ""})");
  // nonempty risk_type required above low
  expect_schema_violation(
      R"({"type1": "A", "type2": "B", "danger_level": "high", "risk_type": [], "llm_reason": "x"})");
}

TEST_CASE("off-vocabulary risk types are preserved but flagged") {
  const std::string payload = R"({
    "type1": "Baby", "type2": "Lamp", "danger_level": "medium",
    "risk_type": ["electrical", "gravitational"], "llm_reason": "lamp may topple"
  })";
  const RiskAnnotation a = parse_annotation_json(payload);
  CHECK(std::count(a.risk_type.begin(), a.risk_type.end(), "gravitational") == 1);
  REQUIRE(a.unknown_risk_types.size() == 1);
  CHECK(a.unknown_risk_types[0] == "gravitational");
}

TEST_CASE("every builtin annotation validates against the schema") {
  for (const auto& [key, a] : builtin_risk_table().entries()) {
    CHECK(a.type1 <= a.type2);
    if (a.danger_level != RiskLevel::low) CHECK_FALSE(a.risk_type.empty());
    CHECK_FALSE(a.llm_reason.empty());
    for (const auto& t : a.risk_type) CHECK(known_risk_type(t));
  }
}

TEST_CASE("cache file round-trips losslessly") {
  const AnnotationCache table = builtin_risk_table();
  const std::string path = "/tmp/riskgraph_test_annotations.json";
  table.save(path);
  const AnnotationCache back = AnnotationCache::load(path);
  CHECK(back.to_json_string() == table.to_json_string());
}

TEST_CASE("missing annotation raises MissingAnnotation") {
  AnnotationCache cache;
  try {
    cache.get("Baby", "Knife");
    FAIL("expected MissingAnnotation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingAnnotation);
  }
}

TEST_CASE("parallel annotation queries each pair at most once") {
  BuiltinAnnotationBackend backend;
  AnnotationCache cache;
  std::vector<std::pair<std::string, std::string>> pairs;
  const auto& kinds = Catalog::instance().kinds();
  for (size_t i = 0; i < kinds.size(); ++i)
    for (size_t j = i; j < kinds.size(); ++j) {
      pairs.emplace_back(kinds[i].name, kinds[j].name);
      pairs.emplace_back(kinds[j].name, kinds[i].name);  // duplicates on purpose
    }
  annotate_pairs(pairs, backend, cache, 4);
  const size_t n = kinds.size();
  CHECK(cache.size() == n * (n - 1) / 2 + n);
  CHECK(backend.calls() == cache.size());
}
