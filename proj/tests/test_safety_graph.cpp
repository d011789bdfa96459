#include <doctest.h>

#include <algorithm>

#include "riskgraph/errors.hpp"
#include "riskgraph/rng.hpp"
#include "riskgraph/safety_graph.hpp"

using namespace riskgraph;

namespace {

Entity make(const std::string& kind, int ordinal, double x, double y) {
  const auto& catalog = Catalog::instance();
  Entity e;
  e.category = catalog.require(kind);
  e.id = catalog.at(e.category).name + "_" + std::to_string(ordinal);
  e.position = {x, y, 0.0};
  e.is_agent = catalog.at(e.category).is_agent();
  e.attributes = catalog.at(e.category).attrs;
  return e;
}

Scene baby_knife_scene(double dist) {
  Scene s;
  s.id = "synthetic";
  s.room_type = RoomType::kitchen;
  s.entities = {make("Knife", 0, 1.0, 1.0), make("Baby", 1, 1.0 + dist, 1.0),
                make("Robot", 2, 4.0, 3.0)};
  return s;
}

}  // namespace

TEST_CASE("spatial proximity values at and around DT") {
  GraphConfig cfg;  // DT = 0.5
  SUBCASE("both modes coincide at the threshold") {
    cfg.sp_mode = SpMode::clamped;
    CHECK(spatial_proximity(0.5, cfg) == doctest::Approx(2.0));
    cfg.sp_mode = SpMode::paper_literal;
    CHECK(spatial_proximity(0.5, cfg) == doctest::Approx(2.0));
  }
  SUBCASE("clamped mode") {
    cfg.sp_mode = SpMode::clamped;
    CHECK(spatial_proximity(0.25, cfg) == doctest::Approx(2.0));  // clamp active
    CHECK(spatial_proximity(2.0, cfg) == doctest::Approx(0.5));   // 1/distance branch
  }
  SUBCASE("paper-literal mode diverges below DT, epsilon-guarded at zero") {
    cfg.sp_mode = SpMode::paper_literal;
    CHECK(spatial_proximity(0.25, cfg) == doctest::Approx(4.0));
    CHECK(spatial_proximity(0.0, cfg) == doctest::Approx(1.0 / cfg.epsilon));
    CHECK(spatial_proximity(2.0, cfg) == doctest::Approx(2.0));  // 1/DT above DT
  }
}

TEST_CASE("clamped SP is non-increasing in distance and bounded by 1/DT") {
  GraphConfig cfg;
  Rng rng(31);
  std::vector<double> ds;
  for (int i = 0; i < 500; ++i) ds.push_back(rng.uniform(0.0, 8.0));
  std::sort(ds.begin(), ds.end());
  double prev = spatial_proximity(ds.front(), cfg);
  for (double d : ds) {
    const double sp = spatial_proximity(d, cfg);
    CHECK(sp <= prev + 1e-15);
    CHECK(sp > 0.0);
    CHECK(sp <= 1.0 / cfg.dt + 1e-15);
    prev = sp;
  }
}

TEST_CASE("SP is continuous at DT in both modes") {
  GraphConfig cfg;
  for (SpMode mode : {SpMode::clamped, SpMode::paper_literal}) {
    cfg.sp_mode = mode;
    CHECK(std::abs(spatial_proximity(cfg.dt - 1e-9, cfg) - 1.0 / cfg.dt) < 1e-6);
    CHECK(std::abs(spatial_proximity(cfg.dt + 1e-9, cfg) - 1.0 / cfg.dt) < 1e-6);
  }
}

TEST_CASE("danger score is the exact product with validated inputs") {
  CHECK(danger_score(1.00, 2.0) == 2.0);
  CHECK(danger_score(0.50, 2.0) == 1.0);  // medium at contact distance hits theta_label
  CHECK(danger_score(0.25, 0.5) == 0.125);
  for (auto bad : {0.0, 0.3, 1.5}) {
    try {
      danger_score(bad, 1.0);
      FAIL("expected InvalidRiskValue");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidRiskValue);
    }
  }
  CHECK_THROWS_AS(danger_score(0.25, 0.0), Error);  // sp must be positive
}

TEST_CASE("build_graph edge counts follow the edge policy") {
  const AnnotationCache cache = builtin_risk_table();
  GraphConfig cfg;

  Scene lonely;
  lonely.id = "one";
  lonely.entities = {make("Knife", 0, 1, 1)};
  CHECK(build_graph(lonely, cache, cfg).edges.empty());  // no pairs

  Scene five;
  five.id = "five";
  five.entities = {make("Knife", 0, 0.5, 0.5), make("Apple", 1, 1, 1), make("Sofa", 2, 2, 2),
                   make("Baby", 3, 3, 1), make("Robot", 4, 4, 3)};
  const SafetyGraph complete = build_graph(five, cache, cfg);
  CHECK(complete.edges.size() == 10);  // C(5,2)

  cfg.edge_policy = EdgePolicy::radius;
  cfg.radius = 1.5;
  const SafetyGraph sparse = build_graph(five, cache, cfg);
  CHECK(sparse.edges.size() < 10);
  for (const auto& e : sparse.edges) CHECK(e.distance <= cfg.radius);
  // adjacency stays consistent with the retained edges
  size_t adj = 0;
  for (Eigen::Index i = 0; i < sparse.A.rows(); ++i)
    for (Eigen::Index j = i + 1; j < sparse.A.cols(); ++j) adj += sparse.A(i, j);
  CHECK(adj == sparse.edges.size());
}

TEST_CASE("a baby 0.3m from a knife is labeled hazardous under defaults") {
  const AnnotationCache cache = builtin_risk_table();
  const SafetyGraph g = build_graph(baby_knife_scene(0.3), cache, GraphConfig{});
  const EdgeRecord* edge = nullptr;
  for (const auto& e : g.edges)
    if (g.node_ids[static_cast<size_t>(e.i)] == "Knife_0" &&
        g.node_ids[static_cast<size_t>(e.j)] == "Baby_1")
      edge = &e;
  REQUIRE(edge != nullptr);
  CHECK(edge->r == 1.00);
  CHECK(edge->sp == doctest::Approx(2.0));  // 1/max(0.3, 0.5)
  CHECK(edge->score == doctest::Approx(2.0));
  CHECK(edge->label);

  // the same pair at 1.2m scores 1/1.2 < theta_label
  const SafetyGraph far = build_graph(baby_knife_scene(1.2), cache, GraphConfig{});
  for (const auto& e : far.edges)
    if (far.node_ids[static_cast<size_t>(e.i)] == "Knife_0" &&
        far.node_ids[static_cast<size_t>(e.j)] == "Baby_1")
      CHECK_FALSE(e.label);
}

TEST_CASE("feature/label separation: risk values drive labels only") {
  const AnnotationCache cache = builtin_risk_table();
  // all-low variant of the cache ("zeroed" risk side)
  AnnotationCache lowered;
  for (auto [key, a] : cache.entries()) {
    a.danger_level = RiskLevel::low;
    a.risk_type.clear();
    lowered.put(std::move(a));
  }

  const Scene scene = baby_knife_scene(0.3);
  const SafetyGraph with_risk = build_graph(scene, cache, GraphConfig{});
  const SafetyGraph without_risk = build_graph(scene, lowered, GraphConfig{});

  CHECK(with_risk.X.cwiseEqual(without_risk.X).all());  // bitwise
  CHECK(with_risk.A.cwiseEqual(without_risk.A).all());
  REQUIRE(with_risk.edges.size() == without_risk.edges.size());
  bool labels_differ = false;
  for (size_t e = 0; e < with_risk.edges.size(); ++e) {
    CHECK(with_risk.edges[e].features == without_risk.edges[e].features);  // bitwise
    if (with_risk.edges[e].label != without_risk.edges[e].label) labels_differ = true;
  }
  CHECK(labels_differ);
}

TEST_CASE("edge features never contain r, S or the label") {
  const AnnotationCache cache = builtin_risk_table();
  const SafetyGraph g = build_graph(baby_knife_scene(0.3), cache, GraphConfig{});
  CHECK(node_feature_dim() == Catalog::instance().size() + 8);
  for (const auto& e : g.edges) CHECK(e.features.size() == edge_feature_dim());
}

TEST_CASE("build_graph requires full annotation coverage") {
  AnnotationCache empty;
  try {
    build_graph(baby_knife_scene(0.3), empty, GraphConfig{});
    FAIL("expected MissingAnnotation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingAnnotation);
  }
}

TEST_CASE("label_stats counts exactly") {
  const AnnotationCache cache = builtin_risk_table();
  std::vector<SafetyGraph> graphs = {build_graph(baby_knife_scene(0.3), cache, GraphConfig{}),
                                     build_graph(baby_knife_scene(3.0), cache, GraphConfig{})};
  const LabelStats s = label_stats(graphs);
  CHECK(s.edge_count == 6);
  CHECK(s.positive_count == 1);
  CHECK(s.positive_rate == doctest::Approx(1.0 / 6.0));

  // 10,000 edges with 100 positives -> rate 1.0%
  SafetyGraph synthetic;
  synthetic.edges.resize(10000);
  for (size_t i = 0; i < 100; ++i) synthetic.edges[i].label = true;
  CHECK(label_stats({synthetic}).positive_rate == doctest::Approx(0.01));
}

TEST_CASE("generated default dataset has a positive-edge rate near 1%") {
  const AnnotationCache cache = builtin_risk_table();
  const DatasetSplit ds = generate_dataset(120, {90, 15, 15}, 1);
  std::vector<SafetyGraph> graphs;
  for (const auto& scene : ds.train) graphs.push_back(build_graph(scene, cache, GraphConfig{}));
  const LabelStats s = label_stats(graphs);
  MESSAGE("train positive rate = ", s.positive_rate * 100.0, "% over ", s.edge_count, " edges");
  CHECK(s.positive_rate >= 0.005);
  CHECK(s.positive_rate <= 0.02);
}

TEST_CASE("build_graph is deterministic and graphs round-trip through JSONL") {
  const AnnotationCache cache = builtin_risk_table();
  const Scene scene = baby_knife_scene(0.42);
  const SafetyGraph a = build_graph(scene, cache, GraphConfig{});
  const SafetyGraph b = build_graph(scene, cache, GraphConfig{});
  CHECK(a.to_json_line() == b.to_json_line());

  const std::string path = "/tmp/riskgraph_test_graphs.jsonl";
  write_graphs_jsonl({a}, path);
  const auto back = read_graphs_jsonl(path);
  REQUIRE(back.size() == 1);
  CHECK(back[0].to_json_line() == a.to_json_line());
}

TEST_CASE("rescaling all risk values uniformly preserves the danger-score argmax") {
  const AnnotationCache cache = builtin_risk_table();
  const DatasetSplit ds = generate_dataset(8, {8, 0, 0}, 11);
  for (const auto& scene : ds.train) {
    const SafetyGraph g = build_graph(scene, cache, GraphConfig{});
    if (g.edges.empty()) continue;
    auto argmax = [](const std::vector<EdgeRecord>& edges, double scale) {
      size_t best = 0;
      for (size_t e = 1; e < edges.size(); ++e)
        if (edges[e].r * scale * edges[e].sp > edges[best].r * scale * edges[best].sp) best = e;
      return best;
    };
    CHECK(argmax(g.edges, 1.0) == argmax(g.edges, 7.3));
    for (const auto& e : g.edges) CHECK(e.score <= e.sp + 1e-15);  // S <= SP since r <= 1
  }
}
