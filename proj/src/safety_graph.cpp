#include "riskgraph/safety_graph.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "riskgraph/errors.hpp"

namespace riskgraph {

using nlohmann::ordered_json;

const char* to_string(SpMode mode) {
  return mode == SpMode::clamped ? "clamped" : "paper_literal";
}

SpMode sp_mode_from_string(const std::string& name) {
  if (name == "clamped") return SpMode::clamped;
  if (name == "paper_literal" || name == "paper-literal") return SpMode::paper_literal;
  fail(ErrorCode::BadConfig, "unknown sp mode '" + name + "'");
}

void GraphConfig::check() const {
  if (dt <= 0.0) fail(ErrorCode::BadConfig, "DT must be > 0");
  if (label_threshold <= 0.0) fail(ErrorCode::BadConfig, "label threshold must be > 0");
  if (edge_policy == EdgePolicy::radius && radius <= 0.0)
    fail(ErrorCode::BadConfig, "radius must be > 0");
  if (epsilon <= 0.0) fail(ErrorCode::BadConfig, "epsilon must be > 0");
}

double spatial_proximity(double dist, const GraphConfig& config) {
  if (config.sp_mode == SpMode::clamped) return 1.0 / std::max(dist, config.dt);
  // literal transcription of the piecewise form, epsilon-guarded at zero
  if (dist <= config.dt) return 1.0 / std::max(dist, config.epsilon);
  return 1.0 / config.dt;
}

double danger_score(double r, double sp) {
  if (r != 0.25 && r != 0.50 && r != 1.00)
    fail(ErrorCode::InvalidRiskValue, "r must be one of {0.25, 0.50, 1.00}");
  if (!(sp > 0.0)) fail(ErrorCode::InvalidRiskValue, "sp must be > 0");
  return r * sp;
}

size_t node_feature_dim() {
  return Catalog::instance().size() + 4 /*attrs*/ + 1 /*is_agent*/ + 3 /*position*/;
}

size_t edge_feature_dim() { return 2 /*distance, sp*/ + 3 /*|displacement|*/ + 5 /*pair flags*/; }

namespace {

/// Order-invariant pair flags: agent x {hot, sharp, electrical, water} plus
/// water x electrical between objects. Uses per-entity attributes so runtime
/// attribute changes show up in the features.
void pair_flags(const Entity& a, const Entity& b, std::vector<double>& out) {
  auto cross = [&](Attribute attr) {
    return (a.is_agent && (b.attributes & attr)) || (b.is_agent && (a.attributes & attr));
  };
  out.push_back(cross(kAttrHot) ? 1.0 : 0.0);
  out.push_back(cross(kAttrSharp) ? 1.0 : 0.0);
  out.push_back(cross(kAttrElectrical) ? 1.0 : 0.0);
  out.push_back(cross(kAttrWaterSource) ? 1.0 : 0.0);
  const bool water_elec =
      ((a.attributes & kAttrWaterSource) && (b.attributes & kAttrElectrical)) ||
      ((b.attributes & kAttrWaterSource) && (a.attributes & kAttrElectrical));
  out.push_back(water_elec ? 1.0 : 0.0);
}

}  // namespace

SafetyGraph build_graph(const Scene& scene, const AnnotationCache& cache,
                        const GraphConfig& config) {
  config.check();
  const auto& catalog = Catalog::instance();
  const int n = static_cast<int>(scene.entities.size());

  SafetyGraph g;
  g.scene_id = scene.id;
  g.X = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(node_feature_dim()));
  g.A = Eigen::Matrix<uint8_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
  g.node_ids.reserve(static_cast<size_t>(n));

  const auto n_kinds = static_cast<Eigen::Index>(catalog.size());
  for (int i = 0; i < n; ++i) {
    const Entity& e = scene.entities[static_cast<size_t>(i)];
    g.node_ids.push_back(e.id);
    g.node_categories.push_back(e.category);
    g.X(i, e.category) = 1.0;
    g.X(i, n_kinds + 0) = e.attributes & kAttrHot ? 1.0 : 0.0;
    g.X(i, n_kinds + 1) = e.attributes & kAttrSharp ? 1.0 : 0.0;
    g.X(i, n_kinds + 2) = e.attributes & kAttrElectrical ? 1.0 : 0.0;
    g.X(i, n_kinds + 3) = e.attributes & kAttrWaterSource ? 1.0 : 0.0;
    g.X(i, n_kinds + 4) = e.is_agent ? 1.0 : 0.0;
    g.X(i, n_kinds + 5) = e.position[0] / kRoomScale;
    g.X(i, n_kinds + 6) = e.position[1] / kRoomScale;
    g.X(i, n_kinds + 7) = e.position[2] / kRoomScale;
  }

  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Entity& a = scene.entities[static_cast<size_t>(i)];
      const Entity& b = scene.entities[static_cast<size_t>(j)];
      const double dist = distance(a.position, b.position);
      if (config.edge_policy == EdgePolicy::radius && dist > config.radius) continue;

      EdgeRecord rec;
      rec.i = i;
      rec.j = j;
      rec.distance = dist;
      rec.sp = spatial_proximity(dist, config);
      rec.r = cache.get(a.category_name(), b.category_name()).value();
      rec.score = danger_score(rec.r, rec.sp);
      rec.label = rec.score >= config.label_threshold;

      rec.features.reserve(edge_feature_dim());
      rec.features.push_back(dist / kRoomScale);
      rec.features.push_back(rec.sp);
      rec.features.push_back(std::abs(a.position[0] - b.position[0]) / kRoomScale);
      rec.features.push_back(std::abs(a.position[1] - b.position[1]) / kRoomScale);
      rec.features.push_back(std::abs(a.position[2] - b.position[2]) / kRoomScale);
      pair_flags(a, b, rec.features);

      g.A(i, j) = 1;
      g.A(j, i) = 1;
      g.edges.push_back(std::move(rec));
    }
  }
  return g;
}

LabelStats label_stats(const std::vector<SafetyGraph>& graphs) {
  if (graphs.empty()) fail(ErrorCode::BadConfig, "label_stats over empty graph list");
  LabelStats s;
  for (const auto& g : graphs) {
    s.edge_count += g.edges.size();
    for (const auto& e : g.edges)
      if (e.label) ++s.positive_count;
  }
  s.positive_rate = s.edge_count ? static_cast<double>(s.positive_count) /
                                       static_cast<double>(s.edge_count)
                                 : 0.0;
  return s;
}

std::string SafetyGraph::to_json_line() const {
  ordered_json j;
  j["scene_id"] = scene_id;
  j["num_nodes"] = num_nodes();
  j["nodes"] = node_ids;
  ordered_json cats = ordered_json::array();
  for (int c : node_categories) cats.push_back(Catalog::instance().at(c).name);
  j["categories"] = std::move(cats);
  ordered_json x = ordered_json::array();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index k = 0; k < X.cols(); ++k) row.push_back(X(i, k));
    x.push_back(std::move(row));
  }
  j["x"] = std::move(x);
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index k = 0; k < A.cols(); ++k) row.push_back(static_cast<int>(A(i, k)));
    a.push_back(std::move(row));
  }
  j["a"] = std::move(a);
  ordered_json es = ordered_json::array();
  for (const auto& e : edges) {
    ordered_json je;
    je["i"] = e.i;
    je["j"] = e.j;
    je["distance"] = e.distance;
    je["sp"] = e.sp;
    je["r"] = e.r;
    je["danger_score"] = e.score;
    je["label"] = e.label;
    je["features"] = e.features;
    es.push_back(std::move(je));
  }
  j["edges"] = std::move(es);
  return j.dump();
}

SafetyGraph SafetyGraph::from_json_line(const std::string& line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::IoError, std::string("bad graph JSON: ") + e.what());
  }
  SafetyGraph g;
  g.scene_id = j.at("scene_id").get<std::string>();
  const int n = j.at("num_nodes").get<int>();
  g.node_ids = j.at("nodes").get<std::vector<std::string>>();
  for (const auto& name : j.at("categories"))
    g.node_categories.push_back(Catalog::instance().require(name.get<std::string>()));
  g.X = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(j.at("x").at(0).size()));
  for (int i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < g.X.cols(); ++k)
      g.X(i, k) = j.at("x").at(static_cast<size_t>(i)).at(static_cast<size_t>(k)).get<double>();
  g.A = Eigen::Matrix<uint8_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      g.A(i, k) = static_cast<uint8_t>(
          j.at("a").at(static_cast<size_t>(i)).at(static_cast<size_t>(k)).get<int>());
  for (const auto& je : j.at("edges")) {
    EdgeRecord e;
    e.i = je.at("i").get<int>();
    e.j = je.at("j").get<int>();
    e.distance = je.at("distance").get<double>();
    e.sp = je.at("sp").get<double>();
    e.r = je.at("r").get<double>();
    e.score = je.at("danger_score").get<double>();
    e.label = je.at("label").get<bool>();
    e.features = je.at("features").get<std::vector<double>>();
    g.edges.push_back(std::move(e));
  }
  return g;
}

void write_graphs_jsonl(const std::vector<SafetyGraph>& graphs, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  for (const auto& g : graphs) f << g.to_json_line() << "\n";
}

std::vector<SafetyGraph> read_graphs_jsonl(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot open " + path);
  std::vector<SafetyGraph> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    out.push_back(SafetyGraph::from_json_line(line));
  }
  return out;
}

}  // namespace riskgraph
