#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "riskgraph/risk.hpp"
#include "riskgraph/scene.hpp"

namespace riskgraph {

enum class SpMode : uint8_t {
  clamped,        // 1 / max(distance, DT)
  paper_literal,  // 1 / max(distance, eps) below DT, 1 / DT above
};

const char* to_string(SpMode mode);
SpMode sp_mode_from_string(const std::string& name);

enum class EdgePolicy : uint8_t { complete, radius };

struct GraphConfig {
  double dt = kDefaultDT;       // distance threshold, meters
  SpMode sp_mode = SpMode::clamped;
  double label_threshold = 1.0; // hazardous iff danger score >= this
  EdgePolicy edge_policy = EdgePolicy::complete;
  double radius = 2.0;          // used when edge_policy == radius
  double epsilon = 1e-6;        // minimum distance guard

  void check() const;
};

/// Inverse-distance spatial proximity, clamped by DT.
double spatial_proximity(double dist, const GraphConfig& config);

/// Danger score S = r * SP. r must be one of the risk-level values.
double danger_score(double r, double sp);

struct EdgeRecord {
  int i = 0;  // node indices, i < j
  int j = 0;
  double distance = 0.0;
  double sp = 0.0;
  double r = 0.0;             // annotation value; label side only, never a feature
  double score = 0.0;         // danger score S = r * sp
  bool label = false;         // S >= label_threshold
  std::vector<double> features;  // model-side inputs, see docs/graph_format.md
};

/// Number of per-edge feature components.
size_t edge_feature_dim();
/// Number of per-node feature components.
size_t node_feature_dim();

struct SafetyGraph {
  std::string scene_id;
  Eigen::MatrixXd X;  // |V| x d_node node features
  Eigen::Matrix<uint8_t, Eigen::Dynamic, Eigen::Dynamic> A;  // adjacency, zero diagonal
  std::vector<EdgeRecord> edges;
  std::vector<std::string> node_ids;   // node index -> entity id
  std::vector<int> node_categories;    // node index -> catalog index

  int num_nodes() const { return static_cast<int>(node_ids.size()); }

  std::string to_json_line() const;
  static SafetyGraph from_json_line(const std::string& line);
};

SafetyGraph build_graph(const Scene& scene, const AnnotationCache& cache,
                        const GraphConfig& config);

struct LabelStats {
  size_t edge_count = 0;
  size_t positive_count = 0;
  double positive_rate = 0.0;
};

LabelStats label_stats(const std::vector<SafetyGraph>& graphs);

void write_graphs_jsonl(const std::vector<SafetyGraph>& graphs, const std::string& path);
std::vector<SafetyGraph> read_graphs_jsonl(const std::string& path);

}  // namespace riskgraph
