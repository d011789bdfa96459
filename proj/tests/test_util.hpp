#pragma once

#include <vector>

#include "riskgraph/graphormer.hpp"
#include "riskgraph/rng.hpp"

namespace riskgraph::testing {

/// Random dense-ish graph with synthetic features; labels ~25% positive.
inline GraphTensors make_random_graph(Rng& rng, int n, int d_node, int d_edge,
                                      double p_edge = 0.7) {
  GraphTensors g;
  g.x.resize(n, d_node);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d_node; ++k) g.x(i, k) = rng.uniform(-1.0, 1.0);
  g.a = Eigen::Matrix<uint8_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
  std::vector<std::vector<double>> feats;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (rng.next_double() >= p_edge) continue;
      g.a(i, j) = g.a(j, i) = 1;
      g.edge_index.push_back({i, j});
      std::vector<double> f(static_cast<size_t>(d_edge));
      for (auto& v : f) v = rng.uniform(-1.0, 1.0);
      feats.push_back(std::move(f));
      g.labels.push_back(rng.next_bool(0.25) ? 1 : 0);
    }
  }
  g.edge_features.resize(static_cast<Eigen::Index>(feats.size()), d_edge);
  for (size_t e = 0; e < feats.size(); ++e)
    for (int k = 0; k < d_edge; ++k)
      g.edge_features(static_cast<Eigen::Index>(e), k) = feats[e][static_cast<size_t>(k)];
  return g;
}

inline Parameters make_params(int d_node, int d_edge, int layers, int heads, int hidden, int ff,
                              uint64_t seed) {
  ModelConfig cfg;
  cfg.layers = layers;
  cfg.heads = heads;
  cfg.hidden_dim = hidden;
  cfg.ff_dim = ff;
  cfg.node_dim = d_node;
  cfg.edge_dim = d_edge;
  cfg.seed = seed;
  return init_model(cfg);
}

inline double total_loss(const Parameters& params, const GraphTensors& g,
                         const TrainConfig& cfg) {
  return focal_loss(forward(params, g).p, g.labels, cfg).loss;
}

}  // namespace riskgraph::testing
