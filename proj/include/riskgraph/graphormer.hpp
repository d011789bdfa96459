#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "riskgraph/safety_graph.hpp"

namespace riskgraph {

struct ModelConfig {
  int layers = 2;
  int heads = 4;
  int hidden_dim = 32;  // must be divisible by heads
  int ff_dim = 64;
  int node_dim = 0;  // input feature dims, fixed by the graph encoding
  int edge_dim = 0;
  uint64_t seed = 0;

  int head_dim() const { return hidden_dim / heads; }
  void check() const;
};

struct LayerParams {
  Eigen::MatrixXd wq, wk, wv;  // hidden x hidden, heads as column blocks
  Eigen::MatrixXd wo;          // hidden x hidden
  Eigen::VectorXd bo;
  Eigen::MatrixXd web;  // edge_dim x heads, per-head edge bias projection
  Eigen::VectorXd beb;  // heads
  Eigen::VectorXd ln1_g, ln1_b;
  Eigen::MatrixXd w1;  // hidden x ff
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // ff x hidden
  Eigen::VectorXd b2;
  Eigen::VectorXd ln2_g, ln2_b;
};

/// View over one parameter array; the declared order of views is the
/// checkpoint serialization order.
struct ParamView {
  std::string name;
  double* data;
  size_t size;
};

struct Parameters {
  ModelConfig config;
  Eigen::MatrixXd w_in;  // node_dim x hidden
  Eigen::VectorXd b_in;
  std::vector<LayerParams> layers;
  Eigen::VectorXd w_cls;  // 2*hidden + edge_dim
  double b_cls = 0.0;

  std::vector<ParamView> views();
  std::vector<ParamView> views() const;  // const data exposed for reading
  size_t count() const;
  bool all_finite() const;
  /// Zero-filled clone with identical shapes (gradient / optimizer state).
  Parameters zeros_like() const;
};

Parameters init_model(const ModelConfig& config);

/// Model-side tensors of one graph.
struct GraphTensors {
  Eigen::MatrixXd x;  // n x node_dim
  Eigen::Matrix<uint8_t, Eigen::Dynamic, Eigen::Dynamic> a;
  std::vector<std::array<int, 2>> edge_index;  // i < j
  Eigen::MatrixXd edge_features;               // m x edge_dim
  std::vector<uint8_t> labels;                 // training targets, may be empty

  int num_nodes() const { return static_cast<int>(x.rows()); }
  int num_edges() const { return static_cast<int>(edge_index.size()); }

  static GraphTensors from_graph(const SafetyGraph& g);
};

/// Per-head attention-bias matrices. Adjacent pairs carry the projected edge
/// feature (symmetric), the diagonal is 0, non-adjacent pairs are -inf so the
/// softmax assigns them exactly zero mass.
std::vector<Eigen::MatrixXd> edge_bias(const GraphTensors& g, const LayerParams& lp, int heads);

struct AttentionResult {
  Eigen::MatrixXd h_out;                  // after output projection, residual, layer norm
  std::vector<Eigen::MatrixXd> alpha;     // per-head attention weights
};

/// One attention sublayer: softmax(QK^T / sqrt(head_dim) + bias) per head,
/// concat, output projection, residual, layer norm.
AttentionResult attention_layer(const Eigen::MatrixXd& h,
                                const std::vector<Eigen::MatrixXd>& bias, const LayerParams& lp,
                                int heads);

struct ForwardResult {
  Eigen::MatrixXd embeddings;  // n x hidden
  Eigen::VectorXd logits;      // per edge
  Eigen::VectorXd p;           // per edge, in (0,1)
};

ForwardResult forward(const Parameters& params, const GraphTensors& g);

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 50;
  double gamma = 2.0;      // focusing exponent
  double alpha_pos = 0.9;  // w = alpha_pos for positives, 1 - alpha_pos otherwise
  double clip_norm = 1.0;
  uint64_t seed = 0;
  double probe_threshold = 0.5;

  void check() const;
};

struct FocalResult {
  double loss = 0.0;
  Eigen::VectorXd dloss_dp;
};

/// Focal loss sum(-w * (1 - p_t)^gamma * log(p_t)) with explicit class
/// weights, plus its analytic derivative in p.
FocalResult focal_loss(const Eigen::VectorXd& p, const std::vector<uint8_t>& y, double gamma,
                       double w_pos, double w_neg);
FocalResult focal_loss(const Eigen::VectorXd& p, const std::vector<uint8_t>& y,
                       const TrainConfig& cfg);

struct GradResult {
  double loss = 0.0;
  Parameters grads;
};

/// Analytic gradients of the focal loss through the full model.
GradResult grad(const Parameters& params, const GraphTensors& g, const TrainConfig& cfg);

struct EpochStats {
  double train_loss = 0.0;  // mean per edge
  double val_loss = 0.0;
  double val_recall = 0.0;
  double val_precision = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
};

struct TrainResult {
  Parameters params;  // best-val-loss snapshot
  TrainHistory history;
};

/// Adam over per-graph focal-loss gradients with global-norm clipping and
/// seed-deterministic shuffling.
TrainResult train(const Parameters& init, const std::vector<GraphTensors>& train_graphs,
                  const std::vector<GraphTensors>& val_graphs, const TrainConfig& cfg,
                  const std::function<void(int, const EpochStats&)>& on_epoch = nullptr);

void save_checkpoint(const Parameters& params, const std::string& path);
Parameters load_checkpoint(const std::string& path);

}  // namespace riskgraph
