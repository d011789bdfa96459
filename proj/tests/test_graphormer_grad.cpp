// Gradient and forward-pass verification against independent oracles: a
// scalar-loop reimplementation of the forward equations and central finite
// differences through the focal loss.
#include <doctest.h>

#include <cmath>
#include <vector>

#include "test_util.hpp"

using namespace riskgraph;
using riskgraph::testing::make_params;
using riskgraph::testing::make_random_graph;
using riskgraph::testing::total_loss;

namespace {

using Mat = std::vector<std::vector<double>>;

Mat zeros(int r, int c) {
  return Mat(static_cast<size_t>(r), std::vector<double>(static_cast<size_t>(c), 0.0));
}

double oracle_gelu(double x) { return 0.5 * x * std::erfc(-x / std::sqrt(2.0)); }

Mat oracle_layer_norm(const Mat& x, const Eigen::VectorXd& g, const Eigen::VectorXd& b) {
  const size_t n = x.size();
  const size_t d = x[0].size();
  Mat out = zeros(static_cast<int>(n), static_cast<int>(d));
  for (size_t i = 0; i < n; ++i) {
    double mu = 0.0;
    for (double v : x[i]) mu += v;
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (double v : x[i]) var += (v - mu) * (v - mu);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + 1e-5);
    for (size_t k = 0; k < d; ++k)
      out[i][k] = g(static_cast<Eigen::Index>(k)) * (x[i][k] - mu) * inv +
                  b(static_cast<Eigen::Index>(k));
  }
  return out;
}

/// Per-node / per-head / per-edge scalar-loop forward; shares only the
/// Parameters container with the implementation under test.
Eigen::VectorXd oracle_forward(const Parameters& params, const GraphTensors& g) {
  const auto& cfg = params.config;
  const size_t n = static_cast<size_t>(g.num_nodes());
  const size_t d = static_cast<size_t>(cfg.hidden_dim);
  const size_t dh = d / static_cast<size_t>(cfg.heads);

  Mat h = zeros(static_cast<int>(n), static_cast<int>(d));
  for (size_t i = 0; i < n; ++i)
    for (size_t k = 0; k < d; ++k) {
      double acc = params.b_in(static_cast<Eigen::Index>(k));
      for (int j = 0; j < cfg.node_dim; ++j)
        acc += g.x(static_cast<Eigen::Index>(i), j) * params.w_in(j, static_cast<Eigen::Index>(k));
      h[i][k] = acc;
    }

  for (int l = 0; l < cfg.layers; ++l) {
    const auto& lp = params.layers[static_cast<size_t>(l)];

    std::vector<std::vector<bool>> allowed(n, std::vector<bool>(n, false));
    Mat bias = zeros(cfg.heads, static_cast<int>(n * n));
    for (size_t i = 0; i < n; ++i) allowed[i][i] = true;
    for (int e = 0; e < g.num_edges(); ++e) {
      const size_t i = static_cast<size_t>(g.edge_index[static_cast<size_t>(e)][0]);
      const size_t j = static_cast<size_t>(g.edge_index[static_cast<size_t>(e)][1]);
      allowed[i][j] = allowed[j][i] = true;
      for (int hd = 0; hd < cfg.heads; ++hd) {
        double v = lp.beb(hd);
        for (int k = 0; k < cfg.edge_dim; ++k) v += g.edge_features(e, k) * lp.web(k, hd);
        bias[static_cast<size_t>(hd)][i * n + j] = v;
        bias[static_cast<size_t>(hd)][j * n + i] = v;
      }
    }

    Mat z = zeros(static_cast<int>(n), static_cast<int>(d));
    for (int hd = 0; hd < cfg.heads; ++hd) {
      Mat q = zeros(static_cast<int>(n), static_cast<int>(dh));
      Mat km = zeros(static_cast<int>(n), static_cast<int>(dh));
      Mat vm = zeros(static_cast<int>(n), static_cast<int>(dh));
      for (size_t i = 0; i < n; ++i)
        for (size_t t = 0; t < dh; ++t) {
          double aq = 0.0, ak = 0.0, av = 0.0;
          const Eigen::Index col = static_cast<Eigen::Index>(hd * dh + t);
          for (size_t c = 0; c < d; ++c) {
            aq += h[i][c] * lp.wq(static_cast<Eigen::Index>(c), col);
            ak += h[i][c] * lp.wk(static_cast<Eigen::Index>(c), col);
            av += h[i][c] * lp.wv(static_cast<Eigen::Index>(c), col);
          }
          q[i][t] = aq;
          km[i][t] = ak;
          vm[i][t] = av;
        }
      for (size_t i = 0; i < n; ++i) {
        std::vector<double> score(n, 0.0);
        double mx = -1e300;
        for (size_t j = 0; j < n; ++j) {
          if (!allowed[i][j]) continue;
          double s = bias[static_cast<size_t>(hd)][i * n + j];
          for (size_t t = 0; t < dh; ++t)
            s += q[i][t] * km[j][t] / std::sqrt(static_cast<double>(dh));
          score[j] = s;
          mx = std::max(mx, s);
        }
        double denom = 0.0;
        for (size_t j = 0; j < n; ++j)
          if (allowed[i][j]) denom += std::exp(score[j] - mx);
        for (size_t j = 0; j < n; ++j) {
          if (!allowed[i][j]) continue;
          const double alpha = std::exp(score[j] - mx) / denom;
          for (size_t t = 0; t < dh; ++t) z[i][static_cast<size_t>(hd) * dh + t] += alpha * vm[j][t];
        }
      }
    }

    Mat res1 = zeros(static_cast<int>(n), static_cast<int>(d));
    for (size_t i = 0; i < n; ++i)
      for (size_t k = 0; k < d; ++k) {
        double acc = lp.bo(static_cast<Eigen::Index>(k));
        for (size_t c = 0; c < d; ++c)
          acc += z[i][c] * lp.wo(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k));
        res1[i][k] = h[i][k] + acc;
      }
    Mat h1 = oracle_layer_norm(res1, lp.ln1_g, lp.ln1_b);

    Mat res2 = zeros(static_cast<int>(n), static_cast<int>(d));
    for (size_t i = 0; i < n; ++i) {
      std::vector<double> act(static_cast<size_t>(cfg.ff_dim));
      for (int f = 0; f < cfg.ff_dim; ++f) {
        double acc = lp.b1(f);
        for (size_t c = 0; c < d; ++c) acc += h1[i][c] * lp.w1(static_cast<Eigen::Index>(c), f);
        act[static_cast<size_t>(f)] = oracle_gelu(acc);
      }
      for (size_t k = 0; k < d; ++k) {
        double acc = lp.b2(static_cast<Eigen::Index>(k));
        for (int f = 0; f < cfg.ff_dim; ++f)
          acc += act[static_cast<size_t>(f)] * lp.w2(f, static_cast<Eigen::Index>(k));
        res2[i][k] = h1[i][k] + acc;
      }
    }
    h = oracle_layer_norm(res2, lp.ln2_g, lp.ln2_b);
  }

  Eigen::VectorXd p(g.num_edges());
  for (int e = 0; e < g.num_edges(); ++e) {
    const size_t i = static_cast<size_t>(g.edge_index[static_cast<size_t>(e)][0]);
    const size_t j = static_cast<size_t>(g.edge_index[static_cast<size_t>(e)][1]);
    double logit = params.b_cls;
    for (size_t k = 0; k < d; ++k) {
      logit += 0.5 * params.w_cls(static_cast<Eigen::Index>(k)) * (h[i][k] + h[j][k]);
      logit += 0.5 * params.w_cls(static_cast<Eigen::Index>(d + k)) * (h[j][k] + h[i][k]);
    }
    for (int k = 0; k < cfg.edge_dim; ++k)
      logit += params.w_cls(static_cast<Eigen::Index>(2 * d) + k) * g.edge_features(e, k);
    p(e) = 1.0 / (1.0 + std::exp(-logit));
  }
  return p;
}

}  // namespace

TEST_CASE("vectorized forward matches the scalar-loop oracle on 100 random graphs") {
  Rng rng(42);
  double worst = 0.0;
  int checked = 0;
  for (int trial = 0; trial < 100 || checked < 100; ++trial) {
    REQUIRE(trial < 400);
    const int n = 2 + static_cast<int>(rng.next_below(5));  // up to 6 nodes
    const int d_node = 3 + static_cast<int>(rng.next_below(4));
    const int d_edge = 2 + static_cast<int>(rng.next_below(3));
    GraphTensors g = make_random_graph(rng, n, d_node, d_edge);
    if (g.num_edges() == 0) continue;
    ++checked;
    Parameters params = make_params(d_node, d_edge, 2, 2, 8, 12, 1000 + trial);
    const Eigen::VectorXd got = forward(params, g).p;
    const Eigen::VectorXd want = oracle_forward(params, g);
    REQUIRE(got.size() == want.size());
    worst = std::max(worst, (got - want).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-6);
  MESSAGE("max |vectorized - oracle| over ", checked, " graphs = ", worst);
}

TEST_CASE("analytic gradients match central finite differences (d=8, h=2, L=1, 4 nodes)") {
  Rng rng(7);
  GraphTensors g = make_random_graph(rng, 4, 5, 4, 0.9);
  REQUIRE(g.num_edges() >= 2);
  g.labels[0] = 1;  // ensure both classes appear
  g.labels[1] = 0;

  Parameters params = make_params(5, 4, 1, 2, 8, 16, 99);
  TrainConfig cfg;
  cfg.gamma = 2.0;
  cfg.alpha_pos = 0.9;

  const GradResult analytic = grad(params, g, cfg);

  const double h = 1e-4;
  double max_rel = 0.0;
  auto views = params.views();
  auto grad_views = analytic.grads.views();
  REQUIRE(views.size() == grad_views.size());
  for (size_t a = 0; a < views.size(); ++a) {
    for (size_t k = 0; k < views[a].size; ++k) {
      const double saved = views[a].data[k];
      views[a].data[k] = saved + h;
      const double lp = total_loss(params, g, cfg);
      views[a].data[k] = saved - h;
      const double lm = total_loss(params, g, cfg);
      views[a].data[k] = saved;
      const double fd = (lp - lm) / (2.0 * h);
      const double an = grad_views[a].data[k];
      const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6});
      max_rel = std::max(max_rel, rel);
    }
  }
  MESSAGE("max relative gradient error = ", max_rel);
  CHECK(max_rel <= 1e-4);
}

TEST_CASE("zero-gamma single-edge gradient matches the closed-form logistic gradient") {
  // One edge between two nodes; gamma = 0 and equal class weights reduce the
  // focal loss to weighted cross-entropy, whose classifier-bias gradient is
  // exactly w * (p - y).
  Rng rng(11);
  GraphTensors g = make_random_graph(rng, 2, 3, 2, 1.1);
  REQUIRE(g.num_edges() == 1);

  Parameters params = make_params(3, 2, 1, 2, 8, 8, 5);
  TrainConfig cfg;
  cfg.gamma = 0.0;
  cfg.alpha_pos = 0.5;

  for (uint8_t y : {uint8_t{0}, uint8_t{1}}) {
    g.labels[0] = y;
    const double p = forward(params, g).p(0);
    const GradResult res = grad(params, g, cfg);
    const double expected = 0.5 * (p - static_cast<double>(y));
    CHECK(std::abs(res.grads.b_cls - expected) < 1e-8);
  }
}

TEST_CASE("edge-bias parameters get zero gradient when no pair is adjacent") {
  Rng rng(13);
  GraphTensors g = make_random_graph(rng, 3, 4, 3, 0.0);  // empty edge set
  REQUIRE(g.num_edges() == 0);
  Parameters params = make_params(4, 3, 1, 2, 8, 8, 21);
  TrainConfig cfg;
  const GradResult res = grad(params, g, cfg);
  CHECK(res.loss == 0.0);
  for (const auto& lp : res.grads.layers) {
    CHECK(lp.web.cwiseAbs().maxCoeff() == 0.0);
    CHECK(lp.beb.cwiseAbs().maxCoeff() == 0.0);
  }
}
