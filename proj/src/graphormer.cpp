#include "riskgraph/graphormer.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "riskgraph/errors.hpp"
#include "riskgraph/rng.hpp"

namespace riskgraph {

namespace {

constexpr double kLnEps = 1e-5;
constexpr const char kMagic[8] = {'R', 'G', 'C', 'K', 'P', 'T', '0', '1'};
constexpr uint32_t kCheckpointVersion = 1;
const double kNegInf = -std::numeric_limits<double>::infinity();

double gelu(double x) { return 0.5 * x * std::erfc(-x * M_SQRT1_2); }

double gelu_deriv(double x) {
  const double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return 0.5 * std::erfc(-x * M_SQRT1_2) + x * phi;
}

struct LnCache {
  Eigen::MatrixXd xhat;
  Eigen::VectorXd inv_std;
};

Eigen::MatrixXd layer_norm(const Eigen::MatrixXd& x, const Eigen::VectorXd& g,
                           const Eigen::VectorXd& b, LnCache& cache) {
  const Eigen::Index n = x.rows(), d = x.cols();
  cache.xhat.resize(n, d);
  cache.inv_std.resize(n);
  Eigen::MatrixXd out(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = x.row(i).mean();
    const double var = (x.row(i).array() - mu).square().mean();
    const double inv_std = 1.0 / std::sqrt(var + kLnEps);
    cache.inv_std(i) = inv_std;
    cache.xhat.row(i) = (x.row(i).array() - mu) * inv_std;
    out.row(i) = cache.xhat.row(i).cwiseProduct(g.transpose()) + b.transpose();
  }
  return out;
}

Eigen::MatrixXd layer_norm_backward(const Eigen::MatrixXd& d_out, const LnCache& cache,
                                    const Eigen::VectorXd& g, Eigen::VectorXd& dg,
                                    Eigen::VectorXd& db) {
  const Eigen::Index n = d_out.rows(), d = d_out.cols();
  Eigen::MatrixXd dx(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    dg += d_out.row(i).cwiseProduct(cache.xhat.row(i)).transpose();
    db += d_out.row(i).transpose();
    const Eigen::RowVectorXd dxhat = d_out.row(i).cwiseProduct(g.transpose());
    const double mean_dxhat = dxhat.mean();
    const double mean_dxhat_xhat = dxhat.cwiseProduct(cache.xhat.row(i)).mean();
    dx.row(i) = cache.inv_std(i) *
                (dxhat.array() - mean_dxhat - cache.xhat.row(i).array() * mean_dxhat_xhat);
  }
  return dx;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores) {
  Eigen::MatrixXd out(scores.rows(), scores.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const double m = scores.row(i).maxCoeff();  // diagonal bias is 0, so m is finite
    Eigen::ArrayXd e = (scores.row(i).array() - m).exp();  // exp(-inf) == 0 exactly
    out.row(i) = (e / e.sum()).matrix();
  }
  return out;
}

struct LayerForward {
  Eigen::MatrixXd h_in;
  std::vector<Eigen::MatrixXd> alpha;
  Eigen::MatrixXd q, k, v;  // full n x hidden, heads in column blocks
  Eigen::MatrixXd z;
  Eigen::MatrixXd res1, h1, ff_pre, ff_act, res2, h_out;
  LnCache ln1, ln2;
};

void attention_sublayer(const Eigen::MatrixXd& h_in, const std::vector<Eigen::MatrixXd>& bias,
                        const LayerParams& lp, int heads, LayerForward& c) {
  const Eigen::Index d = h_in.cols();
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  c.h_in = h_in;
  c.q = h_in * lp.wq;
  c.k = h_in * lp.wk;
  c.v = h_in * lp.wv;
  c.z.resize(h_in.rows(), d);
  c.alpha.resize(static_cast<size_t>(heads));
  for (int hd = 0; hd < heads; ++hd) {
    const auto qh = c.q.middleCols(hd * dh, dh);
    const auto kh = c.k.middleCols(hd * dh, dh);
    const Eigen::MatrixXd scores = qh * kh.transpose() * scale + bias[static_cast<size_t>(hd)];
    c.alpha[static_cast<size_t>(hd)] = softmax_rows(scores);
    c.z.middleCols(hd * dh, dh) =
        c.alpha[static_cast<size_t>(hd)] * c.v.middleCols(hd * dh, dh);
  }
  c.res1 = h_in + ((c.z * lp.wo).rowwise() + lp.bo.transpose()).matrix();
  c.h1 = layer_norm(c.res1, lp.ln1_g, lp.ln1_b, c.ln1);
}

void ffn_sublayer(const LayerParams& lp, LayerForward& c) {
  c.ff_pre = (c.h1 * lp.w1).rowwise() + lp.b1.transpose();
  c.ff_act = c.ff_pre.unaryExpr([](double x) { return gelu(x); });
  Eigen::MatrixXd ff_out = (c.ff_act * lp.w2).rowwise() + lp.b2.transpose();
  c.res2 = c.h1 + ff_out;
  c.h_out = layer_norm(c.res2, lp.ln2_g, lp.ln2_b, c.ln2);
}

struct FullForward {
  Eigen::MatrixXd h0;
  std::vector<LayerForward> layers;
  std::vector<std::vector<Eigen::MatrixXd>> bias;  // per layer per head
  Eigen::VectorXd logits, p;
};

void classifier_forward(const Parameters& params, const GraphTensors& g,
                        const Eigen::MatrixXd& h, Eigen::VectorXd& logits, Eigen::VectorXd& p) {
  const Eigen::Index d = h.cols();
  const Eigen::Index de = params.config.edge_dim;
  const auto wa = params.w_cls.segment(0, d);
  const auto wb = params.w_cls.segment(d, d);
  const auto we = params.w_cls.segment(2 * d, de);
  const int m = g.num_edges();
  logits.resize(m);
  p.resize(m);
  for (int e = 0; e < m; ++e) {
    const int i = g.edge_index[static_cast<size_t>(e)][0];
    const int j = g.edge_index[static_cast<size_t>(e)][1];
    // symmetrized pairwise readout: mean over both endpoint orders
    const double two_orders = wa.dot(h.row(i)) + wb.dot(h.row(j)) + wa.dot(h.row(j)) +
                              wb.dot(h.row(i));
    const double logit =
        0.5 * two_orders + we.dot(g.edge_features.row(e)) + params.b_cls;
    logits(e) = logit;
    const double s = logit >= 0.0 ? 1.0 / (1.0 + std::exp(-logit))
                                  : std::exp(logit) / (1.0 + std::exp(logit));
    p(e) = std::min(1.0 - 1e-12, std::max(1e-12, s));  // keep p strictly inside (0,1)
  }
}

FullForward run_forward(const Parameters& params, const GraphTensors& g) {
  const auto& cfg = params.config;
  if (g.x.cols() != cfg.node_dim || g.edge_features.cols() != cfg.edge_dim)
    fail(ErrorCode::BadConfig, "graph feature dims do not match model config");

  FullForward f;
  f.h0 = (g.x * params.w_in).rowwise() + params.b_in.transpose();
  Eigen::MatrixXd h = f.h0;
  f.layers.resize(static_cast<size_t>(cfg.layers));
  f.bias.resize(static_cast<size_t>(cfg.layers));
  for (int l = 0; l < cfg.layers; ++l) {
    auto& lc = f.layers[static_cast<size_t>(l)];
    f.bias[static_cast<size_t>(l)] = edge_bias(g, params.layers[static_cast<size_t>(l)], cfg.heads);
    attention_sublayer(h, f.bias[static_cast<size_t>(l)], params.layers[static_cast<size_t>(l)],
                       cfg.heads, lc);
    ffn_sublayer(params.layers[static_cast<size_t>(l)], lc);
    if (!lc.h_out.allFinite())
      fail(ErrorCode::NumericalFailure, "non-finite embeddings at layer " + std::to_string(l));
    h = lc.h_out;
  }
  classifier_forward(params, g, h, f.logits, f.p);
  if (!f.p.allFinite()) fail(ErrorCode::NumericalFailure, "non-finite edge probabilities");
  return f;
}

}  // namespace

void ModelConfig::check() const {
  if (layers < 1 || heads < 1 || hidden_dim < 1 || ff_dim < 1 || node_dim < 1 || edge_dim < 1)
    fail(ErrorCode::BadConfig, "all model dimensions must be >= 1");
  if (hidden_dim % heads != 0) fail(ErrorCode::BadConfig, "hidden_dim must be divisible by heads");
}

std::vector<ParamView> Parameters::views() {
  std::vector<ParamView> out;
  auto add = [&out](const std::string& name, double* data, size_t n) {
    out.push_back({name, data, n});
  };
  auto add_mat = [&add](const std::string& name, Eigen::MatrixXd& m) {
    add(name, m.data(), static_cast<size_t>(m.size()));
  };
  auto add_vec = [&add](const std::string& name, Eigen::VectorXd& v) {
    add(name, v.data(), static_cast<size_t>(v.size()));
  };
  add_mat("w_in", w_in);
  add_vec("b_in", b_in);
  for (size_t l = 0; l < layers.size(); ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    auto& lp = layers[l];
    add_mat(p + "wq", lp.wq);
    add_mat(p + "wk", lp.wk);
    add_mat(p + "wv", lp.wv);
    add_mat(p + "wo", lp.wo);
    add_vec(p + "bo", lp.bo);
    add_mat(p + "web", lp.web);
    add_vec(p + "beb", lp.beb);
    add_vec(p + "ln1_g", lp.ln1_g);
    add_vec(p + "ln1_b", lp.ln1_b);
    add_mat(p + "w1", lp.w1);
    add_vec(p + "b1", lp.b1);
    add_mat(p + "w2", lp.w2);
    add_vec(p + "b2", lp.b2);
    add_vec(p + "ln2_g", lp.ln2_g);
    add_vec(p + "ln2_b", lp.ln2_b);
  }
  add_vec("w_cls", w_cls);
  add("b_cls", &b_cls, 1);
  return out;
}

std::vector<ParamView> Parameters::views() const {
  return const_cast<Parameters*>(this)->views();
}

size_t Parameters::count() const {
  size_t n = 0;
  for (const auto& v : views()) n += v.size;
  return n;
}

bool Parameters::all_finite() const {
  for (const auto& v : views())
    for (size_t i = 0; i < v.size; ++i)
      if (!std::isfinite(v.data[i])) return false;
  return true;
}

Parameters Parameters::zeros_like() const {
  Parameters z = *this;
  for (auto& v : z.views()) std::fill(v.data, v.data + v.size, 0.0);
  return z;
}

namespace {

Parameters allocate(const ModelConfig& cfg) {
  Parameters p;
  p.config = cfg;
  const int d = cfg.hidden_dim;
  p.w_in.resize(cfg.node_dim, d);
  p.b_in = Eigen::VectorXd::Zero(d);
  p.layers.resize(static_cast<size_t>(cfg.layers));
  for (auto& lp : p.layers) {
    lp.wq.resize(d, d);
    lp.wk.resize(d, d);
    lp.wv.resize(d, d);
    lp.wo.resize(d, d);
    lp.bo = Eigen::VectorXd::Zero(d);
    lp.web.resize(cfg.edge_dim, cfg.heads);
    lp.beb = Eigen::VectorXd::Zero(cfg.heads);
    lp.ln1_g = Eigen::VectorXd::Ones(d);
    lp.ln1_b = Eigen::VectorXd::Zero(d);
    lp.w1.resize(d, cfg.ff_dim);
    lp.b1 = Eigen::VectorXd::Zero(cfg.ff_dim);
    lp.w2.resize(cfg.ff_dim, d);
    lp.b2 = Eigen::VectorXd::Zero(d);
    lp.ln2_g = Eigen::VectorXd::Ones(d);
    lp.ln2_b = Eigen::VectorXd::Zero(d);
  }
  p.w_cls.resize(2 * d + cfg.edge_dim);
  p.b_cls = 0.0;
  return p;
}

void fill_uniform(Eigen::MatrixXd& m, Rng& rng, double fan_in) {
  const double a = 1.0 / std::sqrt(fan_in);
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.uniform(-a, a);
}

void fill_uniform(Eigen::VectorXd& v, Rng& rng, double fan_in) {
  const double a = 1.0 / std::sqrt(fan_in);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.uniform(-a, a);
}

}  // namespace

Parameters init_model(const ModelConfig& cfg) {
  cfg.check();
  Parameters p = allocate(cfg);
  Rng rng(cfg.seed);
  const double d = cfg.hidden_dim;
  fill_uniform(p.w_in, rng, cfg.node_dim);
  for (auto& lp : p.layers) {
    fill_uniform(lp.wq, rng, d);
    fill_uniform(lp.wk, rng, d);
    fill_uniform(lp.wv, rng, d);
    fill_uniform(lp.wo, rng, d);
    fill_uniform(lp.web, rng, cfg.edge_dim);
    fill_uniform(lp.w1, rng, d);
    fill_uniform(lp.w2, rng, cfg.ff_dim);
  }
  fill_uniform(p.w_cls, rng, 2.0 * d + cfg.edge_dim);
  // rare-positive prior: initial mean probability near the base rate
  const double base_rate = 0.01;
  p.b_cls = std::log(base_rate / (1.0 - base_rate));
  return p;
}

GraphTensors GraphTensors::from_graph(const SafetyGraph& g) {
  GraphTensors t;
  t.x = g.X;
  t.a = g.A;
  t.edge_features.resize(static_cast<Eigen::Index>(g.edges.size()),
                         static_cast<Eigen::Index>(edge_feature_dim()));
  for (size_t e = 0; e < g.edges.size(); ++e) {
    const auto& rec = g.edges[e];
    t.edge_index.push_back({rec.i, rec.j});
    for (size_t k = 0; k < rec.features.size(); ++k)
      t.edge_features(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(k)) =
          rec.features[k];
    t.labels.push_back(rec.label ? 1 : 0);
  }
  return t;
}

std::vector<Eigen::MatrixXd> edge_bias(const GraphTensors& g, const LayerParams& lp, int heads) {
  const int n = g.num_nodes();
  std::vector<Eigen::MatrixXd> bias(static_cast<size_t>(heads));
  for (int hd = 0; hd < heads; ++hd) {
    auto& b = bias[static_cast<size_t>(hd)];
    b = Eigen::MatrixXd::Constant(n, n, kNegInf);
    b.diagonal().setZero();
  }
  for (int e = 0; e < g.num_edges(); ++e) {
    const int i = g.edge_index[static_cast<size_t>(e)][0];
    const int j = g.edge_index[static_cast<size_t>(e)][1];
    const Eigen::VectorXd proj =
        lp.web.transpose() * g.edge_features.row(e).transpose() + lp.beb;
    for (int hd = 0; hd < heads; ++hd) {
      bias[static_cast<size_t>(hd)](i, j) = proj(hd);
      bias[static_cast<size_t>(hd)](j, i) = proj(hd);
    }
  }
  return bias;
}

AttentionResult attention_layer(const Eigen::MatrixXd& h,
                                const std::vector<Eigen::MatrixXd>& bias, const LayerParams& lp,
                                int heads) {
  LayerForward c;
  attention_sublayer(h, bias, lp, heads, c);
  return {c.h1, c.alpha};
}

ForwardResult forward(const Parameters& params, const GraphTensors& g) {
  FullForward f = run_forward(params, g);
  const Eigen::MatrixXd& h =
      params.config.layers > 0 ? f.layers.back().h_out : f.h0;
  return {h, f.logits, f.p};
}

FocalResult focal_loss(const Eigen::VectorXd& p, const std::vector<uint8_t>& y, double gamma,
                       double w_pos, double w_neg) {
  if (static_cast<size_t>(p.size()) != y.size())
    fail(ErrorCode::BadConfig, "probability/label length mismatch");
  if (gamma < 0.0) fail(ErrorCode::BadConfig, "gamma must be >= 0");
  FocalResult out;
  out.dloss_dp = Eigen::VectorXd::Zero(p.size());
  for (Eigen::Index e = 0; e < p.size(); ++e) {
    const double pe = p(e);
    if (!(pe > 0.0 && pe < 1.0))
      fail(ErrorCode::ProbabilityDomain, "p must lie in (0,1), got " + std::to_string(pe));
    if (y[static_cast<size_t>(e)]) {
      const double q = 1.0 - pe;
      out.loss += -w_pos * std::pow(q, gamma) * std::log(pe);
      double d = -w_pos * std::pow(q, gamma) / pe;
      if (gamma > 0.0) d += w_pos * gamma * std::pow(q, gamma - 1.0) * std::log(pe);
      out.dloss_dp(e) = d;
    } else {
      out.loss += -w_neg * std::pow(pe, gamma) * std::log(1.0 - pe);
      double d = w_neg * std::pow(pe, gamma) / (1.0 - pe);
      if (gamma > 0.0) d += -w_neg * gamma * std::pow(pe, gamma - 1.0) * std::log(1.0 - pe);
      out.dloss_dp(e) = d;
    }
  }
  return out;
}

FocalResult focal_loss(const Eigen::VectorXd& p, const std::vector<uint8_t>& y,
                       const TrainConfig& cfg) {
  return focal_loss(p, y, cfg.gamma, cfg.alpha_pos, 1.0 - cfg.alpha_pos);
}

void TrainConfig::check() const {
  if (learning_rate <= 0.0) fail(ErrorCode::BadConfig, "learning rate must be > 0");
  if (epochs < 1) fail(ErrorCode::BadConfig, "epochs must be >= 1");
  if (gamma < 0.0) fail(ErrorCode::BadConfig, "gamma must be >= 0");
  if (alpha_pos <= 0.0 || alpha_pos >= 1.0) fail(ErrorCode::BadConfig, "alpha_pos must be in (0,1)");
  if (clip_norm <= 0.0) fail(ErrorCode::BadConfig, "clip norm must be > 0");
  if (probe_threshold <= 0.0 || probe_threshold >= 1.0)
    fail(ErrorCode::BadConfig, "probe threshold must be in (0,1)");
}

GradResult grad(const Parameters& params, const GraphTensors& g, const TrainConfig& cfg) {
  const auto& mc = params.config;
  const Eigen::Index d = mc.hidden_dim;
  const Eigen::Index dh = d / mc.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  FullForward f = run_forward(params, g);
  FocalResult fl = focal_loss(f.p, g.labels, cfg);

  GradResult out;
  out.loss = fl.loss;
  out.grads = params.zeros_like();

  // classifier backward
  const Eigen::MatrixXd& h_final = mc.layers > 0 ? f.layers.back().h_out : f.h0;
  Eigen::MatrixXd dh_final = Eigen::MatrixXd::Zero(h_final.rows(), d);
  const auto wa = params.w_cls.segment(0, d);
  const auto wb = params.w_cls.segment(d, d);
  const auto we = params.w_cls.segment(2 * d, mc.edge_dim);
  const Eigen::VectorXd w_sym = 0.5 * (wa + wb);
  for (int e = 0; e < g.num_edges(); ++e) {
    const double dlogit = fl.dloss_dp(e) * f.p(e) * (1.0 - f.p(e));
    const int i = g.edge_index[static_cast<size_t>(e)][0];
    const int j = g.edge_index[static_cast<size_t>(e)][1];
    const Eigen::VectorXd hsum = 0.5 * (h_final.row(i) + h_final.row(j)).transpose();
    out.grads.w_cls.segment(0, d) += dlogit * hsum;
    out.grads.w_cls.segment(d, d) += dlogit * hsum;
    out.grads.w_cls.segment(2 * d, mc.edge_dim) +=
        dlogit * g.edge_features.row(e).transpose();
    out.grads.b_cls += dlogit;
    dh_final.row(i) += dlogit * w_sym.transpose();
    dh_final.row(j) += dlogit * w_sym.transpose();
  }

  // layer backward
  Eigen::MatrixXd d_h = dh_final;
  for (int l = mc.layers - 1; l >= 0; --l) {
    const auto& lc = f.layers[static_cast<size_t>(l)];
    const auto& lp = params.layers[static_cast<size_t>(l)];
    auto& gp = out.grads.layers[static_cast<size_t>(l)];

    // LN2 -> residual(h1 + ff_out)
    Eigen::MatrixXd d_res2 = layer_norm_backward(d_h, lc.ln2, lp.ln2_g, gp.ln2_g, gp.ln2_b);
    Eigen::MatrixXd d_h1 = d_res2;
    // ff_out = gelu(h1 w1 + b1) w2 + b2
    gp.w2 += lc.ff_act.transpose() * d_res2;
    gp.b2 += d_res2.colwise().sum().transpose();
    Eigen::MatrixXd d_ff_act = d_res2 * lp.w2.transpose();
    Eigen::MatrixXd d_ff_pre =
        d_ff_act.cwiseProduct(lc.ff_pre.unaryExpr([](double x) { return gelu_deriv(x); }));
    gp.w1 += lc.h1.transpose() * d_ff_pre;
    gp.b1 += d_ff_pre.colwise().sum().transpose();
    d_h1 += d_ff_pre * lp.w1.transpose();

    // LN1 -> residual(h_in + attn_out)
    Eigen::MatrixXd d_res1 = layer_norm_backward(d_h1, lc.ln1, lp.ln1_g, gp.ln1_g, gp.ln1_b);
    Eigen::MatrixXd d_h_in = d_res1;
    // attn_out = z wo + bo
    gp.wo += lc.z.transpose() * d_res1;
    gp.bo += d_res1.colwise().sum().transpose();
    Eigen::MatrixXd d_z = d_res1 * lp.wo.transpose();

    Eigen::MatrixXd d_q = Eigen::MatrixXd::Zero(lc.q.rows(), d);
    Eigen::MatrixXd d_k = Eigen::MatrixXd::Zero(lc.k.rows(), d);
    Eigen::MatrixXd d_v = Eigen::MatrixXd::Zero(lc.v.rows(), d);
    for (int hd = 0; hd < mc.heads; ++hd) {
      const auto& alpha = lc.alpha[static_cast<size_t>(hd)];
      const auto vh = lc.v.middleCols(hd * dh, dh);
      const auto dz_h = d_z.middleCols(hd * dh, dh);
      const Eigen::MatrixXd d_alpha = dz_h * vh.transpose();
      d_v.middleCols(hd * dh, dh) = alpha.transpose() * dz_h;
      // softmax backward; masked entries have alpha == 0 and stay zero
      Eigen::MatrixXd d_s(alpha.rows(), alpha.cols());
      for (Eigen::Index r = 0; r < alpha.rows(); ++r) {
        const double row_dot = alpha.row(r).dot(d_alpha.row(r));
        d_s.row(r) = alpha.row(r).cwiseProduct((d_alpha.row(r).array() - row_dot).matrix());
      }
      d_q.middleCols(hd * dh, dh) = d_s * lc.k.middleCols(hd * dh, dh) * scale;
      d_k.middleCols(hd * dh, dh) = d_s.transpose() * lc.q.middleCols(hd * dh, dh) * scale;
      // edge-bias projection gradients (adjacent entries only)
      for (int e = 0; e < g.num_edges(); ++e) {
        const int i = g.edge_index[static_cast<size_t>(e)][0];
        const int j = g.edge_index[static_cast<size_t>(e)][1];
        const double d_bias = d_s(i, j) + d_s(j, i);
        gp.web.col(hd) += d_bias * g.edge_features.row(e).transpose();
        gp.beb(hd) += d_bias;
      }
    }
    gp.wq += lc.h_in.transpose() * d_q;
    gp.wk += lc.h_in.transpose() * d_k;
    gp.wv += lc.h_in.transpose() * d_v;
    d_h_in += d_q * lp.wq.transpose() + d_k * lp.wk.transpose() + d_v * lp.wv.transpose();

    d_h = std::move(d_h_in);
  }

  // input projection
  out.grads.w_in += g.x.transpose() * d_h;
  out.grads.b_in += d_h.colwise().sum().transpose();
  return out;
}

namespace {

struct ValStats {
  double loss = 0.0;
  double recall = 0.0;
  double precision = 1.0;
};

ValStats evaluate_split(const Parameters& params, const std::vector<GraphTensors>& graphs,
                        const TrainConfig& cfg) {
  ValStats s;
  double loss_sum = 0.0;
  size_t edges = 0, tp = 0, fp = 0, fn = 0;
  for (const auto& g : graphs) {
    if (g.num_edges() == 0) continue;
    ForwardResult fr = forward(params, g);
    loss_sum += focal_loss(fr.p, g.labels, cfg).loss;
    edges += static_cast<size_t>(g.num_edges());
    for (int e = 0; e < g.num_edges(); ++e) {
      const bool flag = fr.p(e) >= cfg.probe_threshold;
      const bool pos = g.labels[static_cast<size_t>(e)] != 0;
      if (flag && pos) ++tp;
      else if (flag) ++fp;
      else if (pos) ++fn;
    }
  }
  s.loss = edges ? loss_sum / static_cast<double>(edges) : 0.0;
  s.recall = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  s.precision = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 1.0;
  return s;
}

}  // namespace

TrainResult train(const Parameters& init, const std::vector<GraphTensors>& train_graphs,
                  const std::vector<GraphTensors>& val_graphs, const TrainConfig& cfg,
                  const std::function<void(int, const EpochStats&)>& on_epoch) {
  cfg.check();
  if (train_graphs.empty()) fail(ErrorCode::BadConfig, "train set is empty");

  Parameters params = init;
  Parameters m = params.zeros_like();
  Parameters v = params.zeros_like();
  const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  long step = 0;

  TrainResult out;
  out.params = params;
  double best_val = std::numeric_limits<double>::infinity();

  std::vector<size_t> order(train_graphs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(mix_seed(cfg.seed, static_cast<uint64_t>(epoch) + 1));
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.next_below(i)]);

    double loss_sum = 0.0;
    size_t edge_sum = 0;
    for (size_t idx : order) {
      const GraphTensors& g = train_graphs[idx];
      if (g.num_edges() == 0) continue;
      GradResult gr = grad(params, g, cfg);
      if (!std::isfinite(gr.loss))
        fail(ErrorCode::TrainingDiverged, "loss diverged at epoch " + std::to_string(epoch));
      loss_sum += gr.loss;
      edge_sum += static_cast<size_t>(g.num_edges());

      auto gv = gr.grads.views();
      double norm_sq = 0.0;
      for (const auto& view : gv)
        for (size_t k = 0; k < view.size; ++k) norm_sq += view.data[k] * view.data[k];
      const double norm = std::sqrt(norm_sq);
      const double clip_scale = norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;

      ++step;
      const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      auto pv = params.views();
      auto mv = m.views();
      auto vv = v.views();
      for (size_t a = 0; a < pv.size(); ++a) {
        for (size_t k = 0; k < pv[a].size; ++k) {
          const double gk = gv[a].data[k] * clip_scale;
          mv[a].data[k] = beta1 * mv[a].data[k] + (1.0 - beta1) * gk;
          vv[a].data[k] = beta2 * vv[a].data[k] + (1.0 - beta2) * gk * gk;
          const double mhat = mv[a].data[k] / bc1;
          const double vhat = vv[a].data[k] / bc2;
          pv[a].data[k] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + adam_eps);
        }
      }
    }

    EpochStats es;
    es.train_loss = edge_sum ? loss_sum / static_cast<double>(edge_sum) : 0.0;
    if (!val_graphs.empty()) {
      ValStats vs = evaluate_split(params, val_graphs, cfg);
      es.val_loss = vs.loss;
      es.val_recall = vs.recall;
      es.val_precision = vs.precision;
    } else {
      es.val_loss = es.train_loss;
    }
    out.history.epochs.push_back(es);
    if (es.val_loss < best_val) {
      best_val = es.val_loss;
      out.params = params;
      out.history.best_epoch = epoch;
    }
    if (on_epoch) on_epoch(epoch, es);
  }
  return out;
}

void save_checkpoint(const Parameters& params, const std::string& path) {
  nlohmann::ordered_json header;
  header["format"] = "riskgraph-checkpoint";
  header["model"] = {{"layers", params.config.layers},
                     {"heads", params.config.heads},
                     {"hidden_dim", params.config.hidden_dim},
                     {"ff_dim", params.config.ff_dim},
                     {"node_dim", params.config.node_dim},
                     {"edge_dim", params.config.edge_dim},
                     {"seed", params.config.seed}};
  header["catalog_version"] = Catalog::instance().version();
  char hash_hex[17];
  std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                static_cast<unsigned long long>(Catalog::instance().hash()));
  header["catalog_hash"] = hash_hex;
  header["precision"] = "f64";
  header["param_count"] = params.count();
  const std::string hj = header.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  f.write(kMagic, sizeof kMagic);
  const uint32_t version = kCheckpointVersion;
  f.write(reinterpret_cast<const char*>(&version), sizeof version);
  const uint64_t hlen = hj.size();
  f.write(reinterpret_cast<const char*>(&hlen), sizeof hlen);
  f.write(hj.data(), static_cast<std::streamsize>(hj.size()));
  for (const auto& view : params.views())
    f.write(reinterpret_cast<const char*>(view.data),
            static_cast<std::streamsize>(view.size * sizeof(double)));
  if (!f) fail(ErrorCode::IoError, "short write to " + path);
}

Parameters load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot open " + path);

  char magic[8];
  f.read(magic, sizeof magic);
  if (!f || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    fail(ErrorCode::IncompatibleCheckpoint, "bad magic in " + path);
  uint32_t version = 0;
  f.read(reinterpret_cast<char*>(&version), sizeof version);
  if (!f || version != kCheckpointVersion)
    fail(ErrorCode::IncompatibleCheckpoint, "unsupported format version");
  uint64_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), sizeof hlen);
  if (!f || hlen == 0 || hlen > (1u << 20))
    fail(ErrorCode::IncompatibleCheckpoint, "bad header length");
  std::string hj(hlen, '\0');
  f.read(hj.data(), static_cast<std::streamsize>(hlen));
  if (!f) fail(ErrorCode::IncompatibleCheckpoint, "truncated header");

  ModelConfig cfg;
  size_t expected = 0;
  try {
    auto header = nlohmann::json::parse(hj);
    if (header.at("format").get<std::string>() != "riskgraph-checkpoint")
      fail(ErrorCode::IncompatibleCheckpoint, "not a model checkpoint");
    if (header.at("precision").get<std::string>() != "f64")
      fail(ErrorCode::IncompatibleCheckpoint, "unsupported precision");
    if (header.at("catalog_version").get<std::string>() != Catalog::instance().version())
      fail(ErrorCode::IncompatibleCheckpoint, "catalog version mismatch");
    const auto& m = header.at("model");
    cfg.layers = m.at("layers").get<int>();
    cfg.heads = m.at("heads").get<int>();
    cfg.hidden_dim = m.at("hidden_dim").get<int>();
    cfg.ff_dim = m.at("ff_dim").get<int>();
    cfg.node_dim = m.at("node_dim").get<int>();
    cfg.edge_dim = m.at("edge_dim").get<int>();
    cfg.seed = m.at("seed").get<uint64_t>();
    expected = header.at("param_count").get<size_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::IncompatibleCheckpoint, std::string("bad header: ") + e.what());
  }
  try {
    cfg.check();
  } catch (const Error&) {
    fail(ErrorCode::IncompatibleCheckpoint, "invalid model config in header");
  }

  Parameters p = allocate(cfg);
  if (p.count() != expected)
    fail(ErrorCode::IncompatibleCheckpoint, "parameter count mismatch");
  for (auto& view : p.views()) {
    f.read(reinterpret_cast<char*>(view.data),
           static_cast<std::streamsize>(view.size * sizeof(double)));
    if (!f) fail(ErrorCode::IncompatibleCheckpoint, "truncated parameter data");
  }
  char extra;
  if (f.read(&extra, 1))
    fail(ErrorCode::IncompatibleCheckpoint, "trailing bytes after parameter data");
  if (!p.all_finite()) fail(ErrorCode::IncompatibleCheckpoint, "non-finite parameters");
  return p;
}

}  // namespace riskgraph
