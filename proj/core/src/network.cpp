#include "lsa/network.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "binary_io.hpp"
#include "lsa/error.hpp"
#include "lsa/random.hpp"

namespace lsa::learn {

using Eigen::ArrayXXd;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void NetShape::validate() const {
  if (obs_size < 1) throw ConfigError("net.obs_size: must be >= 1");
  if (num_targets < 1) throw ConfigError("net.num_targets: must be >= 1");
  if (feature_width < 1) throw ConfigError("net.feature_width: must be >= 1");
  if (projection_width < 1) throw ConfigError("net.projection_width: must be >= 1");
}

void LossConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("loss.gamma: must satisfy 0 < gamma < 1");
  if (!(entropy_beta >= 0.0)) throw ConfigError("loss.entropy_beta: must be >= 0");
  if (!(supcon_eta >= 0.0)) throw ConfigError("loss.supcon_eta: must be >= 0");
  if (!(supcon_tau > 0.0)) throw ConfigError("loss.supcon_tau: must be > 0");
  if (!(lr > 0.0)) throw ConfigError("loss.lr: must be > 0");
  if (!(clip_norm > 0.0)) throw ConfigError("loss.clip_norm: must be > 0");
  if (supcon_batch < 2) throw ConfigError("loss.supcon_batch: must be >= 2");
}

ParamLayout ParamLayout::make(const NetShape& s) {
  s.validate();
  ParamLayout l;
  Index off = 0;
  auto take = [&off](Index rows, Index cols) {
    Block b{off, rows, cols};
    off += rows * cols;
    return b;
  };
  const Index f = s.feature_width;
  l.enc1_w = take(f, s.obs_size);
  l.enc1_b = take(f, 1);
  l.enc2_w = take(f, f);
  l.enc2_b = take(f, 1);
  l.embed = take(f, s.num_targets);
  l.gate_w = take(f, f);
  l.gate_b = take(f, 1);
  l.policy_w = take(env::kNumActions, f);
  l.policy_b = take(env::kNumActions, 1);
  l.value_w = take(1, f);
  l.value_b = take(1, 1);
  l.proj_w = take(s.projection_width, f);
  l.proj_b = take(s.projection_width, 1);
  l.size = off;
  return l;
}

std::vector<std::pair<const char*, Block>> ParamLayout::blocks() const {
  return {{"enc1_w", enc1_w},     {"enc1_b", enc1_b},     {"enc2_w", enc2_w},
          {"enc2_b", enc2_b},     {"embed", embed},       {"gate_w", gate_w},
          {"gate_b", gate_b},     {"policy_w", policy_w}, {"policy_b", policy_b},
          {"value_w", value_w},   {"value_b", value_b},   {"proj_w", proj_w},
          {"proj_b", proj_b}};
}

ParamSet::ParamSet(const NetShape& shape)
    : shape_(shape), layout_(ParamLayout::make(shape)), values_(VectorXd::Zero(layout_.size)) {}

namespace {

double normal(Rng& rng) {
  // Box-Muller on our own uniform so results do not depend on the standard library.
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void fill_normal(Eigen::Map<MatrixXd> m, double stddev, Rng& rng) {
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = stddev * normal(rng);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_finite(const VectorXd& v, const char* what) {
  if (!v.allFinite()) throw NumericFault(std::string("non-finite value in ") + what);
}

// Column-wise encoder activations for a batch of observations.
struct EncoderPass {
  MatrixXd z1, h1, z2, h2;
};

EncoderPass encode_batch(const ParamSet& p, const MatrixXd& x) {
  const auto& l = p.layout();
  EncoderPass e;
  e.z1 = p.block(l.enc1_w) * x;
  e.z1.colwise() += p.block(l.enc1_b).col(0);
  e.h1 = e.z1.cwiseMax(0.0);
  e.z2 = p.block(l.enc2_w) * e.h1;
  e.z2.colwise() += p.block(l.enc2_b).col(0);
  e.h2 = e.z2.cwiseMax(0.0);
  return e;
}

// Accumulates encoder parameter gradients given dL/dh2.
void encoder_backward(const ParamSet& p, const MatrixXd& x, const EncoderPass& e, MatrixXd dh2,
                      Gradient& g) {
  const auto& l = p.layout();
  auto G = [&g](const Block& b) { return Eigen::Map<MatrixXd>(g.data() + b.offset, b.rows, b.cols); };
  MatrixXd dz2 = dh2.array() * (e.z2.array() > 0.0).cast<double>();
  G(l.enc2_w).noalias() += dz2 * e.h1.transpose();
  G(l.enc2_b).col(0) += dz2.rowwise().sum();
  MatrixXd dz1 = (p.block(l.enc2_w).transpose() * dz2).array() * (e.z1.array() > 0.0).cast<double>();
  G(l.enc1_w).noalias() += dz1 * x.transpose();
  G(l.enc1_b).col(0) += dz1.rowwise().sum();
}

}  // namespace

ParamSet ParamSet::initialize(const NetShape& shape, std::uint64_t seed) {
  ParamSet p(shape);
  Rng rng(seed);
  const auto& l = p.layout_;
  const double f = shape.feature_width;
  fill_normal(p.block(l.enc1_w), std::sqrt(2.0 / shape.obs_size), rng);
  fill_normal(p.block(l.enc2_w), std::sqrt(2.0 / f), rng);
  fill_normal(p.block(l.embed), 1.0, rng);
  fill_normal(p.block(l.gate_w), 1.0 / std::sqrt(f), rng);
  fill_normal(p.block(l.policy_w), 0.01 / std::sqrt(f), rng);
  fill_normal(p.block(l.proj_w), 1.0 / std::sqrt(f), rng);
  return p;
}

void ParamSet::serialize(std::ostream& os) const {
  io::put<std::int32_t>(os, shape_.obs_size);
  io::put<std::int32_t>(os, shape_.num_targets);
  io::put<std::int32_t>(os, shape_.feature_width);
  io::put<std::int32_t>(os, shape_.projection_width);
  io::put_eigen(os, values_);
}

void ParamSet::deserialize(std::istream& is) {
  NetShape s;
  s.obs_size = io::get<std::int32_t>(is);
  s.num_targets = io::get<std::int32_t>(is);
  s.feature_width = io::get<std::int32_t>(is);
  s.projection_width = io::get<std::int32_t>(is);
  if (!(s == shape_)) throw CheckpointError("checkpoint: network shape mismatch");
  VectorXd v = io::get_eigen(is, 1u << 28);
  if (v.size() != layout_.size) throw CheckpointError("checkpoint: parameter count mismatch");
  values_ = std::move(v);
}

// --- forward ---------------------------------------------------------------------------

Eigen::VectorXd encode(const ParamSet& p, const Observation& obs) {
  const auto& l = p.layout();
  if (obs.size() != p.shape().obs_size) throw UsageError("encode: observation size mismatch");
  VectorXd h1 = (p.block(l.enc1_w) * obs + p.block(l.enc1_b).col(0)).cwiseMax(0.0);
  return (p.block(l.enc2_w) * h1 + p.block(l.enc2_b).col(0)).cwiseMax(0.0);
}

ForwardResult forward(const ParamSet& p, const Observation& obs, TargetId instruction) {
  const auto& l = p.layout();
  if (instruction < 0 || instruction >= p.shape().num_targets) {
    throw UsageError("forward: instruction out of range");
  }
  const VectorXd enc = encode(p, obs);
  VectorXd gate = p.block(l.gate_w) * p.block(l.embed).col(instruction) + p.block(l.gate_b).col(0);
  gate = gate.unaryExpr([](double v) { return sigmoid(v); });

  ForwardResult r;
  r.feature = enc.cwiseProduct(gate);
  Eigen::Vector3d logits = p.block(l.policy_w) * r.feature + p.block(l.policy_b).col(0);
  logits.array() -= logits.maxCoeff();
  r.probs = logits.array().exp();
  r.probs /= r.probs.sum();
  r.value = (p.block(l.value_w) * r.feature)(0) + p.block(l.value_b)(0, 0);
  if (!r.probs.allFinite() || !std::isfinite(r.value) || !r.feature.allFinite()) {
    throw NumericFault("forward: non-finite output (instruction " + std::to_string(instruction) +
                       ")");
  }
  return r;
}

Eigen::VectorXd goal_embedding(const ParamSet& p, const Observation& obs) {
  const auto& l = p.layout();
  VectorXd u = p.block(l.proj_w) * encode(p, obs) + p.block(l.proj_b).col(0);
  const double n = u.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericFault("goal_embedding: degenerate projection");
  return u / n;
}

// --- actor-critic ----------------------------------------------------------------------

std::vector<double> compute_returns(const Trajectory& t, double gamma) {
  if (t.steps.empty()) throw UsageError("compute_returns: empty trajectory");
  std::vector<double> r(t.steps.size());
  double running = t.terminal ? 0.0 : t.bootstrap_value;
  for (std::size_t i = t.steps.size(); i-- > 0;) {
    running = t.steps[i].reward + gamma * running;
    r[i] = running;
  }
  return r;
}

ActorCriticResult actor_critic_grads(const ParamSet& p, const Trajectory& t,
                                     const LossConfig& cfg) {
  const auto& l = p.layout();
  const Index n = static_cast<Index>(t.steps.size());
  if (n == 0) throw UsageError("actor_critic_grads: empty trajectory");
  if (static_cast<Index>(t.returns.size()) != n) {
    throw UsageError("actor_critic_grads: returns not computed");
  }
  const int f = p.shape().feature_width;

  MatrixXd x(p.shape().obs_size, n);
  for (Index i = 0; i < n; ++i) x.col(i) = t.steps[i].obs;
  const EncoderPass enc = encode_batch(p, x);

  // Gate per step; instructions are normally constant within an episode but are not assumed so.
  MatrixXd emb(f, n);
  for (Index i = 0; i < n; ++i) emb.col(i) = p.block(l.embed).col(t.steps[i].instruction);
  MatrixXd gate = p.block(l.gate_w) * emb;
  gate.colwise() += p.block(l.gate_b).col(0);
  gate = gate.unaryExpr([](double v) { return sigmoid(v); });
  const MatrixXd h = enc.h2.cwiseProduct(gate);

  MatrixXd logits = p.block(l.policy_w) * h;
  logits.colwise() += p.block(l.policy_b).col(0);
  Eigen::RowVectorXd values = p.block(l.value_w) * h;
  values.array() += p.block(l.value_b)(0, 0);

  ActorCriticResult out;
  out.grad = Gradient::Zero(l.size);
  MatrixXd dlogits(env::kNumActions, n);
  Eigen::RowVectorXd dvalue(n);
  for (Index i = 0; i < n; ++i) {
    Eigen::Vector3d z = logits.col(i);
    z.array() -= z.maxCoeff();
    const Eigen::Vector3d logp = z.array() - std::log(z.array().exp().sum());
    const Eigen::Vector3d prob = logp.array().exp();
    const double entropy = -(prob.array() * logp.array()).sum();
    const int a = static_cast<int>(t.steps[i].action);
    const double adv = t.returns[i] - values(i);

    out.policy_loss += -logp(a) * adv;
    out.entropy += entropy;
    out.value_loss += adv * adv;

    Eigen::Vector3d d = adv * prob;
    d(a) -= adv;
    d += cfg.entropy_beta * (prob.array() * (logp.array() + entropy)).matrix();
    dlogits.col(i) = d;
    dvalue(i) = -2.0 * adv;
  }

  auto G = [&out](const Block& b) {
    return Eigen::Map<MatrixXd>(out.grad.data() + b.offset, b.rows, b.cols);
  };
  G(l.policy_w).noalias() += dlogits * h.transpose();
  G(l.policy_b).col(0) += dlogits.rowwise().sum();
  G(l.value_w).noalias() += dvalue * h.transpose();
  G(l.value_b)(0, 0) += dvalue.sum();

  MatrixXd dh = p.block(l.policy_w).transpose() * dlogits;
  dh.noalias() += p.block(l.value_w).transpose() * dvalue;

  const MatrixXd dgate_pre = (dh.array() * enc.h2.array() * gate.array() * (1.0 - gate.array())).matrix();
  G(l.gate_w).noalias() += dgate_pre * emb.transpose();
  G(l.gate_b).col(0) += dgate_pre.rowwise().sum();
  const MatrixXd demb = p.block(l.gate_w).transpose() * dgate_pre;
  auto gembed = G(l.embed);
  for (Index i = 0; i < n; ++i) gembed.col(t.steps[i].instruction) += demb.col(i);

  encoder_backward(p, x, enc, dh.cwiseProduct(gate), out.grad);
  check_finite(out.grad, "actor-critic gradient");
  return out;
}

// --- supervised contrastive ------------------------------------------------------------

namespace {

// Per-anchor loss and dL/dS for S = G^T G / tau; dS is zero on the diagonal and on rows
// of anchors without positives.
double supcon_core(const MatrixXd& g, std::span<const TargetId> labels, double tau, MatrixXd* ds,
                   int* anchor_count) {
  const Index n = g.cols();
  const MatrixXd s = (g.transpose() * g) / tau;
  if (ds) ds->setZero(n, n);
  double total = 0.0;
  int anchors = 0;
  VectorXd q(n);
  for (Index j = 0; j < n; ++j) {
    int positives = 0;
    for (Index h = 0; h < n; ++h) positives += (h != j && labels[h] == labels[j]);
    if (positives == 0) continue;
    ++anchors;
    double top = -std::numeric_limits<double>::infinity();
    for (Index h = 0; h < n; ++h) {
      if (h != j) top = std::max(top, s(j, h));
    }
    double z = 0.0;
    for (Index h = 0; h < n; ++h) {
      q(h) = h == j ? 0.0 : std::exp(s(j, h) - top);
      z += q(h);
    }
    const double lse = top + std::log(z);
    double pos_sum = 0.0;
    for (Index h = 0; h < n; ++h) {
      if (h != j && labels[h] == labels[j]) pos_sum += s(j, h);
    }
    total += lse - pos_sum / positives;
    if (ds) {
      for (Index h = 0; h < n; ++h) {
        if (h == j) continue;
        (*ds)(j, h) = q(h) / z - (labels[h] == labels[j] ? 1.0 / positives : 0.0);
      }
    }
  }
  if (anchor_count) *anchor_count = anchors;
  if (anchors == 0) return 0.0;
  if (ds) *ds /= anchors;
  return total / anchors;
}

}  // namespace

double supcon_loss(const MatrixXd& embeddings, std::span<const TargetId> labels, double tau) {
  if (embeddings.cols() < 2 || static_cast<Index>(labels.size()) != embeddings.cols()) {
    throw UsageError("supcon_loss: need >= 2 labeled embeddings");
  }
  return supcon_core(embeddings, labels, tau, nullptr, nullptr);
}

SupConResult supcon_loss_and_grads(const ParamSet& p, std::span<const GoalEntry> batch,
                                   double tau) {
  const auto& l = p.layout();
  const Index n = static_cast<Index>(batch.size());
  if (n < 2) throw UsageError("supcon_loss_and_grads: batch must hold at least 2 entries");

  MatrixXd x(p.shape().obs_size, n);
  std::vector<TargetId> labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    if (batch[i].features.size() != p.shape().obs_size) {
      throw UsageError("supcon_loss_and_grads: observation size mismatch");
    }
    x.col(i) = batch[i].features;
    labels[i] = batch[i].target;
  }
  const EncoderPass enc = encode_batch(p, x);
  MatrixXd u = p.block(l.proj_w) * enc.h2;
  u.colwise() += p.block(l.proj_b).col(0);
  const Eigen::RowVectorXd norms = u.colwise().norm();
  if (!norms.allFinite() || (norms.array() <= 0.0).any()) {
    throw NumericFault("supcon: degenerate projection");
  }
  const MatrixXd g = u.array().rowwise() / norms.array();

  SupConResult out;
  out.grad = Gradient::Zero(l.size);
  MatrixXd ds;
  out.loss = supcon_core(g, labels, tau, &ds, &out.anchors);
  if (out.anchors == 0) return out;

  const MatrixXd dg = g * (ds + ds.transpose()) / tau;
  // Through the normalization: du = (dg - g (g . dg)) / |u|.
  const Eigen::RowVectorXd radial = (g.array() * dg.array()).colwise().sum();
  MatrixXd du = dg - g * radial.asDiagonal();
  du = du.array().rowwise() / norms.array();

  auto G = [&out](const Block& b) {
    return Eigen::Map<MatrixXd>(out.grad.data() + b.offset, b.rows, b.cols);
  };
  G(l.proj_w).noalias() += du * enc.h2.transpose();
  G(l.proj_b).col(0) += du.rowwise().sum();
  encoder_backward(p, x, enc, p.block(l.proj_w).transpose() * du, out.grad);
  if (!std::isfinite(out.loss)) throw NumericFault("supcon: non-finite loss");
  check_finite(out.grad, "supcon gradient");
  return out;
}

TotalLoss combine(const ActorCriticResult& rl, const SupConResult* supcon, const LossConfig& cfg) {
  TotalLoss t;
  t.rl = rl.loss(cfg.entropy_beta);
  t.grad = rl.grad;
  if (supcon != nullptr) {
    t.supcon = supcon->loss;
    t.grad.noalias() += cfg.supcon_eta * supcon->grad;
  }
  t.total = t.rl + cfg.supcon_eta * t.supcon;
  return t;
}

}  // namespace lsa::learn
