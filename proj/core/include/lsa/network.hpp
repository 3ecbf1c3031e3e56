#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "lsa/env.hpp"
#include "lsa/goal_storage.hpp"

namespace lsa::learn {

struct NetShape {
  int obs_size = 0;
  int num_targets = 0;
  int feature_width = 64;
  int projection_width = 32;

  void validate() const;
  friend bool operator==(const NetShape&, const NetShape&) = default;
};

struct LossConfig {
  double gamma = 0.99;
  double entropy_beta = 0.01;
  double supcon_eta = 0.5;
  double supcon_tau = 0.07;
  double lr = 7e-5;
  double clip_norm = 10.0;
  int supcon_batch = 80;

  void validate() const;
  friend bool operator==(const LossConfig&, const LossConfig&) = default;
};

/// A contiguous rows x cols column-major slice of the flat parameter vector.
struct Block {
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 1;
  Eigen::Index size() const noexcept { return rows * cols; }
};

struct ParamLayout {
  Block enc1_w, enc1_b;  // obs -> F, ReLU
  Block enc2_w, enc2_b;  // F -> F, ReLU
  Block embed;           // F x N instruction embedding table
  Block gate_w, gate_b;  // F -> F, logistic
  Block policy_w, policy_b;
  Block value_w, value_b;
  Block proj_w, proj_b;  // F -> P, L2-normalized output
  Eigen::Index size = 0;

  static ParamLayout make(const NetShape& shape);
  /// Blocks in storage order, with their names.
  std::vector<std::pair<const char*, Block>> blocks() const;
};

using Gradient = Eigen::VectorXd;

/// All learnable weights as one flat vector; gradients share the same layout.
class ParamSet {
 public:
  ParamSet() = default;
  /// All-zero parameters.
  explicit ParamSet(const NetShape& shape);

  /// He-style init for the encoder; small policy head; zero value head.
  static ParamSet initialize(const NetShape& shape, std::uint64_t seed);

  const NetShape& shape() const noexcept { return shape_; }
  const ParamLayout& layout() const noexcept { return layout_; }

  Eigen::VectorXd& values() noexcept { return values_; }
  const Eigen::VectorXd& values() const noexcept { return values_; }

  Eigen::Map<Eigen::MatrixXd> block(const Block& b) {
    return {values_.data() + b.offset, b.rows, b.cols};
  }
  Eigen::Map<const Eigen::MatrixXd> block(const Block& b) const {
    return {values_.data() + b.offset, b.rows, b.cols};
  }

  bool all_finite() const { return values_.allFinite(); }

  void serialize(std::ostream& os) const;
  /// Reads into this ParamSet; the stored shape must equal shape().
  void deserialize(std::istream& is);

 private:
  NetShape shape_{};
  ParamLayout layout_{};
  Eigen::VectorXd values_;
};

inline Gradient zero_gradient(const ParamSet& p) {
  return Gradient::Zero(p.layout().size);
}

// --- forward ---------------------------------------------------------------------------

struct ForwardResult {
  Eigen::Vector3d probs;
  double value = 0.0;
  Eigen::VectorXd feature;  // encoder output gated by the instruction
};

/// Throws NumericFault on a non-finite output.
ForwardResult forward(const ParamSet& params, const Observation& obs, TargetId instruction);

/// Encoder output (before instruction gating).
Eigen::VectorXd encode(const ParamSet& params, const Observation& obs);

/// L2-normalized projection of the encoder output; the SupCon embedding g.
Eigen::VectorXd goal_embedding(const ParamSet& params, const Observation& obs);

// --- actor-critic ----------------------------------------------------------------------

struct Transition {
  Observation obs;
  TargetId instruction = 0;
  env::Action action = env::Action::GoStraight;
  double reward = 0.0;
  Eigen::Vector3d probs = Eigen::Vector3d::Constant(1.0 / 3.0);
  double value = 0.0;
};

struct Trajectory {
  std::vector<Transition> steps;
  bool terminal = true;
  /// V(s_T) of the successor state; used only when the episode was truncated.
  double bootstrap_value = 0.0;
  std::vector<double> returns;
};

/// R_t = r_t + gamma * R_{t+1}, seeded with 0 at a terminal or bootstrap_value otherwise.
std::vector<double> compute_returns(const Trajectory& trajectory, double gamma);

struct ActorCriticResult {
  Gradient grad;
  double policy_loss = 0.0;  // sum_t -log pi(a_t) * advantage_t
  double value_loss = 0.0;   // sum_t (R_t - V_t)^2
  double entropy = 0.0;      // sum_t H(pi(.|s_t))
  double loss(double beta) const noexcept { return policy_loss - beta * entropy + value_loss; }
};

/// Gradient of sum_t [-log pi(a_t|s_t) (R_t - V_t) - beta H_t] + sum_t (R_t - V_t)^2 with the
/// advantage held constant in the policy term. Requires trajectory.returns.
ActorCriticResult actor_critic_grads(const ParamSet& params, const Trajectory& trajectory,
                                     const LossConfig& config);

// --- supervised contrastive ------------------------------------------------------------

struct SupConResult {
  double loss = 0.0;
  Gradient grad;
  int anchors = 0;  // anchors with at least one positive
};

/// Supervised contrastive loss over given unit embeddings (columns), averaged over anchors
/// that have at least one positive. Reference path without gradients.
double supcon_loss(const Eigen::MatrixXd& embeddings, std::span<const TargetId> labels, double tau);

/// Loss and gradient w.r.t. encoder and projection parameters. Throws UsageError for < 2 entries.
SupConResult supcon_loss_and_grads(const ParamSet& params, std::span<const GoalEntry> batch,
                                   double tau);

struct TotalLoss {
  double rl = 0.0;
  double supcon = 0.0;
  double total = 0.0;
  Gradient grad;
};

/// L_total = L_RL + eta * L_S with matching gradient.
TotalLoss combine(const ActorCriticResult& rl, const SupConResult* supcon, const LossConfig& config);

}  // namespace lsa::learn
