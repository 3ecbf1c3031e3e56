#include "lsa/optimizer.hpp"

#include <cmath>

#include "binary_io.hpp"
#include "lsa/error.hpp"

namespace lsa::learn {

void OptimizerState::serialize(std::ostream& os) const {
  io::put<std::int64_t>(os, step);
  io::put_eigen(os, m);
  io::put_eigen(os, v);
  io::put_eigen(os, v_max);
}

void OptimizerState::deserialize(std::istream& is) {
  const auto s = io::get<std::int64_t>(is);
  Eigen::VectorXd nm = io::get_eigen(is, 1u << 28);
  Eigen::VectorXd nv = io::get_eigen(is, 1u << 28);
  Eigen::VectorXd nvm = io::get_eigen(is, 1u << 28);
  if (nm.size() != nv.size() || nm.size() != nvm.size() || (m.size() != 0 && nm.size() != m.size())) {
    throw CheckpointError("checkpoint: optimizer state size mismatch");
  }
  step = s;
  m = std::move(nm);
  v = std::move(nv);
  v_max = std::move(nvm);
}

double clip_global_norm(Gradient& grad, double max_norm) {
  const double norm = grad.norm();
  if (norm > max_norm) grad *= max_norm / norm;
  return norm;
}

void amsgrad_step(Eigen::VectorXd& params, OptimizerState& s, const Gradient& grad, double lr) {
  if (s.m.size() != params.size()) s = OptimizerState(params.size());
  if (grad.size() != params.size()) throw UsageError("amsgrad_step: gradient size mismatch");
  ++s.step;
  s.m = OptimizerState::kBeta1 * s.m + (1.0 - OptimizerState::kBeta1) * grad;
  s.v = OptimizerState::kBeta2 * s.v + (1.0 - OptimizerState::kBeta2) * grad.cwiseAbs2();
  s.v_max = s.v_max.cwiseMax(s.v);
  const double bc1 = 1.0 - std::pow(OptimizerState::kBeta1, static_cast<double>(s.step));
  const double bc2 = 1.0 - std::pow(OptimizerState::kBeta2, static_cast<double>(s.step));
  const double step_size = lr / bc1;
  params.array() -= step_size * s.m.array() /
                    (s.v_max.array().sqrt() / std::sqrt(bc2) + OptimizerState::kEpsilon);
}

double apply_update(ParamSet& params, OptimizerState& state, Gradient grad,
                    const LossConfig& config) {
  if (!grad.allFinite()) throw NumericFault("apply_update: non-finite gradient");
  const double norm = clip_global_norm(grad, config.clip_norm);
  auto& x = params.values();
  if (state.m.size() == x.size()) {
    // Evaluate the candidate parameters lazily so a non-finite result leaves both the
    // parameters and the optimizer state untouched without copying either.
    using S = OptimizerState;
    const double t = static_cast<double>(state.step + 1);
    const double bc1 = 1.0 - std::pow(S::kBeta1, t);
    const double bc2 = 1.0 - std::pow(S::kBeta2, t);
    const auto m = S::kBeta1 * state.m.array() + (1.0 - S::kBeta1) * grad.array();
    const auto v = S::kBeta2 * state.v.array() + (1.0 - S::kBeta2) * grad.array().square();
    const auto v_max = state.v_max.array().max(v);
    const auto next = x.array() - (config.lr / bc1) * m / (v_max.sqrt() / std::sqrt(bc2) + S::kEpsilon);
    if (!next.isFinite().all()) throw NumericFault("apply_update: non-finite parameter after update");
    amsgrad_step(x, state, grad, config.lr);
    return norm;
  }
  Eigen::VectorXd next = x;
  OptimizerState next_state = state;
  amsgrad_step(next, next_state, grad, config.lr);
  if (!next.allFinite()) throw NumericFault("apply_update: non-finite parameter after update");
  x = std::move(next);
  state = std::move(next_state);
  return norm;
}

}  // namespace lsa::learn
