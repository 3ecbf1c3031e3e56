#pragma once

#include <cstdint>
#include <iosfwd>

#include <Eigen/Core>

#include "lsa/network.hpp"

namespace lsa::learn {

/// Adam moments with the AMSGrad running maximum of the second moment.
struct OptimizerState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  Eigen::VectorXd m;
  Eigen::VectorXd v;
  Eigen::VectorXd v_max;
  std::int64_t step = 0;

  OptimizerState() = default;
  explicit OptimizerState(Eigen::Index size)
      : m(Eigen::VectorXd::Zero(size)),
        v(Eigen::VectorXd::Zero(size)),
        v_max(Eigen::VectorXd::Zero(size)) {}

  void serialize(std::ostream& os) const;
  void deserialize(std::istream& is);
};

/// Scales `grad` in place so its L2 norm is at most max_norm; returns the norm before clipping.
double clip_global_norm(Gradient& grad, double max_norm);

/// Bias-corrected Adam step with AMSGrad; no clipping.
void amsgrad_step(Eigen::VectorXd& params, OptimizerState& state, const Gradient& grad, double lr);

/// Clip to config.clip_norm, then one AMSGrad step at config.lr. Throws NumericFault if any
/// parameter becomes non-finite (parameters are left as they were).
double apply_update(ParamSet& params, OptimizerState& state, Gradient grad, const LossConfig& config);

}  // namespace lsa::learn
