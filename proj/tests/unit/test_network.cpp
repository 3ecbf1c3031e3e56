#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fd.hpp"
#include "fixtures.hpp"
#include "lsa/error.hpp"
#include "lsa/network.hpp"
#include "oracles.hpp"

using namespace lsa;
using namespace lsa::learn;

TEST(Forward, ProbabilitiesSumToOneAndMatchOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = fixtures::noisy_params(static_cast<std::uint64_t>(trial), 1.0);
    const auto obs = fixtures::random_obs(rng, p.shape().obs_size);
    const int x = trial % p.shape().num_targets;
    const auto f = forward(p, obs, x);
    EXPECT_NEAR(f.probs.sum(), 1.0, 1e-6);
    const auto o = oracle::forward(p, obs, x);
    for (int a = 0; a < 3; ++a) EXPECT_NEAR(f.probs[a], o.probs[static_cast<std::size_t>(a)], 1e-12);
    EXPECT_NEAR(f.value, o.value, 1e-12);
    for (int k = 0; k < f.feature.size(); ++k) EXPECT_NEAR(f.feature[k], o.feature[static_cast<std::size_t>(k)], 1e-12);
  }
}

TEST(Forward, ZeroGateGivesHalfEncoder) {
  auto p = fixtures::noisy_params(3);
  p.block(p.layout().gate_w).setZero();
  p.block(p.layout().gate_b).setZero();
  Rng rng(2);
  const auto obs = fixtures::random_obs(rng, p.shape().obs_size);
  const auto f = forward(p, obs, 1);
  const auto enc = encode(p, obs);
  for (int k = 0; k < enc.size(); ++k) EXPECT_DOUBLE_EQ(f.feature[k], 0.5 * enc[k]);
}

TEST(Forward, InstructionActuallyConditionsFeatures) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = fixtures::noisy_params(static_cast<std::uint64_t>(trial));
    auto obs = fixtures::random_obs(rng, p.shape().obs_size);
    ASSERT_GT(encode(p, obs).norm(), 0.0);
    const auto a = forward(p, obs, 0).feature;
    const auto b = forward(p, obs, 1).feature;
    EXPECT_GT((a - b).norm(), 0.0) << "trial " << trial;
  }
}

TEST(Forward, NonFiniteOutputIsNumericFault) {
  auto p = fixtures::noisy_params(5);
  p.values()[p.layout().value_b.offset] = std::numeric_limits<double>::infinity();
  Rng rng(1);
  EXPECT_THROW(forward(p, fixtures::random_obs(rng, p.shape().obs_size), 0), NumericFault);
}

TEST(Returns, BackwardRecursion) {
  Trajectory t;
  for (double r : {-0.01, -0.01, 10.0}) {
    Transition s;
    s.reward = r;
    t.steps.push_back(s);
  }
  const auto R = compute_returns(t, 0.99);
  EXPECT_NEAR(R[2], 10.0, 1e-12);
  EXPECT_NEAR(R[1], 9.89, 1e-12);
  EXPECT_NEAR(R[0], 9.7811, 1e-12);
  const auto R0 = compute_returns(t, 0.0);
  EXPECT_EQ(R0, (std::vector<double>{-0.01, -0.01, 10.0}));
  t.steps.resize(1);
  t.steps[0].reward = 3.0;
  EXPECT_EQ(compute_returns(t, 0.99), std::vector<double>{3.0});
}

TEST(Returns, TruncatedEpisodeBootstraps) {
  Trajectory t;
  Transition s;
  s.reward = 1.0;
  t.steps = {s, s};
  t.terminal = false;
  t.bootstrap_value = 5.0;
  const auto R = compute_returns(t, 0.5);
  EXPECT_DOUBLE_EQ(R[1], 1.0 + 0.5 * 5.0);
  EXPECT_DOUBLE_EQ(R[0], 1.0 + 0.5 * R[1]);
}

TEST(ActorCritic, UniformPolicyEntropy) {
  ParamSet p(fixtures::tiny_shape());
  Rng rng(3);
  auto t = fixtures::random_trajectory(rng, 4, 3, p.shape().obs_size, 0.99);
  const auto r = actor_critic_grads(p, t, LossConfig{});
  EXPECT_NEAR(r.entropy, 4 * std::log(3.0), 1e-12);
}

TEST(ActorCritic, MatchesFiniteDifferencesOnToyTrajectory) {
  const LossConfig cfg;
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = fixtures::noisy_params(100 + static_cast<std::uint64_t>(trial));
    const auto t = fixtures::random_trajectory(rng, 2, 3, p.shape().obs_size, cfg.gamma, trial % 2 == 0);
    const auto r = actor_critic_grads(p, t, cfg);
    std::vector<double> adv;
    for (std::size_t i = 0; i < t.steps.size(); ++i)
      adv.push_back(t.returns[i] - oracle::forward(p, t.steps[i].obs, t.steps[i].instruction).value);
    EXPECT_NEAR(r.loss(cfg.entropy_beta), oracle::actor_critic_loss(p, t, adv, cfg.entropy_beta), 1e-9);
    const auto rep = fd::check(p, r.grad, [&](const ParamSet& q) {
      return oracle::actor_critic_loss(q, t, adv, cfg.entropy_beta);
    });
    EXPECT_LE(rep.max_rel_error, 1e-4) << "trial " << trial << " index " << rep.worst_index
                                       << " analytic " << rep.worst_analytic << " numeric "
                                       << rep.worst_numeric;
  }
}

TEST(ActorCritic, ZeroAdvantageLeavesOnlyEntropyGradient) {
  const LossConfig cfg;
  const auto p = fixtures::noisy_params(7);
  Rng rng(5);
  auto t = fixtures::random_trajectory(rng, 3, 3, p.shape().obs_size, cfg.gamma);
  for (std::size_t i = 0; i < t.steps.size(); ++i)
    t.returns[i] = forward(p, t.steps[i].obs, t.steps[i].instruction).value;
  const auto r = actor_critic_grads(p, t, cfg);
  EXPECT_NEAR(r.policy_loss, 0.0, 1e-12);
  EXPECT_NEAR(r.value_loss, 0.0, 1e-20);
  const std::vector<double> zero(3, 0.0);
  // With R = V the value term has zero gradient at p, so only -beta * grad H remains.
  const auto rep = fd::check(p, r.grad, [&](const ParamSet& q) {
    return oracle::actor_critic_loss(q, t, zero, cfg.entropy_beta);
  });
  EXPECT_LE(rep.max_rel_error, 1e-4);
}

TEST(SupCon, IdenticalPairHasZeroLoss) {
  Eigen::MatrixXd g(2, 2);
  g << 1, 1, 0, 0;
  const std::vector<TargetId> labels{0, 0};
  EXPECT_NEAR(supcon_loss(g, labels, 1.0), 0.0, 1e-15);
}

TEST(SupCon, FourEmbeddingExample) {
  Eigen::MatrixXd g(2, 4);
  g << 1, 1, 0, 0,  //
      0, 0, 1, 1;
  const std::vector<TargetId> labels{0, 0, 1, 1};
  const double expected = std::log(1.0 + 2.0 / std::exp(1.0));
  EXPECT_NEAR(supcon_loss(g, labels, 1.0), expected, 1e-12);
  std::vector<oracle::Vec> cols{{1, 0}, {1, 0}, {0, 1}, {0, 1}};
  EXPECT_NEAR(oracle::supcon(cols, {0, 0, 1, 1}, 1.0), expected, 1e-12);
}

TEST(SupCon, AnchorsWithoutPositivesAreSkipped) {
  Eigen::MatrixXd g(2, 3);
  g << 1, 1, 0, 0, 0, 1;
  const std::vector<TargetId> labels{0, 0, 1};
  std::vector<oracle::Vec> cols{{1, 0}, {1, 0}, {0, 1}};
  EXPECT_NEAR(supcon_loss(g, labels, 0.5), oracle::supcon(cols, {0, 0, 1}, 0.5), 1e-12);
}

TEST(SupCon, MatchesFiniteDifferences) {
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = fixtures::noisy_params(200 + static_cast<std::uint64_t>(trial));
    const auto batch = fixtures::random_batch(rng, 7, 3, p.shape().obs_size);
    const auto r = supcon_loss_and_grads(p, batch, 0.07);
    EXPECT_NEAR(r.loss, oracle::supcon_of_params(p, batch, 0.07), 1e-9);
    const auto rep = fd::check(p, r.grad, [&](const ParamSet& q) {
      return oracle::supcon_of_params(q, batch, 0.07);
    });
    EXPECT_LE(rep.max_rel_error, 1e-4) << "trial " << trial << " index " << rep.worst_index;
  }
}

TEST(SupCon, GradientTouchesOnlyEncoderAndProjection) {
  const auto p = fixtures::noisy_params(9);
  Rng rng(1);
  const auto r = supcon_loss_and_grads(p, fixtures::random_batch(rng, 8, 3, p.shape().obs_size), 0.07);
  const auto& l = p.layout();
  for (const auto& b : {l.embed, l.gate_w, l.gate_b, l.policy_w, l.policy_b, l.value_w, l.value_b})
    EXPECT_EQ(r.grad.segment(b.offset, b.size()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT(r.grad.segment(l.enc1_w.offset, l.enc1_w.size()).norm(), 0.0);
  EXPECT_GT(r.grad.segment(l.proj_w.offset, l.proj_w.size()).norm(), 0.0);
}

TEST(SupCon, NonNegativeAndPermutationInvariant) {
  Rng rng(33);
  const auto p = fixtures::noisy_params(10);
  for (int trial = 0; trial < 100; ++trial) {
    auto batch = fixtures::random_batch(rng, 10, 3, p.shape().obs_size);
    const double a = supcon_loss_and_grads(p, batch, 0.07).loss;
    std::shuffle(batch.begin(), batch.end(), rng);
    const double b = supcon_loss_and_grads(p, batch, 0.07).loss;
    EXPECT_GE(a, 0.0);
    EXPECT_NEAR(a, b, 1e-9);
  }
}

TEST(SupCon, TooSmallBatchIsUsageError) {
  const auto p = fixtures::noisy_params(1);
  Rng rng(1);
  EXPECT_THROW(supcon_loss_and_grads(p, fixtures::random_batch(rng, 1, 3, p.shape().obs_size), 0.07),
               UsageError);
}

TEST(Combine, TotalIsRlPlusEtaSupCon) {
  const LossConfig cfg;
  const auto p = fixtures::noisy_params(12);
  Rng rng(2);
  const auto t = fixtures::random_trajectory(rng, 3, 3, p.shape().obs_size, cfg.gamma);
  const auto rl = actor_critic_grads(p, t, cfg);
  const auto sc = supcon_loss_and_grads(p, fixtures::random_batch(rng, 8, 3, p.shape().obs_size), cfg.supcon_tau);
  const auto total = combine(rl, &sc, cfg);
  EXPECT_DOUBLE_EQ(total.total, rl.loss(cfg.entropy_beta) + cfg.supcon_eta * sc.loss);
  EXPECT_DOUBLE_EQ(total.rl, rl.loss(cfg.entropy_beta));
  EXPECT_TRUE(total.grad.isApprox(rl.grad + cfg.supcon_eta * sc.grad, 1e-14));
  const auto rl_only = combine(rl, nullptr, cfg);
  EXPECT_EQ(rl_only.grad, rl.grad);
}

TEST(ParamSet, InitializationIsSeededAndFinite) {
  const auto a = ParamSet::initialize(fixtures::tiny_shape(), 5);
  const auto b = ParamSet::initialize(fixtures::tiny_shape(), 5);
  const auto c = ParamSet::initialize(fixtures::tiny_shape(), 6);
  EXPECT_EQ(a.values(), b.values());
  EXPECT_NE(a.values(), c.values());
  EXPECT_TRUE(a.all_finite());
  EXPECT_EQ(a.block(a.layout().value_w).norm(), 0.0);
}

TEST(ParamSet, SerializationRoundTripAndShapeCheck) {
  const auto a = fixtures::noisy_params(4);
  std::stringstream buf;
  a.serialize(buf);
  ParamSet b(a.shape());
  b.deserialize(buf);
  EXPECT_EQ(a.values(), b.values());
  auto other = fixtures::tiny_shape();
  other.feature_width = 9;
  ParamSet c(other);
  std::stringstream again;
  a.serialize(again);
  EXPECT_THROW(c.deserialize(again), CheckpointError);
}
