#include "doctest.h"

#include <cmath>

#include "evor/qc.hpp"

using namespace evor;

namespace {

OfflineDataset chain_data() {
  const auto env = make_env("chain2");
  return gen_dataset(*env, RefPolicySpec{}, 6, 1, 0.9);
}

// Two linear members scoring the first chunk coordinate with weights w0, w1
// and constant offsets b0, b1.
ScalarCritic linear_qc(int obs_dim, int chunk_dim, float w0, float b0, float w1, float b1, QcConfig cfg) {
  auto make = [&](float w, float b) {
    nn::Mlp<float> net(nn::MlpSpec::make(obs_dim + chunk_dim, {}, 1));
    net.weight(0)(0, obs_dim) = w;
    net.bias(0)(0) = b;
    return net;
  };
  std::array<nn::Mlp<float>, 2> on{make(w0, b0), make(w1, b1)};
  std::array<nn::Mlp<float>, 2> tg = on;
  cfg.hidden = {};
  cfg.layer_norm = false;
  return ScalarCritic(on, tg, obs_dim, cfg);
}

}  // namespace

TEST_CASE("single-step windows") {
  const OfflineDataset ds = chain_data();
  const QcWindows w = build_qc_windows(ds, 1, 0.9);
  REQUIRE(w.size() == 12);
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    const auto& tr = ds.trajectories[j / 2][j % 2];
    CHECK(w.reward_sum(j) == static_cast<float>(tr.reward));
    CHECK(static_cast<bool>(w.bootstrap[j]) == (tr.step == 0));
    CHECK(w.chunk.col(j) == tr.action.cast<float>());
    if (w.bootstrap[j]) CHECK(w.next_obs.col(j) == tr.next_obs.cast<float>());
  }
}

TEST_CASE("two-step windows truncate and pad at the horizon") {
  const OfflineDataset ds = chain_data();
  const QcWindows w = build_qc_windows(ds, 2, 0.9);
  for (int i = 0; i < 6; ++i) {
    const auto& t = ds.trajectories[i];
    CHECK(w.reward_sum(2 * i) == doctest::Approx(t[0].reward + 0.9 * t[1].reward));
    CHECK_FALSE(w.bootstrap[2 * i]);
    CHECK(w.chunk.block(0, 2 * i, 2, 1) == t[0].action.cast<float>());
    CHECK(w.chunk.block(2, 2 * i, 2, 1) == t[1].action.cast<float>());
    CHECK(w.reward_sum(2 * i + 1) == static_cast<float>(t[1].reward));
    CHECK(w.chunk.block(2, 2 * i + 1, 2, 1).isZero());
  }
  const QcWindows g = w.gather({3, 0});
  CHECK(g.size() == 2);
  CHECK(g.index[0] == 3);
  CHECK(g.reward_sum(1) == w.reward_sum(0));
  CHECK_THROWS_AS(build_qc_windows(ds, 0, 0.9), ConfigError);
}

TEST_CASE("ensemble minimum") {
  Eigen::MatrixXf m(2, 3);
  m << 1, 5, -2, 3, 4, -1;
  const Eigen::VectorXf v = ensemble_min(m);
  CHECK(v(0) == 1.0f);
  CHECK(v(1) == 4.0f);
  CHECK(v(2) == -2.0f);
}

TEST_CASE("bootstrap targets use the min over members and max over candidates") {
  Rng rng(2);
  const auto env = make_env("chain2");
  BasePolicy pi(env->obs_dim(), env->action_space(), PolicyConfig{}, rng);
  QcConfig cfg;
  cfg.gamma = 0.5;
  cfg.bootstrap_candidates = 64;
  // Member 0: 2 a0 + 1, member 1: 3 a0 + 0.5. min = 0.5 at a0 = 0, 3 at a0 = 1.
  const ScalarCritic qc = linear_qc(env->obs_dim(), 2, 2.0f, 1.0f, 3.0f, 0.5f, cfg);
  const QcWindows w = build_qc_windows(chain_data(), 1, 0.5);
  const Eigen::VectorXf y = qc.td_targets(w, pi, rng);
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    if (w.bootstrap[j])
      CHECK(y(j) == doctest::Approx(w.reward_sum(j) + 0.5f * 3.0f));
    else
      CHECK(y(j) == w.reward_sum(j));
  }
}

TEST_CASE("qc action selection is a hard argmax") {
  Rng rng(3);
  const auto env = make_env("chain2");
  BasePolicy pi(env->obs_dim(), env->action_space(), PolicyConfig{}, rng);
  const ScalarCritic qc = linear_qc(env->obs_dim(), 2, -1.0f, 0.0f, -1.0f, 0.0f, QcConfig{});
  for (int trial = 0; trial < 20; ++trial) {
    const QcDecision d = qc_select_action(pi, qc, env->observe(env->reset(rng)), 16, rng);
    CHECK(d.scores(d.index) == d.scores.maxCoeff());
    if (d.scores.minCoeff() < d.scores.maxCoeff()) CHECK(d.chunk(0) == 0.0);
  }
  CHECK_THROWS_AS(qc_select_action(pi, qc, Eigen::VectorXd::Zero(4), 0, rng), InputDomainError);
}

TEST_CASE("scalar TD regression fits terminal rewards") {
  Rng rng(4);
  const auto env = make_env("chain2");
  const OfflineDataset ds = gen_dataset(*env, RefPolicySpec{}, 200, 3, 1.0);
  PolicyConfig pcfg;
  pcfg.chunk = 2;
  BasePolicy pi(env->obs_dim(), env->action_space(), pcfg, rng);
  QcConfig cfg;
  cfg.chunk = 2;
  cfg.gamma = 1.0;
  cfg.hidden = {32, 32};
  cfg.adam.lr = 3e-3;
  cfg.bootstrap_candidates = 1;
  ScalarCritic qc(env->obs_dim(), 4, cfg, rng);
  const QcWindows w = build_qc_windows(ds, 2, 1.0);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(w.size()) - 1);
  for (int it = 0; it < 1500; ++it) {
    std::vector<int> rows(64);
    for (int& r : rows) r = pick(rng);
    qc.td_update(w.gather(rows), pi, rng);
  }
  // Two-step chunks from s0 see the whole episode: Q = number of a0 moves.
  Eigen::MatrixXf obs = env->observe(env->reset(rng)).cast<float>().replicate(1, 4);
  Eigen::MatrixXf c = Eigen::MatrixXf::Zero(4, 4);
  const int plan[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  for (int i = 0; i < 4; ++i) {
    c(plan[i][0], i) = 1.0f;
    c(2 + plan[i][1], i) = 1.0f;
  }
  const Eigen::VectorXf q = qc.q_min(obs, c);
  CHECK(q(0) == doctest::Approx(2.0).epsilon(0.1));
  CHECK(q(1) == doctest::Approx(1.0).epsilon(0.1));
  CHECK(q(2) == doctest::Approx(1.0).epsilon(0.1));
  CHECK(q(3) == doctest::Approx(0.0).epsilon(0.1));
}
