#include "doctest.h"

#include <cmath>
#include <limits>

#include "evor/critic.hpp"

using namespace evor;

namespace {

// Online and target output the constant velocity c.
void make_constant(RewardToGoCritic& critic, float c) {
  for (auto* f : {&critic.online(), &critic.target()}) {
    auto& net = f->net();
    net.params().setZero();
    net.bias(net.num_layers() - 1).setConstant(c);
  }
}

TdBatch toy_batch(int B, bool terminal) {
  TdBatch b;
  b.obs = Eigen::MatrixXf::Ones(2, B);
  b.action = Eigen::MatrixXf::Zero(1, B);
  b.next_obs = Eigen::MatrixXf::Ones(2, B);
  b.next_action = Eigen::MatrixXf::Zero(1, B);
  b.reward = Eigen::VectorXf::LinSpaced(B, 0.0f, 1.0f);
  b.rtg = b.reward;
  b.terminal.assign(B, terminal ? 1 : 0);
  for (int j = 0; j < B; ++j) b.index.push_back(100 + j);
  return b;
}

}  // namespace

TEST_CASE("log-mean-exp closed forms") {
  const Eigen::VectorXd same = Eigen::VectorXd::Constant(7, 2.5);
  for (double tau : {1e-4, 0.1, 1.0, 100.0}) CHECK(log_mean_exp(same, tau) == doctest::Approx(2.5).epsilon(1e-14));

  Eigen::VectorXd z(3);
  z << 0.0, 1.0, 3.0;
  const double direct = std::log((1.0 + std::exp(1.0) + std::exp(3.0)) / 3.0);
  CHECK(log_mean_exp(z, 1.0) == doctest::Approx(direct).epsilon(1e-14));
  CHECK(log_mean_exp(z, 0.5) == doctest::Approx(0.5 * std::log((1.0 + std::exp(2.0) + std::exp(6.0)) / 3.0)));
  // Small tau tends to the max, large tau to the mean.
  CHECK(log_mean_exp(z, 1e-3) == doctest::Approx(3.0 - 1e-3 * std::log(3.0)).epsilon(1e-12));
  CHECK(log_mean_exp(z, 1e6) == doctest::Approx(4.0 / 3.0).epsilon(1e-5));

  Eigen::VectorXd big(2);
  big << 1000.0, 1000.0 - std::log(3.0);
  CHECK(log_mean_exp(big, 1.0) == doctest::Approx(1000.0 + std::log(2.0 / 3.0)));
  for (double tau : {1e-8, 1e-3, 1.0, 1e8}) {
    const double v = log_mean_exp(z, tau);
    CHECK(v >= 0.0);
    CHECK(v <= 3.0);
  }
  CHECK_THROWS_AS(log_mean_exp(z, 0.0), InputDomainError);
  CHECK_THROWS_AS(log_mean_exp(Eigen::VectorXd(), 1.0), InputDomainError);
}

TEST_CASE("estimator configuration is validated") {
  Rng rng(1);
  RewardToGoCritic critic(2, 1, CriticConfig{}, rng);
  CHECK_THROWS_AS((QStarEstimator{nullptr, 1.0, 5}.validate()), ConfigError);
  CHECK_THROWS_AS((QStarEstimator{&critic, 0.0, 5}.validate()), ConfigError);
  CHECK_THROWS_AS((QStarEstimator{&critic, 1.0, 0}.validate()), ConfigError);
  CHECK_NOTHROW((QStarEstimator{&critic, 1.0, 1}.validate()));
}

TEST_CASE("a zero velocity field leaves the Gaussian prior") {
  Rng rng(2);
  RewardToGoCritic critic(2, 1, CriticConfig{}, rng);
  make_constant(critic, 0.0f);
  const Eigen::MatrixXf obs = Eigen::MatrixXf::Ones(2, 1), act = Eigen::MatrixXf::Zero(1, 1);
  const QStarEstimator est{&critic, 1.0, 40000};
  // ln E exp(Z) = 1/2 for Z ~ N(0, 1).
  CHECK(est.q_star(obs, act, rng)(0) == doctest::Approx(0.5).epsilon(0.05));
  make_constant(critic, 2.0f);
  const Eigen::MatrixXf s = critic.sample_rtg(obs, act, 5000, rng);
  CHECK(s.rows() == 5000);
  CHECK(s.cols() == 1);
  CHECK(s.mean() == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("sampling is deterministic per seed and batched consistently") {
  Rng init(3);
  RewardToGoCritic critic(3, 2, CriticConfig{}, init);
  const Eigen::MatrixXf obs = Eigen::MatrixXf::Random(3, 4), act = Eigen::MatrixXf::Random(2, 4);
  Rng a(9), b(9);
  CHECK(critic.sample_rtg(obs, act, 6, a) == critic.sample_rtg(obs, act, 6, b));
  Rng c(10);
  const Eigen::MatrixXf z0 = standard_normal<float>(6, 4, c);
  const Eigen::MatrixXf all = critic.sample_rtg_from(obs, act, z0);
  for (int i = 0; i < 4; ++i) {
    const Eigen::MatrixXf one = critic.sample_rtg_from(obs.col(i), act.col(i), z0.col(i));
    CHECK((one - all.col(i)).cwiseAbs().maxCoeff() < 1e-5f);
  }
  CHECK_THROWS_AS(critic.sample_rtg_from(obs, act, Eigen::MatrixXf::Zero(6, 3)), ShapeError);
}

TEST_CASE("td targets with a constant field") {
  Rng rng(4);
  CriticConfig cfg;
  cfg.gamma = 0.9;
  RewardToGoCritic critic(2, 1, cfg, rng);
  make_constant(critic, 0.5f);
  const TdBatch live = toy_batch(5, false);
  const Eigen::VectorXf zt = Eigen::VectorXf::Constant(5, 0.3f);
  const Eigen::VectorXf t = Eigen::VectorXf::LinSpaced(5, 0.0f, 0.8f);
  const Eigen::VectorXf got = critic.td_targets(live, zt, t, nullptr, rng);
  for (int j = 0; j < 5; ++j) CHECK(got(j) == doctest::Approx(live.reward(j) + 0.9f * 0.5f).epsilon(1e-6));

  const TdBatch end = toy_batch(5, true);
  const Eigen::VectorXf fin = critic.td_targets(end, zt, t, nullptr, rng);
  for (int j = 0; j < 5; ++j) CHECK(fin(j) == doctest::Approx((end.reward(j) - 0.3f) / (1.0f - t(j))).epsilon(1e-6));
  // t = 1 is capped rather than dividing by zero.
  const Eigen::VectorXf fin1 = critic.td_targets(end, zt, Eigen::VectorXf::Ones(5), nullptr, rng);
  CHECK(fin1.allFinite());
}

TEST_CASE("policy bootstrap requires a policy") {
  Rng rng(5);
  CriticConfig cfg;
  cfg.bootstrap_action = BootstrapAction::policy;
  RewardToGoCritic critic(2, 1, cfg, rng);
  const TdBatch b = toy_batch(3, false);
  CHECK_THROWS_AS(critic.td_targets(b, Eigen::VectorXf::Zero(3), Eigen::VectorXf::Zero(3), nullptr, rng), ConfigError);
}

TEST_CASE("non-finite targets name the transition") {
  Rng rng(6);
  RewardToGoCritic critic(2, 1, CriticConfig{}, rng);
  TdBatch b = toy_batch(4, true);
  b.reward(2) = std::numeric_limits<float>::infinity();
  try {
    critic.td_targets(b, Eigen::VectorXf::Zero(4), Eigen::VectorXf::Zero(4), nullptr, rng);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("102") != std::string::npos);
  }
}

TEST_CASE("target network tracks the online network by polyak averaging") {
  Rng rng(7);
  CriticConfig cfg;
  cfg.polyak = 0.25;
  RewardToGoCritic critic(2, 1, cfg, rng);
  const auto before = critic.target().net().params();
  critic.td_update(toy_batch(8, true), nullptr, rng);
  const auto online = critic.online().net().params();
  const auto expect = (0.75f * before + 0.25f * online).eval();
  CHECK((critic.target().net().params() - expect).cwiseAbs().maxCoeff() < 1e-6f);
}

TEST_CASE("terminal-only data learns the reward distribution") {
  // One-step problem: rewards 0 or 1 with equal probability per action 0,
  // always 0.25 for action 1.
  Rng rng(8);
  CriticConfig cfg;
  cfg.hidden = {32, 32};
  cfg.adam.lr = 3e-3;
  RewardToGoCritic critic(1, 1, cfg, rng);
  const int B = 64;
  for (int it = 0; it < 3000; ++it) {
    TdBatch b;
    b.obs = Eigen::MatrixXf::Ones(1, B);
    b.next_obs = b.obs;
    b.action.resize(1, B);
    b.next_action = Eigen::MatrixXf::Zero(1, B);
    b.reward.resize(B);
    std::bernoulli_distribution coin(0.5);
    for (int j = 0; j < B; ++j) {
      const bool first = j % 2 == 0;
      b.action(0, j) = first ? 0.0f : 1.0f;
      b.reward(j) = first ? (coin(rng) ? 1.0f : 0.0f) : 0.25f;
    }
    b.rtg = b.reward;
    b.terminal.assign(B, 1);
    critic.td_update(b, nullptr, rng);
  }
  const Eigen::MatrixXf obs = Eigen::MatrixXf::Ones(1, 2);
  Eigen::MatrixXf act(1, 2);
  act << 0.0f, 1.0f;
  const Eigen::MatrixXf s = critic.sample_rtg(obs, act, 2000, rng);
  CHECK(s.col(0).mean() == doctest::Approx(0.5).epsilon(0.1));
  CHECK(s.col(1).mean() == doctest::Approx(0.25).epsilon(0.1));
  const double near1 = (s.col(0).array() > 0.75f).cast<double>().mean();
  CHECK(near1 > 0.35);
  CHECK(near1 < 0.65);
  // Risk-seeking estimate prefers the spread action at small tau.
  const QStarEstimator est{&critic, 0.05, 200};
  const Eigen::VectorXd q = est.q_star(obs, act, rng);
  CHECK(q(0) > q(1));
}
