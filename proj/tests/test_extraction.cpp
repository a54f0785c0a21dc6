#include "doctest.h"

#include <cmath>

#include "evor/extraction.hpp"

using namespace evor;

namespace {

// Linear critic whose velocity is `w` times the first action coordinate, so
// sampled returns are z0 + w * a_0.
RewardToGoCritic action_linear_critic(int obs_dim, int act_dim, float w) {
  auto make = [&] {
    nn::Mlp<float> net(nn::MlpSpec::make(2 + obs_dim + act_dim, {}, 1));
    net.weight(0)(0, 2 + obs_dim) = w;
    return ConditionalFlowModel(FlowSpec{1, obs_dim + act_dim, false}, std::move(net));
  };
  CriticConfig cfg;
  cfg.hidden = {};
  cfg.layer_norm = false;
  return RewardToGoCritic(make(), make(), obs_dim, cfg);
}

}  // namespace

TEST_CASE("softmax probabilities") {
  Eigen::VectorXd s(3);
  s << 1.0, 2.0, 3.0;
  const Eigen::VectorXd p = softmax_probs(s, 1.0);
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  CHECK(p(0) == doctest::Approx(std::exp(1.0) / z).epsilon(1e-14));
  CHECK(p(2) == doctest::Approx(std::exp(3.0) / z).epsilon(1e-14));
  CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-15));
  const Eigen::VectorXd cold = softmax_probs(s, 1e-4);
  CHECK(cold(2) == 1.0);
  CHECK(cold(0) == 0.0);
  const Eigen::VectorXd flat = softmax_probs(Eigen::VectorXd::Constant(4, 7.0), 1e-6);
  for (int i = 0; i < 4; ++i) CHECK(flat(i) == 0.25);
  Eigen::VectorXd huge(2);
  huge << 1e300, 1e300;
  CHECK(softmax_probs(huge, 1.0).allFinite());
  CHECK_THROWS_AS(softmax_probs(s, 0.0), InputDomainError);
  CHECK_THROWS_AS(softmax_probs(Eigen::VectorXd(), 1.0), InputDomainError);
}

TEST_CASE("softmax selection frequencies follow the probabilities") {
  Eigen::VectorXd s(3);
  s << 0.0, std::log(2.0), std::log(5.0);  // 1 : 2 : 5
  Rng rng(1);
  int counts[3] = {0, 0, 0};
  const int n = 80000;
  for (int i = 0; i < n; ++i) ++counts[softmax_select(s, 1.0, rng)];
  CHECK(counts[0] / double(n) == doctest::Approx(0.125).epsilon(0.05));
  CHECK(counts[1] / double(n) == doctest::Approx(0.25).epsilon(0.05));
  CHECK(counts[2] / double(n) == doctest::Approx(0.625).epsilon(0.05));
}

TEST_CASE("argmax ties go to the lowest index") {
  Eigen::VectorXd s(4);
  s << 0.5, 2.0, 2.0, -1.0;
  CHECK(argmax_select(s) == 1);
  CHECK(argmax_select(Eigen::VectorXd::Zero(5)) == 0);
}

TEST_CASE("single candidate skips the critic") {
  Rng rng(2);
  BasePolicy pi(3, ActionSpace::one_hot(2), PolicyConfig{}, rng);
  const RewardToGoCritic unused;  // any call into it would throw
  ExtractionConfig cfg;
  cfg.n_candidates = 1;
  Rng a(7), b(7);
  const Decision d = extract_action(pi, unused, Eigen::VectorXd::Ones(3), cfg, a);
  CHECK(d.index == 0);
  CHECK(d.action == pi.sample_actions(Eigen::MatrixXf::Ones(3, 1), b).col(0).cast<double>());
}

TEST_CASE("extraction picks the action the critic favours") {
  Rng rng(3);
  BasePolicy pi(3, ActionSpace::one_hot(2), PolicyConfig{}, rng);
  const RewardToGoCritic critic = action_linear_critic(3, 2, 4.0f);
  ExtractionConfig cfg;
  cfg.n_candidates = 16;
  cfg.n_rtg = 64;
  for (Selection sel : {Selection::softmax, Selection::argmax}) {
    cfg.selection = sel;
    int seen = 0;
    for (int trial = 0; trial < 40; ++trial) {
      const Decision d = extract_action(pi, critic, Eigen::VectorXd::Random(3), cfg, rng);
      CHECK(d.candidates.cols() == 16);
      CHECK(d.scores.size() == 16);
      bool offered = false;
      for (int i = 0; i < 16; ++i) offered |= d.candidates(0, i) == 1.0f;
      if (!offered) continue;
      ++seen;
      CHECK(d.action(0) == 1.0);
    }
    CHECK(seen > 0);
  }
}

TEST_CASE("extraction config validation") {
  ExtractionConfig cfg;
  cfg.n_rtg = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ExtractionConfig{};
  cfg.tau_q = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("evaluation of fixed actors on chain2") {
  const auto env = make_env("chain2");
  const Actor good = [](const Mdp&, const State&, Rng&) { return Eigen::MatrixXd(Eigen::Vector2d(1, 0)); };
  const EvalResult r = evaluate_policy(*env, good, 10, 0);
  CHECK(r.mean_return == 2.0);
  CHECK(r.std_return == 0.0);
  CHECK(r.success_rate == 1.0);
  CHECK(r.returns.size() == 10);

  // Coin-flip actor: per-episode streams make the result seed-determined.
  const Actor coin = [](const Mdp&, const State&, Rng& rng) {
    return Eigen::MatrixXd(std::bernoulli_distribution(0.5)(rng) ? Eigen::Vector2d(1, 0) : Eigen::Vector2d(0, 1));
  };
  const EvalResult a = evaluate_policy(*env, coin, 400, 5), b = evaluate_policy(*env, coin, 400, 5);
  CHECK(a.returns == b.returns);
  CHECK(a.mean_return == doctest::Approx(1.0).epsilon(0.1));
  CHECK(a.success_rate == doctest::Approx(0.25).epsilon(0.05));
  CHECK(a.std_return == doctest::Approx(std::sqrt(0.5)).epsilon(0.1));
  CHECK_THROWS_AS(evaluate_policy(*env, coin, 0, 5), InputDomainError);
}

TEST_CASE("chunked actors execute every action of the chunk") {
  const auto env = make_env("gridworld5");
  int calls = 0;
  const Actor chunky = [&calls](const Mdp&, const State&, Rng&) {
    ++calls;
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(4, 3);
    for (int k = 0; k < 3; ++k) c(3, k) = 1.0;  // right, right, right
    return c;
  };
  evaluate_policy(*env, chunky, 1, 0);
  CHECK(calls == 4);  // ceil(10 / 3)
}
