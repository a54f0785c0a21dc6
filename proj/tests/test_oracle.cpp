#include "doctest.h"

#include <cmath>

#include "evor/oracle.hpp"
#include "support/enumerate.hpp"

using namespace evor;

TEST_CASE("chain2 frozen soft values") {
  Chain2 env;
  const OracleTables t = soft_value_iteration(env, RefPolicySpec{}, 1.0);
  // ln((e + 1) / 2) and 1 + ln((e + 1) / 2).
  CHECK(t.q.at(1, 1, 0) == doctest::Approx(1.0));
  CHECK(t.q.at(1, 1, 1) == doctest::Approx(0.0));
  CHECK(t.value(1, 1) == doctest::Approx(0.6201145069582775).epsilon(1e-12));
  CHECK(t.q.at(0, 0, 0) == doctest::Approx(1.6201145069582775).epsilon(1e-12));
  CHECK(t.q.at(0, 0, 1) == doctest::Approx(0.6201145069582775).epsilon(1e-12));
  CHECK(t.value(2, 0) == 0.0);
  CHECK(t.pi.at(1, 1, 0) == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + 1.0)));

  const QTable qpi = exact_q_pi(env, tabulate_ref_policy(env, RefPolicySpec{}), 1.0);
  CHECK(qpi.at(0, 0, 0) == doctest::Approx(1.5));
  CHECK(qpi.at(0, 0, 1) == doctest::Approx(0.5));
}

TEST_CASE("chain2 reward-to-go distribution") {
  Chain2 env;
  const RtgTable rtg = exact_rtg_distribution(env, RefPolicySpec{}, 1.0);
  const auto& d = rtg.at(0, 0, 0);
  REQUIRE(d.values.size() == 2);
  CHECK(d.values[0] == 1.0);
  CHECK(d.values[1] == 2.0);
  CHECK(d.probs[0] == doctest::Approx(0.5));
  CHECK(d.probs[1] == doctest::Approx(0.5));
  CHECK(d.total_mass() == doctest::Approx(1.0));
  CHECK(d.prob_near(2.0, 0.25) == doctest::Approx(0.5));
  CHECK(rtg.at(1, 1, 1).values == std::vector<double>{0.0});
}

TEST_CASE("reward-to-go distribution matches tree enumeration") {
  Gridworld5 env;
  for (double gamma : {1.0, 0.9}) {
    const RefPolicySpec ref{{0.7, 0.3}};
    const RtgTable rtg = exact_rtg_distribution(env, ref, gamma);
    auto compare = [&](int h, int s, int a) {
      const auto brute = test::returns_from(env, ref, h, s, a, gamma);
      const auto& d = rtg.at(h, s, a);
      CHECK(d.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(d.mean() == doctest::Approx(test::mean_of(brute)).epsilon(1e-10));
      // Same support and masses after merging float duplicates.
      DiscreteDistribution b;
      for (const auto& [z, p] : brute) {
        b.values.push_back(z);
        b.probs.push_back(p);
      }
      b.compact(1e-9);
      DiscreteDistribution c = d;
      c.compact(1e-9);
      REQUIRE(b.values.size() == c.values.size());
      for (std::size_t i = 0; i < b.values.size(); ++i) {
        CHECK(c.values[i] == doctest::Approx(b.values[i]).epsilon(1e-10));
        CHECK(c.probs[i] == doctest::Approx(b.probs[i]).epsilon(1e-10));
      }
    };
    for (int s = 0; s < env.num_states(); ++s)
      for (int a = 0; a < 4; ++a) compare(6, s, a);
    for (int a = 0; a < 4; ++a) compare(0, env.initial_state(), a);
  }
}

TEST_CASE("soft value iteration agrees with the exponential-moment route") {
  Gridworld5 env;
  const RefPolicySpec ref{};
  for (double eta : {0.01, 0.1, 1.0, 10.0}) {
    const OracleTables t = soft_value_iteration(env, ref, eta, 1.0);
    const QTable q1 = exact_q_star_via_theorem1(env, ref, eta, 1.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < q1.cells.size(); ++i) worst = std::max(worst, std::abs(q1.cells[i] - t.q.cells[i]));
    CHECK(worst < 1e-10);
  }
  // Spot check against enumeration.
  const double eta = 0.5;
  const QTable q1 = exact_q_star_via_theorem1(env, ref, eta, 1.0);
  const int s0 = env.initial_state();
  for (int a = 0; a < 4; ++a)
    CHECK(q1.at(0, s0, a) == doctest::Approx(test::soft_value(test::returns_from(env, ref, 0, s0, a, 1.0), eta)).epsilon(1e-10));
}

TEST_CASE("soft values interpolate between mean and max") {
  Gridworld5 env;
  const RefPolicySpec ref{};
  const RtgTable rtg = exact_rtg_distribution(env, ref, 1.0);
  const QTable cold = exact_q_star_via_theorem1(env, ref, 1e-3, 1.0);
  const QTable hot = exact_q_star_via_theorem1(env, ref, 1e3, 1.0);
  for (int h = 0; h < env.horizon(); ++h)
    for (int s = 0; s < env.num_states(); ++s)
      for (int a = 0; a < 4; ++a) {
        const auto& d = rtg.at(h, s, a);
        CHECK(cold.at(h, s, a) == doctest::Approx(d.max()).epsilon(2e-2));
        CHECK(hot.at(h, s, a) == doctest::Approx(d.mean()).epsilon(1e-3));
        CHECK(cold.at(h, s, a) <= d.max() + 1e-12);
        CHECK(cold.at(h, s, a) >= hot.at(h, s, a) - 1e-12);
      }
}

TEST_CASE("soft-optimal policy is normalised and tilts towards the goal") {
  Gridworld5 env;
  const OracleTables t = soft_value_iteration(env, RefPolicySpec{}, 0.1, 0.99);
  for (int h = 0; h < env.horizon(); ++h)
    for (int s = 0; s < env.num_states(); ++s) {
      double sum = 0.0;
      for (int a = 0; a < 4; ++a) sum += t.pi.at(h, s, a);
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  const QTable g = exact_q_pi(env, greedy_policy(t.q), 1.0);
  const int s0 = env.initial_state();
  double best = 0.0;
  for (int a = 0; a < 4; ++a) best = std::max(best, g.at(0, s0, a));
  CHECK(best == 1.0);
}

TEST_CASE("oracle input validation") {
  Chain2 env;
  CHECK_THROWS_AS(soft_value_iteration(env, RefPolicySpec{}, 0.0), InputDomainError);
  CHECK_THROWS_AS(soft_value_iteration(env, RefPolicySpec{}, 1.0, 1.5), ConfigError);
  const QTable q(2, 3, 2);
  CHECK_THROWS_AS(q.at(2, 0, 0), InputDomainError);
  CHECK_THROWS_AS(q.at(0, 0, 2), InputDomainError);
  CHECK(soft_expectation(DiscreteDistribution::point(3.0), 0.01) == doctest::Approx(3.0));
}

TEST_CASE("golden text has one row per cell") {
  Chain2 env;
  const OracleTables t = soft_value_iteration(env, RefPolicySpec{}, 1.0);
  const std::string txt = oracle_to_text(t, exact_rtg_distribution(env, RefPolicySpec{}, 1.0));
  int lines = 0;
  for (char c : txt) lines += c == '\n';
  CHECK(lines >= 2 * 3 * 2);
}
