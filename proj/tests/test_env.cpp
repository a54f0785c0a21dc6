#include "doctest.h"

#include "evor/env.hpp"

using namespace evor;

namespace {
Eigen::VectorXd onehot(int n, int i) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  v(i) = 1.0;
  return v;
}
State at(int id, int step) {
  State s;
  s.id = id;
  s.step = step;
  return s;
}
}  // namespace

TEST_CASE("chain2 transitions") {
  Chain2 env;
  const StepResult r0 = env.step(at(0, 0), onehot(2, 0));
  CHECK(r0.next.id == 1);
  CHECK(r0.reward == 1.0);
  CHECK_FALSE(r0.terminal);
  const StepResult r1 = env.step(at(1, 1), onehot(2, 1));
  CHECK(r1.next.id == 2);
  CHECK(r1.reward == 0.0);
  CHECK(r1.terminal);
  CHECK_THROWS_AS(env.step(at(2, 2), onehot(2, 0)), InputDomainError);
  CHECK_THROWS_AS(env.step(at(5, 0), onehot(2, 0)), InputDomainError);
  CHECK_THROWS_AS(env.step(at(0, 0), Eigen::Vector2d(0.5, 0.5)), InputDomainError);
}

TEST_CASE("gridworld walls and borders block moves") {
  Gridworld5 env;
  const auto& layout = Gridworld5::layout();
  int checked = 0;
  for (int s = 0; s < env.num_states(); ++s) {
    if (s == env.goal()) continue;
    for (int a = 0; a < 4; ++a) {
      const StepResult r = env.step(at(s, 0), onehot(4, a));
      if (r.next.id == s) {
        CHECK(r.reward == 0.0);
        CHECK_FALSE(r.terminal);
        ++checked;
      }
    }
  }
  CHECK(checked > 0);
  // Up from the top row stays put.
  const int start = env.initial_state();
  CHECK(env.state_name(start).size() > 0);
  CHECK(layout.size() == 5);
}

TEST_CASE("gridworld goal is reachable and rewarded once") {
  Gridworld5 env;
  CHECK(env.distance_to_goal(env.initial_state()) <= env.horizon());
  int goal_entries = 0;
  for (int s = 0; s < env.num_states(); ++s)
    for (int a = 0; a < 4; ++a)
      if (env.reward(s, a) > 0.0) {
        CHECK(env.next_state(s, a) == env.goal());
        CHECK(s != env.goal());
        ++goal_entries;
      }
  CHECK(goal_entries > 0);
  for (int a = 0; a < 4; ++a) CHECK(env.next_state(env.goal(), a) == env.goal());
}

TEST_CASE("steps are deterministic and rewards bounded") {
  for (const auto& id : env_ids()) {
    const auto env = make_env(id);
    Rng rng(3);
    State s = env->reset(rng);
    RefPolicySpec ref;
    for (int h = 0; h < env->horizon(); ++h) {
      const Eigen::VectorXd a = env->sample_ref_action(s, ref, rng);
      const StepResult r1 = env->step(s, a), r2 = env->step(s, a);
      CHECK(r1.reward == r2.reward);
      CHECK(r1.terminal == r2.terminal);
      CHECK(r1.next.id == r2.next.id);
      CHECK(r1.next.pos == r2.next.pos);
      CHECK(r1.reward >= 0.0);
      CHECK(r1.reward <= 1.0);
      CHECK(r1.terminal == (h == env->horizon() - 1));
      s = r1.next;
    }
  }
}

TEST_CASE("reference policies are normalised") {
  for (const std::string id : {"chain2", "gridworld5"}) {
    const auto env = make_env(id);
    const auto& fin = as_finite(*env);
    for (const auto& w : {std::vector<double>{0.5, 0.5}, std::vector<double>{0.9, 0.1}}) {
      for (int s = 0; s < fin.num_states(); ++s) {
        double sum = 0.0;
        for (double p : fin.ref_probs(s, RefPolicySpec{w})) sum += p;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }
  CHECK_THROWS_AS(RefPolicySpec({0.5, 0.6}).validate(2), ConfigError);
  CHECK_THROWS_AS(RefPolicySpec({1.0}).validate(2), ConfigError);
  CHECK_THROWS_AS(as_finite(*make_env("pointmass-maze")), UnsupportedError);
  CHECK_THROWS_AS(make_env("nope"), ConfigError);
}

TEST_CASE("bimodal bandit reward intervals") {
  CHECK(BimodalBandit::reward_at(-2.0) == 1.0);
  CHECK(BimodalBandit::reward_at(2.0) == 1.0);
  CHECK(BimodalBandit::reward_at(0.0) == 0.0);
  CHECK(BimodalBandit::reward_at(2.3) == 0.0);
  BimodalBandit env;
  CHECK_THROWS_AS(env.step(State{-1, Eigen::VectorXd(), 0}, Eigen::VectorXd::Constant(1, 3.5)), InputDomainError);
}

TEST_CASE("pointmass wall blocks and goal terminates success") {
  PointmassMaze env;
  Rng rng(1);
  State s = env.reset(rng);
  CHECK_FALSE(PointmassMaze::in_wall(s.pos(0), s.pos(1)));
  State w;
  w.pos = Eigen::Vector2d(0.4, 0.3);
  const StepResult r = env.step(w, Eigen::Vector2d(1.0, 0.0));
  CHECK(r.next.pos == w.pos);
  CHECK(PointmassMaze::in_goal(Eigen::Vector2d(PointmassMaze::kGoalX, PointmassMaze::kGoalY)));
}

TEST_CASE("action space snapping") {
  const ActionSpace sp = ActionSpace::one_hot(3);
  CHECK(sp.nearest(Eigen::Vector3d(0.1, 0.9, 0.2)) == 1);
  CHECK(sp.nearest(Eigen::Vector3d(0.5, 0.5, 0.0)) == 0);
  CHECK(sp.index_of(Eigen::Vector3d(0, 0, 1)) == 2);
  CHECK(sp.index_of(Eigen::Vector3d(0, 0.1, 1)) == -1);
  const ActionSpace box = ActionSpace::box(2, -1, 1);
  CHECK(box.clip(Eigen::Vector2d(3, -0.5)) == Eigen::Vector2d(1, -0.5));
}
