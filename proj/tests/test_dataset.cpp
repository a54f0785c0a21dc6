#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "evor/dataset.hpp"

using namespace evor;

TEST_CASE("generation is deterministic and full length") {
  const auto env = make_env("gridworld5");
  const OfflineDataset a = gen_dataset(*env, RefPolicySpec{}, 20, 7, 0.99);
  const OfflineDataset b = gen_dataset(*env, RefPolicySpec{}, 20, 7, 0.99);
  CHECK(serialize(a) == serialize(b));
  CHECK(a.num_transitions() == 200);
  const OfflineDataset c = gen_dataset(*env, RefPolicySpec{}, 20, 8, 0.99);
  CHECK(serialize(a) != serialize(c));
  for (const auto& traj : a.trajectories) {
    REQUIRE(traj.size() == 10);
    for (std::size_t i = 0; i < traj.size(); ++i) {
      CHECK(traj[i].step == static_cast<int>(i));
      CHECK(traj[i].terminal == (i + 1 == traj.size()));
      if (i + 1 < traj.size()) {
        CHECK(traj[i].next_state_id == traj[i + 1].state_id);
        CHECK(traj[i].next_obs == traj[i + 1].obs);
      }
    }
  }
}

TEST_CASE("a prefix of trajectories does not depend on n_traj") {
  const auto env = make_env("chain2");
  const OfflineDataset small = gen_dataset(*env, RefPolicySpec{}, 5, 3, 1.0);
  const OfflineDataset big = gen_dataset(*env, RefPolicySpec{}, 50, 3, 1.0);
  for (int i = 0; i < 5; ++i)
    for (int k = 0; k < 2; ++k) CHECK(small.trajectories[i][k].action == big.trajectories[i][k].action);
}

TEST_CASE("return annotation matches a forward sum") {
  const auto env = make_env("gridworld5");
  for (double gamma : {1.0, 0.99, 0.5}) {
    const OfflineDataset ds = gen_dataset(*env, RefPolicySpec{{0.7, 0.3}}, 30, 11, gamma);
    CHECK(ds.meta.annotated);
    for (const auto& traj : ds.trajectories)
      for (std::size_t i = 0; i < traj.size(); ++i) {
        double g = 0.0, d = 1.0;
        for (std::size_t k = i; k < traj.size(); ++k, d *= gamma) g += d * traj[k].reward;
        CHECK(traj[i].rtg == doctest::Approx(g).epsilon(1e-12));
      }
  }
  OfflineDataset ds = gen_dataset(*env, RefPolicySpec{}, 2, 1, 0.99);
  CHECK_THROWS_AS(annotate_returns(ds, 0.5), ConfigError);
}

TEST_CASE("chain2 returns take the values 0, 1, 2") {
  const auto env = make_env("chain2");
  const OfflineDataset ds = gen_dataset(*env, RefPolicySpec{}, 400, 5, 1.0);
  int counts[3] = {0, 0, 0};
  for (const auto& traj : ds.trajectories) {
    const double g = traj[0].rtg;
    REQUIRE(g == std::round(g));
    ++counts[static_cast<int>(g)];
  }
  // Binomial(2, 1/2): 100 / 200 / 100 expected.
  CHECK(counts[0] > 60);
  CHECK(counts[1] > 150);
  CHECK(counts[2] > 60);
}

TEST_CASE("binary round trip and corruption") {
  const auto env = make_env("pointmass-maze");
  const OfflineDataset ds = gen_dataset(*env, RefPolicySpec{}, 3, 2, 0.99);
  const auto bytes = serialize(ds);
  const OfflineDataset back = deserialize_dataset(bytes);
  CHECK(serialize(back) == bytes);
  CHECK(back.meta.env_id == "pointmass-maze");
  CHECK(back.meta.horizon == 50);
  CHECK(export_text(back) == export_text(ds));

  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(deserialize_dataset(bad), ParseError);
  auto cut = bytes;
  cut.resize(cut.size() / 2);
  CHECK_THROWS_AS(deserialize_dataset(cut), ParseError);
  auto ver = bytes;
  ver[8] = 99;
  CHECK_THROWS_AS(deserialize_dataset(ver), ParseError);

  const auto path = std::filesystem::temp_directory_path() / "evor_test_dataset.bin";
  save_dataset(ds, path);
  CHECK(serialize(load_dataset(path)) == bytes);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_dataset(path), ParseError);
}

TEST_CASE("flatten carries next actions and indices") {
  const auto env = make_env("gridworld5");
  const OfflineDataset ds = gen_dataset(*env, RefPolicySpec{}, 4, 9, 0.99);
  const TransitionTable t = flatten(ds);
  REQUIRE(t.size() == 40);
  for (Eigen::Index j = 0; j < t.size(); ++j) {
    const auto& tr = ds.trajectories[t.traj[j]][t.pos[j]];
    CHECK(t.reward(j) == static_cast<float>(tr.reward));
    CHECK(static_cast<bool>(t.terminal[j]) == tr.terminal);
    if (tr.terminal) {
      CHECK(t.next_action.col(j).isZero());
    } else {
      const auto& nx = ds.trajectories[t.traj[j]][t.pos[j] + 1];
      CHECK(t.next_action.col(j) == nx.action.cast<float>());
    }
  }
}

TEST_CASE("generation rejects bad arguments") {
  const auto env = make_env("chain2");
  CHECK_THROWS_AS(gen_dataset(*env, RefPolicySpec{}, 0, 1, 1.0), InputDomainError);
  CHECK_THROWS_AS(gen_dataset(*env, RefPolicySpec{}, 5, 1, 1.5), ConfigError);
  CHECK_THROWS_AS(gen_dataset(*env, RefPolicySpec{{0.2, 0.2}}, 5, 1, 1.0), ConfigError);
}
