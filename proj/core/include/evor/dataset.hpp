#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "evor/env.hpp"

namespace evor {

struct Transition {
  int state_id = -1;       // tabular envs only
  int next_state_id = -1;
  int step = 0;            // 0-based; terminal <=> step == H - 1
  bool terminal = false;
  Eigen::VectorXd obs;
  Eigen::VectorXd action;
  Eigen::VectorXd next_obs;
  double reward = 0.0;
  double rtg = 0.0;        // sum_{t >= step} gamma^(t - step) r_t, once annotated
};

using Trajectory = std::vector<Transition>;

struct DatasetMeta {
  std::string env_id;
  int horizon = 0;
  double gamma = 1.0;
  int obs_dim = 0;
  int act_dim = 0;
  std::uint64_t seed = 0;
  bool annotated = false;
};

struct OfflineDataset {
  static constexpr std::uint32_t kVersion = 1;

  DatasetMeta meta;
  std::vector<Trajectory> trajectories;

  std::size_t num_transitions() const;
};

// n_traj full-horizon rollouts of the reference policy. Trajectory i uses an
// rng stream derived from (seed, i), so output is a pure function of inputs.
OfflineDataset gen_dataset(const Mdp& env, const RefPolicySpec& ref, int n_traj,
                           std::uint64_t seed, double gamma);

// Fills Transition::rtg by a backward pass over each trajectory. `gamma` must
// match the dataset metadata.
void annotate_returns(OfflineDataset& ds, double gamma);

// Binary layout (little endian), version 1:
//   "EVORDSET" | u32 version | str env_id | u32 H | f64 gamma | u32 obs_dim |
//   u32 act_dim | u32 n_traj | u64 seed | u8 annotated |
//   per trajectory: u32 length | per transition:
//     i32 state_id | i32 next_state_id | u32 step | u8 terminal | f64 reward |
//     f64 rtg | f64 obs[obs_dim] | f64 action[act_dim] | f64 next_obs[obs_dim]
// with str = u32 length + bytes.
std::vector<std::uint8_t> serialize(const OfflineDataset& ds);
OfflineDataset deserialize_dataset(const std::vector<std::uint8_t>& bytes);
void save_dataset(const OfflineDataset& ds, const std::filesystem::path& path);
OfflineDataset load_dataset(const std::filesystem::path& path);

// One header line, then one line per transition:
//   traj step state next_state terminal reward rtg | obs | action | next_obs
std::string export_text(const OfflineDataset& ds);

// Column-major float view of every transition, used by the trainers.
// `next_action` is the action the trajectory took at the next step (zero for
// terminal transitions).
struct TransitionTable {
  Eigen::MatrixXf obs, action, next_obs, next_action;
  Eigen::VectorXf reward, rtg;
  std::vector<std::uint8_t> terminal;
  std::vector<int> state_id, next_state_id, step, traj, pos;

  Eigen::Index size() const { return obs.cols(); }
};

TransitionTable flatten(const OfflineDataset& ds);

}  // namespace evor
