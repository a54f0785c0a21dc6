#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

#include "evor/dataset.hpp"
#include "evor/extraction.hpp"
#include "evor/nn/adam.hpp"
#include "evor/policy.hpp"

namespace evor {

struct QcConfig {
  std::vector<int> hidden{64, 64};
  nn::Activation activation = nn::Activation::gelu;
  bool layer_norm = true;
  double gamma = 0.99;
  double polyak = 5e-3;
  int chunk = 1;               // k
  int bootstrap_candidates = 32;  // best-of-N at the bootstrap state
  nn::AdamConfig adam;
};

// k-step windows starting at every dataset transition. Chunks are time-major
// and zero-padded past the trajectory end; windows that reach the end carry a
// truncated reward sum and no bootstrap.
struct QcWindows {
  Eigen::MatrixXf obs, chunk, next_obs;  // next_obs is x_{h+k}
  Eigen::VectorXf reward_sum;            // sum_{j<k} gamma^j r_{h+j}
  std::vector<std::uint8_t> bootstrap;   // h + k <= H - 1
  std::vector<int> index;

  Eigen::Index size() const { return obs.cols(); }
  QcWindows gather(const std::vector<int>& rows) const;
};

QcWindows build_qc_windows(const OfflineDataset& ds, int k, double gamma);

Eigen::VectorXf ensemble_min(const Eigen::MatrixXf& members);

// Two-member scalar Q ensemble over (x, action chunk) with Polyak targets.
class ScalarCritic {
 public:
  static constexpr int kEnsemble = 2;

  ScalarCritic() = default;
  ScalarCritic(int obs_dim, int chunk_dim, QcConfig cfg, Rng& rng);
  ScalarCritic(std::array<nn::Mlp<float>, kEnsemble> online, std::array<nn::Mlp<float>, kEnsemble> target,
               int obs_dim, QcConfig cfg);

  // kEnsemble x B.
  Eigen::MatrixXf q_members(const Eigen::MatrixXf& obs, const Eigen::MatrixXf& chunk,
                            bool use_target = false) const;
  Eigen::VectorXf q_min(const Eigen::MatrixXf& obs, const Eigen::MatrixXf& chunk,
                        bool use_target = false) const;

  // Regression targets R + gamma^k max_i min_m Qbar_m(x_{h+k}, c_i), c_i ~ pi_base.
  Eigen::VectorXf td_targets(const QcWindows& batch, const BasePolicy& policy, Rng& rng) const;
  // Adam step per member, then Polyak; returns the mean pre-step member loss.
  float td_update(const QcWindows& batch, const BasePolicy& policy, Rng& rng);

  const nn::Mlp<float>& member(int i) const { return online_[i]; }
  const nn::Mlp<float>& target_member(int i) const { return target_[i]; }
  const QcConfig& config() const { return cfg_; }
  int obs_dim() const { return obs_dim_; }

 private:
  Eigen::MatrixXf input(const Eigen::MatrixXf& obs, const Eigen::MatrixXf& chunk) const;

  std::array<nn::Mlp<float>, kEnsemble> online_, target_;
  std::array<nn::AdamState<float>, kEnsemble> adam_;
  int obs_dim_ = 0;
  QcConfig cfg_;
};

struct QcDecision {
  Eigen::VectorXd chunk;
  int index = 0;
  Eigen::VectorXd scores;
};

// Hard argmax of the ensemble-min Q over n_pi base-policy chunks.
QcDecision qc_select_action(const BasePolicy& policy, const ScalarCritic& critic,
                            const Eigen::VectorXd& obs, int n_pi, Rng& rng);

Actor qc_actor(const BasePolicy& policy, const ScalarCritic& critic, int n_pi);

}  // namespace evor
