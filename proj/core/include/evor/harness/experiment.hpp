#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "evor/critic.hpp"
#include "evor/dataset.hpp"
#include "evor/extraction.hpp"
#include "evor/harness/config.hpp"
#include "evor/nn/checkpoint.hpp"
#include "evor/policy.hpp"
#include "evor/qc.hpp"

namespace evor::harness {

inline constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// metrics.csv columns, in order:
//   step,bc_loss,td_loss,eval_mean_return,eval_success_rate,eval_std,
//   q_star_mae_vs_oracle,q_pi_mae_vs_oracle
// Losses are averaged over the steps since the previous row; td_loss is the
// flow-TD loss for evor and the scalar TD loss for qc. Oracle columns are nan
// when not applicable. Wall-clock time goes to timing.csv so that metrics.csv
// stays byte-identical across reruns.
struct MetricsRow {
  long step = 0;
  double bc_loss = kNan;
  double td_loss = kNan;
  double eval_mean_return = kNan;
  double eval_success_rate = kNan;
  double eval_std = kNan;
  double q_star_mae = kNan;
  double q_pi_mae = kNan;
};

std::string metrics_header();
std::string metrics_to_csv(const std::vector<MetricsRow>& rows);
std::string format_number(double v);

// Loads `cfg.dataset` if set (checking env and gamma), else generates one.
OfflineDataset obtain_dataset(const ExperimentConfig& cfg);

// Models restored from a checkpoint, with the config they were trained under.
struct TrainedModels {
  ExperimentConfig config;
  std::unique_ptr<Mdp> env;
  BasePolicy policy;
  std::optional<RewardToGoCritic> critic;
  std::optional<ScalarCritic> qc;
  std::uint64_t digest = 0;

  // Inference fields (N_pi, N, temperatures, selection) come from `infer`.
  Actor actor(const ExperimentConfig& infer) const;
};

nn::Checkpoint make_checkpoint(const ExperimentConfig& cfg, const BasePolicy& policy,
                               const RewardToGoCritic* critic, const ScalarCritic* qc);
TrainedModels load_models(const nn::Checkpoint& ckpt);
TrainedModels load_models(const std::filesystem::path& path);

struct TrainResult {
  std::vector<MetricsRow> rows;
  double headline_success = kNan;  // mean of the final three eval rows
  double headline_return = kNan;
  std::filesystem::path checkpoint;
  std::uint64_t checkpoint_digest = 0;
};

// Writes metrics.csv, timing.csv, checkpoint.bin, summary.json and
// config.txt into out_dir.
TrainResult run_train(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

// eval_episodes episodes under the inference fields of `infer`, on the stream
// derived from (infer.seed, eval_index).
EvalResult run_eval(const ExperimentConfig& infer, const TrainedModels& models, int eval_index = 0);

struct SweepRow {
  std::string axis;
  double value = 0.0;
  int seeds = 0;
  int episodes = 0;
  double mean_return = 0.0;  // mean over seeds of per-seed means
  double std_return = 0.0;   // std over seeds of per-seed means
  double success_rate = 0.0;
  double success_std = 0.0;
  std::string checkpoint_digest;
};

std::vector<std::string> ablation_axes();
// One evaluation block per value against the same checkpoint; seeds share
// episode streams across values.
std::vector<SweepRow> run_ablation(const ExperimentConfig& infer, const std::filesystem::path& checkpoint,
                                   const std::string& axis, const std::vector<double>& values, int n_seeds);
std::string sweep_to_csv(const std::vector<SweepRow>& rows);
std::vector<SweepRow> sweep_from_csv(const std::string& text);

struct OraclePair {
  int step = 0, state = 0, action = 0;
  long count = 0;
  double learned = kNan;       // Q* estimate (evor) or ensemble-min Q (qc)
  double oracle_q_star = kNan;
  double oracle_q_pi = kNan;
  double learned_mean = kNan;  // mean of sampled rewards-to-go (evor)
  double bellman_residual = kNan;
};

struct OracleReport {
  std::string env, algorithm;
  double eta = 1.0, gamma = 1.0;
  long n_transitions = 0;
  double q_star_mae = kNan;         // evor
  double q_pi_mae = kNan;           // qc
  double bellman_residual = kNan;   // evor, mean over dataset transitions
  double oracle_q_star_range = kNan;
  std::vector<OraclePair> pairs;
};

// Compares the learned critic with the exact tables over every (h, x, a) the
// dataset visits, weighted by visit count. Finite environments only.
OracleReport oracle_check(const TrainedModels& models, const OfflineDataset& ds, std::uint64_t seed,
                          bool with_bellman = true);
std::string oracle_report_json(const OracleReport& r);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace evor::harness
