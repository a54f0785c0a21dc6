#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "evor/critic.hpp"
#include "evor/extraction.hpp"
#include "evor/policy.hpp"
#include "evor/qc.hpp"

namespace evor::harness {

// Flat `key = value` run configuration. Every key is optional; unknown keys
// are rejected. See README for the schema.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string env = "chain2";
  std::string dataset;  // path; empty generates from the fields below
  int n_traj = 1000;
  std::optional<std::uint64_t> data_seed;  // defaults to seed
  std::vector<double> ref_weights{0.5, 0.5};

  std::string algorithm = "evor";  // evor | qc
  std::vector<int> policy_hidden{64, 64};
  std::vector<int> critic_hidden{64, 64};
  std::string activation = "gelu";
  bool policy_layer_norm = false;
  bool critic_layer_norm = true;
  bool sinusoidal_time = false;
  double lr = 3e-4;
  int batch_size = 256;
  long steps = 50000;
  std::optional<double> gamma;  // defaults to the environment's
  double polyak = 5e-3;
  int euler_steps = 10;

  int n_candidates = 32;
  int n_rtg_train = 1;
  int n_rtg_eval = 50;
  double tau_r = 1.0;
  double tau_q = 1e-3;
  std::string selection = "softmax";

  std::string rtg_source = "dataset";
  std::string td_target = "shifted";
  std::string bootstrap_action = "dataset";
  int next_action_samples = 1;
  double return_scale = 1.0;

  int qc_chunk = 1;
  int qc_bootstrap_candidates = 32;

  long eval_interval = 10000;
  int eval_episodes = 50;

  void set(const std::string& key, const std::string& value);
  void validate() const;
  std::string to_text() const;

  std::uint64_t resolved_data_seed() const { return data_seed.value_or(seed); }
  double resolved_gamma() const;
  PolicyConfig policy_config(int act_chunk) const;
  CriticConfig critic_config() const;
  QcConfig qc_config() const;
  ExtractionConfig extraction_config() const;
  RefPolicySpec ref_spec() const { return RefPolicySpec{ref_weights}; }
};

std::vector<std::string> config_keys();
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace evor::harness
