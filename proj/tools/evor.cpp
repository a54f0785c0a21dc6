#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "evor/dataset.hpp"
#include "evor/errors.hpp"
#include "evor/harness/config.hpp"
#include "evor/harness/experiment.hpp"
#include "evor/harness/plot.hpp"
#include "evor/runtime.hpp"

namespace fs = std::filesystem;
using namespace evor;
using namespace evor::harness;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "runs/out";
  std::vector<std::string> overrides;
};

void apply_overrides(ExperimentConfig& c, const Globals& g) {
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (g.seed) c.seed = *g.seed;
  c.validate();
}

ExperimentConfig resolve(const Globals& g) {
  ExperimentConfig c = g.config.empty() ? ExperimentConfig{} : load_config(g.config);
  apply_overrides(c, g);
  return c;
}

// Inference settings: the explicit config if given, else the checkpoint's.
ExperimentConfig resolve_infer(const Globals& g, const TrainedModels& m) {
  ExperimentConfig c = g.config.empty() ? m.config : load_config(g.config);
  apply_overrides(c, g);
  return c;
}

std::vector<double> parse_values(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputDomainError("--values: cannot parse '" + item + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  evor::tune_allocator();
  CLI::App app{"evor: flow-based distributional critic and inference-time extraction for offline RL"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "flat key = value config file");
  app.add_option("--seed", g.seed, "master seed (overrides the config)");
  app.add_option("--out-dir", g.out_dir, "output directory");
  app.add_option("--set", g.overrides, "config override key=value (repeatable)");

  auto* gen = app.add_subcommand("gen-data", "generate an offline dataset (dataset.bin + dataset.txt)");
  auto* train = app.add_subcommand("train", "train and write metrics.csv, checkpoint.bin, summary.json");
  std::string ckpt;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint, writing eval.csv");
  eval->add_option("--checkpoint", ckpt, "checkpoint.bin from train")->required()->check(CLI::ExistingFile);

  auto* ablate = app.add_subcommand("ablate", "inference-time sweep over one axis, writing sweep.csv/svg");
  std::string axis, values_text;
  int n_seeds = 5;
  ablate->add_option("--checkpoint", ckpt, "checkpoint.bin from train")->required()->check(CLI::ExistingFile);
  ablate->add_option("--axis", axis, "n_candidates | tau_r | tau_q | n_rtg_eval")->required();
  ablate->add_option("--values", values_text, "comma-separated values")->required();
  ablate->add_option("--seeds", n_seeds, "evaluation seeds per value");

  auto* oracle = app.add_subcommand("oracle-check", "compare a checkpoint against exact tables");
  oracle->add_option("--checkpoint", ckpt, "checkpoint.bin from train")->required()->check(CLI::ExistingFile);

  auto* plot = app.add_subcommand("plot", "render a sweep CSV to SVG");
  std::string input, stem = "sweep";
  plot->add_option("--input", input, "sweep.csv")->required()->check(CLI::ExistingFile);
  plot->add_option("--stem", stem, "output file stem");

  CLI11_PARSE(app, argc, argv);

  try {
    const fs::path out(g.out_dir);
    if (*gen) {
      const ExperimentConfig c = resolve(g);
      const auto env = make_env(c.env);
      const OfflineDataset ds = gen_dataset(*env, c.ref_spec(), c.n_traj, c.resolved_data_seed(), c.resolved_gamma());
      fs::create_directories(out);
      save_dataset(ds, out / "dataset.bin");
      write_text(out / "dataset.txt", export_text(ds));
      std::printf("wrote %zu trajectories (%zu transitions) to %s\n", ds.trajectories.size(), ds.num_transitions(),
                  (out / "dataset.bin").c_str());
    } else if (*train) {
      const ExperimentConfig c = resolve(g);
      const TrainResult r = run_train(c, out);
      std::printf("%s/%s seed %llu: headline success %.4f, return %.4f (mean of final %zu evals)\n", c.env.c_str(),
                  c.algorithm.c_str(), static_cast<unsigned long long>(c.seed), r.headline_success,
                  r.headline_return, std::min<std::size_t>(3, r.rows.size()));
      std::printf("checkpoint %s digest %s\n", r.checkpoint.c_str(), nn::hex64(r.checkpoint_digest).c_str());
    } else if (*eval) {
      const TrainedModels m = load_models(fs::path(ckpt));
      const ExperimentConfig c = resolve_infer(g, m);
      const EvalResult ev = run_eval(c, m);
      fs::create_directories(out);
      std::string csv = "n_candidates,n_rtg_eval,tau_r,tau_q,selection,episodes,seed,mean_return,std_return,"
                        "success_rate,success_std,checkpoint_digest\n";
      csv += std::to_string(c.n_candidates) + "," + std::to_string(c.n_rtg_eval) + "," + format_number(c.tau_r) +
             "," + format_number(c.tau_q) + "," + c.selection + "," + std::to_string(c.eval_episodes) + "," +
             std::to_string(c.seed) + "," + format_number(ev.mean_return) + "," + format_number(ev.std_return) +
             "," + format_number(ev.success_rate) + "," + format_number(ev.success_std) + "," +
             nn::hex64(m.digest) + "\n";
      write_text(out / "eval.csv", csv);
      std::printf("mean return %.4f +- %.4f, success %.4f over %d episodes\n", ev.mean_return, ev.std_return,
                  ev.success_rate, c.eval_episodes);
    } else if (*ablate) {
      const TrainedModels m = load_models(fs::path(ckpt));
      const ExperimentConfig c = resolve_infer(g, m);
      const auto rows = run_ablation(c, ckpt, axis, parse_values(values_text), n_seeds);
      const fs::path svg = emit_plots(rows, out, "sweep");
      std::fputs(sweep_to_csv(rows).c_str(), stdout);
      std::printf("wrote %s\n", svg.c_str());
    } else if (*oracle) {
      const TrainedModels m = load_models(fs::path(ckpt));
      const ExperimentConfig c = resolve_infer(g, m);
      const OfflineDataset ds = obtain_dataset(m.config);
      const OracleReport rep = oracle_check(m, ds, c.seed);
      fs::create_directories(out);
      write_text(out / "oracle_report.json", oracle_report_json(rep));
      std::printf("q_star_mae %s q_pi_mae %s bellman_residual %s (oracle Q* range %s)\n",
                  format_number(rep.q_star_mae).c_str(), format_number(rep.q_pi_mae).c_str(),
                  format_number(rep.bellman_residual).c_str(), format_number(rep.oracle_q_star_range).c_str());
    } else if (*plot) {
      const auto rows = sweep_from_csv(read_text(input));
      std::printf("wrote %s\n", emit_plots(rows, out, stem).c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "evor: %s\n", e.what());
    return 2;
  }
  return 0;
}
