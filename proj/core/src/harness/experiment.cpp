#include "evor/harness/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "json.hpp"

#include "evor/oracle.hpp"

namespace evor::harness {

namespace {

enum Stream : std::uint64_t {
  kPolicyInit = 1,
  kCriticInit = 2,
  kBatches = 3,
  kBcNoise = 4,
  kTdNoise = 5,
  kEval = 6,
  kOracle = 7,
};

constexpr const char* kCheckpointKind = "evor-run";

ConditionalFlowModel restore_flow(const nn::Checkpoint& ck, const std::string& name, FlowSpec spec) {
  return ConditionalFlowModel(spec, ck.net(name));
}

// Finite-env diagnostics shared by training rows and oracle-check.
OracleReport diagnostics(const FiniteMdp& env, const ExperimentConfig& cfg, const BasePolicy& policy,
                         const RewardToGoCritic* critic, const ScalarCritic* qc, const OfflineDataset& ds,
                         std::uint64_t seed, bool with_bellman) {
  OracleReport rep;
  rep.env = cfg.env;
  rep.algorithm = cfg.algorithm;
  rep.eta = cfg.tau_r;
  rep.gamma = cfg.resolved_gamma();
  const RefPolicySpec ref = cfg.ref_spec();
  const QTable q_star = exact_q_star_via_theorem1(env, ref, rep.eta, rep.gamma);
  const QTable q_pi = exact_q_pi(env, tabulate_ref_policy(env, ref), rep.gamma);
  double qmin = q_star.cells.front(), qmax = qmin;
  for (double v : q_star.cells) {
    qmin = std::min(qmin, v);
    qmax = std::max(qmax, v);
  }
  rep.oracle_q_star_range = qmax - qmin;

  std::map<std::tuple<int, int, int>, long> counts;
  for (const auto& traj : ds.trajectories)
    for (const auto& t : traj) {
      const int a = env.action_space().index_of(t.action);
      if (a < 0) throw InputDomainError("oracle-check: dataset action is not a valid embedding");
      ++counts[{t.step, t.state_id, a}];
      ++rep.n_transitions;
    }

  const int A = env.num_actions(), H = env.horizon();
  auto observe = [&](int h, int s) {
    State st;
    st.id = s;
    st.step = h;
    return env.observe(st).cast<float>().eval();
  };
  auto embed = [&](int a) { return env.action_space().embeddings[a].cast<float>().eval(); };

  Rng rng(seed);
  const auto n_pairs = static_cast<Eigen::Index>(counts.size());
  Eigen::MatrixXf obs(env.obs_dim(), n_pairs), act(env.act_dim(), n_pairs);
  {
    Eigen::Index j = 0;
    for (const auto& [key, n] : counts) {
      const auto [h, s, a] = key;
      obs.col(j) = observe(h, s);
      act.col(j) = embed(a);
      ++j;
      OraclePair p;
      p.step = h;
      p.state = s;
      p.action = a;
      p.count = n;
      p.oracle_q_star = q_star.at(h, s, a);
      p.oracle_q_pi = q_pi.at(h, s, a);
      rep.pairs.push_back(p);
    }
  }

  if (critic) {
    const Eigen::MatrixXd z = critic->sample_rtg(obs, act, cfg.n_rtg_eval, rng).cast<double>();
    double err = 0.0;
    for (Eigen::Index j = 0; j < n_pairs; ++j) {
      auto& p = rep.pairs[j];
      p.learned = log_mean_exp(z.col(j).data(), z.rows(), cfg.tau_r);
      p.learned_mean = z.col(j).mean();
      err += p.count * std::abs(p.learned - p.oracle_q_star);
    }
    rep.q_star_mae = err / static_cast<double>(rep.n_transitions);

    if (with_bellman) {
      // Mean rewards-to-go for every action at each visited next state, and
      // the base policy's action frequencies there.
      std::map<std::pair<int, int>, int> next_index;
      for (const auto& p : rep.pairs)
        if (p.step + 1 < H) next_index.emplace(std::make_pair(p.step + 1, env.next_state(p.state, p.action)), 0);
      const auto n_next = static_cast<Eigen::Index>(next_index.size());
      Eigen::MatrixXf nobs(env.obs_dim(), n_next * A), nact(env.act_dim(), n_next * A);
      constexpr int kPolicyDraws = 256;
      Eigen::MatrixXf pobs(env.obs_dim(), n_next * kPolicyDraws);
      {
        int i = 0;
        for (auto& [key, idx] : next_index) {
          idx = i;
          const auto o = observe(key.first, key.second);
          for (int a = 0; a < A; ++a) {
            nobs.col(i * A + a) = o;
            nact.col(i * A + a) = embed(a);
          }
          pobs.middleCols(i * kPolicyDraws, kPolicyDraws) = o.replicate(1, kPolicyDraws);
          ++i;
        }
      }
      const Eigen::MatrixXf zn = n_next ? critic->sample_rtg(nobs, nact, cfg.n_rtg_eval, rng) : Eigen::MatrixXf();
      const Eigen::MatrixXf draws = n_next ? policy.sample_actions(pobs, rng) : Eigen::MatrixXf();
      double res = 0.0;
      for (auto& p : rep.pairs) {
        const double r = env.reward(p.state, p.action);
        double rhs = r;
        if (p.step + 1 < H) {
          const int i = next_index.at({p.step + 1, env.next_state(p.state, p.action)});
          Eigen::VectorXd freq = Eigen::VectorXd::Zero(A);
          for (int k = 0; k < kPolicyDraws; ++k)
            freq(env.action_space().nearest(draws.col(i * kPolicyDraws + k).cast<double>())) += 1.0;
          freq /= kPolicyDraws;
          double next_mean = 0.0;
          for (int a = 0; a < A; ++a) next_mean += freq(a) * zn.col(i * A + a).cast<double>().mean();
          rhs += rep.gamma * next_mean;
        }
        p.bellman_residual = std::abs(p.learned_mean - rhs);
        res += p.count * p.bellman_residual;
      }
      rep.bellman_residual = res / static_cast<double>(rep.n_transitions);
    }
  }
  if (qc) {
    if (qc->config().chunk != 1) {
      for (auto& p : rep.pairs) p.learned = kNan;
    } else {
      const Eigen::VectorXf q = qc->q_min(obs, act);
      double err = 0.0;
      for (Eigen::Index j = 0; j < n_pairs; ++j) {
        auto& p = rep.pairs[j];
        p.learned = q(j);
        err += p.count * std::abs(p.learned - p.oracle_q_pi);
      }
      rep.q_pi_mae = err / static_cast<double>(rep.n_transitions);
    }
  }
  return rep;
}

Actor make_actor(const ExperimentConfig& infer, const BasePolicy& policy, const RewardToGoCritic* critic,
                 const ScalarCritic* qc) {
  if (critic) return evor_actor(policy, *critic, infer.extraction_config());
  if (qc) return qc_actor(policy, *qc, infer.n_candidates);
  return base_policy_actor(policy);
}

std::uint64_t eval_seed(const ExperimentConfig& infer, int eval_index) {
  return derive_seed(derive_seed(infer.seed, kEval), static_cast<std::uint64_t>(eval_index));
}

TdBatch gather_td(const TransitionTable& t, const std::vector<int>& rows, int replicate) {
  const auto n = static_cast<Eigen::Index>(rows.size()) * replicate;
  TdBatch b;
  b.obs.resize(t.obs.rows(), n);
  b.action.resize(t.action.rows(), n);
  b.next_obs.resize(t.next_obs.rows(), n);
  b.next_action.resize(t.next_action.rows(), n);
  b.reward.resize(n);
  b.rtg.resize(n);
  Eigen::Index j = 0;
  for (int rep = 0; rep < replicate; ++rep)
    for (int i : rows) {
      b.obs.col(j) = t.obs.col(i);
      b.action.col(j) = t.action.col(i);
      b.next_obs.col(j) = t.next_obs.col(i);
      b.next_action.col(j) = t.next_action.col(i);
      b.reward(j) = t.reward(i);
      b.rtg(j) = t.rtg(i);
      b.terminal.push_back(t.terminal[i]);
      b.index.push_back(i);
      ++j;
    }
  return b;
}

nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string metrics_header() {
  return "step,bc_loss,td_loss,eval_mean_return,eval_success_rate,eval_std,q_star_mae_vs_oracle,"
         "q_pi_mae_vs_oracle";
}

std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
  std::string out = metrics_header() + "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.step);
    for (double v : {r.bc_loss, r.td_loss, r.eval_mean_return, r.eval_success_rate, r.eval_std, r.q_star_mae,
                     r.q_pi_mae})
      out += "," + format_number(v);
    out += "\n";
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

OfflineDataset obtain_dataset(const ExperimentConfig& cfg) {
  const double gamma = cfg.resolved_gamma();
  if (!cfg.dataset.empty()) {
    OfflineDataset ds = load_dataset(cfg.dataset);
    if (ds.meta.env_id != cfg.env)
      throw ConfigError("dataset was generated for env '" + ds.meta.env_id + "', config says '" + cfg.env + "'");
    if (ds.meta.gamma != gamma) annotate_returns(ds, gamma);
    return ds;
  }
  const auto env = make_env(cfg.env);
  return gen_dataset(*env, cfg.ref_spec(), cfg.n_traj, cfg.resolved_data_seed(), gamma);
}

Actor TrainedModels::actor(const ExperimentConfig& infer) const {
  return make_actor(infer, policy, critic ? &*critic : nullptr, qc ? &*qc : nullptr);
}

nn::Checkpoint make_checkpoint(const ExperimentConfig& cfg, const BasePolicy& policy,
                               const RewardToGoCritic* critic, const ScalarCritic* qc) {
  nn::Checkpoint ck;
  ck.meta["kind"] = kCheckpointKind;
  ck.meta["config"] = cfg.to_text();
  ck.meta["algorithm"] = cfg.algorithm;
  ck.meta["env"] = cfg.env;
  ck.meta["gamma"] = format_number(cfg.resolved_gamma());
  ck.add("policy", policy.flow().net());
  if (critic) {
    ck.add("critic", critic->online().net());
    ck.add("critic_target", critic->target().net());
  }
  if (qc)
    for (int i = 0; i < ScalarCritic::kEnsemble; ++i) {
      ck.add("qc" + std::to_string(i), qc->member(i));
      ck.add("qc" + std::to_string(i) + "_target", qc->target_member(i));
    }
  return ck;
}

TrainedModels load_models(const nn::Checkpoint& ck) {
  if (!ck.meta.count("kind") || ck.get("kind") != kCheckpointKind)
    throw ParseError("checkpoint does not hold a training run");
  TrainedModels m;
  m.config = parse_config(ck.get("config"));
  const auto& cfg = m.config;
  m.env = make_env(cfg.env);
  const int od = m.env->obs_dim(), ad = m.env->act_dim();
  const int chunk = cfg.algorithm == "qc" ? cfg.qc_chunk : 1;
  m.policy = BasePolicy(restore_flow(ck, "policy", FlowSpec{ad * chunk, od, cfg.sinusoidal_time}),
                        m.env->action_space(), cfg.policy_config(chunk));
  if (cfg.algorithm == "evor") {
    const FlowSpec cs{1, od + ad, cfg.sinusoidal_time};
    m.critic.emplace(restore_flow(ck, "critic", cs), restore_flow(ck, "critic_target", cs), od, cfg.critic_config());
  } else {
    std::array<nn::Mlp<float>, ScalarCritic::kEnsemble> on, tg;
    for (int i = 0; i < ScalarCritic::kEnsemble; ++i) {
      on[i] = ck.net("qc" + std::to_string(i));
      tg[i] = ck.net("qc" + std::to_string(i) + "_target");
    }
    m.qc.emplace(std::move(on), std::move(tg), od, cfg.qc_config());
  }
  m.digest = nn::fnv1a64(ck.serialize());
  return m;
}

TrainedModels load_models(const std::filesystem::path& path) {
  TrainedModels m = load_models(nn::Checkpoint::load(path));
  m.digest = nn::file_digest(path);
  return m;
}

EvalResult run_eval(const ExperimentConfig& infer, const TrainedModels& models, int eval_index) {
  return evaluate_policy(*models.env, models.actor(infer), infer.eval_episodes, eval_seed(infer, eval_index));
}

TrainResult run_train(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  const auto clock_start = std::chrono::steady_clock::now();
  const auto env = make_env(cfg.env);
  const OfflineDataset ds = obtain_dataset(cfg);
  const bool is_qc = cfg.algorithm == "qc";
  const int chunk = is_qc ? cfg.qc_chunk : 1;

  Rng init_p = make_rng(cfg.seed, kPolicyInit);
  Rng init_c = make_rng(cfg.seed, kCriticInit);
  Rng batch_rng = make_rng(cfg.seed, kBatches);
  Rng bc_rng = make_rng(cfg.seed, kBcNoise);
  Rng td_rng = make_rng(cfg.seed, kTdNoise);

  BasePolicy policy(env->obs_dim(), env->action_space(), cfg.policy_config(chunk), init_p);
  std::optional<RewardToGoCritic> critic;
  std::optional<ScalarCritic> qc;
  if (is_qc)
    qc.emplace(env->obs_dim(), env->act_dim() * chunk, cfg.qc_config(), init_c);
  else
    critic.emplace(env->obs_dim(), env->act_dim(), cfg.critic_config(), init_c);

  const TransitionTable table = flatten(ds);
  const QcWindows windows = is_qc ? build_qc_windows(ds, chunk, cfg.resolved_gamma()) : QcWindows{};
  const FiniteMdp* finite = dynamic_cast<const FiniteMdp*>(env.get());

  const auto ckpt_path = out_dir / "checkpoint.bin";
  auto save = [&] {
    make_checkpoint(cfg, policy, critic ? &*critic : nullptr, qc ? &*qc : nullptr).save(ckpt_path);
  };

  TrainResult res;
  std::string timing = "step,wall_clock_s\n";
  double bc_sum = 0.0, td_sum = 0.0;
  long since = 0;
  std::uniform_int_distribution<int> pick(0, static_cast<int>(table.size()) - 1);
  std::vector<int> rows(static_cast<std::size_t>(cfg.batch_size));

  auto eval_row = [&](long step) {
    MetricsRow r;
    r.step = step;
    if (since > 0) {
      r.bc_loss = bc_sum / since;
      r.td_loss = td_sum / since;
    }
    bc_sum = td_sum = 0.0;
    since = 0;
    const Actor actor = make_actor(cfg, policy, critic ? &*critic : nullptr, qc ? &*qc : nullptr);
    const EvalResult ev = evaluate_policy(*env, actor, cfg.eval_episodes, eval_seed(cfg, 0));
    r.eval_mean_return = ev.mean_return;
    r.eval_success_rate = ev.success_rate;
    r.eval_std = ev.std_return;
    if (finite) {
      const OracleReport rep = diagnostics(*finite, cfg, policy, critic ? &*critic : nullptr, qc ? &*qc : nullptr,
                                           ds, derive_seed(cfg.seed, kOracle), false);
      r.q_star_mae = rep.q_star_mae;
      r.q_pi_mae = rep.q_pi_mae;
    }
    res.rows.push_back(r);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%ld,%.3f\n", step, wall);
    timing += buf;
  };

  try {
    for (long step = 1; step <= cfg.steps; ++step) {
      for (auto& i : rows) i = pick(batch_rng);
      if (is_qc) {
        const QcWindows b = windows.gather(rows);
        bc_sum += policy.bc_update(b.obs, b.chunk, bc_rng);
        td_sum += qc->td_update(b, policy, td_rng);
      } else {
        Eigen::MatrixXf obs(table.obs.rows(), cfg.batch_size), act(table.action.rows(), cfg.batch_size);
        for (int j = 0; j < cfg.batch_size; ++j) {
          obs.col(j) = table.obs.col(rows[j]);
          act.col(j) = table.action.col(rows[j]);
        }
        bc_sum += policy.bc_update(obs, act, bc_rng);
        td_sum += critic->td_update(gather_td(table, rows, cfg.n_rtg_train), &policy, td_rng);
      }
      ++since;
      if (step % cfg.eval_interval == 0 || step == cfg.steps) eval_row(step);
    }
    if (cfg.steps == 0) eval_row(0);
  } catch (const NumericError&) {
    save();
    write_text(out_dir / "metrics.csv", metrics_to_csv(res.rows));
    throw;
  }

  save();
  res.checkpoint = ckpt_path;
  res.checkpoint_digest = nn::file_digest(ckpt_path);
  const std::size_t n = std::min<std::size_t>(3, res.rows.size());
  double hs = 0.0, hr = 0.0;
  for (std::size_t i = res.rows.size() - n; i < res.rows.size(); ++i) {
    hs += res.rows[i].eval_success_rate;
    hr += res.rows[i].eval_mean_return;
  }
  hs /= static_cast<double>(n);
  hr /= static_cast<double>(n);
  res.headline_success = hs;
  res.headline_return = hr;

  write_text(out_dir / "metrics.csv", metrics_to_csv(res.rows));
  write_text(out_dir / "timing.csv", timing);
  write_text(out_dir / "config.txt", cfg.to_text());
  nlohmann::ordered_json s;
  s["env"] = cfg.env;
  s["algorithm"] = cfg.algorithm;
  s["seed"] = cfg.seed;
  s["steps"] = cfg.steps;
  s["budget"] = "desk-scale (full scale: 1e6 steps, eval every 1e5)";
  s["headline"] = {{"success_rate", num(res.headline_success)},
                   {"mean_return", num(res.headline_return)},
                   {"eval_rows_averaged", n}};
  s["final_row"] = {{"q_star_mae_vs_oracle", num(res.rows.back().q_star_mae)},
                    {"q_pi_mae_vs_oracle", num(res.rows.back().q_pi_mae)}};
  s["checkpoint_digest"] = nn::hex64(res.checkpoint_digest);
  write_text(out_dir / "summary.json", s.dump(2) + "\n");
  return res;
}

std::vector<std::string> ablation_axes() { return {"n_candidates", "tau_r", "tau_q", "n_rtg_eval"}; }

std::vector<SweepRow> run_ablation(const ExperimentConfig& infer, const std::filesystem::path& checkpoint,
                                   const std::string& axis, const std::vector<double>& values, int n_seeds) {
  if (values.empty()) throw InputDomainError("ablation: empty value list");
  if (n_seeds < 1) throw InputDomainError("ablation: n_seeds must be >= 1");
  const auto axes = ablation_axes();
  if (std::find(axes.begin(), axes.end(), axis) == axes.end())
    throw ConfigError("ablation: unknown axis '" + axis + "'");
  const TrainedModels models = load_models(checkpoint);
  std::vector<SweepRow> out;
  for (double v : values) {
    ExperimentConfig c = infer;
    if (axis == "n_candidates" || axis == "n_rtg_eval") {
      if (v != std::floor(v)) throw InputDomainError("ablation: " + axis + " values must be integers");
      c.set(axis, std::to_string(static_cast<long long>(v)));
    } else {
      c.set(axis, format_number(v));
    }
    c.validate();
    SweepRow row;
    row.axis = axis;
    row.value = v;
    row.seeds = n_seeds;
    row.episodes = c.eval_episodes;
    std::vector<double> rets, succ;
    for (int s = 0; s < n_seeds; ++s) {
      const EvalResult ev = run_eval(c, models, s);
      rets.push_back(ev.mean_return);
      succ.push_back(ev.success_rate);
    }
    auto mean_std = [](const std::vector<double>& x) {
      double m = 0.0, v2 = 0.0;
      for (double e : x) m += e;
      m /= static_cast<double>(x.size());
      for (double e : x) v2 += (e - m) * (e - m);
      return std::make_pair(m, std::sqrt(v2 / static_cast<double>(x.size())));
    };
    std::tie(row.mean_return, row.std_return) = mean_std(rets);
    std::tie(row.success_rate, row.success_std) = mean_std(succ);
    row.checkpoint_digest = nn::hex64(nn::file_digest(checkpoint));
    out.push_back(row);
  }
  return out;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::string out = "axis,value,seeds,episodes,mean_return,std_return,success_rate,success_std,checkpoint_digest\n";
  for (const auto& r : rows)
    out += r.axis + "," + format_number(r.value) + "," + std::to_string(r.seeds) + "," + std::to_string(r.episodes) +
           "," + format_number(r.mean_return) + "," + format_number(r.std_return) + "," +
           format_number(r.success_rate) + "," + format_number(r.success_std) + "," + r.checkpoint_digest + "\n";
  return out;
}

std::vector<SweepRow> sweep_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("axis,value,", 0) != 0) throw ParseError("sweep table: missing header");
  std::vector<SweepRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (f.size() != 9) throw ParseError("sweep table line " + std::to_string(lineno) + ": expected 9 fields");
    try {
      SweepRow r;
      r.axis = f[0];
      r.value = std::stod(f[1]);
      r.seeds = std::stoi(f[2]);
      r.episodes = std::stoi(f[3]);
      r.mean_return = std::stod(f[4]);
      r.std_return = std::stod(f[5]);
      r.success_rate = std::stod(f[6]);
      r.success_std = std::stod(f[7]);
      r.checkpoint_digest = f[8];
      rows.push_back(r);
    } catch (const std::exception&) {
      throw ParseError("sweep table line " + std::to_string(lineno) + ": malformed number");
    }
  }
  if (rows.empty()) throw ParseError("sweep table: no rows");
  return rows;
}

OracleReport oracle_check(const TrainedModels& models, const OfflineDataset& ds, std::uint64_t seed,
                          bool with_bellman) {
  const FiniteMdp& env = as_finite(*models.env);
  return diagnostics(env, models.config, models.policy, models.critic ? &*models.critic : nullptr,
                     models.qc ? &*models.qc : nullptr, ds, seed, with_bellman);
}

std::string oracle_report_json(const OracleReport& r) {
  nlohmann::ordered_json j;
  j["env"] = r.env;
  j["algorithm"] = r.algorithm;
  j["eta"] = r.eta;
  j["gamma"] = r.gamma;
  j["n_transitions"] = r.n_transitions;
  j["q_star_mae"] = num(r.q_star_mae);
  j["q_pi_mae"] = num(r.q_pi_mae);
  j["bellman_residual"] = num(r.bellman_residual);
  j["oracle_q_star_range"] = num(r.oracle_q_star_range);
  auto& pairs = j["pairs"] = nlohmann::ordered_json::array();
  for (const auto& p : r.pairs)
    pairs.push_back({{"step", p.step},
                     {"state", p.state},
                     {"action", p.action},
                     {"count", p.count},
                     {"learned", num(p.learned)},
                     {"oracle_q_star", num(p.oracle_q_star)},
                     {"oracle_q_pi", num(p.oracle_q_pi)},
                     {"learned_mean", num(p.learned_mean)},
                     {"bellman_residual", num(p.bellman_residual)}});
  return j.dump(2) + "\n";
}

}  // namespace evor::harness
