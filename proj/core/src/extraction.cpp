#include "evor/extraction.hpp"

#include <cmath>

namespace evor {

void ExtractionConfig::validate() const {
  if (n_candidates < 1) throw ConfigError("extraction: n_candidates must be >= 1");
  if (n_rtg < 1) throw ConfigError("extraction: n_rtg must be >= 1");
  if (!(tau_r > 0.0)) throw ConfigError("extraction: tau_r must be positive");
  if (!(tau_q > 0.0)) throw ConfigError("extraction: tau_q must be positive");
}

Eigen::VectorXd softmax_probs(const Eigen::VectorXd& scores, double tau) {
  if (scores.size() == 0) throw InputDomainError("softmax: empty score vector");
  if (!(tau > 0.0)) throw InputDomainError("softmax: temperature must be positive");
  const double m = scores.maxCoeff();
  Eigen::VectorXd w = ((scores.array() - m) / tau).exp();
  return w / w.sum();
}

int softmax_select(const Eigen::VectorXd& scores, double tau, Rng& rng) {
  const Eigen::VectorXd p = softmax_probs(scores, tau);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double c = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    c += p(i);
    if (u < c) return static_cast<int>(i);
  }
  // u landed in the round-off gap above the last partial sum.
  for (Eigen::Index i = p.size() - 1; i >= 0; --i)
    if (p(i) > 0.0) return static_cast<int>(i);
  return 0;
}

int argmax_select(const Eigen::VectorXd& scores) {
  if (scores.size() == 0) throw InputDomainError("argmax: empty score vector");
  int best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i)
    if (scores(i) > scores(best)) best = static_cast<int>(i);
  return best;
}

Decision extract_action(const BasePolicy& policy, const RewardToGoCritic& critic,
                        const Eigen::VectorXd& obs, const ExtractionConfig& cfg, Rng& rng) {
  cfg.validate();
  const Eigen::MatrixXf x = obs.cast<float>().replicate(1, cfg.n_candidates);
  Decision d;
  d.candidates = policy.sample_actions(x, rng);
  if (cfg.n_candidates == 1) {
    d.scores = Eigen::VectorXd::Zero(1);
    d.action = d.candidates.col(0).cast<double>();
    return d;
  }
  QStarEstimator est{&critic, cfg.tau_r, cfg.n_rtg};
  d.scores = est.q_star(x, d.candidates, rng);
  d.index = cfg.selection == Selection::argmax ? argmax_select(d.scores)
                                               : softmax_select(d.scores, cfg.tau_q, rng);
  d.action = d.candidates.col(d.index).cast<double>();
  return d;
}

namespace {
Eigen::MatrixXd as_chunk(const Eigen::VectorXd& flat, int act_dim) {
  return Eigen::Map<const Eigen::MatrixXd>(flat.data(), act_dim, flat.size() / act_dim);
}
}  // namespace

Actor base_policy_actor(const BasePolicy& policy) {
  return [&policy](const Mdp& env, const State& s, Rng& rng) {
    return as_chunk(policy.sample_action(env.observe(s), rng), policy.act_dim());
  };
}

Actor evor_actor(const BasePolicy& policy, const RewardToGoCritic& critic, ExtractionConfig cfg) {
  cfg.validate();
  return [&policy, &critic, cfg](const Mdp& env, const State& s, Rng& rng) {
    return as_chunk(extract_action(policy, critic, env.observe(s), cfg, rng).action, policy.act_dim());
  };
}

EvalResult evaluate_policy(const Mdp& env, const Actor& actor, int n_episodes, std::uint64_t seed) {
  if (n_episodes < 1) throw InputDomainError("evaluate_policy: n_episodes must be >= 1");
  EvalResult res;
  for (int ep = 0; ep < n_episodes; ++ep) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(ep));
    State s = env.reset(rng);
    double ret = 0.0;
    bool done = false;
    while (!done) {
      const Eigen::MatrixXd chunk = actor(env, s, rng);
      for (Eigen::Index c = 0; c < chunk.cols() && !done; ++c) {
        const StepResult r = env.step(s, chunk.col(c));
        ret += r.reward;
        s = r.next;
        done = r.terminal;
      }
    }
    res.returns.push_back(ret);
    res.successes.push_back(env.episode_success(s, ret) ? 1 : 0);
  }
  const double n = static_cast<double>(n_episodes);
  double ss = 0.0, rr = 0.0;
  for (int i = 0; i < n_episodes; ++i) {
    res.mean_return += res.returns[i];
    res.success_rate += res.successes[i];
  }
  res.mean_return /= n;
  res.success_rate /= n;
  for (int i = 0; i < n_episodes; ++i) {
    rr += (res.returns[i] - res.mean_return) * (res.returns[i] - res.mean_return);
    ss += (res.successes[i] - res.success_rate) * (res.successes[i] - res.success_rate);
  }
  res.std_return = std::sqrt(rr / n);
  res.success_std = std::sqrt(ss / n);
  return res;
}

}  // namespace evor
