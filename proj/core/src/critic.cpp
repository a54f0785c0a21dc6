#include "evor/critic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace evor {

std::string to_string(RtgSource v) { return v == RtgSource::dataset ? "dataset" : "target_model"; }
std::string to_string(TdTarget v) { return v == TdTarget::shifted ? "shifted" : "direct"; }
std::string to_string(BootstrapAction v) { return v == BootstrapAction::dataset ? "dataset" : "policy"; }

RtgSource rtg_source_from_string(const std::string& s) {
  if (s == "dataset") return RtgSource::dataset;
  if (s == "target_model") return RtgSource::target_model;
  throw ConfigError("rtg_source must be dataset or target_model, got '" + s + "'");
}
TdTarget td_target_from_string(const std::string& s) {
  if (s == "shifted") return TdTarget::shifted;
  if (s == "direct") return TdTarget::direct;
  throw ConfigError("td_target must be shifted or direct, got '" + s + "'");
}
BootstrapAction bootstrap_action_from_string(const std::string& s) {
  if (s == "dataset") return BootstrapAction::dataset;
  if (s == "policy") return BootstrapAction::policy;
  throw ConfigError("bootstrap_action must be dataset or policy, got '" + s + "'");
}

namespace {
void check_config(const CriticConfig& c) {
  if (!(c.gamma >= 0.0 && c.gamma <= 1.0)) throw ConfigError("critic: gamma must lie in [0, 1]");
  if (!(c.polyak >= 0.0 && c.polyak <= 1.0)) throw ConfigError("critic: polyak must lie in [0, 1]");
  if (c.euler_steps < 1) throw ConfigError("critic: euler_steps must be >= 1");
  if (c.next_action_samples < 1) throw ConfigError("critic: next_action_samples must be >= 1");
  if (!(c.return_scale > 0.0)) throw ConfigError("critic: return_scale must be positive");
}
constexpr float kTerminalTimeCap = 0.99f;
}  // namespace

RewardToGoCritic::RewardToGoCritic(int obs_dim, int act_dim, CriticConfig cfg, Rng& rng)
    : obs_dim_(obs_dim), cfg_(std::move(cfg)) {
  check_config(cfg_);
  FlowSpec spec{1, obs_dim + act_dim, cfg_.sinusoidal_time};
  online_ = ConditionalFlowModel::init(spec, cfg_.hidden, cfg_.activation, cfg_.layer_norm, rng);
  target_ = online_;
  adam_ = nn::AdamState<float>(cfg_.adam, online_.net().params().size());
}

RewardToGoCritic::RewardToGoCritic(ConditionalFlowModel online, ConditionalFlowModel target,
                                   int obs_dim, CriticConfig cfg)
    : online_(std::move(online)), target_(std::move(target)), obs_dim_(obs_dim), cfg_(std::move(cfg)) {
  check_config(cfg_);
  if (!(online_.spec() == target_.spec()) || !(online_.net().spec() == target_.net().spec()))
    throw ShapeError("critic: online and target flows differ in shape");
  if (online_.spec().sample_dim != 1) throw ShapeError("critic: return flow must be 1-D");
  adam_ = nn::AdamState<float>(cfg_.adam, online_.net().params().size());
}

Eigen::MatrixXf RewardToGoCritic::condition(const Eigen::MatrixXf& obs,
                                            const Eigen::MatrixXf& actions) const {
  if (obs.rows() != obs_dim_ || actions.rows() != act_dim() || obs.cols() != actions.cols())
    throw ShapeError("critic: observation/action batch has the wrong shape");
  Eigen::MatrixXf c(obs.rows() + actions.rows(), obs.cols());
  c << obs, actions;
  return c;
}

Eigen::VectorXf RewardToGoCritic::td_targets(const TdBatch& b, const Eigen::VectorXf& zt,
                                             const Eigen::VectorXf& t, const BasePolicy* policy,
                                             Rng& rng) const {
  const Eigen::Index B = b.size();
  const float gamma = static_cast<float>(cfg_.gamma);
  const float scale = static_cast<float>(cfg_.return_scale);
  const Eigen::VectorXf r = b.reward * scale;

  Eigen::VectorXf target(B);
  bool any_bootstrap = false;
  for (Eigen::Index j = 0; j < B; ++j) any_bootstrap |= !(b.terminal[j] || gamma == 0.0f);

  if (any_bootstrap) {
    Eigen::MatrixXf q(1, B);
    if (cfg_.td_target == TdTarget::shifted)
      q.row(0) = ((zt - t.cwiseProduct(r)) / gamma).transpose();
    else
      q.row(0) = zt.transpose();
    Eigen::MatrixXf v_next = Eigen::MatrixXf::Zero(1, B);
    if (cfg_.bootstrap_action == BootstrapAction::dataset) {
      v_next = target_.velocity(q, t, condition(b.next_obs, b.next_action));
    } else {
      if (!policy) throw ConfigError("critic: policy bootstrap actions need a base policy");
      for (int k = 0; k < cfg_.next_action_samples; ++k) {
        const Eigen::MatrixXf a_next = policy->sample_actions(b.next_obs, rng);
        v_next += target_.velocity(q, t, condition(b.next_obs, a_next));
      }
      v_next /= static_cast<float>(cfg_.next_action_samples);
    }
    target = r + gamma * v_next.row(0).transpose();
  }
  for (Eigen::Index j = 0; j < B; ++j) {
    if (b.terminal[j] || gamma == 0.0f) target(j) = (r(j) - zt(j)) / (1.0f - std::min(t(j), kTerminalTimeCap));
    if (!std::isfinite(target(j))) {
      const int row = j < static_cast<Eigen::Index>(b.index.size()) ? b.index[j] : static_cast<int>(j);
      throw NumericError("flow-TD target is non-finite for dataset transition " + std::to_string(row) +
                         " (reward " + std::to_string(b.reward(j)) + ", t " + std::to_string(t(j)) + ")");
    }
  }
  return target;
}

float RewardToGoCritic::td_update(const TdBatch& b, const BasePolicy* policy, Rng& rng) {
  const Eigen::Index B = b.size();
  if (B == 0) throw InputDomainError("critic: empty batch");
  if (static_cast<Eigen::Index>(b.terminal.size()) != B || b.reward.size() != B)
    throw ShapeError("critic: batch columns disagree");
  const Eigen::MatrixXf cond = condition(b.obs, b.action);
  const FlowDraws draws = draw_flow_noise(1, static_cast<int>(B), rng);

  Eigen::VectorXf z1;
  if (cfg_.rtg_source == RtgSource::dataset) {
    z1 = b.rtg * static_cast<float>(cfg_.return_scale);
  } else {
    const Eigen::MatrixXf z0 = standard_normal<float>(1, B, rng);
    z1 = euler_from(target_, cond, z0, cfg_.euler_steps).row(0).transpose();
  }
  const Eigen::VectorXf x0 = draws.x0.row(0).transpose();
  const Eigen::VectorXf zt = (1.0f - draws.t.array()) * x0.array() + draws.t.array() * z1.array();
  const Eigen::VectorXf target = td_targets(b, zt, draws.t, policy, rng);

  Eigen::MatrixXf zt_row = zt.transpose();
  const Eigen::MatrixXf input = online_.assemble(zt_row, draws.t, cond);
  const float inv_b = 1.0f / static_cast<float>(B);
  auto lg = nn::value_and_grad(online_.net(), input, [&](const Eigen::MatrixXf& out) {
    Eigen::MatrixXf diff = out;
    diff.row(0) -= target.transpose();
    const float loss = diff.squaredNorm() * inv_b;
    return std::make_pair(loss, Eigen::MatrixXf(2.0f * inv_b * diff));
  });
  nn::adam_step(adam_, online_.net(), lg.grad);
  nn::polyak_update(target_.net(), online_.net(), cfg_.polyak);
  return lg.loss;
}

Eigen::MatrixXf RewardToGoCritic::sample_rtg_from(const Eigen::MatrixXf& obs,
                                                  const Eigen::MatrixXf& actions,
                                                  const Eigen::MatrixXf& z0) const {
  const Eigen::Index B = obs.cols();
  if (z0.cols() != B) throw ShapeError("critic: prior draws must be n x B");
  const Eigen::Index n = z0.rows();
  const Eigen::MatrixXf base = condition(obs, actions);
  // Column (i * n + k): k-th draw for query i.
  Eigen::MatrixXf cond(base.rows(), B * n);
  Eigen::MatrixXf x(1, B * n);
  for (Eigen::Index i = 0; i < B; ++i)
    for (Eigen::Index k = 0; k < n; ++k) {
      cond.col(i * n + k) = base.col(i);
      x(0, i * n + k) = z0(k, i);
    }
  const Eigen::MatrixXf z = euler_from(online_, cond, std::move(x), cfg_.euler_steps);
  Eigen::MatrixXf out(n, B);
  const float inv_scale = static_cast<float>(1.0 / cfg_.return_scale);
  for (Eigen::Index i = 0; i < B; ++i)
    for (Eigen::Index k = 0; k < n; ++k) out(k, i) = z(0, i * n + k) * inv_scale;
  return out;
}

Eigen::MatrixXf RewardToGoCritic::sample_rtg(const Eigen::MatrixXf& obs, const Eigen::MatrixXf& actions,
                                             int n, Rng& rng) const {
  if (n < 1) throw InputDomainError("sample_rtg: n must be >= 1");
  return sample_rtg_from(obs, actions, standard_normal<float>(n, obs.cols(), rng));
}

double log_mean_exp(const double* z, Eigen::Index n, double tau) {
  if (n < 1) throw InputDomainError("log_mean_exp: need at least one sample");
  if (!(tau > 0.0)) throw InputDomainError("log_mean_exp: temperature must be positive");
  const double m = *std::max_element(z, z + n);
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) s += std::exp((z[i] - m) / tau);
  const double out = m + tau * std::log(s / static_cast<double>(n));
  // Round-off can push the estimate a hair outside [min, max].
  const double lo = *std::min_element(z, z + n);
  return std::clamp(out, lo, m);
}

double log_mean_exp(const Eigen::VectorXd& z, double tau) { return log_mean_exp(z.data(), z.size(), tau); }

void QStarEstimator::validate() const {
  if (!critic) throw ConfigError("q_star: estimator has no critic");
  if (!(tau_r > 0.0)) throw ConfigError("q_star: tau_r must be positive");
  if (n_samples < 1) throw ConfigError("q_star: n_samples must be >= 1");
}

Eigen::VectorXd QStarEstimator::q_star(const Eigen::MatrixXf& obs, const Eigen::MatrixXf& actions,
                                       Rng& rng) const {
  validate();
  const Eigen::MatrixXd z = critic->sample_rtg(obs, actions, n_samples, rng).cast<double>();
  Eigen::VectorXd q(z.cols());
  for (Eigen::Index i = 0; i < z.cols(); ++i) q(i) = log_mean_exp(z.col(i).data(), z.rows(), tau_r);
  return q;
}

}  // namespace evor
