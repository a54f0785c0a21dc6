#include "evor/policy.hpp"

namespace evor {

namespace {
void check_config(const PolicyConfig& cfg) {
  if (cfg.euler_steps < 1) throw ConfigError("policy: euler_steps must be >= 1");
  if (cfg.chunk < 1) throw ConfigError("policy: chunk must be >= 1");
}
}  // namespace

BasePolicy::BasePolicy(int obs_dim, ActionSpace actions, PolicyConfig cfg, Rng& rng)
    : actions_(std::move(actions)), cfg_(std::move(cfg)) {
  check_config(cfg_);
  FlowSpec spec{actions_.dim * cfg_.chunk, obs_dim, cfg_.sinusoidal_time};
  flow_ = ConditionalFlowModel::init(spec, cfg_.hidden, cfg_.activation, cfg_.layer_norm, rng);
  adam_ = nn::AdamState<float>(cfg_.adam, flow_.net().params().size());
}

BasePolicy::BasePolicy(ConditionalFlowModel flow, ActionSpace actions, PolicyConfig cfg)
    : flow_(std::move(flow)), actions_(std::move(actions)), cfg_(std::move(cfg)) {
  check_config(cfg_);
  if (flow_.spec().sample_dim != actions_.dim * cfg_.chunk)
    throw ShapeError("policy: flow sample dimension does not match chunk * act_dim");
  adam_ = nn::AdamState<float>(cfg_.adam, flow_.net().params().size());
}

float BasePolicy::bc_update(const Eigen::MatrixXf& obs, const Eigen::MatrixXf& actions, Rng& rng) {
  const FlowLoss fl = fm_loss(flow_, obs, actions, rng);
  nn::adam_step(adam_, flow_.net(), fl.grad);
  return fl.loss;
}

Eigen::MatrixXf BasePolicy::sample_raw(const Eigen::MatrixXf& obs, Rng& rng) const {
  return euler_sample(flow_, obs, cfg_.euler_steps, rng);
}

Eigen::MatrixXf BasePolicy::postprocess(Eigen::MatrixXf raw) const {
  const int d = actions_.dim;
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    for (int c = 0; c < cfg_.chunk; ++c) {
      auto seg = raw.col(j).segment(c * d, d);
      Eigen::VectorXd a = seg.cast<double>();
      a = actions_.discrete() ? actions_.snap(a) : actions_.clip(a);
      seg = a.cast<float>();
    }
  }
  return raw;
}

Eigen::MatrixXf BasePolicy::sample_actions(const Eigen::MatrixXf& obs, Rng& rng) const {
  return postprocess(sample_raw(obs, rng));
}

Eigen::VectorXd BasePolicy::sample_action(const Eigen::VectorXd& obs, Rng& rng) const {
  const Eigen::MatrixXf o = obs.cast<float>();
  return sample_actions(o, rng).col(0).cast<double>();
}

}  // namespace evor
