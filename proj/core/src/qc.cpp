#include "evor/qc.hpp"

#include <cmath>

namespace evor {

QcWindows QcWindows::gather(const std::vector<int>& rows) const {
  QcWindows out;
  const auto n = static_cast<Eigen::Index>(rows.size());
  out.obs.resize(obs.rows(), n);
  out.chunk.resize(chunk.rows(), n);
  out.next_obs.resize(next_obs.rows(), n);
  out.reward_sum.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const int r = rows[j];
    out.obs.col(j) = obs.col(r);
    out.chunk.col(j) = chunk.col(r);
    out.next_obs.col(j) = next_obs.col(r);
    out.reward_sum(j) = reward_sum(r);
    out.bootstrap.push_back(bootstrap[r]);
    out.index.push_back(index[r]);
  }
  return out;
}

QcWindows build_qc_windows(const OfflineDataset& ds, int k, double gamma) {
  if (k < 1) throw ConfigError("qc: chunk length must be >= 1");
  const int od = ds.meta.obs_dim, ad = ds.meta.act_dim;
  const auto n = static_cast<Eigen::Index>(ds.num_transitions());
  QcWindows w;
  w.obs.resize(od, n);
  w.chunk = Eigen::MatrixXf::Zero(ad * k, n);
  w.next_obs = Eigen::MatrixXf::Zero(od, n);
  w.reward_sum.resize(n);
  Eigen::Index col = 0;
  for (const auto& traj : ds.trajectories) {
    const int H = static_cast<int>(traj.size());
    for (int h = 0; h < H; ++h, ++col) {
      w.obs.col(col) = traj[h].obs.cast<float>();
      double rsum = 0.0, disc = 1.0;
      for (int j = 0; j < k && h + j < H; ++j) {
        w.chunk.block(j * ad, col, ad, 1) = traj[h + j].action.cast<float>();
        rsum += disc * traj[h + j].reward;
        disc *= gamma;
      }
      w.reward_sum(col) = static_cast<float>(rsum);
      const bool boot = h + k <= H - 1;
      w.bootstrap.push_back(boot ? 1 : 0);
      if (boot) w.next_obs.col(col) = traj[h + k].obs.cast<float>();
      w.index.push_back(static_cast<int>(col));
    }
  }
  return w;
}

Eigen::VectorXf ensemble_min(const Eigen::MatrixXf& members) {
  return members.colwise().minCoeff().transpose();
}

ScalarCritic::ScalarCritic(int obs_dim, int chunk_dim, QcConfig cfg, Rng& rng)
    : obs_dim_(obs_dim), cfg_(std::move(cfg)) {
  if (cfg_.bootstrap_candidates < 1) throw ConfigError("qc: bootstrap_candidates must be >= 1");
  const auto spec = nn::MlpSpec::make(obs_dim + chunk_dim, cfg_.hidden, 1, cfg_.activation, cfg_.layer_norm);
  for (int i = 0; i < kEnsemble; ++i) {
    online_[i] = nn::Mlp<float>::init(spec, rng);
    target_[i] = online_[i];
    adam_[i] = nn::AdamState<float>(cfg_.adam, online_[i].params().size());
  }
}

ScalarCritic::ScalarCritic(std::array<nn::Mlp<float>, kEnsemble> online,
                           std::array<nn::Mlp<float>, kEnsemble> target, int obs_dim, QcConfig cfg)
    : online_(std::move(online)), target_(std::move(target)), obs_dim_(obs_dim), cfg_(std::move(cfg)) {
  for (int i = 0; i < kEnsemble; ++i) {
    if (!(online_[i].spec() == target_[i].spec()) || !(online_[i].spec() == online_[0].spec()))
      throw ShapeError("qc: ensemble members differ in shape");
    adam_[i] = nn::AdamState<float>(cfg_.adam, online_[i].params().size());
  }
}

Eigen::MatrixXf ScalarCritic::input(const Eigen::MatrixXf& obs, const Eigen::MatrixXf& chunk) const {
  if (obs.rows() != obs_dim_ || obs.rows() + chunk.rows() != online_[0].in_dim() || obs.cols() != chunk.cols())
    throw ShapeError("qc: observation/chunk batch has the wrong shape");
  Eigen::MatrixXf in(obs.rows() + chunk.rows(), obs.cols());
  in << obs, chunk;
  return in;
}

Eigen::MatrixXf ScalarCritic::q_members(const Eigen::MatrixXf& obs, const Eigen::MatrixXf& chunk,
                                        bool use_target) const {
  const Eigen::MatrixXf in = input(obs, chunk);
  Eigen::MatrixXf out(kEnsemble, obs.cols());
  const auto& nets = use_target ? target_ : online_;
  for (int i = 0; i < kEnsemble; ++i) out.row(i) = nets[i].forward(in);
  return out;
}

Eigen::VectorXf ScalarCritic::q_min(const Eigen::MatrixXf& obs, const Eigen::MatrixXf& chunk,
                                    bool use_target) const {
  return ensemble_min(q_members(obs, chunk, use_target));
}

Eigen::VectorXf ScalarCritic::td_targets(const QcWindows& b, const BasePolicy& policy, Rng& rng) const {
  const Eigen::Index B = b.size();
  const int N = cfg_.bootstrap_candidates;
  Eigen::VectorXf y = b.reward_sum;
  std::vector<Eigen::Index> cols;
  for (Eigen::Index j = 0; j < B; ++j)
    if (b.bootstrap[j] && cfg_.gamma > 0.0) cols.push_back(j);
  if (cols.empty()) return y;
  const auto nb = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXf x(b.next_obs.rows(), nb * N);
  for (Eigen::Index i = 0; i < nb; ++i) x.middleCols(i * N, N) = b.next_obs.col(cols[i]).replicate(1, N);
  const Eigen::MatrixXf c = policy.sample_actions(x, rng);
  const Eigen::VectorXf q = q_min(x, c, true);
  const float disc = static_cast<float>(std::pow(cfg_.gamma, cfg_.chunk));
  for (Eigen::Index i = 0; i < nb; ++i) y(cols[i]) += disc * q.segment(i * N, N).maxCoeff();
  return y;
}

float ScalarCritic::td_update(const QcWindows& b, const BasePolicy& policy, Rng& rng) {
  const Eigen::Index B = b.size();
  if (B == 0) throw InputDomainError("qc: empty batch");
  const Eigen::VectorXf y = td_targets(b, policy, rng);
  for (Eigen::Index j = 0; j < B; ++j)
    if (!std::isfinite(y(j)))
      throw NumericError("qc: non-finite TD target for dataset transition " + std::to_string(b.index[j]));
  const Eigen::MatrixXf in = input(b.obs, b.chunk);
  const float inv_b = 1.0f / static_cast<float>(B);
  float total = 0.0f;
  for (int i = 0; i < kEnsemble; ++i) {
    auto lg = nn::value_and_grad(online_[i], in, [&](const Eigen::MatrixXf& out) {
      Eigen::MatrixXf diff = out;
      diff.row(0) -= y.transpose();
      return std::make_pair(diff.squaredNorm() * inv_b, Eigen::MatrixXf(2.0f * inv_b * diff));
    });
    nn::adam_step(adam_[i], online_[i], lg.grad);
    nn::polyak_update(target_[i], online_[i], cfg_.polyak);
    total += lg.loss;
  }
  return total / kEnsemble;
}

QcDecision qc_select_action(const BasePolicy& policy, const ScalarCritic& critic,
                            const Eigen::VectorXd& obs, int n_pi, Rng& rng) {
  if (n_pi < 1) throw InputDomainError("qc_select_action: n_pi must be >= 1");
  const Eigen::MatrixXf x = obs.cast<float>().replicate(1, n_pi);
  const Eigen::MatrixXf c = policy.sample_actions(x, rng);
  QcDecision d;
  d.scores = critic.q_min(x, c).cast<double>();
  d.index = argmax_select(d.scores);
  d.chunk = c.col(d.index).cast<double>();
  return d;
}

Actor qc_actor(const BasePolicy& policy, const ScalarCritic& critic, int n_pi) {
  if (n_pi < 1) throw ConfigError("qc: n_pi must be >= 1");
  return [&policy, &critic, n_pi](const Mdp& env, const State& s, Rng& rng) {
    const Eigen::VectorXd flat = qc_select_action(policy, critic, env.observe(s), n_pi, rng).chunk;
    return Eigen::MatrixXd(Eigen::Map<const Eigen::MatrixXd>(flat.data(), policy.act_dim(), policy.chunk()));
  };
}

}  // namespace evor
