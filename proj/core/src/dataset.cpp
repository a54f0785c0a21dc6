#include "evor/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "binary_io.hpp"

namespace evor {

namespace {
constexpr char kMagic[8] = {'E', 'V', 'O', 'R', 'D', 'S', 'E', 'T'};
}

std::size_t OfflineDataset::num_transitions() const {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.size();
  return n;
}

OfflineDataset gen_dataset(const Mdp& env, const RefPolicySpec& ref, int n_traj,
                           std::uint64_t seed, double gamma) {
  if (n_traj < 1) throw InputDomainError("gen_dataset: n_traj must be >= 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gen_dataset: gamma must lie in [0, 1]");
  ref.validate(env.num_ref_components());
  OfflineDataset ds;
  ds.meta = DatasetMeta{env.id(), env.horizon(), gamma, env.obs_dim(), env.act_dim(), seed, false};
  ds.trajectories.reserve(static_cast<std::size_t>(n_traj));
  for (int i = 0; i < n_traj; ++i) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(i));
    State s = env.reset(rng);
    Trajectory traj;
    traj.reserve(static_cast<std::size_t>(env.horizon()));
    for (int h = 0; h < env.horizon(); ++h) {
      Transition tr;
      tr.state_id = s.id;
      tr.step = h;
      tr.obs = env.observe(s);
      tr.action = env.sample_ref_action(s, ref, rng);
      const StepResult r = env.step(s, tr.action);
      tr.reward = r.reward;
      tr.terminal = r.terminal;
      tr.next_state_id = r.next.id;
      tr.next_obs = env.observe(r.next);
      traj.push_back(std::move(tr));
      s = r.next;
    }
    ds.trajectories.push_back(std::move(traj));
  }
  annotate_returns(ds, gamma);
  return ds;
}

void annotate_returns(OfflineDataset& ds, double gamma) {
  if (gamma != ds.meta.gamma)
    throw ConfigError("annotate_returns: gamma " + std::to_string(gamma) +
                      " does not match dataset metadata gamma " + std::to_string(ds.meta.gamma));
  for (auto& traj : ds.trajectories) {
    if (static_cast<int>(traj.size()) != ds.meta.horizon)
      throw InputDomainError("annotate_returns: trajectory length differs from the horizon");
    double z = 0.0;
    for (auto it = traj.rbegin(); it != traj.rend(); ++it) {
      z = it->reward + gamma * z;
      it->rtg = z;
    }
  }
  ds.meta.annotated = true;
}

std::vector<std::uint8_t> serialize(const OfflineDataset& ds) {
  detail::ByteWriter w;
  const auto& m = ds.meta;
  w.put_raw(kMagic, sizeof(kMagic));
  w.put<std::uint32_t>(OfflineDataset::kVersion);
  w.put_str(m.env_id);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.horizon));
  w.put<double>(m.gamma);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.obs_dim));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.act_dim));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ds.trajectories.size()));
  w.put<std::uint64_t>(m.seed);
  w.put<std::uint8_t>(m.annotated ? 1 : 0);
  for (const auto& traj : ds.trajectories) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(traj.size()));
    for (const auto& t : traj) {
      if (t.obs.size() != m.obs_dim || t.next_obs.size() != m.obs_dim || t.action.size() != m.act_dim)
        throw ShapeError("serialize: transition shape disagrees with dataset metadata");
      w.put<std::int32_t>(t.state_id);
      w.put<std::int32_t>(t.next_state_id);
      w.put<std::uint32_t>(static_cast<std::uint32_t>(t.step));
      w.put<std::uint8_t>(t.terminal ? 1 : 0);
      w.put<double>(t.reward);
      w.put<double>(t.rtg);
      w.put_raw(t.obs.data(), sizeof(double) * m.obs_dim);
      w.put_raw(t.action.data(), sizeof(double) * m.act_dim);
      w.put_raw(t.next_obs.data(), sizeof(double) * m.obs_dim);
    }
  }
  return std::move(w.bytes());
}

OfflineDataset deserialize_dataset(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes, "dataset");
  char magic[8];
  r.get_raw(magic, sizeof(magic));
  if (!std::equal(magic, magic + 8, kMagic)) throw ParseError("dataset: bad magic");
  if (const auto v = r.get<std::uint32_t>(); v != OfflineDataset::kVersion)
    throw ParseError("dataset: unsupported version " + std::to_string(v));
  OfflineDataset ds;
  auto& m = ds.meta;
  m.env_id = r.get_str();
  m.horizon = static_cast<int>(r.get<std::uint32_t>());
  m.gamma = r.get<double>();
  m.obs_dim = static_cast<int>(r.get<std::uint32_t>());
  m.act_dim = static_cast<int>(r.get<std::uint32_t>());
  const auto n_traj = r.get<std::uint32_t>();
  m.seed = r.get<std::uint64_t>();
  m.annotated = r.get<std::uint8_t>() != 0;
  ds.trajectories.resize(n_traj);
  for (auto& traj : ds.trajectories) {
    const auto len = r.get<std::uint32_t>();
    if (len > 1u << 20) throw ParseError("dataset: implausible trajectory length");
    traj.resize(len);
    for (auto& t : traj) {
      t.state_id = r.get<std::int32_t>();
      t.next_state_id = r.get<std::int32_t>();
      t.step = static_cast<int>(r.get<std::uint32_t>());
      t.terminal = r.get<std::uint8_t>() != 0;
      t.reward = r.get<double>();
      t.rtg = r.get<double>();
      t.obs.resize(m.obs_dim);
      t.action.resize(m.act_dim);
      t.next_obs.resize(m.obs_dim);
      r.get_raw(t.obs.data(), sizeof(double) * m.obs_dim);
      r.get_raw(t.action.data(), sizeof(double) * m.act_dim);
      r.get_raw(t.next_obs.data(), sizeof(double) * m.obs_dim);
    }
  }
  if (!r.done()) throw ParseError("dataset: trailing bytes");
  return ds;
}

void save_dataset(const OfflineDataset& ds, const std::filesystem::path& path) {
  detail::write_file_bytes(path.string(), serialize(ds));
}

OfflineDataset load_dataset(const std::filesystem::path& path) {
  return deserialize_dataset(detail::read_file_bytes(path.string()));
}

std::string export_text(const OfflineDataset& ds) {
  std::ostringstream out;
  const auto& m = ds.meta;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "# evor-dataset v" << OfflineDataset::kVersion << " env=" << m.env_id << " H=" << m.horizon
      << " gamma=" << num(m.gamma) << " obs_dim=" << m.obs_dim << " act_dim=" << m.act_dim
      << " n_traj=" << ds.trajectories.size() << " seed=" << m.seed
      << " annotated=" << (m.annotated ? 1 : 0) << "\n";
  auto vec = [&](const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << num(v(i));
  };
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    for (const auto& t : ds.trajectories[i]) {
      out << i << ' ' << t.step << ' ' << t.state_id << ' ' << t.next_state_id << ' '
          << (t.terminal ? 1 : 0) << ' ' << num(t.reward) << ' ' << num(t.rtg) << " |";
      vec(t.obs);
      out << " |";
      vec(t.action);
      out << " |";
      vec(t.next_obs);
      out << '\n';
    }
  }
  return out.str();
}

TransitionTable flatten(const OfflineDataset& ds) {
  const auto n = static_cast<Eigen::Index>(ds.num_transitions());
  const int od = ds.meta.obs_dim, ad = ds.meta.act_dim;
  TransitionTable t;
  t.obs.resize(od, n);
  t.next_obs.resize(od, n);
  t.action.resize(ad, n);
  t.next_action = Eigen::MatrixXf::Zero(ad, n);
  t.reward.resize(n);
  t.rtg.resize(n);
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    const auto& traj = ds.trajectories[i];
    for (std::size_t j = 0; j < traj.size(); ++j, ++k) {
      const auto& tr = traj[j];
      t.obs.col(k) = tr.obs.cast<float>();
      t.next_obs.col(k) = tr.next_obs.cast<float>();
      t.action.col(k) = tr.action.cast<float>();
      if (!tr.terminal && j + 1 < traj.size()) t.next_action.col(k) = traj[j + 1].action.cast<float>();
      t.reward(k) = static_cast<float>(tr.reward);
      t.rtg(k) = static_cast<float>(tr.rtg);
      t.terminal.push_back(tr.terminal ? 1 : 0);
      t.state_id.push_back(tr.state_id);
      t.next_state_id.push_back(tr.next_state_id);
      t.step.push_back(tr.step);
      t.traj.push_back(static_cast<int>(i));
      t.pos.push_back(static_cast<int>(j));
    }
  }
  return t;
}

}  // namespace evor
