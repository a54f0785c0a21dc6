#include "evor/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace evor {

ActionSpace ActionSpace::box(int dim, double lo, double hi) {
  ActionSpace s;
  s.dim = dim;
  s.low = Eigen::VectorXd::Constant(dim, lo);
  s.high = Eigen::VectorXd::Constant(dim, hi);
  return s;
}

ActionSpace ActionSpace::one_hot(int n) {
  ActionSpace s = box(n, 0.0, 1.0);
  for (int i = 0; i < n; ++i) s.embeddings.push_back(Eigen::VectorXd::Unit(n, i));
  return s;
}

Eigen::VectorXd ActionSpace::clip(const Eigen::VectorXd& a) const {
  if (a.size() != dim) throw ShapeError("action has wrong dimension");
  return a.cwiseMax(low).cwiseMin(high);
}

int ActionSpace::nearest(const Eigen::VectorXd& a) const {
  if (!discrete()) throw UnsupportedError("nearest(): action space is continuous");
  if (a.size() != dim) throw ShapeError("action has wrong dimension");
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < size(); ++i) {
    const double d = (embeddings[i] - a).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

Eigen::VectorXd ActionSpace::snap(const Eigen::VectorXd& a) const {
  return discrete() ? embeddings[nearest(a)] : clip(a);
}

int ActionSpace::index_of(const Eigen::VectorXd& a) const {
  if (a.size() != dim) return -1;
  for (int i = 0; i < size(); ++i)
    if (embeddings[i] == a) return i;
  return -1;
}

bool ActionSpace::contains(const Eigen::VectorXd& a) const {
  if (a.size() != dim || !a.allFinite()) return false;
  if (discrete()) return index_of(a) >= 0;
  return (a.array() >= low.array()).all() && (a.array() <= high.array()).all();
}

void RefPolicySpec::validate(int n_components) const {
  if (static_cast<int>(weights.size()) != n_components)
    throw ConfigError("reference policy needs " + std::to_string(n_components) + " mixture weights");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("mixture weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("mixture weights must sum to 1");
}

namespace {

int sample_categorical(const std::vector<double>& probs, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x = u(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (x < acc) return static_cast<int>(i);
  }
  // Round-off: return the last index with positive mass.
  for (std::size_t i = probs.size(); i-- > 0;)
    if (probs[i] > 0.0) return static_cast<int>(i);
  return 0;
}

void check_step(const Mdp& env, const State& s) {
  if (s.step < 0 || s.step >= env.horizon())
    throw InputDomainError(env.id() + ": step index " + std::to_string(s.step) +
                           " outside [0, H)");
}

}  // namespace

// ---------------------------------------------------------------- FiniteMdp

State FiniteMdp::reset(Rng&) const { return State{initial_state(), {}, 0}; }

StepResult FiniteMdp::step(const State& s, const Eigen::VectorXd& action) const {
  check_step(*this, s);
  if (s.id < 0 || s.id >= num_states())
    throw InputDomainError(id() + ": state id " + std::to_string(s.id) + " out of range");
  const int a = action_space().index_of(action);
  if (a < 0) throw InputDomainError(id() + ": action is not one of the discrete embeddings");
  StepResult out;
  out.next = State{next_state(s.id, a), {}, s.step + 1};
  out.reward = reward(s.id, a);
  out.terminal = out.next.step == horizon();
  return out;
}

Eigen::VectorXd FiniteMdp::observe(const State& s) const {
  if (s.id < 0 || s.id >= num_states()) throw InputDomainError(id() + ": state id out of range");
  Eigen::VectorXd o = Eigen::VectorXd::Zero(obs_dim());
  o(s.id) = 1.0;
  o(num_states()) = static_cast<double>(s.step) / horizon();
  return o;
}

Eigen::VectorXd FiniteMdp::sample_ref_action(const State& s, const RefPolicySpec& spec,
                                             Rng& rng) const {
  return action_space().embeddings[sample_categorical(ref_probs(s.id, spec), rng)];
}

// ---------------------------------------------------------------- chain2

Chain2::Chain2() : actions_(ActionSpace::one_hot(2)) {}

int Chain2::next_state(int s, int) const { return std::min(s + 1, 2); }

double Chain2::reward(int, int a) const { return a == 0 ? 1.0 : 0.0; }

std::vector<double> Chain2::ref_probs(int, const RefPolicySpec& spec) const {
  spec.validate(2);
  // Component 0 always plays a0, component 1 always plays a1.
  return {spec.weights[0], spec.weights[1]};
}

bool Chain2::episode_success(const State&, double undiscounted_return) const {
  return undiscounted_return >= 2.0;
}

// ---------------------------------------------------------------- gridworld5

const std::vector<std::string>& Gridworld5::layout() {
  static const std::vector<std::string> rows = {
      ".....",
      "S..##",
      ".....",
      "....#",
      "....G",
  };
  return rows;
}

Gridworld5::Gridworld5() : actions_(ActionSpace::one_hot(4)) {
  const auto& rows = layout();
  std::vector<std::vector<int>> index(kSize, std::vector<int>(kSize, -1));
  for (int r = 0; r < kSize; ++r)
    for (int c = 0; c < kSize; ++c) {
      if (rows[r][c] == '#') continue;
      index[r][c] = static_cast<int>(cells_.size());
      if (rows[r][c] == 'S') start_ = index[r][c];
      if (rows[r][c] == 'G') goal_ = index[r][c];
      cells_.emplace_back(r, c);
    }
  constexpr int dr[4] = {-1, 1, 0, 0};
  constexpr int dc[4] = {0, 0, -1, 1};
  next_.assign(cells_.size(), std::vector<int>(4));
  for (int s = 0; s < num_states(); ++s) {
    for (int a = 0; a < 4; ++a) {
      const int r = cells_[s].first + dr[a];
      const int c = cells_[s].second + dc[a];
      const bool blocked = r < 0 || r >= kSize || c < 0 || c >= kSize || index[r][c] < 0;
      next_[s][a] = (s == goal_ || blocked) ? s : index[r][c];
    }
  }
  // Shortest-path distances by repeated relaxation (tiny graph).
  dist_.assign(cells_.size(), std::numeric_limits<int>::max() / 2);
  dist_[goal_] = 0;
  for (bool changed = true; changed;) {
    changed = false;
    for (int s = 0; s < num_states(); ++s)
      for (int a = 0; a < 4; ++a)
        if (dist_[next_[s][a]] + 1 < dist_[s]) {
          dist_[s] = dist_[next_[s][a]] + 1;
          changed = true;
        }
  }
}

double Gridworld5::reward(int s, int a) const {
  return (s != goal_ && next_[s][a] == goal_) ? 1.0 : 0.0;
}

std::vector<double> Gridworld5::ref_probs(int s, const RefPolicySpec& spec) const {
  spec.validate(2);
  std::vector<double> p(4, 0.0);
  if (s == goal_) return {0.25, 0.25, 0.25, 0.25};
  // Component 0: uniform over moves that shorten the path to the goal.
  // Component 1: uniform over all four moves.
  std::vector<int> improving;
  for (int a = 0; a < 4; ++a)
    if (dist_[next_[s][a]] < dist_[s]) improving.push_back(a);
  for (int a : improving) p[a] += spec.weights[0] / static_cast<double>(improving.size());
  for (int a = 0; a < 4; ++a) p[a] += spec.weights[1] / 4.0;
  return p;
}

bool Gridworld5::episode_success(const State& final_state, double) const {
  return final_state.id == goal_;
}

std::string Gridworld5::state_name(int s) const {
  return "(" + std::to_string(cells_[s].first) + "," + std::to_string(cells_[s].second) + ")";
}

// ---------------------------------------------------------------- bimodal-bandit

BimodalBandit::BimodalBandit() : actions_(ActionSpace::box(1, -3.0, 3.0)) {}

State BimodalBandit::reset(Rng&) const { return State{-1, Eigen::VectorXd::Zero(1), 0}; }

double BimodalBandit::reward_at(double a) {
  return ((a >= kWideLo && a <= kWideHi) || (a >= kNarrowLo && a <= kNarrowHi)) ? 1.0 : 0.0;
}

StepResult BimodalBandit::step(const State& s, const Eigen::VectorXd& action) const {
  check_step(*this, s);
  if (!actions_.contains(action)) throw InputDomainError("bimodal-bandit: action outside [-3, 3]");
  StepResult out;
  out.next = State{-1, s.pos, s.step + 1};
  out.reward = reward_at(action(0));
  out.terminal = true;
  return out;
}

Eigen::VectorXd BimodalBandit::observe(const State& s) const {
  Eigen::VectorXd o(2);
  o << 1.0, static_cast<double>(s.step) / horizon();
  return o;
}

bool BimodalBandit::episode_success(const State&, double undiscounted_return) const {
  return undiscounted_return >= 1.0;
}

Eigen::VectorXd BimodalBandit::sample_ref_action(const State&, const RefPolicySpec& spec,
                                                 Rng& rng) const {
  spec.validate(2);
  // Component 0 targets the wide interval, component 1 the narrow one.
  const int k = sample_categorical(spec.weights, rng);
  const double center = k == 0 ? 0.5 * (kWideLo + kWideHi) : 0.5 * (kNarrowLo + kNarrowHi);
  const double width = k == 0 ? (kWideHi - kWideLo) : (kNarrowHi - kNarrowLo);
  std::normal_distribution<double> noise(0.0, width / 4.0);
  Eigen::VectorXd a(1);
  a(0) = std::clamp(center + noise(rng), -3.0, 3.0);
  return a;
}

// ---------------------------------------------------------------- pointmass-maze

PointmassMaze::PointmassMaze() : actions_(ActionSpace::box(2, -1.0, 1.0)) {}

bool PointmassMaze::in_wall(double x, double y) {
  // Vertical slab from the bottom edge up to y = 0.7.
  return x >= 0.45 && x <= 0.55 && y <= 0.7;
}

bool PointmassMaze::in_goal(const Eigen::VectorXd& p) {
  return std::hypot(p(0) - kGoalX, p(1) - kGoalY) <= kGoalRadius;
}

State PointmassMaze::reset(Rng& rng) const {
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  Eigen::VectorXd p(2);
  p << 0.15 + jitter(rng), 0.15 + jitter(rng);
  return State{-1, p, 0};
}

StepResult PointmassMaze::step(const State& s, const Eigen::VectorXd& action) const {
  check_step(*this, s);
  if (s.pos.size() != 2 || !s.pos.allFinite()) throw InputDomainError("pointmass-maze: bad state");
  if (!actions_.contains(action)) throw InputDomainError("pointmass-maze: action outside [-1, 1]^2");
  StepResult out;
  out.next = State{-1, s.pos, s.step + 1};
  if (!in_goal(s.pos)) {
    Eigen::VectorXd p = (s.pos + kStepScale * action).cwiseMax(0.0).cwiseMin(1.0);
    if (!in_wall(p(0), p(1))) out.next.pos = p;
    out.reward = in_goal(out.next.pos) ? 1.0 : 0.0;
  }
  out.terminal = out.next.step == horizon();
  return out;
}

Eigen::VectorXd PointmassMaze::observe(const State& s) const {
  Eigen::VectorXd o(3);
  o << s.pos(0), s.pos(1), static_cast<double>(s.step) / horizon();
  return o;
}

bool PointmassMaze::episode_success(const State& final_state, double) const {
  return in_goal(final_state.pos);
}

Eigen::VectorXd PointmassMaze::sample_ref_action(const State& s, const RefPolicySpec& spec,
                                                 Rng& rng) const {
  spec.validate(2);
  const int k = sample_categorical(spec.weights, rng);
  std::normal_distribution<double> noise(0.0, 0.3);
  Eigen::VectorXd dir(2);
  if (k == 0) {
    // Head over the wall top, then to the goal.
    Eigen::VectorXd waypoint(2);
    if (s.pos(0) < 0.45)
      waypoint << 0.5, 0.8;
    else
      waypoint << kGoalX, kGoalY;
    dir = waypoint - s.pos;
    const double n = dir.norm();
    if (n > 1e-9) dir /= n;
  } else {
    std::uniform_real_distribution<double> angle(0.0, 2.0 * 3.141592653589793);
    const double th = angle(rng);
    dir << std::cos(th), std::sin(th);
  }
  dir(0) += noise(rng);
  dir(1) += noise(rng);
  return actions_.clip(dir);
}

// ---------------------------------------------------------------- factory

std::unique_ptr<Mdp> make_env(const std::string& id) {
  if (id == "chain2") return std::make_unique<Chain2>();
  if (id == "gridworld5") return std::make_unique<Gridworld5>();
  if (id == "bimodal-bandit") return std::make_unique<BimodalBandit>();
  if (id == "pointmass-maze") return std::make_unique<PointmassMaze>();
  throw ConfigError("unknown environment '" + id + "'");
}

std::vector<std::string> env_ids() { return {"chain2", "gridworld5", "bimodal-bandit", "pointmass-maze"}; }

const FiniteMdp& as_finite(const Mdp& env) {
  if (const auto* f = dynamic_cast<const FiniteMdp*>(&env)) return *f;
  throw UnsupportedError(env.id() + " has a continuous state or action space; exact oracles need a finite MDP");
}

}  // namespace evor
