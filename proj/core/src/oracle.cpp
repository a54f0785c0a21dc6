#include "evor/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

namespace evor {

double DiscreteDistribution::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) m += values[i] * probs[i];
  return m;
}

double DiscreteDistribution::total_mass() const {
  return std::accumulate(probs.begin(), probs.end(), 0.0);
}

void DiscreteDistribution::compact(double tol) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<double> v, p;
  for (auto i : order) {
    if (probs[i] == 0.0) continue;
    if (!v.empty() && values[i] - v.back() < tol) {
      p.back() += probs[i];
    } else {
      v.push_back(values[i]);
      p.push_back(probs[i]);
    }
  }
  values = std::move(v);
  probs = std::move(p);
}

double DiscreteDistribution::prob_near(double v, double radius) const {
  double m = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (std::abs(values[i] - v) <= radius) m += probs[i];
  return m;
}

namespace {

void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("oracle: gamma must lie in [0, 1]");
}

void check_eta(double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InputDomainError("oracle: eta must be positive");
}

// eta ln sum_i w_i exp(x_i / eta), skipping zero weights.
double weighted_lse(const std::vector<double>& x, const std::vector<double>& w, double eta) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i)
    if (w[i] > 0.0) m = std::max(m, x[i]);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (w[i] > 0.0) s += w[i] * std::exp((x[i] - m) / eta);
  return m + eta * std::log(s);
}

}  // namespace

TabularPolicy tabulate_ref_policy(const FiniteMdp& env, const RefPolicySpec& ref) {
  const int H = env.horizon(), S = env.num_states(), A = env.num_actions();
  TabularPolicy pi(H, S, A);
  for (int s = 0; s < S; ++s) {
    const auto p = env.ref_probs(s, ref);
    for (int h = 0; h < H; ++h)
      for (int a = 0; a < A; ++a) pi.at(h, s, a) = p[a];
  }
  return pi;
}

TabularPolicy greedy_policy(const QTable& q) {
  TabularPolicy pi(q.horizon, q.num_states, q.num_actions);
  for (int h = 0; h < q.horizon; ++h)
    for (int s = 0; s < q.num_states; ++s) {
      int best = 0;
      for (int a = 1; a < q.num_actions; ++a)
        if (q.at(h, s, a) > q.at(h, s, best)) best = a;
      pi.at(h, s, best) = 1.0;
    }
  return pi;
}

RtgTable exact_rtg_distribution(const FiniteMdp& env, const RefPolicySpec& ref, double gamma) {
  check_gamma(gamma);
  const int H = env.horizon(), S = env.num_states(), A = env.num_actions();
  const TabularPolicy pi = tabulate_ref_policy(env, ref);
  RtgTable out(H, S, A);
  for (int h = H - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const double r = env.reward(s, a);
        if (h == H - 1 || gamma == 0.0) {
          out.at(h, s, a) = DiscreteDistribution::point(r);
          continue;
        }
        const int sn = env.next_state(s, a);
        DiscreteDistribution d;
        for (int an = 0; an < A; ++an) {
          const double w = pi.at(h + 1, sn, an);
          if (w == 0.0) continue;
          const auto& next = out.at(h + 1, sn, an);
          for (std::size_t i = 0; i < next.values.size(); ++i) {
            d.values.push_back(r + gamma * next.values[i]);
            d.probs.push_back(w * next.probs[i]);
          }
        }
        d.compact();
        out.at(h, s, a) = std::move(d);
      }
    }
  }
  return out;
}

double soft_expectation(const DiscreteDistribution& d, double eta) {
  check_eta(eta);
  return weighted_lse(d.values, d.probs, eta);
}

OracleTables soft_value_iteration(const FiniteMdp& env, const RefPolicySpec& ref, double eta,
                                  double gamma) {
  check_eta(eta);
  check_gamma(gamma);
  const int H = env.horizon(), S = env.num_states(), A = env.num_actions();
  const TabularPolicy pref = tabulate_ref_policy(env, ref);
  OracleTables t;
  t.eta = eta;
  t.gamma = gamma;
  t.q = QTable(H, S, A);
  t.pi = TabularPolicy(H, S, A);
  t.v.assign(std::size_t(H + 1) * S, 0.0);
  std::vector<double> qs(A), ws(A);
  for (int h = H - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const double vn = t.value(h + 1, env.next_state(s, a));
        qs[a] = env.reward(s, a) + gamma * vn;
        ws[a] = pref.at(h, s, a);
        t.q.at(h, s, a) = qs[a];
      }
      const double v = weighted_lse(qs, ws, eta);
      t.v[std::size_t(h) * S + s] = v;
      for (int a = 0; a < A; ++a) t.pi.at(h, s, a) = ws[a] > 0.0 ? ws[a] * std::exp((qs[a] - v) / eta) : 0.0;
    }
  }
  return t;
}

QTable exact_q_star_via_theorem1(const FiniteMdp& env, const RefPolicySpec& ref, double eta,
                                 double gamma) {
  check_eta(eta);
  const RtgTable rtg = exact_rtg_distribution(env, ref, gamma);
  QTable q(rtg.horizon, rtg.num_states, rtg.num_actions);
  for (std::size_t i = 0; i < rtg.cells.size(); ++i) q.cells[i] = soft_expectation(rtg.cells[i], eta);
  return q;
}

QTable exact_q_pi(const FiniteMdp& env, const TabularPolicy& pi, double gamma) {
  check_gamma(gamma);
  const int H = env.horizon(), S = env.num_states(), A = env.num_actions();
  if (pi.horizon != H || pi.num_states != S || pi.num_actions != A)
    throw ShapeError("exact_q_pi: policy table does not match the environment");
  QTable q(H, S, A);
  std::vector<double> v(S, 0.0), vn(S, 0.0);
  for (int h = H - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      double vs = 0.0;
      for (int a = 0; a < A; ++a) {
        const double qa = env.reward(s, a) + gamma * vn[env.next_state(s, a)];
        q.at(h, s, a) = qa;
        vs += pi.at(h, s, a) * qa;
      }
      v[s] = vs;
    }
    std::swap(v, vn);
  }
  return q;
}

std::string oracle_to_text(const OracleTables& t, const RtgTable& rtg) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "# h s a q_star pi_star rtg_mean  eta=%.17g gamma=%.17g\n", t.eta, t.gamma);
  out << buf;
  for (int h = 0; h < t.q.horizon; ++h)
    for (int s = 0; s < t.q.num_states; ++s)
      for (int a = 0; a < t.q.num_actions; ++a) {
        std::snprintf(buf, sizeof(buf), "%d %d %d %.17g %.17g %.17g\n", h, s, a, t.q.at(h, s, a),
                      t.pi.at(h, s, a), rtg.at(h, s, a).mean());
        out << buf;
      }
  return out.str();
}

}  // namespace evor
