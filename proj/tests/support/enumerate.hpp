#pragma once

// Test-only oracle: brute-force enumeration of the trajectory tree, with no
// state merging and no shared code with the library's backward recursions.

#include <cmath>
#include <map>
#include <vector>

#include "evor/env.hpp"

namespace evor::test {

// Return distribution of sum_{t>=h} gamma^(t-h) r_t from (s, a) at step h,
// later actions drawn from the per-state probabilities `pi`.
inline void enumerate_returns(const FiniteMdp& env, const std::vector<std::vector<double>>& pi, int h, int s,
                              int a, double gamma, double prefix, double discount, double prob,
                              std::map<double, double>& out) {
  const double total = prefix + discount * env.reward(s, a);
  if (h == env.horizon() - 1) {
    out[total] += prob;
    return;
  }
  const int sn = env.next_state(s, a);
  for (int an = 0; an < env.num_actions(); ++an) {
    if (pi[sn][an] == 0.0) continue;
    enumerate_returns(env, pi, h + 1, sn, an, gamma, total, discount * gamma, prob * pi[sn][an], out);
  }
}

inline std::map<double, double> returns_from(const FiniteMdp& env, const RefPolicySpec& ref, int h, int s, int a,
                                             double gamma) {
  std::vector<std::vector<double>> pi;
  for (int x = 0; x < env.num_states(); ++x) pi.push_back(env.ref_probs(x, ref));
  std::map<double, double> out;
  enumerate_returns(env, pi, h, s, a, gamma, 0.0, 1.0, 1.0, out);
  return out;
}

inline double soft_value(const std::map<double, double>& dist, double eta) {
  double m = -INFINITY;
  for (const auto& [z, p] : dist) m = std::max(m, z);
  double acc = 0.0;
  for (const auto& [z, p] : dist) acc += p * std::exp((z - m) / eta);
  return m + eta * std::log(acc);
}

inline double mean_of(const std::map<double, double>& dist) {
  double m = 0.0;
  for (const auto& [z, p] : dist) m += p * z;
  return m;
}

}  // namespace evor::test
