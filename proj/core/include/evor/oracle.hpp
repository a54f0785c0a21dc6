#pragma once

#include <string>
#include <vector>

#include "evor/env.hpp"

namespace evor {

// Finite-support distribution over real returns.
struct DiscreteDistribution {
  std::vector<double> values;  // strictly increasing after compact()
  std::vector<double> probs;

  static DiscreteDistribution point(double v) { return {{v}, {1.0}}; }

  double mean() const;
  double total_mass() const;
  double min() const { return values.front(); }
  double max() const { return values.back(); }
  // Sorts the support and merges values closer than `tol`.
  void compact(double tol = 1e-12);
  double prob_near(double v, double radius) const;
};

// Per-(h, s, a) table; h in [0, H).
template <class Cell>
struct StepTable {
  int horizon = 0, num_states = 0, num_actions = 0;
  std::vector<Cell> cells;

  StepTable() = default;
  StepTable(int H, int S, int A) : horizon(H), num_states(S), num_actions(A), cells(std::size_t(H) * S * A) {}
  Cell& at(int h, int s, int a) { return cells[index(h, s, a)]; }
  const Cell& at(int h, int s, int a) const { return cells[index(h, s, a)]; }
  std::size_t index(int h, int s, int a) const {
    if (h < 0 || h >= horizon || s < 0 || s >= num_states || a < 0 || a >= num_actions)
      throw InputDomainError("oracle table index out of range");
    return (std::size_t(h) * num_states + s) * num_actions + a;
  }
};

using QTable = StepTable<double>;
using RtgTable = StepTable<DiscreteDistribution>;

// pi(a | s) at step h, stored as a (h, s, a) table.
using TabularPolicy = StepTable<double>;
TabularPolicy tabulate_ref_policy(const FiniteMdp& env, const RefPolicySpec& ref);
TabularPolicy greedy_policy(const QTable& q);

// Exact distribution of sum_{t >= h} gamma^(t-h) r_t given (s_h, a_h) = (s, a)
// and a_{t > h} ~ pi_ref. Backward recursion over (h, s), which is exact because
// transitions are deterministic.
RtgTable exact_rtg_distribution(const FiniteMdp& env, const RefPolicySpec& ref, double gamma);

struct OracleTables {
  double eta = 1.0;
  double gamma = 1.0;
  QTable q;                    // Q*_h(s, a)
  TabularPolicy pi;            // pi*_h(a | s)
  std::vector<double> v;       // V*_h(s), (H + 1) x S row-major, V_H = 0

  double value(int h, int s) const { return v[std::size_t(h) * q.num_states + s]; }
};

// Q_h = r + gamma V_{h+1}(s'), V_h = eta ln E_{pi_ref} exp(Q_h / eta),
// pi*_h proportional to pi_ref exp(Q_h / eta).
OracleTables soft_value_iteration(const FiniteMdp& env, const RefPolicySpec& ref, double eta,
                                  double gamma = 1.0);

// eta ln sum_z p(z) exp(z / eta) over the exact reward-to-go distribution.
QTable exact_q_star_via_theorem1(const FiniteMdp& env, const RefPolicySpec& ref, double eta,
                                 double gamma = 1.0);
double soft_expectation(const DiscreteDistribution& d, double eta);

// Policy evaluation by backward induction.
QTable exact_q_pi(const FiniteMdp& env, const TabularPolicy& pi, double gamma);

// Whitespace-separated golden-file format, one row per (h, s, a):
//   h s a q_star pi_star rtg_mean
std::string oracle_to_text(const OracleTables& t, const RtgTable& rtg);

}  // namespace evor
