#pragma once

#include <vector>

#include <Eigen/Core>

#include "evor/errors.hpp"
#include "evor/nn/mlp.hpp"
#include "evor/rng.hpp"

namespace evor {

// Velocity network input is [sample ; time features ; condition], one column
// per batch element. Time enters either as the raw scalar t or as 8
// sinusoidal features sin/cos(2^k pi t), k = 0..3.
struct FlowSpec {
  int sample_dim = 1;
  int cond_dim = 0;
  bool sinusoidal_time = false;

  int time_dim() const { return sinusoidal_time ? 8 : 1; }
  int input_dim() const { return sample_dim + time_dim() + cond_dim; }
  bool operator==(const FlowSpec&) const = default;
};

class ConditionalFlowModel {
 public:
  using Matrix = Eigen::MatrixXf;
  using Vector = Eigen::VectorXf;

  ConditionalFlowModel() = default;
  ConditionalFlowModel(FlowSpec spec, nn::Mlp<float> net);

  static ConditionalFlowModel init(FlowSpec spec, const std::vector<int>& hidden,
                                   nn::Activation act, bool layer_norm, Rng& rng);

  const FlowSpec& spec() const { return spec_; }
  const nn::Mlp<float>& net() const { return net_; }
  nn::Mlp<float>& net() { return net_; }

  // Network input for samples x (d x B) at per-column times t and conditions.
  Matrix assemble(const Matrix& x, const Vector& t, const Matrix& cond) const;
  Matrix velocity(const Matrix& x, const Vector& t, const Matrix& cond) const;
  Matrix velocity(const Matrix& x, float t, const Matrix& cond) const;

 private:
  FlowSpec spec_;
  nn::Mlp<float> net_;
};

double interpolate(double x0, double x1, double t);
Eigen::VectorXd interpolate(const Eigen::VectorXd& x0, const Eigen::VectorXd& x1, double t);

// Prior and time draws for one flow-matching minibatch.
struct FlowDraws {
  Eigen::MatrixXf x0;  // d x B, standard normal
  Eigen::VectorXf t;   // B, Unif[0,1]
};
FlowDraws draw_flow_noise(int dim, int batch, Rng& rng);

struct FlowLoss {
  float loss = 0.0f;
  Eigen::VectorXf grad;
};

// Minibatch mean of ||v(x_t, t | c) - (x1 - x0)||^2 with x_t = (1-t) x0 + t x1.
FlowLoss fm_loss(const ConditionalFlowModel& model, const Eigen::MatrixXf& cond,
                 const Eigen::MatrixXf& x1, const FlowDraws& draws);
FlowLoss fm_loss(const ConditionalFlowModel& model, const Eigen::MatrixXf& cond,
                 const Eigen::MatrixXf& x1, Rng& rng);

// Forward Euler over t in [0, 1] with `steps` uniform steps:
// x <- x + (1/M) field(x, t), t <- t + 1/M.
template <class Field, class Derived>
typename Derived::PlainObject euler_integrate(Field&& field, const Eigen::MatrixBase<Derived>& x0, int steps) {
  using Mat = typename Derived::PlainObject;
  Mat x = x0;
  if (steps < 1) throw InputDomainError("euler_integrate: step count must be >= 1");
  using T = typename Mat::Scalar;
  const T dt = T(1) / static_cast<T>(steps);
  for (int m = 0; m < steps; ++m) {
    const T t = static_cast<T>(m) / static_cast<T>(steps);
    x += dt * field(x, t);
  }
  return x;
}

// Draws x0 ~ N(0, I_d) per condition column and integrates the learned field.
Eigen::MatrixXf euler_sample(const ConditionalFlowModel& model, const Eigen::MatrixXf& cond,
                             int steps, Rng& rng);
// Same, from caller-provided starting points.
Eigen::MatrixXf euler_from(const ConditionalFlowModel& model, const Eigen::MatrixXf& cond,
                           Eigen::MatrixXf x0, int steps);

}  // namespace evor
