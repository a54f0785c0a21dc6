#include "evor/flow.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace evor {

namespace {

void write_time_features(Eigen::Ref<Eigen::MatrixXf> rows, const Eigen::VectorXf& t, bool sinusoidal) {
  if (!sinusoidal) {
    rows.row(0) = t.transpose();
    return;
  }
  for (Eigen::Index j = 0; j < t.size(); ++j) {
    double freq = std::numbers::pi;
    for (int k = 0; k < 4; ++k, freq *= 2.0) {
      rows(2 * k, j) = static_cast<float>(std::sin(freq * t(j)));
      rows(2 * k + 1, j) = static_cast<float>(std::cos(freq * t(j)));
    }
  }
}

}  // namespace

ConditionalFlowModel::ConditionalFlowModel(FlowSpec spec, nn::Mlp<float> net)
    : spec_(spec), net_(std::move(net)) {
  if (spec_.sample_dim < 1 || spec_.cond_dim < 0) throw ShapeError("flow: invalid dimensions");
  if (net_.in_dim() != spec_.input_dim() || net_.out_dim() != spec_.sample_dim)
    throw ShapeError("flow: velocity network maps " + std::to_string(net_.in_dim()) + " -> " +
                     std::to_string(net_.out_dim()) + ", expected " +
                     std::to_string(spec_.input_dim()) + " -> " + std::to_string(spec_.sample_dim));
}

ConditionalFlowModel ConditionalFlowModel::init(FlowSpec spec, const std::vector<int>& hidden,
                                                nn::Activation act, bool layer_norm, Rng& rng) {
  auto mlp = nn::Mlp<float>::init(
      nn::MlpSpec::make(spec.input_dim(), hidden, spec.sample_dim, act, layer_norm), rng);
  return ConditionalFlowModel(spec, std::move(mlp));
}

Eigen::MatrixXf ConditionalFlowModel::assemble(const Matrix& x, const Vector& t,
                                               const Matrix& cond) const {
  const Eigen::Index batch = x.cols();
  if (x.rows() != spec_.sample_dim || t.size() != batch ||
      (spec_.cond_dim > 0 && (cond.rows() != spec_.cond_dim || cond.cols() != batch)))
    throw ShapeError("flow: sample/time/condition batch shapes disagree");
  Matrix in(spec_.input_dim(), batch);
  in.topRows(spec_.sample_dim) = x;
  write_time_features(in.middleRows(spec_.sample_dim, spec_.time_dim()), t, spec_.sinusoidal_time);
  if (spec_.cond_dim > 0) in.bottomRows(spec_.cond_dim) = cond;
  return in;
}

Eigen::MatrixXf ConditionalFlowModel::velocity(const Matrix& x, const Vector& t,
                                               const Matrix& cond) const {
  return net_.forward(assemble(x, t, cond));
}

Eigen::MatrixXf ConditionalFlowModel::velocity(const Matrix& x, float t, const Matrix& cond) const {
  return velocity(x, Vector::Constant(x.cols(), t), cond);
}

double interpolate(double x0, double x1, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw InputDomainError("interpolate: t must lie in [0, 1]");
  return (1.0 - t) * x0 + t * x1;
}

Eigen::VectorXd interpolate(const Eigen::VectorXd& x0, const Eigen::VectorXd& x1, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw InputDomainError("interpolate: t must lie in [0, 1]");
  if (x0.size() != x1.size()) throw ShapeError("interpolate: endpoint dimensions differ");
  return (1.0 - t) * x0 + t * x1;
}

FlowDraws draw_flow_noise(int dim, int batch, Rng& rng) {
  FlowDraws d;
  d.x0 = standard_normal<float>(dim, batch, rng);
  d.t = uniform01<float>(batch, rng);
  return d;
}

FlowLoss fm_loss(const ConditionalFlowModel& model, const Eigen::MatrixXf& cond,
                 const Eigen::MatrixXf& x1, const FlowDraws& draws) {
  const Eigen::Index batch = x1.cols();
  if (draws.x0.rows() != x1.rows() || draws.x0.cols() != batch)
    throw ShapeError("fm_loss: prior draws do not match the data batch");
  Eigen::MatrixXf xt = draws.x0;
  for (Eigen::Index j = 0; j < batch; ++j)
    xt.col(j) = (1.0f - draws.t(j)) * draws.x0.col(j) + draws.t(j) * x1.col(j);
  const Eigen::MatrixXf target = x1 - draws.x0;
  const float inv_b = 1.0f / static_cast<float>(batch);
  auto lg = nn::value_and_grad(model.net(), model.assemble(xt, draws.t, cond),
                               [&](const Eigen::MatrixXf& v) {
                                 Eigen::MatrixXf diff = v - target;
                                 const float loss = diff.squaredNorm() * inv_b;
                                 return std::pair<float, Eigen::MatrixXf>(loss, 2.0f * inv_b * diff);
                               });
  return {lg.loss, std::move(lg.grad)};
}

FlowLoss fm_loss(const ConditionalFlowModel& model, const Eigen::MatrixXf& cond,
                 const Eigen::MatrixXf& x1, Rng& rng) {
  return fm_loss(model, cond, x1,
                 draw_flow_noise(static_cast<int>(x1.rows()), static_cast<int>(x1.cols()), rng));
}

Eigen::MatrixXf euler_from(const ConditionalFlowModel& model, const Eigen::MatrixXf& cond,
                           Eigen::MatrixXf x0, int steps) {
  if (steps < 1) throw InputDomainError("euler_sample: step count must be >= 1");
  const auto& spec = model.spec();
  const Eigen::Index batch = x0.cols();
  if (spec.cond_dim > 0 && cond.cols() != batch) throw ShapeError("euler_sample: batch mismatch");
  // Reuse one input buffer across steps; only sample and time rows change.
  Eigen::MatrixXf in = model.assemble(x0, Eigen::VectorXf::Zero(batch), cond);
  const float dt = 1.0f / static_cast<float>(steps);
  for (int m = 0; m < steps; ++m) {
    const float t = static_cast<float>(m) / static_cast<float>(steps);
    in.topRows(spec.sample_dim) = x0;
    write_time_features(in.middleRows(spec.sample_dim, spec.time_dim()),
                        Eigen::VectorXf::Constant(batch, t), spec.sinusoidal_time);
    x0.noalias() += dt * model.net().forward(in);
  }
  return x0;
}

Eigen::MatrixXf euler_sample(const ConditionalFlowModel& model, const Eigen::MatrixXf& cond,
                             int steps, Rng& rng) {
  // Unconditional models take a 0 x B condition to fix the batch size.
  const Eigen::Index batch = cond.cols();
  return euler_from(model, cond, standard_normal<float>(model.spec().sample_dim, batch, rng), steps);
}

}  // namespace evor
