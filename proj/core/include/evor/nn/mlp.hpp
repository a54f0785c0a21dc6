#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "evor/errors.hpp"
#include "evor/rng.hpp"

namespace evor::nn {

enum class Activation : std::uint8_t { gelu = 0, relu = 1 };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

// Layer widths run input -> hidden... -> output. `layer_norm` has one flag per
// hidden layer (the output layer is always plain affine).
struct MlpSpec {
  std::vector<int> widths;
  Activation activation = Activation::gelu;
  std::vector<bool> layer_norm;

  static MlpSpec make(int in, const std::vector<int>& hidden, int out,
                      Activation act = Activation::gelu, bool ln = false);

  int num_layers() const { return static_cast<int>(widths.size()) - 1; }
  int in_dim() const { return widths.front(); }
  int out_dim() const { return widths.back(); }
  bool has_ln(int layer) const {
    return layer < static_cast<int>(layer_norm.size()) && layer_norm[layer];
  }
  Eigen::Index param_count() const;
  void validate() const;

  bool operator==(const MlpSpec&) const = default;
};

template <class T>
using MatrixX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using VectorX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// Activations recorded by a forward pass, consumed by backward().
template <class T>
struct Tape {
  std::vector<MatrixX<T>> inputs;   // input to each layer
  std::vector<MatrixX<T>> preact;   // post-LN, pre-activation (hidden layers)
  std::vector<MatrixX<T>> xhat;     // normalized values (LN layers only)
  std::vector<MatrixX<T>> inv_std;  // 1 x batch (LN layers only)
};

// Multi-layer perceptron over column-major batches (features x batch). All
// parameters live in one flat vector so optimizers, Polyak averaging and
// checkpoints work on a single buffer.
template <class T>
class Mlp {
 public:
  using Matrix = MatrixX<T>;
  using Vector = VectorX<T>;
  static constexpr T kLnEps = T(1e-5);

  Mlp() = default;
  explicit Mlp(MlpSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    params_ = Vector::Zero(spec_.param_count());
    build_offsets();
    for (int l = 0; l < spec_.num_layers(); ++l)
      if (spec_.has_ln(l)) ln_gain(l).setOnes();
  }

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  static Mlp init(MlpSpec spec, Rng& rng) {
    Mlp m(std::move(spec));
    for (int l = 0; l < m.spec_.num_layers(); ++l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(m.spec_.widths[l]));
      std::uniform_real_distribution<double> dist(-bound, bound);
      auto w = m.weight(l);
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = static_cast<T>(dist(rng));
      auto b = m.bias(l);
      for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = static_cast<T>(dist(rng));
    }
    return m;
  }

  const MlpSpec& spec() const { return spec_; }
  int in_dim() const { return spec_.in_dim(); }
  int out_dim() const { return spec_.out_dim(); }
  int num_layers() const { return spec_.num_layers(); }

  Vector& params() { return params_; }
  const Vector& params() const { return params_; }
  void set_params(const Vector& p) {
    if (p.size() != params_.size())
      throw ShapeError("parameter vector has " + std::to_string(p.size()) + " entries, expected " +
                       std::to_string(params_.size()));
    params_ = p;
  }

  Eigen::Map<Matrix> weight(int l) {
    return {params_.data() + off_[l].w, spec_.widths[l + 1], spec_.widths[l]};
  }
  Eigen::Map<const Matrix> weight(int l) const {
    return {params_.data() + off_[l].w, spec_.widths[l + 1], spec_.widths[l]};
  }
  Eigen::Map<Vector> bias(int l) { return {params_.data() + off_[l].b, spec_.widths[l + 1]}; }
  Eigen::Map<const Vector> bias(int l) const {
    return {params_.data() + off_[l].b, spec_.widths[l + 1]};
  }
  Eigen::Map<Vector> ln_gain(int l) { return {params_.data() + off_[l].g, spec_.widths[l + 1]}; }
  Eigen::Map<const Vector> ln_gain(int l) const {
    return {params_.data() + off_[l].g, spec_.widths[l + 1]};
  }
  Eigen::Map<Vector> ln_bias(int l) { return {params_.data() + off_[l].beta, spec_.widths[l + 1]}; }
  Eigen::Map<const Vector> ln_bias(int l) const {
    return {params_.data() + off_[l].beta, spec_.widths[l + 1]};
  }

  Matrix forward(const Matrix& x) const { return run(x, nullptr); }
  Matrix forward(const Matrix& x, Tape<T>& tape) const { return run(x, &tape); }

  // Parameter gradient of sum(d_out .* output). Optionally writes d/d_input.
  Vector backward(const Tape<T>& tape, const Matrix& d_out, Matrix* d_input = nullptr) const {
    const int L = num_layers();
    if (d_out.rows() != out_dim() || static_cast<int>(tape.inputs.size()) != L ||
        d_out.cols() != tape.inputs.front().cols())
      throw ShapeError("backward: output gradient does not match the recorded forward pass");
    Vector grad = Vector::Zero(params_.size());
    Matrix d = d_out;
    for (int l = L - 1; l >= 0; --l) {
      if (l < L - 1) {
        d.array() *= activation_grad(tape.preact[l]).array();
        if (spec_.has_ln(l)) {
          const Matrix& xh = tape.xhat[l];
          Eigen::Map<Vector>(grad.data() + off_[l].g, d.rows()) = (d.array() * xh.array()).rowwise().sum();
          Eigen::Map<Vector>(grad.data() + off_[l].beta, d.rows()) = d.rowwise().sum();
          Matrix dxh = d.array().colwise() * ln_gain(l).array();
          const T n = static_cast<T>(d.rows());
          const auto sum_dxh = dxh.colwise().sum();
          const auto sum_dxh_xh = (dxh.array() * xh.array()).colwise().sum();
          Matrix dz = n * dxh.array() - xh.array().rowwise() * sum_dxh_xh;
          dz.array().rowwise() -= sum_dxh.array();
          dz.array().rowwise() *= tape.inv_std[l].array().row(0) / n;
          d = std::move(dz);
        }
      }
      const Matrix& in = tape.inputs[l];
      Eigen::Map<Matrix>(grad.data() + off_[l].w, spec_.widths[l + 1], spec_.widths[l]).noalias() =
          d * in.transpose();
      Eigen::Map<Vector>(grad.data() + off_[l].b, spec_.widths[l + 1]) = d.rowwise().sum();
      if (l > 0 || d_input) {
        Matrix prev = weight(l).transpose() * d;
        d = std::move(prev);
      }
    }
    if (d_input) *d_input = std::move(d);
    return grad;
  }

  template <class U>
  Mlp<U> cast() const {
    Mlp<U> out(spec_);
    out.params() = params_.template cast<U>();
    return out;
  }

 private:
  struct Offsets {
    Eigen::Index w = 0, b = 0, g = 0, beta = 0;
  };

  void build_offsets() {
    off_.clear();
    Eigen::Index cur = 0;
    for (int l = 0; l < spec_.num_layers(); ++l) {
      Offsets o;
      o.w = cur;
      cur += static_cast<Eigen::Index>(spec_.widths[l + 1]) * spec_.widths[l];
      o.b = cur;
      cur += spec_.widths[l + 1];
      if (spec_.has_ln(l)) {
        o.g = cur;
        cur += spec_.widths[l + 1];
        o.beta = cur;
        cur += spec_.widths[l + 1];
      }
      off_.push_back(o);
    }
  }

  static Matrix activate(const Matrix& y, Activation act) {
    if (act == Activation::relu) return y.cwiseMax(T(0));
    const T c = T(0.7978845608028654);  // sqrt(2/pi)
    const auto x = y.array();
    Matrix th = (c * (x + T(0.044715) * x * x * x)).tanh().matrix();
    return (T(0.5) * x * (T(1) + th.array())).matrix();
  }

  Matrix activation_grad(const Matrix& y) const {
    if (spec_.activation == Activation::relu) return (y.array() > T(0)).template cast<T>().matrix();
    const T c = T(0.7978845608028654);
    const auto x = y.array();
    const auto x2 = x * x;
    Matrix th = (c * (x + T(0.044715) * x2 * x)).tanh().matrix();
    const auto t = th.array();
    return (T(0.5) * (T(1) + t) + T(0.5) * x * (T(1) - t * t) * c * (T(1) + T(3 * 0.044715) * x2))
        .matrix();
  }

  Matrix run(const Matrix& x, Tape<T>* tape) const {
    if (x.rows() != in_dim())
      throw ShapeError("mlp input has " + std::to_string(x.rows()) + " rows, expected " +
                       std::to_string(in_dim()));
    const int L = num_layers();
    if (tape) {
      tape->inputs.assign(L, Matrix());
      tape->preact.assign(L, Matrix());
      tape->xhat.assign(L, Matrix());
      tape->inv_std.assign(L, Matrix());
    }
    Matrix h = x;
    for (int l = 0; l < L; ++l) {
      Matrix z = weight(l) * h;
      z.colwise() += bias(l);
      if (tape) tape->inputs[l] = std::move(h);
      if (l == L - 1) return z;
      if (spec_.has_ln(l)) {
        const T n = static_cast<T>(z.rows());
        Matrix mu = z.colwise().sum() / n;
        z.array().rowwise() -= mu.array().row(0);
        Matrix var = z.array().square().colwise().sum().matrix() / n;
        Matrix inv = (var.array() + kLnEps).rsqrt().matrix();
        z.array().rowwise() *= inv.array().row(0);
        if (tape) {
          tape->xhat[l] = z;
          tape->inv_std[l] = inv;
        }
        z.array().colwise() *= ln_gain(l).array();
        z.colwise() += ln_bias(l);
      }
      h = activate(z, spec_.activation);
      if (tape) tape->preact[l] = std::move(z);
    }
    return h;
  }

  MlpSpec spec_;
  Vector params_;
  std::vector<Offsets> off_;
};

template <class T>
struct LossAndGrad {
  T loss = T(0);
  VectorX<T> grad;
};

// Reverse-mode gradient of a scalar loss on the network output. `loss_fn`
// maps the output batch to {loss, d loss / d output}.
template <class T, class LossFn>
LossAndGrad<T> value_and_grad(const Mlp<T>& net, const MatrixX<T>& input, LossFn&& loss_fn) {
  Tape<T> tape;
  MatrixX<T> out = net.forward(input, tape);
  auto [loss, d_out] = loss_fn(out);
  if (!std::isfinite(static_cast<double>(loss)))
    throw NumericError("non-finite loss (" + std::to_string(static_cast<double>(loss)) +
                       ") over a batch of " + std::to_string(input.cols()));
  return {static_cast<T>(loss), net.backward(tape, d_out)};
}

// Elementwise target <- (1 - rho) target + rho online.
template <class T>
void polyak_update(VectorX<T>& target, const VectorX<T>& online, double rho) {
  if (!(rho >= 0.0 && rho <= 1.0))
    throw InputDomainError("polyak coefficient must lie in [0, 1], got " + std::to_string(rho));
  if (target.size() != online.size()) throw ShapeError("polyak_update: parameter sizes differ");
  if (rho == 1.0) {
    target = online;
    return;
  }
  if (rho == 0.0) return;
  // Difference form keeps target == online an exact fixed point.
  target += static_cast<T>(rho) * (online - target);
}

template <class T>
void polyak_update(Mlp<T>& target, const Mlp<T>& online, double rho) {
  if (!(target.spec() == online.spec())) throw ShapeError("polyak_update: network specs differ");
  polyak_update(target.params(), online.params(), rho);
}

}  // namespace evor::nn
