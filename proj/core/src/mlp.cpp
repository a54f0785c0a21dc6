#include "evor/nn/mlp.hpp"

namespace evor::nn {

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "gelu"; }

Activation activation_from_string(const std::string& s) {
  if (s == "gelu") return Activation::gelu;
  if (s == "relu") return Activation::relu;
  throw ConfigError("unknown activation '" + s + "' (expected gelu or relu)");
}

MlpSpec MlpSpec::make(int in, const std::vector<int>& hidden, int out, Activation act, bool ln) {
  MlpSpec s;
  s.widths.push_back(in);
  s.widths.insert(s.widths.end(), hidden.begin(), hidden.end());
  s.widths.push_back(out);
  s.activation = act;
  s.layer_norm.assign(hidden.size(), ln);
  return s;
}

Eigen::Index MlpSpec::param_count() const {
  Eigen::Index n = 0;
  for (int l = 0; l < num_layers(); ++l) {
    n += static_cast<Eigen::Index>(widths[l + 1]) * widths[l] + widths[l + 1];
    if (has_ln(l)) n += 2 * widths[l + 1];
  }
  return n;
}

void MlpSpec::validate() const {
  if (widths.size() < 2) throw ShapeError("mlp needs at least input and output widths");
  for (int w : widths)
    if (w <= 0) throw ShapeError("mlp widths must be positive");
  if (static_cast<int>(layer_norm.size()) > num_layers() - 1)
    throw ShapeError("layer-norm flags given for more layers than there are hidden layers");
}

template class Mlp<float>;
template class Mlp<double>;

}  // namespace evor::nn
