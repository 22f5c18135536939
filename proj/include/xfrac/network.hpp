#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "xfrac/jet.hpp"

namespace xfrac {

// Dense feed-forward network with per-hidden-layer trainable activation
// slopes. All trainable values live in one flat vector with a frozen
// layer-major order:
//
//   W1 (row-major), b1, alpha1, W2, b2, alpha2, ..., WL, bL
//
// The final layer is affine (no activation, no slope). Checkpoints and
// optimizer state use this flattening; do not reorder.
struct NetworkParams {
  std::vector<int> layer_sizes;  // [n_in, h1, ..., n_out]
  Activation kind = Activation::kTanh;
  double scale = 10.0;  // fixed scaling factor c of the adaptive activation
  std::uint64_t seed = 0;
  std::vector<double> values;

  int num_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  int max_width() const;

  std::size_t weight_offset(int layer) const;
  std::size_t bias_offset(int layer) const;
  std::size_t alpha_offset(int layer) const;  // hidden layers only

  const double* weights(int layer) const { return values.data() + weight_offset(layer); }
  const double* biases(int layer) const { return values.data() + bias_offset(layer); }
  double alpha(int layer) const { return values[alpha_offset(layer)]; }

  static std::size_t parameter_count(const std::vector<int>& layer_sizes);
};

// Gaussian Xavier initialization: Var(W) = 2/(fan_in+fan_out), zero biases,
// and every slope alpha set to 1/scale so that scale*alpha starts at 1.
// Throws ConfigError for fewer than 3 layer-size entries.
NetworkParams init_xavier(const std::vector<int>& layer_sizes, Activation kind,
                          double scale, std::uint64_t seed);

// Text checkpoint with a small header followed by the flat values.
void save_checkpoint(const NetworkParams& params, const std::string& path);
NetworkParams load_checkpoint(const std::string& path);

// Hard Dirichlet ansatz applied to the network's displacement outputs.
// The transformed displacement satisfies the preset's boundary values for
// any raw output; the phase field passes through untouched.
enum class AnsatzKind { kNone, kBar1d, kSenTension, kEccentricHole };

struct BcAnsatz {
  AnsatzKind kind = AnsatzKind::kNone;
  double applied_displacement = 0.0;  // current total prescribed value (mm)
};

// Multiplier/shift jets of output component `out` at x; the constrained
// output is multiplier*raw + shift.
template <int D>
void ansatz_transform(const BcAnsatz& ansatz, const std::array<double, D>& x,
                      int out, Jet<D>& multiplier, Jet<D>& shift);

AnsatzKind ansatz_kind_from_string(const std::string& s);
std::string to_string(AnsatzKind kind);
Activation activation_from_string(const std::string& s);
std::string to_string(Activation kind);

}  // namespace xfrac
