#include "xfrac/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "xfrac/errors.hpp"

namespace xfrac {

int NetworkParams::max_width() const {
  return *std::max_element(layer_sizes.begin(), layer_sizes.end());
}

std::size_t NetworkParams::weight_offset(int layer) const {
  std::size_t off = 0;
  for (int l = 0; l < layer; ++l) {
    off += static_cast<std::size_t>(layer_sizes[l]) * layer_sizes[l + 1]  // W
           + layer_sizes[l + 1];                                          // b
    if (l < num_layers() - 1) off += 1;                                   // alpha
  }
  return off;
}

std::size_t NetworkParams::bias_offset(int layer) const {
  return weight_offset(layer) +
         static_cast<std::size_t>(layer_sizes[layer]) * layer_sizes[layer + 1];
}

std::size_t NetworkParams::alpha_offset(int layer) const {
  return bias_offset(layer) + layer_sizes[layer + 1];
}

std::size_t NetworkParams::parameter_count(const std::vector<int>& layer_sizes) {
  std::size_t n = 0;
  const int layers = static_cast<int>(layer_sizes.size()) - 1;
  for (int l = 0; l < layers; ++l) {
    n += static_cast<std::size_t>(layer_sizes[l]) * layer_sizes[l + 1] + layer_sizes[l + 1];
    if (l < layers - 1) n += 1;
  }
  return n;
}

NetworkParams init_xavier(const std::vector<int>& layer_sizes, Activation kind,
                          double scale, std::uint64_t seed) {
  if (layer_sizes.size() < 3)
    throw ConfigError("network needs at least 3 layer sizes (input, hidden, output)");
  for (int n : layer_sizes)
    if (n <= 0) throw ConfigError("layer sizes must be positive");
  if (scale < 1.0)
    throw ConfigError("activation scaling factor must be >= 1");

  NetworkParams p;
  p.layer_sizes = layer_sizes;
  p.kind = kind;
  p.scale = scale;
  p.seed = seed;
  p.values.assign(NetworkParams::parameter_count(layer_sizes), 0.0);

  std::mt19937_64 rng(seed);
  for (int l = 0; l < p.num_layers(); ++l) {
    const int fan_in = layer_sizes[l];
    const int fan_out = layer_sizes[l + 1];
    std::normal_distribution<double> gauss(0.0, std::sqrt(2.0 / (fan_in + fan_out)));
    double* w = p.values.data() + p.weight_offset(l);
    for (int i = 0; i < fan_in * fan_out; ++i) w[i] = gauss(rng);
    // biases stay zero
    if (l < p.num_layers() - 1) p.values[p.alpha_offset(l)] = 1.0 / scale;
  }
  return p;
}

void save_checkpoint(const NetworkParams& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out << "xfrac-net 1\n";
  out << "layers";
  for (int n : p.layer_sizes) out << ' ' << n;
  out << "\nactivation " << to_string(p.kind) << "\n";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", p.scale);
  out << "scale " << buf << "\n";
  out << "seed " << p.seed << "\n";
  out << "count " << p.values.size() << "\n";
  for (double v : p.values) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf << '\n';
  }
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

NetworkParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "xfrac-net" || version != 1)
    throw IoError("unrecognized checkpoint header in " + path);

  NetworkParams p;
  std::string key;
  in >> key;  // "layers"
  std::string line;
  std::getline(in, line);
  std::istringstream ls(line);
  int n;
  while (ls >> n) p.layer_sizes.push_back(n);
  if (p.layer_sizes.size() < 2) throw IoError("checkpoint has no layer sizes: " + path);

  std::string act;
  in >> key >> act;
  p.kind = activation_from_string(act);
  in >> key >> p.scale;
  in >> key >> p.seed;
  std::size_t count = 0;
  in >> key >> count;
  if (count != NetworkParams::parameter_count(p.layer_sizes))
    throw IoError("checkpoint value count does not match layer sizes: " + path);
  p.values.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    if (!(in >> p.values[i])) throw IoError("truncated checkpoint: " + path);
  return p;
}

template <int D>
void ansatz_transform(const BcAnsatz& ansatz, const std::array<double, D>& x,
                      int out, Jet<D>& multiplier, Jet<D>& shift) {
  multiplier = Jet<D>::constant(1.0);
  shift = Jet<D>{};
  switch (ansatz.kind) {
    case AnsatzKind::kNone:
      return;
    case AnsatzKind::kBar1d:
      if constexpr (D == 1) {
        if (out == 0) {
          // u = (x+1)(x-1) u_theta
          multiplier.value = x[0] * x[0] - 1.0;
          multiplier.grad[0] = 2.0 * x[0];
          multiplier.hess[0] = 2.0;
        }
      }
      return;
    case AnsatzKind::kSenTension:
      if constexpr (D == 2) {
        if (out == 0) {
          // u = x(1-x) u_theta
          multiplier.value = x[0] * (1.0 - x[0]);
          multiplier.grad[0] = 1.0 - 2.0 * x[0];
          multiplier.hess[0] = -2.0;
        } else if (out == 1) {
          // v = y(y-1) v_theta + y*ubar
          multiplier.value = x[1] * (x[1] - 1.0);
          multiplier.grad[1] = 2.0 * x[1] - 1.0;
          multiplier.hess[2] = 2.0;
          shift.value = x[1] * ansatz.applied_displacement;
          shift.grad[1] = ansatz.applied_displacement;
        }
      }
      return;
    case AnsatzKind::kEccentricHole:
      if constexpr (D == 2) {
        if (out == 0) {
          // u = x u_theta
          multiplier.value = x[0];
          multiplier.grad[0] = 1.0;
        } else if (out == 1) {
          multiplier.value = x[1] * (x[1] - 1.0);
          multiplier.grad[1] = 2.0 * x[1] - 1.0;
          multiplier.hess[2] = 2.0;
          shift.value = x[1] * ansatz.applied_displacement;
          shift.grad[1] = ansatz.applied_displacement;
        }
      }
      return;
  }
}

template void ansatz_transform<1>(const BcAnsatz&, const std::array<double, 1>&, int, Jet<1>&, Jet<1>&);
template void ansatz_transform<2>(const BcAnsatz&, const std::array<double, 2>&, int, Jet<2>&, Jet<2>&);

AnsatzKind ansatz_kind_from_string(const std::string& s) {
  if (s == "none") return AnsatzKind::kNone;
  if (s == "bar1d") return AnsatzKind::kBar1d;
  if (s == "sen_tension") return AnsatzKind::kSenTension;
  if (s == "eccentric_hole") return AnsatzKind::kEccentricHole;
  throw ConfigError("unknown ansatz kind: " + s);
}

std::string to_string(AnsatzKind kind) {
  switch (kind) {
    case AnsatzKind::kNone: return "none";
    case AnsatzKind::kBar1d: return "bar1d";
    case AnsatzKind::kSenTension: return "sen_tension";
    case AnsatzKind::kEccentricHole: return "eccentric_hole";
  }
  return "none";
}

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "swish") return Activation::kSwish;
  throw ConfigError("unknown activation: " + s);
}

std::string to_string(Activation kind) {
  return kind == Activation::kTanh ? "tanh" : "swish";
}

}  // namespace xfrac
