#include "xfrac/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "xfrac/errors.hpp"

namespace xfrac {
namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct Entry {
  std::string value;
  int line = 0;
  bool used = false;
};

struct Doc {
  std::map<std::string, Entry> entries;  // "section.key" -> value

  const Entry* find(const std::string& key) const {
    const auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
  }
};

Doc tokenize(const std::string& text) {
  Doc doc;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError("line " + std::to_string(line_no) + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    if (section.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": key outside any [section]");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    const std::string full = section + "." + key;
    if (doc.entries.count(full))
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key " + full);
    doc.entries[full] = {value, line_no, false};
  }
  return doc;
}

class Reader {
 public:
  explicit Reader(Doc& doc) : doc_(doc) {}

  bool has(const std::string& key) { return doc_.entries.count(key) != 0; }

  template <typename F>
  void with(const std::string& key, F&& f) {
    auto it = doc_.entries.find(key);
    if (it == doc_.entries.end()) return;
    it->second.used = true;
    try {
      f(it->second.value);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("line " + std::to_string(it->second.line) + ": invalid value for " +
                        key + " (" + e.what() + ")");
    }
  }

  void get(const std::string& key, double& out) {
    with(key, [&](const std::string& v) {
      std::size_t pos = 0;
      out = std::stod(v, &pos);
      if (pos != v.size()) throw std::runtime_error("not a number");
    });
  }
  void get(const std::string& key, int& out) {
    with(key, [&](const std::string& v) {
      std::size_t pos = 0;
      out = std::stoi(v, &pos);
      if (pos != v.size()) throw std::runtime_error("not an integer");
    });
  }
  void get(const std::string& key, std::uint64_t& out) {
    with(key, [&](const std::string& v) {
      std::size_t pos = 0;
      out = std::stoull(v, &pos);
      if (pos != v.size()) throw std::runtime_error("not an integer");
    });
  }
  void get(const std::string& key, bool& out) {
    with(key, [&](const std::string& v) {
      if (v == "true" || v == "1") out = true;
      else if (v == "false" || v == "0") out = false;
      else throw std::runtime_error("expected true/false");
    });
  }
  void get(const std::string& key, std::string& out) {
    with(key, [&](const std::string& v) { out = v; });
  }
  void get(const std::string& key, std::vector<int>& out) {
    with(key, [&](const std::string& v) {
      std::vector<int> items;
      std::istringstream ss(v);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) throw std::runtime_error("empty list item");
        std::size_t pos = 0;
        items.push_back(std::stoi(tok, &pos));
        if (pos != tok.size()) throw std::runtime_error("not an integer list");
      }
      if (items.empty()) throw std::runtime_error("empty list");
      out = items;
    });
  }

  void check_unknown() const {
    for (const auto& [key, entry] : doc_.entries)
      if (!entry.used)
        throw ConfigError("line " + std::to_string(entry.line) + ": unknown key " + key);
  }

 private:
  Doc& doc_;
};

}  // namespace

RunConfig parse_config(const std::string& text) {
  Doc doc = tokenize(text);
  Reader r(doc);

  std::string preset_name = "bar1d";
  r.get("problem.preset", preset_name);
  int layout = 4;
  r.get("problem.layout", layout);

  RunConfig cfg;
  cfg.spec = make_preset(preset_from_string(preset_name), layout);
  ProblemSpec& s = cfg.spec;

  r.get("problem.order", s.material.order);
  r.get("problem.n_steps", s.n_steps);
  r.get("problem.delta_u", s.delta_u);
  r.get("problem.seed", s.seed);

  r.get("material.lambda", s.material.lambda);
  r.get("material.mu", s.material.mu);
  r.get("material.g_c", s.material.g_c);
  r.get("material.ell_0", s.material.ell_0);
  r.get("material.history_b", s.history_b);
  r.get("material.crack_band", s.crack_band);

  r.get("mesh.elements", s.elements_per_subdomain);
  r.get("mesh.gauss_per_axis", s.gauss_per_axis);
  r.get("mesh.interface_points", s.interface_points);
  if (s.hole) {
    r.get("mesh.hole_x", s.hole->center[0]);
    r.get("mesh.hole_y", s.hole->center[1]);
    r.get("mesh.hole_radius", s.hole->radius);
  }

  r.get("network.layers", s.network_layers);
  std::string act = to_string(s.activation);
  r.get("network.activation", act);
  s.activation = activation_from_string(act);
  r.get("network.scale_c", s.scale_c);
  r.get("network.adaptive_slopes", s.adaptive_slopes);

  r.get("refine.phi_threshold", s.phi_threshold);
  r.get("refine.rho_percent", s.rho_percent);
  r.get("refine.max_level", s.max_level);
  r.get("refine.cycles", s.refine_cycles);

  r.get("penalty.w1", s.w1);
  r.get("penalty.w2", s.w2);
  r.get("penalty.l2_reg", s.l2_reg);

  r.get("optimizer.warmup", s.optimizer.warmup);
  r.get("optimizer.warmup_steps", s.optimizer.warmup_steps);
  r.get("optimizer.warmup_steps_later", s.optimizer.warmup_steps_later);
  r.get("optimizer.warmup_lr", s.optimizer.warmup_lr);
  r.get("optimizer.lbfgs_max_iters", s.optimizer.lbfgs_max_iters);
  r.get("optimizer.lbfgs_memory", s.optimizer.lbfgs_memory);
  r.get("optimizer.grad_tol", s.optimizer.grad_tol);
  r.get("optimizer.loss_tol", s.optimizer.loss_tol);

  r.get("output.dir", cfg.out_dir);
  r.get("output.grid", cfg.grid);
  r.get("output.verbosity", cfg.verbosity);
  r.get("output.threads", cfg.threads);

  r.check_unknown();

  // interface point lists applied to the preset layout must stay aligned
  if (s.interface_points.size() == 1 && s.subdomain_boxes.size() > 1)
    s.interface_points.assign(s.subdomain_boxes.size(), s.interface_points[0]);

  try {
    s.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config validation: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& cfg) {
  const ProblemSpec& s = cfg.spec;
  std::ostringstream out;
  out << "[problem]\n";
  out << "preset = " << to_string(s.preset) << "\n";
  out << "layout = " << s.subdomain_boxes.size() << "\n";
  out << "order = " << s.material.order << "\n";
  out << "n_steps = " << s.n_steps << "\n";
  out << "delta_u = " << fmt17(s.delta_u) << "\n";
  out << "seed = " << s.seed << "\n";
  out << "\n[material]\n";
  out << "lambda = " << fmt17(s.material.lambda) << "\n";
  out << "mu = " << fmt17(s.material.mu) << "\n";
  out << "g_c = " << fmt17(s.material.g_c) << "\n";
  out << "ell_0 = " << fmt17(s.material.ell_0) << "\n";
  out << "history_b = " << fmt17(s.history_b) << "\n";
  out << "crack_band = " << fmt17(s.crack_band) << "\n";
  out << "\n[mesh]\n";
  out << "elements = ";
  for (std::size_t i = 0; i < s.elements_per_subdomain.size(); ++i)
    out << (i ? "," : "") << s.elements_per_subdomain[i];
  out << "\ngauss_per_axis = " << s.gauss_per_axis << "\n";
  out << "interface_points = ";
  for (std::size_t i = 0; i < s.interface_points.size(); ++i)
    out << (i ? "," : "") << s.interface_points[i];
  out << "\n";
  if (s.hole) {
    out << "hole_x = " << fmt17(s.hole->center[0]) << "\n";
    out << "hole_y = " << fmt17(s.hole->center[1]) << "\n";
    out << "hole_radius = " << fmt17(s.hole->radius) << "\n";
  }
  out << "\n[network]\n";
  out << "layers = ";
  for (std::size_t i = 0; i < s.network_layers.size(); ++i)
    out << (i ? "," : "") << s.network_layers[i];
  out << "\nactivation = " << to_string(s.activation) << "\n";
  out << "scale_c = " << fmt17(s.scale_c) << "\n";
  out << "adaptive_slopes = " << (s.adaptive_slopes ? "true" : "false") << "\n";
  out << "\n[refine]\n";
  out << "phi_threshold = " << fmt17(s.phi_threshold) << "\n";
  out << "rho_percent = " << fmt17(s.rho_percent) << "\n";
  out << "max_level = " << s.max_level << "\n";
  out << "cycles = " << s.refine_cycles << "\n";
  out << "\n[penalty]\n";
  out << "w1 = " << fmt17(s.w1) << "\n";
  out << "w2 = " << fmt17(s.w2) << "\n";
  out << "l2_reg = " << fmt17(s.l2_reg) << "\n";
  out << "\n[optimizer]\n";
  out << "warmup = " << s.optimizer.warmup << "\n";
  out << "warmup_steps = " << s.optimizer.warmup_steps << "\n";
  out << "warmup_steps_later = " << s.optimizer.warmup_steps_later << "\n";
  out << "warmup_lr = " << fmt17(s.optimizer.warmup_lr) << "\n";
  out << "lbfgs_max_iters = " << s.optimizer.lbfgs_max_iters << "\n";
  out << "lbfgs_memory = " << s.optimizer.lbfgs_memory << "\n";
  out << "grad_tol = " << fmt17(s.optimizer.grad_tol) << "\n";
  out << "loss_tol = " << fmt17(s.optimizer.loss_tol) << "\n";
  out << "\n[output]\n";
  out << "dir = " << cfg.out_dir << "\n";
  out << "grid = " << cfg.grid << "\n";
  out << "verbosity = " << cfg.verbosity << "\n";
  out << "threads = " << cfg.threads << "\n";
  return out.str();
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  return serialize_config(a) == serialize_config(b);
}

}  // namespace xfrac
