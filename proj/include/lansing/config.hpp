#ifndef LANSING_CONFIG_HPP
#define LANSING_CONFIG_HPP

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <toml.hpp>

#include "lansing/errors.hpp"
#include "lansing/ibm.hpp"
#include "lansing/tss.hpp"

namespace lansing::config {

struct DemogSection {
  LifeTrait x{2.0, 3.0};
  double eta = 0.0005;
};

struct IbmSection {
  ibm::IbmConfig cfg;
  bool event_log = false;
};

enum class PdeMode { Monomorphic, Bimorphic };

struct PdeSection {
  PdeMode mode = PdeMode::Monomorphic;
  LifeTrait x{2.0, 3.0};
  LifeTrait y{2.0, 3.0};   ///< invader (bimorphic only)
  double eta = 0.0005;
  double da = 0.01;
  double a_max = 0.0;             ///< 0: default extent
  double t_end = 200.0;
  double initial_scale = 0.1;     ///< monomorphic start: initial_scale * equilibrium of x
  double invader_fraction = 0.01; ///< bimorphic start: resident at equilibrium, invader scaled
  double output_dt = 1.0;         ///< spacing of the mass series
  std::vector<double> snapshot_times;  ///< density snapshots besides the final one
};

struct TssSection {
  tss::TssConfig cfg;
  LifeTrait x0{2.0, 1.5};
  bool subordinated = false;
};

struct InclusionSection {
  double sigma = 0.05;
  double eta = 0.0005;
  LifeTrait x0{1.2, 2.5};
  double t_end = 30.0;
  double dt = 1e-3;
  double u = 1.0;        ///< constant selection on the diagonal
  bool tube = false;     ///< also run tube_test on a rescaled TSS path per replicate
  double epsilon = 0.01;
  double delta = 0.05;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  std::optional<DemogSection> demog;
  std::optional<IbmSection> ibm;
  std::optional<PdeSection> pde;
  std::optional<TssSection> tss;
  std::optional<InclusionSection> inclusion;
};

namespace detail {

inline void reject_unknown(const toml::table& t, std::string_view where,
                           std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, node] : t) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key.str() == a;
    if (!ok) {
      throw ConfigError("unknown key '" + std::string(key.str()) + "' in " + std::string(where));
    }
  }
}

inline std::string path_of(std::string_view where, std::string_view key) {
  return std::string(where) + "." + std::string(key);
}

inline void read(const toml::table& t, std::string_view where, std::string_view key, double& out) {
  const toml::node* n = t.get(key);
  if (!n) return;
  if (const auto v = n->value_exact<double>()) {
    out = *v;
  } else if (const auto i = n->value_exact<std::int64_t>()) {
    out = static_cast<double>(*i);
  } else {
    throw ConfigError(path_of(where, key) + " must be a number");
  }
}

inline void read(const toml::table& t, std::string_view where, std::string_view key,
                 std::uint64_t& out) {
  const toml::node* n = t.get(key);
  if (!n) return;
  const auto i = n->value_exact<std::int64_t>();
  if (!i || *i < 0) throw ConfigError(path_of(where, key) + " must be a nonnegative integer");
  out = static_cast<std::uint64_t>(*i);
}

inline void read(const toml::table& t, std::string_view where, std::string_view key, bool& out) {
  const toml::node* n = t.get(key);
  if (!n) return;
  const auto b = n->value_exact<bool>();
  if (!b) throw ConfigError(path_of(where, key) + " must be a boolean");
  out = *b;
}

inline void read(const toml::table& t, std::string_view where, std::string_view key,
                 std::string& out) {
  const toml::node* n = t.get(key);
  if (!n) return;
  const auto s = n->value_exact<std::string>();
  if (!s) throw ConfigError(path_of(where, key) + " must be a string");
  out = *s;
}

inline void read(const toml::table& t, std::string_view where, std::string_view key,
                 std::vector<double>& out) {
  const toml::node* n = t.get(key);
  if (!n) return;
  const toml::array* arr = n->as_array();
  if (!arr) throw ConfigError(path_of(where, key) + " must be an array of numbers");
  out.clear();
  for (const auto& e : *arr) {
    if (const auto v = e.value_exact<double>()) {
      out.push_back(*v);
    } else if (const auto i = e.value_exact<std::int64_t>()) {
      out.push_back(static_cast<double>(*i));
    } else {
      throw ConfigError(path_of(where, key) + " must be an array of numbers");
    }
  }
}

inline void read_trait(const toml::table& t, std::string_view where, std::string_view kb,
                       std::string_view kd, LifeTrait& out) {
  read(t, where, kb, out.xb);
  read(t, where, kd, out.xd);
  if (!std::isfinite(out.xb) || !std::isfinite(out.xd) || out.xb < 0.0 || out.xd < 0.0) {
    throw ConfigError(std::string(where) + ": trait components must be finite and >= 0");
  }
}

inline void require_positive(double v, std::string_view where, std::string_view key) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(path_of(where, key) + " must be > 0");
}

inline void require_viable_trait(const LifeTrait& x, std::string_view where) {
  if (!is_viable(x)) {
    throw ConfigError(std::string(where) + ": trait (" + std::to_string(x.xb) + ", " +
                      std::to_string(x.xd) + ") must be viable (min(xb, xd) > 1)");
  }
}

inline const toml::table* section(const toml::table& root, std::string_view name) {
  const toml::node* n = root.get(name);
  if (!n) return nullptr;
  const toml::table* t = n->as_table();
  if (!t) throw ConfigError("[" + std::string(name) + "] must be a table");
  return t;
}

}  // namespace detail

[[nodiscard]] inline RunConfig parse_config(const toml::table& root) {
  using namespace detail;
  reject_unknown(root, "config", {"seed", "output_dir", "demog", "ibm", "pde", "tss", "inclusion"});
  RunConfig rc;
  read(root, "config", "seed", rc.seed);
  read(root, "config", "output_dir", rc.output_dir);

  if (const auto* t = section(root, "demog")) {
    reject_unknown(*t, "[demog]", {"xb", "xd", "eta"});
    DemogSection s;
    read_trait(*t, "demog", "xb", "xd", s.x);
    read(*t, "demog", "eta", s.eta);
    require_positive(s.eta, "demog", "eta");
    rc.demog = s;
  }

  if (const auto* t = section(root, "ibm")) {
    reject_unknown(*t, "[ibm]",
                   {"eta", "p_mut", "sigma", "xb", "xd", "initial_size", "self_competition",
                    "t_end", "max_jumps", "snapshot_every", "snapshot_dt", "kernel", "event_log"});
    IbmSection s;
    auto& c = s.cfg;
    read(*t, "ibm", "eta", c.eta);
    read(*t, "ibm", "p_mut", c.p_mut);
    read(*t, "ibm", "sigma", c.sigma);
    read_trait(*t, "ibm", "xb", "xd", c.initial_trait);
    std::uint64_t n0 = c.initial_size;
    read(*t, "ibm", "initial_size", n0);
    c.initial_size = static_cast<std::size_t>(n0);
    read(*t, "ibm", "self_competition", c.self_competition);
    read(*t, "ibm", "t_end", c.t_end);
    read(*t, "ibm", "max_jumps", c.max_jumps);
    read(*t, "ibm", "snapshot_every", c.snapshot_every);
    read(*t, "ibm", "snapshot_dt", c.snapshot_dt);
    std::string kernel = "truncated";
    read(*t, "ibm", "kernel", kernel);
    if (kernel == "truncated") {
      c.kernel = ibm::MutationKernel::Truncated;
    } else if (kernel == "script") {
      c.kernel = ibm::MutationKernel::Script;
    } else {
      throw ConfigError("ibm.kernel must be \"truncated\" or \"script\"");
    }
    read(*t, "ibm", "event_log", s.event_log);
    c.validate();
    rc.ibm = s;
  }

  if (const auto* t = section(root, "pde")) {
    reject_unknown(*t, "[pde]",
                   {"mode", "xb", "xd", "yb", "yd", "eta", "da", "a_max", "t_end", "initial_scale",
                    "invader_fraction", "output_dt", "snapshot_times"});
    PdeSection s;
    std::string mode = "monomorphic";
    read(*t, "pde", "mode", mode);
    if (mode == "monomorphic") {
      s.mode = PdeMode::Monomorphic;
    } else if (mode == "bimorphic") {
      s.mode = PdeMode::Bimorphic;
    } else {
      throw ConfigError("pde.mode must be \"monomorphic\" or \"bimorphic\"");
    }
    read_trait(*t, "pde", "xb", "xd", s.x);
    s.y = s.x;
    read_trait(*t, "pde", "yb", "yd", s.y);
    if (s.mode == PdeMode::Bimorphic && (!t->get("yb") || !t->get("yd"))) {
      throw ConfigError("pde: bimorphic mode needs yb and yd");
    }
    read(*t, "pde", "eta", s.eta);
    read(*t, "pde", "da", s.da);
    read(*t, "pde", "a_max", s.a_max);
    read(*t, "pde", "t_end", s.t_end);
    read(*t, "pde", "initial_scale", s.initial_scale);
    read(*t, "pde", "invader_fraction", s.invader_fraction);
    read(*t, "pde", "output_dt", s.output_dt);
    read(*t, "pde", "snapshot_times", s.snapshot_times);
    require_positive(s.eta, "pde", "eta");
    require_positive(s.da, "pde", "da");
    require_positive(s.t_end, "pde", "t_end");
    require_positive(s.initial_scale, "pde", "initial_scale");
    require_positive(s.invader_fraction, "pde", "invader_fraction");
    require_positive(s.output_dt, "pde", "output_dt");
    if (!(s.a_max >= 0.0)) throw ConfigError("pde.a_max must be >= 0");
    require_viable_trait(s.x, "pde");
    for (double ts : s.snapshot_times) {
      if (!(ts >= 0.0 && ts <= s.t_end)) throw ConfigError("pde.snapshot_times must lie in [0, t_end]");
    }
    rc.pde = s;
  }

  if (const auto* t = section(root, "tss")) {
    reject_unknown(*t, "[tss]",
                   {"sigma", "eta", "epsilon", "xb", "xd", "t_end", "max_jumps", "subordinated",
                    "absorb_rejections", "tau_bound"});
    TssSection s;
    auto& c = s.cfg;
    read(*t, "tss", "sigma", c.sigma);
    read(*t, "tss", "eta", c.eta);
    read(*t, "tss", "epsilon", c.epsilon);
    read_trait(*t, "tss", "xb", "xd", s.x0);
    read(*t, "tss", "t_end", c.t_end);
    read(*t, "tss", "max_jumps", c.max_jumps);
    read(*t, "tss", "subordinated", s.subordinated);
    read(*t, "tss", "absorb_rejections", c.absorb_rejections);
    read(*t, "tss", "tau_bound", c.tau_bound);
    c.validate();
    require_viable_trait(s.x0, "tss");
    if (s.subordinated && !std::isfinite(c.t_end)) {
      throw ConfigError("tss: subordinated runs need a finite t_end");
    }
    rc.tss = s;
  }

  if (const auto* t = section(root, "inclusion")) {
    reject_unknown(*t, "[inclusion]",
                   {"sigma", "eta", "xb", "xd", "t_end", "dt", "u", "tube", "epsilon", "delta"});
    InclusionSection s;
    read(*t, "inclusion", "sigma", s.sigma);
    read(*t, "inclusion", "eta", s.eta);
    read_trait(*t, "inclusion", "xb", "xd", s.x0);
    read(*t, "inclusion", "t_end", s.t_end);
    read(*t, "inclusion", "dt", s.dt);
    read(*t, "inclusion", "u", s.u);
    read(*t, "inclusion", "tube", s.tube);
    read(*t, "inclusion", "epsilon", s.epsilon);
    read(*t, "inclusion", "delta", s.delta);
    require_positive(s.sigma, "inclusion", "sigma");
    require_positive(s.eta, "inclusion", "eta");
    require_positive(s.t_end, "inclusion", "t_end");
    require_positive(s.dt, "inclusion", "dt");
    require_positive(s.epsilon, "inclusion", "epsilon");
    require_positive(s.delta, "inclusion", "delta");
    if (!(s.u >= 0.0 && s.u <= 1.0)) throw ConfigError("inclusion.u must lie in [0, 1]");
    require_viable_trait(s.x0, "inclusion");
    rc.inclusion = s;
  }
  return rc;
}

[[nodiscard]] inline RunConfig parse_config_string(std::string_view text,
                                                   std::string_view source = "config") {
  try {
    return parse_config(toml::parse(text, source));
  } catch (const toml::parse_error& e) {
    std::string msg = std::string(source) + ": " + std::string(e.description());
    const auto& where = e.source().begin;
    msg += " (line " + std::to_string(where.line) + ", column " + std::to_string(where.column) + ")";
    throw ConfigError(msg);
  }
}

[[nodiscard]] inline RunConfig load_config(const std::string& path) {
  try {
    return parse_config(toml::parse_file(path));
  } catch (const toml::parse_error& e) {
    std::string msg = path + ": " + std::string(e.description());
    const auto& where = e.source().begin;
    msg += " (line " + std::to_string(where.line) + ", column " + std::to_string(where.column) + ")";
    throw ConfigError(msg);
  }
}

}  // namespace lansing::config

#endif  // LANSING_CONFIG_HPP
