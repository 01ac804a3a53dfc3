#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "lansing/acceptance.hpp"
#include "lansing/config.hpp"
#include "lansing/io.hpp"

namespace fs = std::filesystem;
using namespace lansing;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct RunFlags {
  std::string subsystem;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::size_t replicates = 1;
  std::size_t threads = 1;
};

std::string replicate_name(const std::string& stem, std::size_t i, const std::string& ext) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_r%03zu", i);
  return stem + buf + ext;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open output file " + p.string());
  return os;
}

void write_json(const fs::path& p, const io::json& j) {
  std::ofstream os = open_out(p);
  os << j.dump(2) << '\n';
}

/// Runs body(i) for i in [0, n) on up to `threads` workers; the first
/// exception is rethrown after all workers stop.
template <class F>
void fan_out(std::size_t n, std::size_t threads, F body) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
        return;
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
}

void run_ibm(const config::IbmSection& s, std::uint64_t seed, const fs::path& out, const RunFlags& f) {
  fan_out(f.replicates, f.threads, [&](std::size_t i) {
    ibm::IbmConfig cfg = s.cfg;
    cfg.seed = replicate_seed(seed, i);
    std::optional<std::ofstream> events;
    std::optional<io::EventLogWriter> log;
    if (s.event_log) {
      events.emplace(open_out(out / replicate_name("ibm_events", i, ".csv")));
      log.emplace(*events);
    }
    ibm::EventSink sink;
    if (log) sink = std::ref(*log);
    const ibm::TrajectorySummary r = ibm::run(cfg, sink);
    std::ofstream snaps = open_out(out / replicate_name("ibm_snapshots", i, ".csv"));
    io::write_snapshots(snaps, r.snapshots);
    io::json j;
    j["seed"] = cfg.seed;
    j["extinct"] = r.extinct;
    j["extinction_time"] = std::isfinite(r.extinction_time) ? io::json(r.extinction_time) : io::json(nullptr);
    j["accepted_events"] = r.accepted;
    j["proposals"] = r.proposals;
    j["final_time"] = r.snapshots.back().time;
    j["final_n_alive"] = r.snapshots.back().n_alive;
    write_json(out / replicate_name("ibm_summary", i, ".json"), j);
  });
}

void run_pde(const config::PdeSection& s, const fs::path& out) {
  using namespace pde;
  const bool bi = s.mode == config::PdeMode::Bimorphic;
  std::vector<LifeTrait> traits{s.x};
  if (bi) traits.push_back(s.y);
  const AgeGrid g = grid_for(traits, s.da, s.a_max);
  DensityField init;
  if (bi) {
    init = zero_field(g, traits);
    const DensityField ex = equilibrium_field(s.x, s.eta, g);
    const DensityField ey = equilibrium_field(s.y, s.eta, g);
    init.comps[0] = ex.comps[0];
    init.comps[1] = ex.comps[1];
    for (std::size_t i = 0; i < g.n_cells; ++i) {
      init.comps[2][i] = s.invader_fraction * ey.comps[0][i];
      init.comps[3][i] = s.invader_fraction * ey.comps[1][i];
    }
  } else {
    init = equilibrium_field(s.x, s.eta, g);
    init.scale(s.initial_scale);
  }

  std::vector<double> times;
  std::vector<std::vector<double>> masses;
  const auto record = [&](double t, const DensityField& f) {
    times.push_back(t);
    std::vector<double> m(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) m[k] = f.mass(k);
    masses.push_back(std::move(m));
  };
  record(0.0, init);
  std::vector<double> snaps = s.snapshot_times;
  std::sort(snaps.begin(), snaps.end());
  std::size_t next_snap = 0;
  double next_out = s.output_dt;
  const auto write_snapshot = [&](double t, const DensityField& f) {
    std::ofstream os = open_out(out / ("pde_density_t" + io::format_number(t) + ".csv"));
    io::write_density(os, f);
  };
  while (next_snap < snaps.size() && snaps[next_snap] <= 0.5 * g.da) {
    write_snapshot(0.0, init);
    ++next_snap;
  }
  const FieldObserver obs = [&](double t, const DensityField& f) {
    if (t >= next_out - 0.5 * g.da) {
      record(t, f);
      while (next_out <= t + 0.5 * g.da) next_out += s.output_dt;
    }
    while (next_snap < snaps.size() && snaps[next_snap] <= t + 0.5 * g.da) {
      write_snapshot(t, f);
      ++next_snap;
    }
  };

  io::json j;
  j["mode"] = bi ? "bimorphic" : "monomorphic";
  j["da"] = g.da;
  j["a_max"] = g.a_max();
  DensityField final_field;
  if (bi) {
    const BimorphicResult r = solve_bimorphic(init, s.x, s.y, s.eta, g, s.t_end, obs);
    final_field = r.final_field;
    j["final_masses"] = r.masses;
  } else {
    const MonomorphicResult r = solve_monomorphic(init, s.x, s.eta, g, s.t_end, obs);
    final_field = r.final_field;
    j["residual_to_equilibrium"] = r.residual_to_equilibrium;
    j["equilibrium_mass"] = equilibrium_field(s.x, s.eta, g).total_mass();
    j["final_masses"] = {final_field.mass(0), final_field.mass(1)};
  }
  if (times.back() < s.t_end - 0.5 * g.da) record(s.t_end, final_field);
  std::ofstream ms = open_out(out / "pde_masses.csv");
  io::write_masses(ms, times, masses);
  std::ofstream fin = open_out(out / "pde_density_final.csv");
  io::write_density(fin, final_field);
  write_json(out / "pde_summary.json", j);
}

void run_tss(const config::TssSection& s, std::uint64_t seed, const fs::path& out, const RunFlags& f) {
  fan_out(f.replicates, f.threads, [&](std::size_t i) {
    tss::TssConfig cfg = s.cfg;
    cfg.seed = replicate_seed(seed, i);
    const tss::JumpPath p = s.subordinated ? tss::run_subordinated(s.x0, cfg) : tss::run_tss(s.x0, cfg);
    std::ofstream os = open_out(out / replicate_name("tss_path", i, ".csv"));
    io::write_path(os, p);
    io::json j;
    j["seed"] = cfg.seed;
    j["jumps"] = p.jumps();
    j["proposals"] = p.proposals;
    j["t_final"] = p.t_final;
    j["terminal_reason"] = std::string(tss::to_string(p.reason));
    write_json(out / replicate_name("tss_summary", i, ".json"), j);
  });
}

void run_inclusion(const config::InclusionSection& s, std::uint64_t seed, const fs::path& out,
                   const RunFlags& f) {
  const inclusion::CanonicalDrift d(s.sigma, s.eta);
  const auto sol = inclusion::solve_inclusion(s.x0, s.t_end, inclusion::DiagonalPolicy::constant(s.u), d, s.dt);
  std::ofstream os = open_out(out / "inclusion_solution.csv");
  io::write_solution(os, sol);
  io::json j;
  j["policy"] = sol.policy;
  j["hit_time"] = sol.hit_time ? io::json(*sol.hit_time) : io::json(nullptr);
  j["time_of_flight"] = inclusion::time_of_flight(s.x0, d);
  j["final"] = {sol.points.back().xb, sol.points.back().xd};
  write_json(out / "inclusion_summary.json", j);
  if (!s.tube) return;
  fan_out(f.replicates, f.threads, [&](std::size_t i) {
    tss::TssConfig cfg;
    cfg.sigma = s.sigma;
    cfg.eta = s.eta;
    cfg.epsilon = s.epsilon;
    cfg.t_end = s.t_end;
    cfg.seed = replicate_seed(seed, i);
    const tss::JumpPath p = tss::run_tss(s.x0, cfg);
    std::ofstream ps = open_out(out / replicate_name("tss_path", i, ".csv"));
    io::write_path(ps, p);
    inclusion::TubeOptions opt;
    opt.delta = s.delta;
    opt.epsilon = s.epsilon;
    opt.dt = s.dt;
    write_json(out / replicate_name("tube_report", i, ".json"),
               io::tube_report_json(inclusion::tube_test(p, s.x0, s.t_end, d, opt)));
  });
}

int cmd_run(const RunFlags& f) {
  const config::RunConfig rc = config::load_config(f.config_path);
  if (f.replicates < 1) throw ConfigError("--replicates must be >= 1");
  if (f.threads < 1) throw ConfigError("--threads must be >= 1");
  const std::uint64_t seed = f.seed.value_or(rc.seed);
  const fs::path out = f.out.value_or(rc.output_dir);
  const auto missing = [&] { return ConfigError(f.config_path + ": no [" + f.subsystem + "] section"); };
  if (f.subsystem == "ibm" && !rc.ibm) throw missing();
  if (f.subsystem == "pde" && !rc.pde) throw missing();
  if (f.subsystem == "tss" && !rc.tss) throw missing();
  if (f.subsystem == "inclusion" && !rc.inclusion) throw missing();
  fs::create_directories(out);
  if (f.subsystem == "ibm") run_ibm(*rc.ibm, seed, out, f);
  if (f.subsystem == "pde") run_pde(*rc.pde, out);
  if (f.subsystem == "tss") run_tss(*rc.tss, seed, out, f);
  if (f.subsystem == "inclusion") run_inclusion(*rc.inclusion, seed, out, f);
  std::cerr << "run " << f.subsystem << ": outputs in " << out.string() << '\n';
  return kExitOk;
}

int cmd_verify(const std::string& level, const std::optional<std::string>& config_path,
               std::optional<std::uint64_t> seed) {
  acceptance::Options opt;
  if (config_path) opt.seed = config::load_config(*config_path).seed;
  if (seed) opt.seed = *seed;
  const auto results = acceptance::run(level == "fast" ? acceptance::Level::Fast : acceptance::Level::Full, opt,
                                       [](const acceptance::CriterionResult& r) {
                                         std::cout << acceptance::format_line(r) << std::endl;
                                       });
  int failed = 0;
  for (const auto& r : results) failed += r.pass ? 0 : 1;
  std::cout << "verify " << level << ": " << results.size() - failed << "/" << results.size() << " passed\n";
  return failed == 0 ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ageing evolution under the Lansing effect: demography, simulation and limits"};
  app.require_subcommand(1);

  double xb = 0.0, xd = 0.0, eta = 0.0005;
  auto* demog = app.add_subcommand("demog", "Print the demographic profile of a trait as JSON");
  demog->add_option("--xb", xb, "birth-age threshold x_b")->required();
  demog->add_option("--xd", xd, "death-age threshold x_d")->required();
  demog->add_option("--eta", eta, "competition rate")->capture_default_str();

  RunFlags rf;
  auto* run = app.add_subcommand("run", "Run a simulator from a TOML config");
  run->add_option("subsystem", rf.subsystem, "ibm, pde, tss or inclusion")
      ->required()
      ->check(CLI::IsMember({"ibm", "pde", "tss", "inclusion"}));
  run->add_option("--config", rf.config_path, "TOML config file")->required();
  run->add_option("--seed", rf.seed, "global seed (overrides the config)");
  run->add_option("--out", rf.out, "output directory (overrides the config)");
  run->add_option("--replicates", rf.replicates, "number of replicates")->capture_default_str();
  run->add_option("--threads", rf.threads, "worker threads for replicates")->capture_default_str();

  std::string level;
  std::optional<std::string> verify_config;
  std::optional<std::uint64_t> verify_seed;
  auto* verify = app.add_subcommand("verify", "Run the acceptance suite");
  verify->add_option("level", level, "fast or full")->required()->check(CLI::IsMember({"fast", "full"}));
  verify->add_option("--config", verify_config, "TOML config; validated, its seed seeds the suite");
  verify->add_option("--seed", verify_seed, "suite seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*demog) {
      if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("--eta must be > 0");
      std::cout << io::profile_json({xb, xd}, eta).dump(2) << '\n';
      return kExitOk;
    }
    if (*run) return cmd_run(rf);
    if (*verify) return cmd_verify(level, verify_config, verify_seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    if (*demog) {
      std::cerr << "invalid trait: " << e.what() << '\n';
      return kExitConfig;
    }
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
