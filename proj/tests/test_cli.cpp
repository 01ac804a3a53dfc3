#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lansing/io.hpp"

namespace fs = std::filesystem;
using lansing::io::json;

namespace {

const fs::path& scratch() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / ("lansing_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

/// Runs the CLI with `args`; stdout goes to `stdout_file` when given.
int cli(const std::string& args, const fs::path& stdout_file = {}) {
  std::string cmd = std::string(LANSING_CLI_PATH) + " " + args;
  cmd += stdout_file.empty() ? " > /dev/null" : " > '" + stdout_file.string() + "'";
  cmd += " 2> /dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

json demog(const std::string& args) {
  const fs::path out = scratch() / "demog.json";
  EXPECT_EQ(cli("demog " + args, out), 0) << args;
  return json::parse(slurp(out));
}

const char* kTssConfig = R"(
seed = 11
[tss]
xb = 2.0
xd = 1.5
epsilon = 0.05
t_end = 3.0
)";

const char* kIbmConfig = R"(
seed = 5
[ibm]
xb = 1.2
xd = 2.5
initial_size = 200
eta = 0.005
p_mut = 0.2
t_end = 20.0
snapshot_dt = 1.0
event_log = true
)";

}  // namespace

TEST(CliDemog, Regions) {
  const json u1 = demog("--xb 1.2 --xd 2.5 --eta 0.0005");
  EXPECT_EQ(u1["region"], "U1");
  EXPECT_TRUE(u1["grad"].is_array());
  const json diag = demog("--xb 2 --xd 2");
  EXPECT_EQ(diag["region"], "Diagonal");
  EXPECT_TRUE(diag["grad"].is_null());
  const json nv = demog("--xb 0.5 --xd 9");
  EXPECT_EQ(nv["region"], "NonViable");
  EXPECT_LT(nv["lambda"].get<double>(), 0.0);
}

TEST(CliExitCodes, InputErrors) {
  EXPECT_EQ(cli("demog --xb -1 --xd 2"), 2);
  EXPECT_EQ(cli("demog --xb abc --xd 2"), 2);
  EXPECT_EQ(cli("demog --xb 2 --xd 3 --eta 0"), 2);
  EXPECT_EQ(cli(""), 2);
  EXPECT_EQ(cli("run ibm"), 2);
  EXPECT_EQ(cli("run nothing --config x.toml"), 2);
  EXPECT_EQ(cli("run tss --config /nonexistent/c.toml"), 2);
  EXPECT_EQ(cli("--help"), 0);
}

TEST(CliExitCodes, CorruptedConfigs) {
  const fs::path broken = write_config("broken.toml", "seed = 1\n[tss\nxb = 2\n");
  const fs::path unknown = write_config("unknown.toml", "[tss]\nxb = 2\nxd = 1.5\nt_end = 1\nepsilonn = 1\n");
  const fs::path invalid = write_config("invalid.toml", "[ibm]\nxb = 2\nxd = 3\nt_end = 1\np_mut = 2\n");
  const fs::path no_section = write_config("nosection.toml", kTssConfig);
  EXPECT_EQ(cli("run tss --config " + broken.string()), 2);
  EXPECT_EQ(cli("run tss --config " + unknown.string()), 2);
  EXPECT_EQ(cli("run ibm --config " + invalid.string()), 2);
  EXPECT_EQ(cli("run ibm --config " + no_section.string()), 2);
  EXPECT_EQ(cli("verify fast --config " + broken.string()), 2);
  EXPECT_EQ(cli("run tss --config " + no_section.string() + " --replicates 0"), 2);
}

TEST(CliRun, IdenticalSeedGivesIdenticalBytes) {
  const fs::path cfg = write_config("tss.toml", kTssConfig);
  const fs::path a = scratch() / "tss_a", b = scratch() / "tss_b", c = scratch() / "tss_c";
  ASSERT_EQ(cli("run tss --config " + cfg.string() + " --out " + a.string() + " --replicates 3"), 0);
  ASSERT_EQ(cli("run tss --config " + cfg.string() + " --out " + b.string() +
                " --replicates 3 --threads 3"),
            0);
  ASSERT_EQ(cli("run tss --config " + cfg.string() + " --out " + c.string() + " --seed 12"), 0);
  for (const char* f : {"tss_path_r000.csv", "tss_path_r002.csv", "tss_summary_r001.json"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  EXPECT_NE(slurp(a / "tss_path_r000.csv"), slurp(c / "tss_path_r000.csv"));
  EXPECT_NE(slurp(a / "tss_path_r000.csv"), slurp(a / "tss_path_r001.csv"));

  std::ifstream is(a / "tss_path_r000.csv");
  const auto path = lansing::io::read_path(is);
  ASSERT_GT(path.traits.size(), 1u);
  EXPECT_EQ(path.traits.front().xb, 2.0);
  EXPECT_EQ(path.traits.front().xd, 1.5);
}

TEST(CliRun, IbmOutputsAreDeterministicAndFollowSchema) {
  const fs::path cfg = write_config("ibm.toml", kIbmConfig);
  const fs::path a = scratch() / "ibm_a", b = scratch() / "ibm_b";
  ASSERT_EQ(cli("run ibm --config " + cfg.string() + " --out " + a.string() + " --replicates 2"), 0);
  ASSERT_EQ(cli("run ibm --config " + cfg.string() + " --out " + b.string() +
                " --replicates 2 --threads 2"),
            0);
  for (const char* f : {"ibm_snapshots_r000.csv", "ibm_events_r001.csv", "ibm_summary_r000.json"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  std::ifstream snaps(a / "ibm_snapshots_r000.csv");
  EXPECT_EQ(lansing::io::read_csv(snaps).header, lansing::io::kSnapshotColumns);
  std::ifstream events(a / "ibm_events_r000.csv");
  const auto ev = lansing::io::read_csv(events);
  EXPECT_EQ(ev.header, lansing::io::kEventColumns);
  EXPECT_FALSE(ev.rows.empty());
}

TEST(CliRun, InclusionHasFiniteHitTime) {
  const fs::path cfg = write_config("inc.toml", "[inclusion]\nxb = 1.2\nxd = 2.5\nt_end = 25\n");
  const fs::path out = scratch() / "inc";
  ASSERT_EQ(cli("run inclusion --config " + cfg.string() + " --out " + out.string()), 0);
  const json s = json::parse(slurp(out / "inclusion_summary.json"));
  ASSERT_TRUE(s["hit_time"].is_number());
  EXPECT_NEAR(s["hit_time"].get<double>(), s["time_of_flight"].get<double>(), 1e-8);
  std::ifstream is(out / "inclusion_solution.csv");
  const auto t = lansing::io::read_csv(is);
  EXPECT_EQ(t.header, lansing::io::kSolutionColumns);
  EXPECT_EQ(t.rows.back()[3], "on_diag");
}

TEST(CliRun, PdeMasses) {
  const fs::path cfg = write_config(
      "pde.toml", "[pde]\nxb = 2\nxd = 3\nda = 0.05\nt_end = 20\noutput_dt = 5\nsnapshot_times = [10]\n");
  const fs::path out = scratch() / "pde";
  ASSERT_EQ(cli("run pde --config " + cfg.string() + " --out " + out.string()), 0);
  std::ifstream is(out / "pde_masses.csv");
  const auto t = lansing::io::read_csv(is);
  EXPECT_EQ(t.header, (std::vector<std::string>{"t", "mass_1", "mass_2"}));
  ASSERT_EQ(t.rows.size(), 5u);
  EXPECT_EQ(lansing::io::parse_number(t.rows.back()[0]), 20.0);
  EXPECT_TRUE(fs::exists(out / "pde_density_t10.csv"));
  EXPECT_TRUE(fs::exists(out / "pde_density_final.csv"));
}

TEST(CliVerify, FastPasses) { EXPECT_EQ(cli("verify fast"), 0); }
