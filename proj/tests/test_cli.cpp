// Process-level checks of the command line tool: exit codes, strict config
// handling, reproducible outputs, and the bundled presets.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace {

namespace fs = std::filesystem;

int run_cli(const std::string& args) {
  const std::string cmd = std::string(AGNES_LAB_BINARY) + " " + args +
                          " > /dev/null 2> /dev/null";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("agneslab_cli_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& body) {
  const fs::path p = dir / "config.json";
  std::ofstream out(p);
  out << body;
  return p;
}

const char* kTinyConfig = R"({
  "name": "tiny",
  "objective": {"kind": "power_hinge", "d": 4},
  "noise": {"kind": "collinear", "sigma": 1.0},
  "optimizer": {"derive": "agnes_convex"},
  "x0": [1.0],
  "iters": 40,
  "runs": 8,
  "master_seed": 7
})";

std::size_t count_files(const fs::path& dir) {
  std::size_t n = 0;
  for (auto it = fs::directory_iterator(dir); it != fs::directory_iterator(); ++it) ++n;
  return n;
}

}  // namespace

TEST_CASE("missing arguments and unknown presets exit with code 1") {
  CHECK(run_cli("") == 1);
  CHECK(run_cli("--preset no_such_preset --out-dir /tmp") == 1);
  CHECK(run_cli("--config /no/such/file.json") == 1);
}

TEST_CASE("malformed configs exit with code 1 and write nothing") {
  const fs::path dir = fresh_dir("bad");
  const fs::path out = dir / "out";
  fs::create_directories(out);
  const fs::path cfg = write_config(dir, R"({"objective": {"kind": "power_hinge",
    "d": 4}, "unknown_key": 1})");
  CHECK(run_cli("--config " + cfg.string() + " --out-dir " + out.string()) == 1);
  CHECK(count_files(out) == 0);
}

TEST_CASE("a valid config runs, writes csv, and reproduces bytes") {
  const fs::path dir = fresh_dir("ok");
  const fs::path cfg = write_config(dir, kTinyConfig);
  const fs::path out_a = dir / "a";
  const fs::path out_b = dir / "b";
  CHECK(run_cli("--config " + cfg.string() + " --out-dir " + out_a.string() +
                " --threads 1") == 0);
  CHECK(run_cli("--config " + cfg.string() + " --out-dir " + out_b.string() +
                " --threads 3") == 0);
  const std::string a = slurp(out_a / "tiny.csv");
  CHECK(a.rfind("n,mean_f,sem_f,mean_grad_sq,diverged_fraction,bound\n", 0) == 0);
  CHECK(a == slurp(out_b / "tiny.csv"));

  // Seed override changes the data.
  const fs::path out_c = dir / "c";
  CHECK(run_cli("--config " + cfg.string() + " --out-dir " + out_c.string() +
                " --seed 99") == 0);
  CHECK(slurp(out_c / "tiny.csv") != a);
}

TEST_CASE("config and preset are mutually exclusive") {
  const fs::path dir = fresh_dir("both");
  const fs::path cfg = write_config(dir, kTinyConfig);
  CHECK(run_cli("--config " + cfg.string() + " --preset figure3") != 0);
}

TEST_CASE("presets run end to end") {
  const fs::path dir = fresh_dir("presets");

  SUBCASE("figure3") {
    const fs::path out = dir / "figure3";
    REQUIRE(run_cli("--preset figure3 --out-dir " + out.string()) == 0);
    std::size_t csvs = 0;
    for (const auto& entry : fs::directory_iterator(out)) {
      if (entry.path().extension() == ".csv") ++csvs;
    }
    CHECK(csvs == 18);
  }
  SUBCASE("figure4") {
    const fs::path out = dir / "figure4";
    REQUIRE(run_cli("--preset figure4 --out-dir " + out.string()) == 0);
    std::size_t csvs = 0;
    for (const auto& entry : fs::directory_iterator(out)) {
      if (entry.path().extension() == ".csv") ++csvs;
    }
    CHECK(csvs == 12);
  }
  SUBCASE("figure1") {
    const fs::path out = dir / "figure1";
    REQUIRE(run_cli("--preset figure1 --out-dir " + out.string()) == 0);
    CHECK(fs::exists(out / "figure1_crossings.csv"));
    const std::string report = slurp(out / "figure1_report.txt");
    CHECK(report.find("ordering from bounds (agnes < sgd): PASS") != std::string::npos);
    CHECK(report.find("ordering from ensembles (agnes < sgd): PASS") != std::string::npos);
  }
  SUBCASE("lemma1") {
    const fs::path out = dir / "lemma1";
    REQUIRE(run_cli("--preset lemma1 --out-dir " + out.string()) == 0);
    CHECK(fs::exists(out / "lemma1.csv"));
    const std::string report = slurp(out / "lemma1_report.txt");
    CHECK(report.find("FAIL") == std::string::npos);
  }
  SUBCASE("nonconvex") {
    const fs::path out = dir / "nonconvex";
    REQUIRE(run_cli("--preset nonconvex --out-dir " + out.string()) == 0);
    CHECK(fs::exists(out / "nonconvex_sigma0.csv"));
    CHECK(fs::exists(out / "nonconvex_sigma1.csv"));
    CHECK(fs::exists(out / "nonconvex_sigma0_lyapunov.csv"));
    const std::string report = slurp(out / "nonconvex_sigma1_report.txt");
    CHECK(report.find("FAIL") == std::string::npos);
  }
}
