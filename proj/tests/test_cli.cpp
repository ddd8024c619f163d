#include <doctest.h>

#include <filesystem>
#include <set>
#include <sstream>

#include "bsdr/io.hpp"
#include "bsdr_cli/cli.hpp"

namespace fs = std::filesystem;
using bsdr::cli::run;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("bsdr_test_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run_args(std::vector<std::string> args, std::string* err_text = nullptr) {
    std::ostringstream err;
    const int code = run(args, err);
    if (err_text) *err_text = err.str();
    return code;
}

fs::path write_config(const fs::path& dir) {
    bsdr::io::write_file(dir / "cfg.yaml", R"(grid:
  width: 4
  height: 4
  start: [0, 3]
  goals: [[3, 0]]
  horizon: 5
params:
  theta_r: [0, -1]
  theta_b:
    a: [1, 1]
    b: [2, 0]
trajectories_per_agent: 6
dataset: data.jsonl
posterior:
  axes:
    - {coordinate: "theta_r[1]", values: [-1, -0.5]}
    - {coordinate: "theta_b[a][1]", values: [0, 1]}
    - {coordinate: "theta_r[0]", values: [0]}
    - {coordinate: "theta_b[a][0]", values: [1]}
    - {coordinate: "theta_b[b][0]", values: [2]}
    - {coordinate: "theta_b[b][1]", values: [0]}
fit:
  max_iterations: 50
goal_inference:
  candidates: [[3, 0], [0, 0]]
)");
    return dir / "cfg.yaml";
}

}  // namespace

TEST_CASE("usage errors exit 2") {
    std::string err;
    CHECK(run_args({}, &err) == bsdr::cli::kExitUsage);
    CHECK(run_args({"frobnicate"}, &err) == bsdr::cli::kExitUsage);
    CHECK(err.find("Usage") != std::string::npos);
    CHECK(run_args({"simulate"}) == bsdr::cli::kExitUsage);
    CHECK(run_args({"experiment", "nope", "--config", "x.yaml"}) == bsdr::cli::kExitUsage);
    CHECK(run_args({"simulate", "--config", "x.yaml", "--threads", "0"}) == bsdr::cli::kExitUsage);
}

TEST_CASE("domain errors exit 1") {
    std::string err;
    CHECK(run_args({"simulate", "--config", "/nonexistent/cfg.yaml", "--out", "/tmp"}, &err) ==
          bsdr::cli::kExitDomain);
    CHECK(err.find("/nonexistent/cfg.yaml") != std::string::npos);
}

TEST_CASE("default oracle check passes") {
    CHECK(run_args({"oracle-check"}) == bsdr::cli::kExitOk);
    const fs::path dir = scratch_dir("oracle");
    CHECK(run_args({"oracle-check", "--out", dir.string()}) == bsdr::cli::kExitOk);
    CHECK(fs::exists(dir / "oracle_check.json"));
}

TEST_CASE("subcommands write only inside the output directory") {
    const fs::path dir = scratch_dir("pipeline");
    const fs::path cfg = write_config(dir);
    const fs::path out1 = dir / "out1";
    const fs::path out2 = dir / "out2";
    REQUIRE(run_args({"simulate", "--config", cfg.string(), "--out", out1.string(), "--seed", "4"}) == 0);
    REQUIRE(run_args({"simulate", "--config", cfg.string(), "--out", out2.string(), "--seed", "4"}) == 0);
    CHECK(bsdr::io::read_file(out1 / "dataset.jsonl") == bsdr::io::read_file(out2 / "dataset.jsonl"));
    CHECK(bsdr::io::read_file(out1 / "simulate.json") == bsdr::io::read_file(out2 / "simulate.json"));

    fs::copy_file(out1 / "dataset.jsonl", dir / "data.jsonl");
    const fs::path out3 = dir / "out3";
    for (const char* sub : {"posterior", "fit", "fit-appendix", "goal-infer"}) {
        std::string err;
        CHECK_MESSAGE(run_args({sub, "--config", cfg.string(), "--out", out3.string()}, &err) == 0, sub, err);
    }
    for (const char* f : {"posterior_marginals.csv", "posterior.json", "fit.json", "fit_appendix.json",
                          "goal_inference.csv", "goal_inference.json"}) {
        CHECK_MESSAGE(fs::exists(out3 / f), f);
    }

    std::set<std::string> top;
    for (const auto& e : fs::directory_iterator(dir)) top.insert(e.path().filename().string());
    CHECK(top == std::set<std::string>{"cfg.yaml", "data.jsonl", "out1", "out2", "out3"});
}
