#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "qspr/assay.hpp"
#include "qspr/data/csv.hpp"
#include "qspr/error.hpp"
#include "qspr/workflow.hpp"

using namespace qspr;
using namespace qspr::workflow;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("qspr_workflow_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string read(const fs::path& p) { return data::read_text(p); }

const char* kSmallSynth = R"(seed = 11
out = "out"

[synth]
n = 50
features = 6
noise = 0.2

[sweep]
classes = ["EN", "MTEN", "DTR"]

[sweep.grids.EN]
alpha = [0.01, 0.1]
l1_ratio = [0.5, 1.0]

[sweep.grids.MTEN]
alpha = [0.01, 0.1]
l1_ratio = [0.5]

[sweep.grids.DTR]
max_depth = [2, 4]
)";

RunConfig config_in(const fs::path& dir, const std::string& text, const std::string& out) {
  write(dir / "run.toml", text);
  return load_run_config(dir / "run.toml", dir / out);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(QSPR_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("sha256 matches the standard test vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("output directory precedence: flag, then environment, then config") {
  const auto dir = scratch("precedence");
  write(dir / "run.toml", "out = \"from_config\"\n");
  ::unsetenv(kOutDirEnv);
  CHECK(load_run_config(dir / "run.toml").out_dir == dir / "from_config");
  ::setenv(kOutDirEnv, "from_env", 1);
  CHECK(load_run_config(dir / "run.toml").out_dir == fs::path("from_env"));
  CHECK(load_run_config(dir / "run.toml", fs::path("from_flag")).out_dir == fs::path("from_flag"));
  ::unsetenv(kOutDirEnv);
}

TEST_CASE("validation rejects bad configs before compute") {
  const auto dir = scratch("validate");
  auto kind = [&](const std::string& text) {
    try {
      validate(config_in(dir, text, "out"));
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::InvalidArgument;
  };
  CHECK(kind("[sweep]\nclasses = [\"EN\", \"Forest\"]\n") == ErrorKind::ConfigError);
  CHECK(kind("[sweep]\nmodes = [\"both\"]\n") == ErrorKind::ConfigError);
  CHECK(kind("[data]\nmeasurements = \"absent.csv\"\n") == ErrorKind::ConfigError);
  CHECK(kind("[data.representations]\nfoo = \"x.csv\"\n") == ErrorKind::ConfigError);
  CHECK(kind("[assay]\nfilter_area = -1.0\n") == ErrorKind::ConfigError);
  CHECK(kind("[select]\nthreshold = \"high\"\n") == ErrorKind::ConfigError);
  CHECK(kind("[sweep.grids.EN]\nalpha = []\n") == ErrorKind::ConfigError);
  CHECK(kind("seed = -4\n") == ErrorKind::ConfigError);
  CHECK(kind(kSmallSynth) == ErrorKind::InvalidArgument);  // valid: nothing thrown
}

TEST_CASE("assay command converts raw concentrations and averages repeats") {
  const auto dir = scratch("assay");
  write(dir / "raw.csv",
        "compound_id,plate_number,BBB_CD0,BBB_CDt,BBB_CAt\n"
        "c1,1,1e-7,5e-8,1e-8\n"
        "c1,2,1e-7,4e-8,1.2e-8\n"
        "c2,1,1e-7,6e-8,5e-9\n");
  auto cfg = config_in(dir, "[data]\nraw = \"raw.csv\"\n", "out");
  cmd_assay(cfg);
  const auto per = data::parse_csv(read(cfg.out_dir / "measurements.csv"));
  const auto mean = data::parse_csv(read(cfg.out_dir / "measurements_mean.csv"));
  REQUIRE(per.rows.size() == 3);
  REQUIRE(mean.rows.size() == 2);
  const assay::AssayGeometry g;
  const auto a = assay::evaluate_well({1e-7, 5e-8, 1e-8}, g);
  const auto b = assay::evaluate_well({1e-7, 4e-8, 1.2e-8}, g);
  const auto col = *per.column("BBB_LogPe");
  CHECK(std::stod(per.rows[0][col]) == *a.log_pe);
  CHECK(std::stod(mean.rows[0][col]) == doctest::Approx((*a.log_pe + *b.log_pe) / 2).epsilon(1e-14));
  CHECK(mean.rows[0][*per.column("L_LogPe")].empty());
}

TEST_CASE("empty assay input gives empty tables") {
  const auto dir = scratch("assay_empty");
  write(dir / "raw.csv", "");
  auto cfg = config_in(dir, "[data]\nraw = \"raw.csv\"\n", "out");
  cmd_assay(cfg);
  const auto per = data::parse_csv(read(cfg.out_dir / "measurements.csv"));
  CHECK(per.header.size() == 20);
  CHECK(per.rows.empty());
}

TEST_CASE("non-penetrant or malformed wells name the row") {
  const auto dir = scratch("assay_bad");
  write(dir / "raw.csv", "compound_id,plate_number,BBB_CD0,BBB_CDt,BBB_CAt\nc1,1,1e-7,5e-8,1e-8\nc2,1,1e-7,x,1e-8\n");
  auto cfg = config_in(dir, "[data]\nraw = \"raw.csv\"\n", "out");
  try {
    cmd_assay(cfg);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
}

TEST_CASE("synthetic pipeline writes every artifact and a consistent manifest") {
  const auto dir = scratch("pipeline");
  auto cfg = config_in(dir, kSmallSynth, "out");
  validate(cfg);
  auto report = cmd_pipeline(cfg);
  write_manifest(cfg, "pipeline", report);
  CHECK(report.failures.empty());
  for (const char* f : {"pca_scores.csv", "pca_loadings.csv", "pca_ratios.csv", "pca_model.json", "trials.csv",
                        "runs.csv", "trials.json", "comparison.csv", "selection.csv", "selection.json", "best.csv",
                        "test.csv", "importance.csv", "importance.svg", "profiles.csv", "profile_sets.csv",
                        "profile_overlaps.csv", "profiles.svg", "manifest.json"})
    CHECK_MESSAGE(fs::exists(cfg.out_dir / f), f);

  const auto manifest = nlohmann::json::parse(read(cfg.out_dir / "manifest.json"));
  CHECK(manifest["seed"] == 11);
  CHECK(manifest["files"].size() == report.files.size());
  for (const auto& f : manifest["files"]) {
    const auto text = read(cfg.out_dir / f["path"].get<std::string>());
    CHECK(f["sha256"] == sha256_hex(text));
    CHECK(f["bytes"] == text.size());
  }

  // One row per trial and target: single-task EN (4 points) and DTR (2 points) over
  // 9 targets, MTEN (2 points) over the 6 membranes.
  const auto trials = data::parse_csv(read(cfg.out_dir / "trials.csv"));
  CHECK(trials.rows.size() == 4 * 9 + 2 * 9 + 2 * 6);
  const auto sel = data::parse_csv(read(cfg.out_dir / "best.csv"));
  CHECK(sel.rows.size() == 9);
}

TEST_CASE("pipeline outputs do not depend on the worker count") {
  const auto dir = scratch("workers");
  auto one = config_in(dir, kSmallSynth, "w1");
  auto four = config_in(dir, kSmallSynth, "w4");
  one.workers = 1;
  four.workers = 4;
  auto r1 = cmd_pipeline(one);
  auto r4 = cmd_pipeline(four);
  write_manifest(one, "pipeline", r1);
  write_manifest(four, "pipeline", r4);
  for (const char* f : {"trials.csv", "runs.csv", "selection.csv", "test.csv", "importance.csv", "manifest.json"})
    CHECK_MESSAGE(read(one.out_dir / f) == read(four.out_dir / f), f);
}

TEST_CASE("a fold file overrides the seeded split") {
  const auto dir = scratch("folds");
  auto sweep_with = [&](int shift, const std::string& out) {
    std::string folds = "compound_id,fold\n";
    for (int i = 0; i < 50; ++i) {
      char id[16];
      std::snprintf(id, sizeof id, "C%04d", i + 1);
      folds += std::string(id) + "," + std::to_string((i + shift) % 5) + "\n";
    }
    write(dir / (out + ".csv"), folds);
    auto cfg = config_in(dir, std::string(kSmallSynth) + "\n[data]\nfolds = \"" + out + ".csv\"\n", out);
    cmd_sweep(cfg);
    return read(cfg.out_dir / "trials.csv");
  };
  const auto a = sweep_with(0, "a");
  const auto a_again = sweep_with(0, "a2");
  const auto b = sweep_with(1, "b");
  auto seeded = config_in(dir, kSmallSynth, "seeded");
  cmd_sweep(seeded);
  CHECK(a == a_again);
  CHECK(a != b);
  CHECK(a != read(seeded.out_dir / "trials.csv"));

  write(dir / "short.csv", "compound_id,fold\nC0001,0\n");
  auto cfg = config_in(dir, std::string(kSmallSynth) + "\n[data]\nfolds = \"short.csv\"\n", "short");
  CHECK_THROWS_AS(cmd_sweep(cfg), Error);
}

TEST_CASE("select and test read the previous stage from disk") {
  const auto dir = scratch("chain");
  auto cfg = config_in(dir, kSmallSynth, "out");
  cmd_sweep(cfg);
  cmd_select(cfg);
  cmd_test(cfg);
  const auto test = data::parse_csv(read(cfg.out_dir / "test.csv"));
  for (const auto& row : test.rows) CHECK_FALSE(row[*test.column("r2_test")].empty());

  auto pipe = config_in(dir, kSmallSynth, "pipe");
  cmd_pipeline(pipe);
  CHECK(read(cfg.out_dir / "selection.csv") == read(pipe.out_dir / "selection.csv"));
  CHECK(read(cfg.out_dir / "test.csv") == read(pipe.out_dir / "test.csv"));
}

TEST_CASE("select without a sweep is a config error") {
  const auto dir = scratch("nosweep");
  auto cfg = config_in(dir, kSmallSynth, "out");
  try {
    cmd_select(cfg);
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigError);
  }
}

TEST_CASE("cli exit codes") {
  const auto dir = scratch("cli");
  write(dir / "run.toml", kSmallSynth);
  write(dir / "bad.toml", std::string(kSmallSynth) + "\n[select]\ntest = \"all\"\n");
  write(dir / "unknown.toml", "[sweep]\nclasses = [\"EN\", \"Quantum\"]\n");
  write(dir / "empty.csv", "");
  write(dir / "malformed.csv", "compound_id,plate_number,BBB_CD0,BBB_CDt,BBB_CAt\nc1,1,1e-7,5e-8\n");
  write(dir / "ok.csv", "compound_id,plate_number,BBB_CD0,BBB_CDt,BBB_CAt\nc1,1,1e-7,5e-8,1e-8\n");
  write(dir / "pool.csv", "compound_id,a,b\nx,1,0\ny,0,1\nz,1,1\n");
  const std::string out = "--out " + (dir / "out").string();
  CHECK(run_cli(out + " assay --input " + (dir / "empty.csv").string()) == 0);
  CHECK(run_cli(out + " assay --input " + (dir / "ok.csv").string()) == 0);
  CHECK(run_cli(out + " assay --input " + (dir / "malformed.csv").string()) == 2);
  CHECK(run_cli(out + " assay --input " + (dir / "missing.csv").string()) == 2);
  CHECK(run_cli(out + " --config " + (dir / "unknown.toml").string() + " pipeline") == 2);
  CHECK_FALSE(fs::exists(dir / "out" / "trials.csv"));
  CHECK(run_cli(out + " --config " + (dir / "bad.toml").string() + " pipeline") == 2);
  CHECK(run_cli(out + " frobnicate") == 2);
  CHECK(run_cli(out + " design --pool " + (dir / "pool.csv").string() + " --k 4") == 1);
  CHECK(run_cli(out + " design --pool " + (dir / "pool.csv").string() + " --k 2") == 0);
  CHECK(run_cli("--help") == 0);
}
