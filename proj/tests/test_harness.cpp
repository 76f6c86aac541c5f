#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "hlf/experiment.hpp"
#include "test_support.hpp"

using namespace hlf;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

nlohmann::json synth_config_json() {
  return nlohmann::json::parse(R"({
    "schema_version": 1,
    "synth": {"length": 900, "channels": 2,
              "trend": {"kind": "linear", "slope": 0.01},
              "seasonal": [{"amplitude": 1.0, "period": 12.0, "phase": 0.0}],
              "noise_std": 0.1, "seed": 5},
    "split_mode": "ratio",
    "input_length": 24,
    "kernel": 5,
    "horizons": [12, 24],
    "learning_rate": 0.01,
    "batch_size": 32,
    "max_epochs": 2,
    "seed": 1
  })");
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("hlf_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, const fs::path& out, const fs::path& err) {
  const std::string cmd = std::string("\"") + HLF_CLI_PATH + "\" " + args + " > \"" +
                          out.string() + "\" 2> \"" + err.string() + "\"";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void expect_config_error(nlohmann::json j, const std::string& fragment) {
  try {
    config_from_json(j);
    FAIL("expected a ConfigError mentioning " << fragment);
  } catch (const ConfigError& e) {
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring(fragment));
  }
}

}  // namespace

TEST_CASE("config parsing", "[config]") {
  const auto c = config_from_json(synth_config_json());
  CHECK(c.data.synth->length == 900);
  CHECK(c.data.input_length == 24);
  CHECK(c.horizons == std::vector<std::size_t>{12, 24});
  CHECK(c.train.loss_variant == LossVariant::hybrid);
  CHECK(c.train.lambda1 == 0.9);

  SECTION("round trip") {
    const auto again = config_from_json(config_to_json(c));
    CHECK(config_to_json(again) == config_to_json(c));
  }
  SECTION("single horizon key") {
    auto j = synth_config_json();
    j.erase("horizons");
    j["horizon"] = 48;
    CHECK(config_from_json(j).horizons == std::vector<std::size_t>{48});
  }
}

TEST_CASE("config errors name the key", "[config]") {
  auto j = synth_config_json();
  j["learning_rate"] = "fast";
  expect_config_error(j, "config.learning_rate");

  j = synth_config_json();
  j["typo_key"] = 1;
  expect_config_error(j, "typo_key");

  j = synth_config_json();
  j["loss_variant"] = "median";
  expect_config_error(j, "config.loss_variant");

  j = synth_config_json();
  j["synth"]["trend"]["kind"] = "cubic";
  expect_config_error(j, "synth.trend.kind");

  j = synth_config_json();
  j["kernel"] = 4;
  expect_config_error(j, "config.kernel");

  j = synth_config_json();
  j["horizons"] = nlohmann::json::array();
  expect_config_error(j, "horizons");

  j = synth_config_json();
  j["path"] = "x.csv";
  expect_config_error(j, "exactly one");

  j = synth_config_json();
  j["schema_version"] = 2;
  expect_config_error(j, "schema_version");

  j = synth_config_json();
  j["initial_w1"] = 1.5;
  expect_config_error(j, "initial_w1");

  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), LoadError);
}

TEST_CASE("train sweep", "[harness]") {
  auto cfg = config_from_json(synth_config_json());
  const RunOptions quiet{false, false};

  SECTION("one horizon gives one run") {
    const auto agg = run_train(cfg, std::size_t{12}, quiet);
    CHECK(agg["runs"].size() == 1);
  }
  SECTION("aggregate is the unweighted mean of per-horizon metrics") {
    const auto agg = run_train(cfg, std::nullopt, quiet);
    REQUIRE(agg["runs"].size() == 2);
    for (const char* key : {"overall_mse", "overall_mae", "seasonal_mse", "seasonal_mae",
                            "trend_mse", "trend_mae"}) {
      const double a = agg["runs"][0]["test"][key], b = agg["runs"][1]["test"][key];
      const double mean = agg["mean"][key];
      REQUIRE(std::abs(mean - (a + b) / 2) <= 1e-12);
    }
  }
  SECTION("deterministic, including in parallel") {
    const auto a = run_train(cfg, std::nullopt, quiet, 1);
    const auto b = run_train(cfg, std::nullopt, quiet, 2);
    CHECK(a.dump() == b.dump());
  }
  SECTION("files") {
    const auto dir = scratch("train");
    cfg.output_dir = dir.string();
    run_train(cfg, std::size_t{12}, RunOptions{true, true});
    CHECK(fs::exists(dir / "aggregate.json"));
    CHECK(fs::exists(dir / "run_hybrid_H12.json"));
    CHECK(fs::exists(dir / "trajectory_hybrid_H12.csv"));
    const auto report = nlohmann::json::parse(read_file(dir / "run_hybrid_H12.json"));
    CHECK(report.contains("wall_clock_seconds"));
    // The echoed config re-parses to the same experiment.
    CHECK(config_to_json(config_from_json(report["config"])) == config_to_json(cfg));

    const auto cp = load_checkpoint((dir / "checkpoint_hybrid_H12.json").string());
    const auto m = evaluate_checkpoint(cfg, cp);
    CHECK(m.overall_mse == Approx(double(report["test"]["overall_mse"])).epsilon(1e-12));
    const auto first = read_file(dir / "aggregate.json");
    run_train(cfg, std::size_t{12}, RunOptions{true, true});
    CHECK(read_file(dir / "aggregate.json") == first);
  }
}

TEST_CASE("ablation sweep", "[harness]") {
  auto cfg = config_from_json(synth_config_json());
  const auto specs = ablation_specs(cfg, std::size_t{12});
  CHECK(specs.size() == 8);
  std::size_t variants = 0, grid = 0;
  for (const auto& s : specs) {
    CHECK(s.horizon == 12);
    CHECK(s.config.train.seed == cfg.train.seed);
    if (s.label.rfind("variant_", 0) == 0) ++variants;
    if (s.label.rfind("grid_", 0) == 0) ++grid;
  }
  CHECK(variants == 3);
  CHECK(grid == 5);
  CHECK(ablation_specs(cfg).size() == 16);

  const auto dir = scratch("ablate");
  cfg.output_dir = dir.string();
  cfg.train.max_epochs = 1;
  const auto rep = run_ablate(cfg, std::size_t{12}, RunOptions{true, false});
  CHECK(rep["groups"].size() == 8);
  CHECK(fs::exists(dir / "ablation.csv"));
  CHECK(fs::exists(dir / "run_grid_w1_0.9_alpha_0.1_H12.json"));
}

TEST_CASE("forecast csv round trip", "[harness]") {
  std::mt19937_64 rng(2);
  const ModelShape shape{6, 3, 2, true, 3};
  const auto m = testing::random_model(shape, rng);
  const auto b = testing::random_batch(shape, 4, rng);
  const auto out = forward(m, b.inputs);
  std::stringstream ss;
  write_forecast_csv(ss, out, b);
  const auto [out2, b2] = read_forecast_csv(ss);
  CHECK(out2.seasonal_pred().data() == out.seasonal_pred().data());
  CHECK(b2.targets_trend.data() == b.targets_trend.data());
  const auto r1 = report(out, b), r2 = report(out2, b2);
  CHECK(r1.overall_mse == Approx(r2.overall_mse).epsilon(1e-15));

  std::stringstream bad("window,step\n");
  CHECK_THROWS_AS(read_forecast_csv(bad), InvalidData);
}

TEST_CASE("command line", "[cli]") {
  const auto dir = scratch("cli");
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";

  SECTION("decompose") {
    std::ofstream(dir / "in.csv") << "date,x\n2020-01-01,1\n2020-01-02,2\n2020-01-03,3\n"
                                     "2020-01-04,4\n";
    REQUIRE(run_cli("decompose -i " + (dir / "in.csv").string() + " -k 3 -o " +
                        (dir / "dec.csv").string(),
                    out, err) == 0);
    const auto s = load_csv((dir / "dec.csv").string(), CsvOptions{std::nullopt, false});
    REQUIRE(s.channel_names == std::vector<std::string>{"x", "x_seasonal", "x_trend"});
    CHECK(s.values(0, 1) == Approx(-1.0 / 3).margin(1e-15));
    CHECK(s.values(1, 1) == Approx(0.0).margin(1e-15));
    CHECK(s.values(3, 1) == Approx(1.0 / 3).margin(1e-15));
  }
  SECTION("synth is byte-identical on rerun") {
    std::ofstream(dir / "spec.json")
        << R"({"length": 200, "trend": {"kind": "linear", "slope": 0.02},
               "seasonal": [{"period": 24}], "noise_std": 0.2, "seed": 4})";
    const auto spec = (dir / "spec.json").string();
    REQUIRE(run_cli("synth -s " + spec + " -o " + (dir / "a.csv").string(), out, err) == 0);
    REQUIRE(run_cli("synth -s " + spec + " -o " + (dir / "b.csv").string(), out, err) == 0);
    CHECK(read_file(dir / "a.csv") == read_file(dir / "b.csv"));
    REQUIRE(run_cli("synth -s " + spec + " --seed 5 -o " + (dir / "c.csv").string(), out, err) ==
            0);
    CHECK(read_file(dir / "a.csv") != read_file(dir / "c.csv"));
  }
  SECTION("train, then eval the checkpoint") {
    auto j = synth_config_json();
    j["horizons"] = {12};
    j["output_dir"] = (dir / "runs").string();
    std::ofstream(dir / "cfg.json") << j.dump();
    const auto cfg = (dir / "cfg.json").string();
    REQUIRE(run_cli("train -c " + cfg, out, err) == 0);
    const auto agg = nlohmann::json::parse(read_file(out));
    REQUIRE(run_cli("eval -c " + cfg + " --checkpoint " +
                        (dir / "runs" / "checkpoint_hybrid_H12.json").string() +
                        " --dump-forecast " + (dir / "fc.csv").string(),
                    out, err) == 0);
    const auto m = nlohmann::json::parse(read_file(out));
    CHECK(double(m["overall_mse"]) ==
          Approx(double(agg["mean"]["overall_mse"])).epsilon(1e-12));
    REQUIRE(run_cli("eval --forecast " + (dir / "fc.csv").string(), out, err) == 0);
    const auto m2 = nlohmann::json::parse(read_file(out));
    CHECK(double(m2["trend_mae"]) == Approx(double(m["trend_mae"])).epsilon(1e-12));
  }
  SECTION("errors are JSON on stderr") {
    CHECK(run_cli("train -c /nonexistent.json", out, err) == 1);
    const auto e = nlohmann::json::parse(read_file(err));
    CHECK(e["error"] == "load_error");
    CHECK(run_cli("frobnicate", out, err) != 0);
    CHECK(nlohmann::json::parse(read_file(err))["error"] == "usage_error");
    std::ofstream(dir / "bad.json") << R"({"schema_version": 1, "synth": {}, "batch_size": -3})";
    CHECK(run_cli("train -c " + (dir / "bad.json").string(), out, err) == 1);
    CHECK(nlohmann::json::parse(read_file(err))["error"] == "config_error");
  }
}

TEST_CASE("negative integers are rejected", "[config]") {
  auto j = synth_config_json();
  j["batch_size"] = -3;
  expect_config_error(j, "config.batch_size");
  j = synth_config_json();
  j["horizons"] = {96, -1};
  expect_config_error(j, "config.horizons");
}
