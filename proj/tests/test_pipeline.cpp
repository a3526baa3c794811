#include "bcwave/parallel.hpp"
#include "bcwave/pipeline.hpp"
#include "bcwave/reconstruct.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace bcwave;

namespace fs = std::filesystem;

namespace {

PipelineConfig tiny_config() {
  PipelineConfig c;
  c.T = 0.3;
  c.ls = 0.2;
  c.lr = 0.5;
  c.dx = 0.0125;
  c.y_min = -0.05;
  c.y_max = 0.05;
  c.y_step = 0.05;
  c.s_min = 0.025;
  c.s_max = 0.2;
  c.s_step = 0.025;
  c.h = 0.05;
  c.alpha = 1e-3;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct ScratchDir {
  fs::path path;
  explicit ScratchDir(const std::string& name) : path(fs::temp_directory_path() / name) { fs::remove_all(path); }
  ~ScratchDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("configuration") {
  SUBCASE("JSON round-trip is the identity") {
    PipelineConfig c = tiny_config();
    c.medium.kind = "layered";
    c.medium.c0 = 1.2;
    c.medium.gradient = -0.3;
    c.spline_lambda = 1e-5;
    const PipelineConfig back = PipelineConfig::from_json(c.to_json());
    CHECK(back == c);
    CHECK(back.to_json() == c.to_json());
  }
  SUBCASE("every scalar key is present") {
    const std::string text = tiny_config().to_json();
    for (const char* key : {"\"T\"", "\"t0\"", "\"ls\"", "\"lr\"", "\"dts\"", "\"dxs\"", "\"a\"", "\"dxr\"", "\"dtr\"",
                            "\"h\"", "\"alpha\""}) {
      CHECK(text.find(key) != std::string::npos);
    }
  }
  SUBCASE("inconsistent values are config errors") {
    PipelineConfig c = tiny_config();
    c.h = 0.03;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = tiny_config();
    c.s_max = 0.275;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = tiny_config();
    c.medium.kind = "marble";
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = tiny_config();
    c.ls = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json("{ not json"), ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json("{}"), ConfigError);
  }
}

TEST_CASE("staged runs") {
  set_thread_limit(1);
  const PipelineConfig config = tiny_config();
  ScratchDir dir("bcwave_test_pipeline");
  const auto first = run_pipeline(config, dir.path);
  REQUIRE(first.size() == 5);
  for (const auto& r : first) CHECK_FALSE(r.resumed);

  SUBCASE("constant speed is recovered") {
    const TransformSamples t = TransformSamples::read_csv(dir.path / "speed" / "recon.csv");
    CHECK(t.usable_count() == t.points.size());
    // Caps deeper than T - t0 need sources earlier than the first basis time.
    for (std::size_t i = 0; i < t.ys.size(); ++i) {
      for (std::size_t j = 1; j < t.ss.size() && t.ss[j] + config.h <= config.T - config.t0 + 1e-12; ++j) {
        CHECK(t.at(i, j).c_est == doctest::Approx(1.0).epsilon(0.1));
      }
    }
  }
  SUBCASE("an unchanged rerun resumes every stage") {
    for (const auto& r : run_pipeline(config, dir.path)) CHECK(r.resumed);
  }
  SUBCASE("a fresh serial rerun is byte-identical") {
    const std::string before = slurp(dir.path / "speed" / "recon.csv");
    const std::string caps = slurp(dir.path / "caps" / "psi.bin");
    run_pipeline(config, dir.path, {true});
    CHECK(slurp(dir.path / "speed" / "recon.csv") == before);
    CHECK(slurp(dir.path / "caps" / "psi.bin") == caps);
  }
  SUBCASE("changing h reruns caps and later stages only") {
    PipelineConfig c = config;
    c.h = 0.075;
    c.s_max = 0.2;
    const auto r = run_pipeline(c, dir.path);
    CHECK(r[0].resumed);
    CHECK(r[1].resumed);
    CHECK_FALSE(r[2].resumed);
    CHECK_FALSE(r[3].resumed);
    CHECK_FALSE(r[4].resumed);
  }
  SUBCASE("an edited upstream file is detected") {
    {
      std::ofstream f(dir.path / "connect" / "K.bin", std::ios::binary | std::ios::app);
      f << "x";
    }
    CHECK_THROWS_AS(run_stage(config, dir.path, Stage::caps), ProvenanceError);
    CHECK(fs::exists(dir.path / "error.json"));
    CHECK(slurp(dir.path / "error.json").find("provenance") != std::string::npos);
    CHECK_THROWS_AS(run_pipeline(config, dir.path), ProvenanceError);
    CHECK_NOTHROW(run_pipeline(config, dir.path, {true}));
    CHECK_FALSE(fs::exists(dir.path / "error.json"));
  }
  SUBCASE("a stage without its upstream outputs is refused") {
    ScratchDir other("bcwave_test_pipeline_empty");
    CHECK_THROWS_AS(run_stage(config, other.path, Stage::connect), ConfigError);
  }
  SUBCASE("plot bundles") {
    const auto files = emit_plots(dir.path);
    for (const char* bundle : {"model", "coordinates", "comparison", "slices"}) {
      CHECK(fs::is_directory(dir.path / "plots" / bundle));
    }
    CHECK(files.size() == 4 + config.ys().size());
    // For c = 1 the estimated-point and on-geodesic speeds coincide.
    std::ifstream slice(dir.path / "plots" / "slices" / "slice_1.csv");
    std::string line;
    std::getline(slice, line);
    std::getline(slice, line);
    while (std::getline(slice, line)) {
      double s = 0, est = 0, at = 0, on = 0;
      CHECK(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &s, &est, &at, &on) == 4);
      CHECK(at == on);
    }
  }
}

TEST_CASE("plots need a run") {
  ScratchDir dir("bcwave_test_plots_empty");
  fs::create_directories(dir.path);
  try {
    emit_plots(dir.path);
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("nothing to plot") != std::string::npos);
  }
}
