#include <catch2/catch_amalgamated.hpp>

#include <sstream>
#include <string>

#include "fofscope/config.hpp"

using namespace fofscope;

namespace {

PipelineConfig pipeline_from(const std::string& text) {
  std::istringstream in(text);
  return parse_pipeline_config(in, "test.cfg");
}

InjectConfig inject_from(const std::string& text) {
  std::istringstream in(text);
  return parse_inject_config(in, "test.cfg");
}

constexpr const char* kMinimalRun = "input_path = in.dsf\noutput_dir = out\n";

}  // namespace

TEST_CASE("minimal pipeline config keeps documented defaults") {
  PipelineConfig cfg = pipeline_from(kMinimalRun);
  CHECK(cfg.input_path == "in.dsf");
  CHECK(cfg.output_dir == "out");
  CHECK(cfg.smoothing.mode == SmoothingMode::block_average);
  CHECK(cfg.smoothing.t_factor == 1);
  CHECK(cfg.smoothing.f_factor == 1);
  CHECK(cfg.clip.clip_factor == 3.0);
  CHECK(cfg.clip.rel_tol == 0.01);
  CHECK(cfg.clip.max_iter == 20);
  CHECK(cfg.fof.m1 == 5.0);
  CHECK(cfg.fof.m2 == 10.0);
  CHECK(cfg.fof.t_gap == 1);
  CHECK(cfg.fof.f_gap == 1);
  CHECK(cfg.supercluster_mode == TrackMode::linear);
  CHECK(cfg.supercluster_tol_bins == 5.0);
  CHECK(cfg.dm_max == 0.0);
  CHECK(cfg.chunk_bins == 0);
  CHECK(cfg.workers == 1);
  CHECK(cfg.noise_scope == NoiseScope::chunk);
  CHECK(cfg.sort_key == "cluster_snr");
  CHECK(cfg.top_k_plots == 0);
  CHECK(cfg.k_dm.k_dm == Catch::Approx(4.148808e3));
  CHECK(cfg.render.colormap == Colormap::viridis);
  CHECK(cfg.render.max_px == 2048);
  CHECK(cfg.render_margin_bins == 32);
}

TEST_CASE("every pipeline key lands in its field") {
  PipelineConfig cfg = pipeline_from(
      "input_path = /data/in.dsf\n"
      "output_dir = /tmp/out\n"
      "smoothing.mode = gaussian_decimate\n"
      "smoothing.t_factor = 4\n"
      "smoothing.f_factor = 2\n"
      "smoothing.sigma_t_bins = 2.5\n"
      "smoothing.sigma_f_bins = 1.5\n"
      "clip.factor = 2.5\n"
      "clip.rel_tol = 0.005\n"
      "clip.max_iter = 30\n"
      "fof.m1 = 4.5\n"
      "fof.m2 = 12\n"
      "fof.t_gap = 3\n"
      "fof.f_gap = 2\n"
      "supercluster.mode = quadratic\n"
      "supercluster.tol_bins = 7\n"
      "dm_max = 1500\n"
      "chunk_bins = 8192\n"
      "workers = 4\n"
      "noise_scope = global\n"
      "sort_key = snr_max\n"
      "top_k_plots = 5\n"
      "k_dm = 4149.0\n"
      "render.colormap = grayscale\n"
      "render.highlight = ff8000\n"
      "render.max_px = 512\n"
      "render.snr_floor = -2\n"
      "render.snr_ceil = 10\n"
      "render.margin_bins = 16\n");
  CHECK(cfg.input_path == "/data/in.dsf");
  CHECK(cfg.output_dir == "/tmp/out");
  CHECK(cfg.smoothing.mode == SmoothingMode::gaussian_decimate);
  CHECK(cfg.smoothing.t_factor == 4);
  CHECK(cfg.smoothing.f_factor == 2);
  CHECK(cfg.smoothing.sigma_t_bins == 2.5);
  CHECK(cfg.smoothing.sigma_f_bins == 1.5);
  CHECK(cfg.clip.clip_factor == 2.5);
  CHECK(cfg.clip.rel_tol == 0.005);
  CHECK(cfg.clip.max_iter == 30);
  CHECK(cfg.fof.m1 == 4.5);
  CHECK(cfg.fof.m2 == 12.0);
  CHECK(cfg.fof.t_gap == 3);
  CHECK(cfg.fof.f_gap == 2);
  CHECK(cfg.supercluster_mode == TrackMode::quadratic);
  CHECK(cfg.supercluster_tol_bins == 7.0);
  CHECK(cfg.dm_max == 1500.0);
  CHECK(cfg.chunk_bins == 8192);
  CHECK(cfg.workers == 4);
  CHECK(cfg.noise_scope == NoiseScope::global);
  CHECK(cfg.sort_key == "snr_max");
  CHECK(cfg.top_k_plots == 5);
  CHECK(cfg.k_dm.k_dm == 4149.0);
  CHECK(cfg.render.colormap == Colormap::grayscale);
  CHECK(cfg.render.highlight == Rgb{255, 128, 0});
  CHECK(cfg.render.max_px == 512);
  CHECK(cfg.render.snr_floor == -2.0);
  CHECK(cfg.render.snr_ceil == 10.0);
  CHECK(cfg.render_margin_bins == 16);
}

TEST_CASE("comments, blank lines, and spacing are tolerated") {
  PipelineConfig cfg = pipeline_from(
      "# job settings\n"
      "\n"
      "  input_path=in.dsf   # terse form\n"
      "\toutput_dir\t=\tout\t\n"
      "workers = 2  # trailing comment\n");
  CHECK(cfg.input_path == "in.dsf");
  CHECK(cfg.output_dir == "out");
  CHECK(cfg.workers == 2);
}

TEST_CASE("malformed config lines carry origin and line number") {
  auto message = [](const std::string& text) {
    try {
      pipeline_from(text);
    } catch (const config_error& e) {
      return std::string(e.what());
    }
    return std::string("<no error>");
  };

  CHECK(message("input_path = a\nno equals sign\n") ==
        "test.cfg:2: expected 'key = value'");
  CHECK(message("= 5\n") == "test.cfg:1: empty key");
  CHECK(message("workers = 1\n\nworkers = 2\n").find("test.cfg:3: duplicate key") == 0);
}

TEST_CASE("bad values are rejected with the offending key") {
  CHECK_THROWS_WITH(pipeline_from(std::string(kMinimalRun) + "fof.m1 = abc\n"),
                    "key 'fof.m1': expected a number, got 'abc'");
  CHECK_THROWS_WITH(pipeline_from(std::string(kMinimalRun) + "workers = 2.5\n"),
                    "key 'workers': expected an integer, got '2.5'");
  CHECK_THROWS_WITH(pipeline_from(std::string(kMinimalRun) + "workers = -1\n"),
                    "key 'workers': expected an integer, got '-1'");
  CHECK_THROWS_WITH(pipeline_from(std::string(kMinimalRun) + "fof.m1 = 5 5\n"),
                    "key 'fof.m1': expected a number, got '5 5'");
  CHECK_THROWS_AS(pipeline_from(std::string(kMinimalRun) + "smoothing.mode = fast\n"),
                  config_error);
  CHECK_THROWS_AS(pipeline_from(std::string(kMinimalRun) + "noise_scope = sometimes\n"),
                  config_error);
  CHECK_THROWS_AS(pipeline_from(std::string(kMinimalRun) + "supercluster.mode = cubic\n"),
                  config_error);
  CHECK_THROWS_AS(pipeline_from(std::string(kMinimalRun) + "render.colormap = jet\n"),
                  config_error);
  for (const char* hex : {"ff000", "ff00001", "gg0000", ""})
    CHECK_THROWS_AS(
        pipeline_from(std::string(kMinimalRun) + "render.highlight = " + hex + "\n"),
        config_error);
}

TEST_CASE("unknown keys are fatal") {
  CHECK_THROWS_WITH(pipeline_from(std::string(kMinimalRun) + "fof.m3 = 1\n"),
                    "unknown config key 'fof.m3'");
  CHECK_THROWS_AS(inject_from("inject.output_path = x.dsf\ntypo = 1\n"), config_error);
}

TEST_CASE("required paths are enforced") {
  CHECK_THROWS_WITH(pipeline_from("output_dir = out\n"), "input_path is required");
  CHECK_THROWS_WITH(pipeline_from("input_path = in.dsf\n"), "output_dir is required");
  CHECK_THROWS_WITH(inject_from("inject.n_time = 64\n"),
                    "inject.output_path is required");
}

TEST_CASE("semantic validation runs after parsing") {
  CHECK_THROWS_WITH(pipeline_from(std::string(kMinimalRun) + "workers = 0\n"),
                    "workers must be >= 1");
  CHECK_THROWS_WITH(pipeline_from(std::string(kMinimalRun) + "sort_key = brightness\n"),
                    "sort_key must name a cluster metric, got 'brightness'");
  CHECK_THROWS_AS(pipeline_from(std::string(kMinimalRun) + "supercluster.tol_bins = -1\n"),
                  config_error);
  CHECK_THROWS_AS(pipeline_from(std::string(kMinimalRun) + "dm_max = -5\n"), config_error);
  CHECK_THROWS_AS(pipeline_from(std::string(kMinimalRun) + "k_dm = 0\n"), config_error);
  // Gaussian smoothing needs kernel widths; nested validators still surface
  // as config errors so the CLI exit code stays right.
  CHECK_THROWS_AS(
      pipeline_from(std::string(kMinimalRun) + "smoothing.mode = gaussian_decimate\n"),
      config_error);
  CHECK_THROWS_AS(inject_from("inject.output_path = x.dsf\ninject.n_time = 0\n"),
                  config_error);
  CHECK_THROWS_AS(inject_from("inject.output_path = x.dsf\ninject.noise_sigma = -1\n"),
                  config_error);
  CHECK_THROWS_AS(
      inject_from("inject.output_path = x.dsf\ninject.pulse.width_s = -1\n"),
      config_error);
}

TEST_CASE("inject config reads its namespace") {
  SECTION("defaults without a pulse") {
    InjectConfig cfg = inject_from("inject.output_path = noise.dsf\n");
    CHECK(cfg.output_path == "noise.dsf");
    CHECK(cfg.n_time == 4096);
    CHECK(cfg.n_freq == 256);
    CHECK(cfg.dt_s == 1e-3);
    CHECK(cfg.f0_mhz == 4000.0);
    CHECK(cfg.df_mhz == 15.625);
    CHECK(cfg.noise_mean == 0.0);
    CHECK(cfg.noise_sigma == 1.0);
    CHECK(cfg.seed == 1);
    CHECK_FALSE(cfg.pulse.has_value());
  }

  SECTION("a pulse appears once any pulse key does") {
    InjectConfig cfg = inject_from(
        "inject.output_path = burst.dsf\n"
        "inject.n_time = 2048\n"
        "inject.n_freq = 128\n"
        "inject.dt_s = 5e-4\n"
        "inject.f0_mhz = 1200\n"
        "inject.df_mhz = 2.0\n"
        "inject.noise_mean = 10\n"
        "inject.noise_sigma = 3\n"
        "inject.seed = 99\n"
        "inject.pulse.dm = 350\n"
        "inject.pulse.t0_s = 0.2\n"
        "inject.pulse.width_s = 2e-3\n"
        "inject.pulse.amplitude_snr = 8\n");
    REQUIRE(cfg.pulse.has_value());
    CHECK(cfg.pulse->dm == 350.0);
    CHECK(cfg.pulse->t0_s == 0.2);
    CHECK(cfg.pulse->width_s == 2e-3);
    CHECK(cfg.pulse->amplitude_snr == 8.0);
    CHECK(cfg.seed == 99);
    CHECK(cfg.noise_sigma == 3.0);
  }

  SECTION("a partial pulse block fills the rest with defaults") {
    InjectConfig cfg = inject_from(
        "inject.output_path = burst.dsf\ninject.pulse.dm = 42\n");
    REQUIRE(cfg.pulse.has_value());
    CHECK(cfg.pulse->dm == 42.0);
    CHECK(cfg.pulse->width_s == 1e-3);
    CHECK(cfg.pulse->amplitude_snr == 1.0);
  }
}

TEST_CASE("one file can drive both subcommands") {
  const std::string shared =
      "input_path = burst.dsf\n"
      "output_dir = out\n"
      "fof.m1 = 4\n"
      "inject.output_path = burst.dsf\n"
      "inject.n_time = 512\n"
      "inject.pulse.dm = 100\n";
  PipelineConfig run = pipeline_from(shared);
  InjectConfig inj = inject_from(shared);
  CHECK(run.input_path == "burst.dsf");
  CHECK(run.fof.m1 == 4.0);
  CHECK(inj.output_path == "burst.dsf");
  CHECK(inj.n_time == 512);
  REQUIRE(inj.pulse.has_value());
  CHECK(inj.pulse->dm == 100.0);
}

TEST_CASE("missing config files are a config error") {
  CHECK_THROWS_AS(load_pipeline_config("/no/such/file.cfg"), config_error);
  CHECK_THROWS_AS(load_inject_config("/no/such/file.cfg"), config_error);
}
