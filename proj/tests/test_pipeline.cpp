#include <catch2/catch_amalgamated.hpp>

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fofscope/pipeline.hpp"
#include "oracles.hpp"

using namespace fofscope;
namespace fs = std::filesystem;

namespace {

PipelineConfig chunked_config() {
  PipelineConfig cfg;
  cfg.fof.m1 = 4.0;
  cfg.fof.m2 = 30.0;
  cfg.fof.t_gap = 4;
  cfg.fof.f_gap = 2;
  cfg.dm_max = 500.0;
  cfg.chunk_bins = 1200;
  cfg.noise_scope = NoiseScope::global;
  return cfg;
}

/// Seeded noise grid with one bright dm-500 pulse, written to disk the way
/// the pipeline expects to find it.
fs::path make_pulse_file(const fs::path& dir) {
  fs::create_directories(dir);
  const fs::path path = dir / "burst.dsf";
  DynamicSpectrum noise =
      generate_noise_spectrum(3000, 128, 1e-3, 4000.0, 15.625, 0.0, 1.0, 7);
  PulseSpec pulse;
  pulse.dm = 500.0;
  pulse.t0_s = 1.5;
  pulse.width_s = 5e-3;
  pulse.amplitude_snr = 12.0;
  write_dsf(inject_pulse(noise, pulse, 1.0), path);
  return path;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, '\t')) fields.push_back(field);
  return fields;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("chunk planning") {
  PipelineConfig cfg;
  cfg.k_dm.k_dm = 1000.0;  // delay(1, 100 MHz) = 0.1 s = 100 bins at 1 ms
  cfg.dm_max = 1.0;
  cfg.chunk_bins = 400;

  SECTION("whole file when chunking is off or unnecessary") {
    PipelineConfig one = cfg;
    one.chunk_bins = 0;
    auto plan = plan_chunks(1000, one, 1e-3, 100.0);
    REQUIRE(plan.size() == 1);
    CHECK(plan[0].start == 0);
    CHECK(plan[0].end == 1000);
    one.chunk_bins = 1000;
    plan = plan_chunks(1000, one, 1e-3, 100.0);
    REQUIRE(plan.size() == 1);
    CHECK(plan[0].end == 1000);
  }

  SECTION("overlap covers the full dispersion sweep") {
    auto plan = plan_chunks(1000, cfg, 1e-3, 100.0);
    REQUIRE(plan.size() == 3);
    CHECK(plan[0].start == 0);
    CHECK(plan[0].end == 400);
    CHECK(plan[1].start == 300);
    CHECK(plan[1].end == 700);
    CHECK(plan[2].start == 600);
    CHECK(plan[2].end == 1000);
  }

  SECTION("zero dm_max means disjoint chunks") {
    PipelineConfig flat = cfg;
    flat.dm_max = 0.0;
    auto plan = plan_chunks(1000, flat, 1e-3, 100.0);
    REQUIRE(plan.size() == 3);
    CHECK(plan[1].start == 400);
    CHECK(plan[2].start == 800);
    CHECK(plan[2].end == 1000);
  }

  SECTION("stride stays on the decimation grid") {
    PipelineConfig dec = cfg;
    dec.smoothing.t_factor = 7;
    auto plan = plan_chunks(1000, dec, 1e-3, 100.0);
    REQUIRE(plan.size() >= 3);
    for (std::size_t i = 1; i < plan.size(); ++i)
      CHECK((plan[i].start - plan[i - 1].start) % 7 == 0);
    CHECK(plan.front().start == 0);
    CHECK(plan.back().end == 1000);
  }

  SECTION("chunks too small for the overlap are rejected") {
    PipelineConfig tight = cfg;
    tight.chunk_bins = 100;  // equal to the overlap
    CHECK_THROWS_AS(plan_chunks(1000, tight, 1e-3, 100.0), config_error);
    tight.chunk_bins = 101;
    CHECK_NOTHROW(plan_chunks(1000, tight, 1e-3, 100.0));
    tight.smoothing.t_factor = 7;  // stride 1 rounds down to 0
    CHECK_THROWS_AS(plan_chunks(1000, tight, 1e-3, 100.0), config_error);
  }

  SECTION("every bin is covered in order") {
    auto plan = plan_chunks(977, cfg, 1e-3, 100.0);
    CHECK(plan.front().start == 0);
    CHECK(plan.back().end == 977);
    for (std::size_t i = 1; i < plan.size(); ++i) {
      CHECK(plan[i].start > plan[i - 1].start);
      CHECK(plan[i].start < plan[i - 1].end);  // no gaps
    }
  }

  SECTION("empty input is rejected") {
    CHECK_THROWS_AS(plan_chunks(0, cfg, 1e-3, 100.0), invalid_input);
  }
}

TEST_CASE("candidate table formatting") {
  const fs::path path = fs::temp_directory_path() / "fofscope_candidates_test.tsv";

  SECTION("no candidates still yields the header") {
    write_candidates({}, "cluster_snr", path);
    auto lines = read_lines(path);
    REQUIRE(lines.size() == 1);
    CHECK(lines[0] == candidates_header());
    CHECK(split_tabs(lines[0]).size() == 15);
  }

  SECTION("rows are sorted by the key, ties by ascending id") {
    CandidateRecord a;
    a.id = 0;
    a.chunk = 0;
    a.t_start_s = 0.1;
    a.t_end_s = 0.2;
    a.f_start_mhz = 1400.0;
    a.f_end_mhz = 1410.0;
    a.metrics.n_pixels = 4;
    a.metrics.cluster_snr = 20.0;
    a.metrics.signal_mean = 2.5;
    a.metrics.signal_max = 5.0;
    a.metrics.snr_mean = 5.0;
    a.metrics.snr_max = 10.0;
    a.supercluster_id = 0;

    CandidateRecord b = a;
    b.id = 1;
    b.metrics.cluster_snr = 50.0;
    b.metrics.line = LineFit{-0.0025, 1.0};
    b.metrics.dm = DmFit{350.0, 0.9};
    b.supercluster_id = 3;

    CandidateRecord c = a;
    c.id = 2;  // ties with a on cluster_snr

    write_candidates({a, b, c}, "cluster_snr", path);
    auto lines = read_lines(path);
    REQUIRE(lines.size() == 4);
    CHECK(lines[1] ==
          "1\t0\t0.1\t0.2\t1400\t1410\t4\t50\t2.5\t5\t5\t10\t-0.0025\t350\t3");
    CHECK(split_tabs(lines[2])[0] == "0");
    CHECK(split_tabs(lines[3])[0] == "2");
    // Fit-free rows print NA in both fit columns.
    CHECK(split_tabs(lines[2])[12] == "NA");
    CHECK(split_tabs(lines[2])[13] == "NA");
  }

  SECTION("records without a fit sort below any fitted record") {
    CandidateRecord with;
    with.id = 0;
    with.metrics.dm = DmFit{1.0, 0.0};
    CandidateRecord without;
    without.id = 1;
    without.metrics.cluster_snr = 1e9;  // irrelevant to the dm key
    write_candidates({without, with}, "dm", path);
    auto lines = read_lines(path);
    REQUIRE(lines.size() == 3);
    CHECK(split_tabs(lines[1])[0] == "0");
    CHECK(split_tabs(lines[2])[0] == "1");
  }

  SECTION("unknown sort keys are rejected") {
    CHECK_THROWS_AS(write_candidates({}, "prettiness", path), config_error);
  }
  fs::remove(path);
}

TEST_CASE("pipeline finds nothing in pure noise") {
  const fs::path dir = fs::temp_directory_path() / "fofscope_pipe_noise";
  fs::create_directories(dir);
  const fs::path input = dir / "noise.dsf";
  write_dsf(generate_noise_spectrum(1024, 64, 1e-3, 1400.0, 1.0, 0.0, 2.0, 21), input);

  PipelineConfig cfg;
  cfg.input_path = input.string();
  cfg.output_dir = (dir / "out").string();
  cfg.fof.m1 = 6.0;
  cfg.fof.m2 = 50.0;

  RunSummary summary = run_pipeline(cfg);
  CHECK(summary.n_chunks == 1);
  CHECK(summary.n_candidates == 0);
  auto lines = read_lines(summary.candidates_path);
  REQUIRE(lines.size() == 1);
  CHECK(lines[0] == candidates_header());
  fs::remove_all(dir);
}

TEST_CASE("chunked and unchunked runs agree on the injected pulse") {
  const fs::path dir = fs::temp_directory_path() / "fofscope_pipe_agree";
  const fs::path input = make_pulse_file(dir);

  PipelineConfig chunked = chunked_config();
  chunked.input_path = input.string();
  chunked.output_dir = (dir / "chunked").string();

  PipelineConfig whole = chunked;
  whole.chunk_bins = 0;
  whole.output_dir = (dir / "whole").string();

  RunSummary sc = run_pipeline(chunked);
  RunSummary sw = run_pipeline(whole);
  CHECK(sc.n_chunks == 3);
  CHECK(sw.n_chunks == 1);
  REQUIRE(sc.n_candidates == 1);
  REQUIRE(sw.n_candidates == 1);

  auto rc = split_tabs(read_lines(sc.candidates_path)[1]);
  auto rw = split_tabs(read_lines(sw.candidates_path)[1]);
  REQUIRE(rc.size() == 15);
  REQUIRE(rw.size() == 15);
  CHECK(rc[6] == rw[6]);  // n_pixels, exactly
  // The table carries 9 significant digits, so agreement is checked at the
  // printed precision; the acceptance run compares in-memory values tighter.
  for (std::size_t col : {2u, 3u, 4u, 5u, 7u, 8u, 9u, 10u, 11u, 12u, 13u}) {
    const double vc = std::stod(rc[col]);
    const double vw = std::stod(rw[col]);
    CHECK(vc == Catch::Approx(vw).epsilon(1e-8));
  }
  // The recovered dispersion measure lands near the injected one.
  CHECK(std::stod(rw[13]) == Catch::Approx(500.0).epsilon(0.05));
  fs::remove_all(dir);
}

TEST_CASE("worker count never changes the output bytes") {
  const fs::path dir = fs::temp_directory_path() / "fofscope_pipe_workers";
  const fs::path input = make_pulse_file(dir);

  PipelineConfig cfg = chunked_config();
  cfg.input_path = input.string();
  cfg.fof.m2 = 8.0;  // let some noise clusters through too

  std::string first;
  for (unsigned workers : {1u, 4u}) {
    cfg.workers = workers;
    cfg.output_dir = (dir / ("w" + std::to_string(workers))).string();
    RunSummary summary = run_pipeline(cfg);
    const std::string bytes = slurp(summary.candidates_path);
    if (workers == 1u)
      first = bytes;
    else
      CHECK(bytes == first);
  }
  fs::remove_all(dir);
}

TEST_CASE("merged candidates have clean ids and no cross-chunk duplicates") {
  const fs::path dir = fs::temp_directory_path() / "fofscope_pipe_merge";
  const fs::path input = make_pulse_file(dir);

  PipelineConfig cfg = chunked_config();
  cfg.input_path = input.string();
  cfg.output_dir = (dir / "out").string();
  cfg.fof.m2 = 8.0;

  RunSummary summary = run_pipeline(cfg);
  REQUIRE(summary.n_candidates >= 1);
  auto lines = read_lines(summary.candidates_path);
  REQUIRE(lines.size() == summary.n_candidates + 1);

  std::vector<CandidateRecord> rows;
  std::vector<bool> seen(summary.n_candidates, false);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto fields = split_tabs(lines[i]);
    REQUIRE(fields.size() == 15);
    CandidateRecord r;
    r.id = std::stoi(fields[0]);
    r.chunk = std::stoi(fields[1]);
    r.t_start_s = std::stod(fields[2]);
    r.t_end_s = std::stod(fields[3]);
    r.f_start_mhz = std::stod(fields[4]);
    r.f_end_mhz = std::stod(fields[5]);
    rows.push_back(r);
    REQUIRE(r.id >= 0);
    REQUIRE(static_cast<std::size_t>(r.id) < seen.size());
    seen[static_cast<std::size_t>(r.id)] = true;  // ids are 0..n-1, each once
  }
  for (bool s : seen) CHECK(s);

  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = i + 1; j < rows.size(); ++j)
      if (rows[i].chunk != rows[j].chunk)
        CHECK_FALSE(detail::boxes_overlap(rows[i], rows[j]));
  fs::remove_all(dir);
}

TEST_CASE("top candidates are rendered as images") {
  const fs::path dir = fs::temp_directory_path() / "fofscope_pipe_plots";
  const fs::path input = make_pulse_file(dir);

  PipelineConfig cfg = chunked_config();
  cfg.input_path = input.string();
  cfg.output_dir = (dir / "out").string();
  cfg.top_k_plots = 3;

  RunSummary summary = run_pipeline(cfg);
  REQUIRE(summary.n_candidates == 1);
  REQUIRE(summary.plot_paths.size() == 1);  // fewer candidates than requested
  for (const fs::path& p : summary.plot_paths) {
    oracles::PpmImage img = oracles::read_p6(p.string());
    CHECK(img.width > 0);
    CHECK(img.height > 0);
    CHECK(fs::exists(p.string() + ".txt"));
  }
  CHECK(summary.plot_paths[0].filename() == "candidate_0.ppm");
  fs::remove_all(dir);
}

TEST_CASE("stage failures say which chunk and stage") {
  const fs::path dir = fs::temp_directory_path() / "fofscope_pipe_stage";
  fs::create_directories(dir);

  PipelineConfig cfg;
  cfg.output_dir = (dir / "out").string();

  SECTION("constant data cannot be thresholded") {
    const fs::path input = dir / "flat.dsf";
    write_dsf(DynamicSpectrum(64, 8, 1e-3, 1400.0, 1.0,
                              std::vector<double>(64 * 8, 5.0)),
              input);
    cfg.input_path = input.string();
    try {
      run_pipeline(cfg);
      FAIL("expected a stage error");
    } catch (const stage_error& e) {
      CHECK(e.chunk() == 0);
      CHECK(e.stage() == "fof");
    }
  }

  SECTION("a single sample has no background statistics") {
    const fs::path input = dir / "tiny.dsf";
    write_dsf(DynamicSpectrum(1, 1, 1e-3, 1400.0, 1.0, {3.0}), input);
    cfg.input_path = input.string();
    try {
      run_pipeline(cfg);
      FAIL("expected a stage error");
    } catch (const stage_error& e) {
      CHECK(e.stage() == "noise");
    }
  }

  SECTION("decimating away every time bin fails in preprocessing") {
    const fs::path input = dir / "short.dsf";
    write_dsf(generate_noise_spectrum(2, 8, 1e-3, 1400.0, 1.0, 0.0, 1.0, 5), input);
    cfg.input_path = input.string();
    cfg.smoothing.t_factor = 4;
    try {
      run_pipeline(cfg);
      FAIL("expected a stage error");
    } catch (const stage_error& e) {
      CHECK(e.stage() == "preprocess");
    }
  }

  SECTION("unreadable input is a format error") {
    cfg.input_path = (dir / "missing.dsf").string();
    CHECK_THROWS_AS(run_pipeline(cfg), format_error);
  }
  fs::remove_all(dir);
}
