// fofscope — Friends-Of-Friends burst candidate search.
//
//   fofscope inject --config search.conf   write a synthetic spectrum
//   fofscope run --config search.conf      run the search pipeline
//   fofscope inspect <file.dsf>            print a file's header
//   fofscope version

#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "fofscope/fofscope.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_format = 3;
constexpr int exit_stage = 4;

int cmd_run(const std::string& config_path) {
  const fofscope::PipelineConfig cfg = fofscope::load_pipeline_config(config_path);
  const fofscope::RunSummary summary = fofscope::run_pipeline(cfg);
  std::printf("chunks processed: %zu\n", summary.n_chunks);
  std::printf("candidates: %zu\n", summary.n_candidates);
  std::printf("candidates file: %s\n", summary.candidates_path.string().c_str());
  for (const auto& p : summary.plot_paths)
    std::printf("plot: %s\n", p.string().c_str());
  return exit_ok;
}

int cmd_inject(const std::string& config_path) {
  const fofscope::InjectConfig cfg = fofscope::load_inject_config(config_path);
  fofscope::DynamicSpectrum s = fofscope::generate_noise_spectrum(
      cfg.n_time, cfg.n_freq, cfg.dt_s, cfg.f0_mhz, cfg.df_mhz, cfg.noise_mean,
      cfg.noise_sigma, cfg.seed);
  if (cfg.pulse) {
    // With a noiseless grid the pulse amplitude is taken as absolute.
    const double rms = cfg.noise_sigma > 0.0 ? cfg.noise_sigma : 1.0;
    s = fofscope::inject_pulse(s, *cfg.pulse, rms, cfg.k_dm);
  }
  fofscope::write_dsf(s, cfg.output_path);
  std::printf("wrote %s: %zu x %zu bins, %.6g s x [%.6g, %.6g] MHz\n",
              cfg.output_path.c_str(), s.n_time(), s.n_freq(),
              s.dt_s() * static_cast<double>(s.n_time()), s.freq_at(0),
              s.freq_at(s.n_freq() - 1));
  if (cfg.pulse)
    std::printf("pulse: dm %.6g pc/cm^3, t0 %.6g s, width %.6g s, amplitude %.6g\n",
                cfg.pulse->dm, cfg.pulse->t0_s, cfg.pulse->width_s,
                cfg.pulse->amplitude_snr);
  return exit_ok;
}

int cmd_inspect(const std::string& path) {
  const fofscope::DynamicSpectrum s = fofscope::read_dsf(path);
  std::printf("file: %s\n", path.c_str());
  std::printf("n_time: %zu\n", s.n_time());
  std::printf("n_freq: %zu\n", s.n_freq());
  std::printf("dt_s: %.9g\n", s.dt_s());
  std::printf("f0_mhz: %.9g\n", s.f0_mhz());
  std::printf("df_mhz: %.9g\n", s.df_mhz());
  std::printf("duration_s: %.9g\n", s.dt_s() * static_cast<double>(s.n_time()));
  std::printf("band_mhz: [%.9g, %.9g]\n", s.freq_at(0), s.freq_at(s.n_freq() - 1));
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Friends-Of-Friends burst candidate search"};
  app.require_subcommand(1);

  std::string run_config, inject_config, inspect_path;
  CLI::App* run = app.add_subcommand("run", "run the search pipeline");
  run->add_option("--config", run_config, "pipeline config file")->required();
  CLI::App* inject = app.add_subcommand("inject", "write a synthetic test spectrum");
  inject->add_option("--config", inject_config, "inject config file")->required();
  CLI::App* inspect = app.add_subcommand("inspect", "print a spectrum file's header");
  inspect->add_option("file", inspect_path, "spectrum file (.dsf)")->required();
  CLI::App* version = app.add_subcommand("version", "print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config;
  }

  try {
    if (version->parsed()) {
      std::printf("fofscope %s\n", fofscope::version_string);
      return exit_ok;
    }
    if (run->parsed()) return cmd_run(run_config);
    if (inject->parsed()) return cmd_inject(inject_config);
    if (inspect->parsed()) return cmd_inspect(inspect_path);
  } catch (const fofscope::config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return exit_config;
  } catch (const fofscope::format_error& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return exit_format;
  } catch (const fofscope::stage_error& e) {
    std::fprintf(stderr, "pipeline error: %s\n", e.what());
    return exit_stage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_stage;
  }
  return exit_ok;
}
