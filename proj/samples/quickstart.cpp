// Minimal library walkthrough: synthesize a dispersed pulse in noise, run
// the Friends-Of-Friends search directly (no config file), and print what
// it found.

#include <cstdio>

#include "fofscope/fofscope.hpp"

int main() {
  using namespace fofscope;

  // 1024 time bins x 128 channels over 4-8 GHz, unit Gaussian noise.
  DynamicSpectrum noise =
      generate_noise_spectrum(1024, 128, 1e-3, 4000.0, 31.25, 0.0, 1.0, 42);

  PulseSpec pulse;
  pulse.dm = 200.0;
  pulse.t0_s = 0.30;
  pulse.width_s = 4e-3;
  pulse.amplitude_snr = 9.0;
  DynamicSpectrum s = inject_pulse(noise, pulse, 1.0);

  const NoiseEstimate bg = estimate_background(s);
  std::printf("background: mean %.4f, rms %.4f (%d clip passes)\n", bg.mean, bg.rms,
              bg.iterations);

  FofParams params;
  params.m1 = 3.5;
  params.m2 = 40.0;
  params.t_gap = 3;
  params.f_gap = 2;
  const FofResult result = run_fof(s, bg, params, TrackMode::quadratic, 5.0);

  std::printf("clusters surviving m2: %zu\n", result.clusters.size());
  for (const Cluster& c : result.clusters) {
    const ClusterMetrics& m = c.metrics;
    std::printf("  #%d: %zu px, cluster_snr %.1f, t [%.3f, %.3f] s", c.id, m.n_pixels,
                m.cluster_snr, s.time_at(m.t_start_bin), s.time_at(m.t_end_bin));
    if (m.dm)
      std::printf(", dm %.1f pc/cm^3", m.dm->dm);
    std::printf("\n");
  }
  return 0;
}
