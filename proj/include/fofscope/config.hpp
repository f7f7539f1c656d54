#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "fofscope/dispersion.hpp"
#include "fofscope/fof.hpp"
#include "fofscope/noise.hpp"
#include "fofscope/preprocess.hpp"
#include "fofscope/render.hpp"

namespace fofscope {

enum class NoiseScope { chunk, global };

/// Every pipeline tunable in one record. Filled from a flat `key = value`
/// config file; unknown or repeated keys are rejected.
struct PipelineConfig {
  std::string input_path;
  std::string output_dir;
  SmoothingSpec smoothing;
  ClipConfig clip;
  FofParams fof;
  TrackMode supercluster_mode = TrackMode::linear;
  double supercluster_tol_bins = 5.0;
  double dm_max = 0.0;           // bounds the chunk overlap
  std::size_t chunk_bins = 0;    // 0 = whole file in one chunk
  unsigned workers = 1;
  NoiseScope noise_scope = NoiseScope::chunk;
  std::string sort_key = "cluster_snr";
  std::size_t top_k_plots = 0;
  DispersionConstant k_dm;
  RenderSpec render;
  std::size_t render_margin_bins = 32;

  void validate() const {
    smoothing.validate();
    clip.validate();
    fof.validate();
    render.validate();
    if (supercluster_tol_bins < 0.0)
      throw config_error("supercluster.tol_bins must be >= 0");
    if (dm_max < 0.0) throw config_error("dm_max must be >= 0");
    if (workers < 1) throw config_error("workers must be >= 1");
    if (!(k_dm.k_dm > 0.0)) throw config_error("k_dm must be > 0");
    if (!is_sort_key(sort_key))
      throw config_error("sort_key must name a cluster metric, got '" + sort_key + "'");
  }

  static bool is_sort_key(std::string_view key) {
    return key == "n_pixels" || key == "cluster_snr" || key == "signal_mean" ||
           key == "signal_max" || key == "snr_mean" || key == "snr_max" ||
           key == "slope" || key == "dm";
  }
};

/// Parameters of a synthetic test file: a seeded Gaussian noise grid with an
/// optional dispersed pulse on top.
struct InjectConfig {
  std::string output_path;
  std::size_t n_time = 4096;
  std::size_t n_freq = 256;
  double dt_s = 1e-3;
  double f0_mhz = 4000.0;
  double df_mhz = 15.625;
  double noise_mean = 0.0;
  double noise_sigma = 1.0;
  std::uint64_t seed = 1;
  std::optional<PulseSpec> pulse;
  DispersionConstant k_dm;

  void validate() const {
    if (output_path.empty()) throw config_error("inject.output_path is required");
    if (n_time == 0 || n_freq == 0)
      throw config_error("inject grid dimensions must be positive");
    if (!(dt_s > 0.0) || !(df_mhz > 0.0) || !(f0_mhz > 0.0))
      throw config_error("inject axis parameters must be positive");
    if (noise_sigma < 0.0) throw config_error("inject.noise_sigma must be >= 0");
    if (pulse) pulse->validate();
    if (!(k_dm.k_dm > 0.0)) throw config_error("k_dm must be > 0");
  }
};

namespace detail {

/// Raw `key = value` lines with `#` comments; duplicate keys rejected.
inline std::map<std::string, std::string> parse_kv(std::istream& in,
                                                   const std::string& origin) {
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error(origin + ":" + std::to_string(line_no) +
                         ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw config_error(origin + ":" + std::to_string(line_no) + ": empty key");
    if (!kv.emplace(std::move(key), std::move(value)).second)
      throw config_error(origin + ":" + std::to_string(line_no) +
                         ": duplicate key '" + trim(line.substr(0, eq)) + "'");
  }
  return kv;
}

inline double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw config_error("key '" + key + "': expected a number, got '" + value + "'");
  }
}

template <typename Int>
inline Int to_int(const std::string& key, const std::string& value) {
  Int v{};
  const char* first = value.data();
  const char* last = first + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw config_error("key '" + key + "': expected an integer, got '" + value + "'");
  return v;
}

/// Pops known keys out of the map; whatever remains at the end is unknown.
class KvReader {
public:
  explicit KvReader(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

  std::optional<std::string> take(const std::string& key) {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    std::string v = std::move(it->second);
    kv_.erase(it);
    return v;
  }

  void number(const std::string& key, double& out) {
    if (auto v = take(key)) out = to_double(key, *v);
  }
  template <typename Int>
  void integer(const std::string& key, Int& out) {
    if (auto v = take(key)) out = to_int<Int>(key, *v);
  }
  void text(const std::string& key, std::string& out) {
    if (auto v = take(key)) out = std::move(*v);
  }

  void finish() const {
    if (!kv_.empty())
      throw config_error("unknown config key '" + kv_.begin()->first + "'");
  }

  bool contains_prefix(const std::string& prefix) const {
    const auto it = kv_.lower_bound(prefix);
    return it != kv_.end() && it->first.compare(0, prefix.size(), prefix) == 0;
  }

private:
  std::map<std::string, std::string> kv_;
};

inline SmoothingMode parse_smoothing_mode(const std::string& v) {
  if (v == "block_average") return SmoothingMode::block_average;
  if (v == "gaussian_decimate") return SmoothingMode::gaussian_decimate;
  throw config_error("smoothing.mode must be block_average or gaussian_decimate, got '" +
                     v + "'");
}

inline TrackMode parse_track_mode(const std::string& v) {
  if (v == "linear") return TrackMode::linear;
  if (v == "quadratic") return TrackMode::quadratic;
  throw config_error("supercluster.mode must be linear or quadratic, got '" + v + "'");
}

inline NoiseScope parse_noise_scope(const std::string& v) {
  if (v == "chunk") return NoiseScope::chunk;
  if (v == "global") return NoiseScope::global;
  throw config_error("noise_scope must be chunk or global, got '" + v + "'");
}

inline Colormap parse_colormap(const std::string& v) {
  if (v == "grayscale") return Colormap::grayscale;
  if (v == "viridis") return Colormap::viridis;
  throw config_error("render.colormap must be grayscale or viridis, got '" + v + "'");
}

inline Rgb parse_rgb(const std::string& v) {
  auto bad = [&] {
    return config_error("render.highlight must be six hex digits (rrggbb), got '" + v +
                        "'");
  };
  if (v.size() != 6) throw bad();
  Rgb rgb{};
  for (int c = 0; c < 3; ++c) {
    unsigned byte = 0;
    const auto [ptr, ec] =
        std::from_chars(v.data() + 2 * c, v.data() + 2 * c + 2, byte, 16);
    if (ec != std::errc{} || ptr != v.data() + 2 * c + 2) throw bad();
    rgb[static_cast<std::size_t>(c)] = static_cast<std::uint8_t>(byte);
  }
  return rgb;
}

inline void read_pipeline_keys(KvReader& r, PipelineConfig& cfg) {
  r.text("input_path", cfg.input_path);
  r.text("output_dir", cfg.output_dir);
  if (auto v = r.take("smoothing.mode")) cfg.smoothing.mode = parse_smoothing_mode(*v);
  r.integer("smoothing.t_factor", cfg.smoothing.t_factor);
  r.integer("smoothing.f_factor", cfg.smoothing.f_factor);
  r.number("smoothing.sigma_t_bins", cfg.smoothing.sigma_t_bins);
  r.number("smoothing.sigma_f_bins", cfg.smoothing.sigma_f_bins);
  r.number("clip.factor", cfg.clip.clip_factor);
  r.number("clip.rel_tol", cfg.clip.rel_tol);
  r.integer("clip.max_iter", cfg.clip.max_iter);
  r.number("fof.m1", cfg.fof.m1);
  r.number("fof.m2", cfg.fof.m2);
  r.integer("fof.t_gap", cfg.fof.t_gap);
  r.integer("fof.f_gap", cfg.fof.f_gap);
  if (auto v = r.take("supercluster.mode"))
    cfg.supercluster_mode = parse_track_mode(*v);
  r.number("supercluster.tol_bins", cfg.supercluster_tol_bins);
  r.number("dm_max", cfg.dm_max);
  r.integer("chunk_bins", cfg.chunk_bins);
  r.integer("workers", cfg.workers);
  if (auto v = r.take("noise_scope")) cfg.noise_scope = parse_noise_scope(*v);
  r.text("sort_key", cfg.sort_key);
  r.integer("top_k_plots", cfg.top_k_plots);
  r.number("k_dm", cfg.k_dm.k_dm);
  if (auto v = r.take("render.colormap")) cfg.render.colormap = parse_colormap(*v);
  if (auto v = r.take("render.highlight")) cfg.render.highlight = parse_rgb(*v);
  r.integer("render.max_px", cfg.render.max_px);
  r.number("render.snr_floor", cfg.render.snr_floor);
  r.number("render.snr_ceil", cfg.render.snr_ceil);
  r.integer("render.margin_bins", cfg.render_margin_bins);
}

inline void read_inject_keys(KvReader& r, InjectConfig& cfg) {
  r.text("inject.output_path", cfg.output_path);
  r.integer("inject.n_time", cfg.n_time);
  r.integer("inject.n_freq", cfg.n_freq);
  r.number("inject.dt_s", cfg.dt_s);
  r.number("inject.f0_mhz", cfg.f0_mhz);
  r.number("inject.df_mhz", cfg.df_mhz);
  r.number("inject.noise_mean", cfg.noise_mean);
  r.number("inject.noise_sigma", cfg.noise_sigma);
  r.integer("inject.seed", cfg.seed);
  r.number("k_dm", cfg.k_dm.k_dm);
  if (r.contains_prefix("inject.pulse.")) {
    PulseSpec p;
    r.number("inject.pulse.dm", p.dm);
    r.number("inject.pulse.t0_s", p.t0_s);
    r.number("inject.pulse.width_s", p.width_s);
    r.number("inject.pulse.amplitude_snr", p.amplitude_snr);
    cfg.pulse = p;
  }
}

}  // namespace detail

/// One file may carry both the pipeline and the inject namespaces (so a
/// single config drives `inject` then `run`); each parser fills its own
/// struct and checks the other namespace only for key validity.
inline PipelineConfig parse_pipeline_config(std::istream& in,
                                            const std::string& origin = "<config>") {
  detail::KvReader r(detail::parse_kv(in, origin));
  PipelineConfig cfg;
  detail::read_pipeline_keys(r, cfg);
  InjectConfig scratch;
  detail::read_inject_keys(r, scratch);
  r.finish();
  if (cfg.input_path.empty()) throw config_error("input_path is required");
  if (cfg.output_dir.empty()) throw config_error("output_dir is required");
  try {
    cfg.validate();
  } catch (const config_error&) {
    throw;
  } catch (const invalid_input& e) {
    throw config_error(e.what());  // a bad config value is a config error
  }
  return cfg;
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path.string());
  return parse_pipeline_config(in, path.string());
}

inline InjectConfig parse_inject_config(std::istream& in,
                                        const std::string& origin = "<config>") {
  detail::KvReader r(detail::parse_kv(in, origin));
  InjectConfig cfg;
  detail::read_inject_keys(r, cfg);
  PipelineConfig scratch;
  detail::read_pipeline_keys(r, scratch);
  r.finish();
  try {
    cfg.validate();
  } catch (const config_error&) {
    throw;
  } catch (const invalid_input& e) {
    throw config_error(e.what());
  }
  return cfg;
}

inline InjectConfig load_inject_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path.string());
  return parse_inject_config(in, path.string());
}

}  // namespace fofscope
