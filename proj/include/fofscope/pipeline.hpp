#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fofscope/config.hpp"
#include "fofscope/dispersion.hpp"
#include "fofscope/fof.hpp"
#include "fofscope/noise.hpp"
#include "fofscope/preprocess.hpp"
#include "fofscope/render.hpp"
#include "fofscope/spectrum_io.hpp"

namespace fofscope {

/// Half-open range of raw time bins handled by one worker task.
struct ChunkPlan {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
};

/// Contiguous chunks with enough overlap that any dispersion track of
/// DM <= dm_max fits whole into at least one chunk: overlap_bins covers the
/// sweep delay at the bottom of the band. The stride is kept a multiple of
/// the time decimation factor so chunked and unchunked decimation grids
/// coincide. Final chunk may be short; chunk_bins = 0 means one chunk.
inline std::vector<ChunkPlan> plan_chunks(std::size_t n_time, const PipelineConfig& cfg,
                                          double dt_s, double f0_mhz) {
  if (n_time == 0) throw invalid_input("plan_chunks: empty spectrum");
  if (cfg.chunk_bins == 0 || cfg.chunk_bins >= n_time) return {{0, n_time}};

  const double sweep_s = dispersion_delay(cfg.dm_max, f0_mhz, cfg.k_dm);
  const std::size_t overlap =
      static_cast<std::size_t>(std::ceil(sweep_s / dt_s - 1e-12));
  if (overlap >= cfg.chunk_bins)
    throw config_error("chunk_bins (" + std::to_string(cfg.chunk_bins) +
                       ") must exceed the dm_max overlap (" + std::to_string(overlap) +
                       " bins)");
  std::size_t stride = cfg.chunk_bins - overlap;
  const auto tf = static_cast<std::size_t>(cfg.smoothing.t_factor);
  if (tf > 1) {
    stride -= stride % tf;
    if (stride == 0)
      throw config_error("chunk stride collapses under time decimation factor " +
                         std::to_string(tf));
  }

  std::vector<ChunkPlan> plan;
  for (std::size_t start = 0;; start += stride) {
    const std::size_t end = std::min(start + cfg.chunk_bins, n_time);
    plan.push_back({start, end});
    if (end == n_time) break;
  }
  return plan;
}

/// One output row: a surviving cluster in absolute coordinates.
struct CandidateRecord {
  int id = 0;     // global, assigned after the cross-chunk merge
  int chunk = 0;
  double t_start_s = 0.0, t_end_s = 0.0;      // absolute bin-center times
  double f_start_mhz = 0.0, f_end_mhz = 0.0;  // channel-center frequencies
  ClusterMetrics metrics{};
  int supercluster_id = 0;
  std::vector<Pixel> pixels;  // bins local to the chunk's processed grid
};

inline const char* candidates_header() {
  return "id\tchunk\tt_start_s\tt_end_s\tf_start_mhz\tf_end_mhz\tn_pixels\t"
         "cluster_snr\tsignal_mean\tsignal_max\tsnr_mean\tsnr_max\t"
         "slope_s_per_mhz\tdm_pc_cm3\tsupercluster_id";
}

namespace detail {

/// Sort statistic for a record; absent optional fits sort below everything.
inline double sort_value(const CandidateRecord& r, const std::string& key) {
  const ClusterMetrics& m = r.metrics;
  if (key == "n_pixels") return static_cast<double>(m.n_pixels);
  if (key == "cluster_snr") return m.cluster_snr;
  if (key == "signal_mean") return m.signal_mean;
  if (key == "signal_max") return m.signal_max;
  if (key == "snr_mean") return m.snr_mean;
  if (key == "snr_max") return m.snr_max;
  if (key == "slope")
    return m.line ? m.line->slope : -std::numeric_limits<double>::infinity();
  if (key == "dm")
    return m.dm ? m.dm->dm : -std::numeric_limits<double>::infinity();
  throw config_error("unknown sort key '" + key + "'");
}

inline std::string format_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::string candidate_line(const CandidateRecord& r) {
  const ClusterMetrics& m = r.metrics;
  std::string line;
  line += std::to_string(r.id);
  line += '\t';
  line += std::to_string(r.chunk);
  for (double v : {r.t_start_s, r.t_end_s, r.f_start_mhz, r.f_end_mhz}) {
    line += '\t';
    line += format_g(v);
  }
  line += '\t';
  line += std::to_string(m.n_pixels);
  for (double v : {m.cluster_snr, m.signal_mean, m.signal_max, m.snr_mean, m.snr_max}) {
    line += '\t';
    line += format_g(v);
  }
  line += '\t';
  line += m.line ? format_g(m.line->slope) : "NA";
  line += '\t';
  line += m.dm ? format_g(m.dm->dm) : "NA";
  line += '\t';
  line += std::to_string(r.supercluster_id);
  return line;
}

}  // namespace detail

/// Sorts by the chosen statistic descending (ties broken by ascending id)
/// and writes the tab-separated table. The order of `records` is unchanged.
inline void write_candidates(std::vector<CandidateRecord> records,
                             const std::string& sort_key,
                             const std::filesystem::path& path) {
  if (!PipelineConfig::is_sort_key(sort_key))
    throw config_error("sort_key must name a cluster metric, got '" + sort_key + "'");
  std::sort(records.begin(), records.end(),
            [&](const CandidateRecord& a, const CandidateRecord& b) {
              const double va = detail::sort_value(a, sort_key);
              const double vb = detail::sort_value(b, sort_key);
              return va != vb ? va > vb : a.id < b.id;
            });
  std::ofstream out(path, std::ios::binary);  // binary: byte-identical across platforms
  if (!out) throw format_error(format_error::reason::io,
                               "cannot open candidates file for writing: " +
                                   path.string());
  out << candidates_header() << "\n";
  for (const CandidateRecord& r : records) out << detail::candidate_line(r) << "\n";
  if (!out) throw format_error(format_error::reason::io,
                               "short write on candidates file: " + path.string());
}

struct RunSummary {
  std::size_t n_chunks = 0;
  std::size_t n_candidates = 0;
  std::filesystem::path candidates_path;
  std::vector<std::filesystem::path> plot_paths;
};

namespace detail {

struct ChunkOutput {
  std::vector<CandidateRecord> records;  // ids are chunk-local at this point
  std::optional<std::string> error_stage;
  std::string error_what;
};

/// preprocess -> noise -> fof for one chunk, in that chunk's absolute frame.
inline std::vector<CandidateRecord> process_chunk(const DynamicSpectrum& raw,
                                                  const ChunkPlan& span, int chunk_idx,
                                                  const PipelineConfig& cfg,
                                                  const std::optional<NoiseEstimate>&
                                                      global_noise,
                                                  std::string& stage) {
  stage = "preprocess";
  const DynamicSpectrum processed =
      preprocess(slice_time(raw, span.start, span.end), cfg.smoothing);

  stage = "noise";
  const NoiseEstimate noise =
      global_noise ? *global_noise : estimate_background(processed, cfg.clip);

  stage = "fof";
  const FofResult fof = run_fof(processed, noise, cfg.fof, cfg.supercluster_mode,
                                cfg.supercluster_tol_bins, cfg.k_dm);

  std::vector<CandidateRecord> records;
  records.reserve(fof.clusters.size());
  for (const Cluster& c : fof.clusters) {
    CandidateRecord r;
    r.id = c.id;  // local until merge
    r.chunk = chunk_idx;
    r.metrics = c.metrics;
    r.pixels = c.pixels;
    r.t_start_s = processed.time_at(c.metrics.t_start_bin);
    r.t_end_s = processed.time_at(c.metrics.t_end_bin);
    r.f_start_mhz = processed.freq_at(c.metrics.f_start_bin);
    r.f_end_mhz = processed.freq_at(c.metrics.f_end_bin);
    r.supercluster_id = -1;
    for (const Supercluster& sc : fof.superclusters)
      if (std::binary_search(sc.member_ids.begin(), sc.member_ids.end(), c.id)) {
        r.supercluster_id = sc.id;  // local; globalized after merge
        break;
      }
    records.push_back(std::move(r));
  }
  return records;
}

inline bool boxes_overlap(const CandidateRecord& a, const CandidateRecord& b) {
  return a.t_start_s <= b.t_end_s && b.t_start_s <= a.t_end_s &&
         a.f_start_mhz <= b.f_end_mhz && b.f_start_mhz <= a.f_end_mhz;
}

}  // namespace detail

/// End-to-end run: plan chunks, process them on a worker pool, merge with
/// cross-overlap de-duplication, write the sorted candidates table, render
/// the top candidates. Output bytes do not depend on the worker count: all
/// cross-chunk decisions happen after a deterministic merge.
inline RunSummary run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();

  DynamicSpectrum raw = [&] {
    try {
      return read_dsf(cfg.input_path);
    } catch (const format_error&) {
      throw;
    } catch (const std::exception& e) {
      throw format_error(format_error::reason::io,
                         std::string("cannot read input: ") + e.what());
    }
  }();

  std::filesystem::create_directories(cfg.output_dir);
  const std::vector<ChunkPlan> plan =
      plan_chunks(raw.n_time(), cfg, raw.dt_s(), raw.f0_mhz());

  // Global noise scope: one statistic for every chunk, taken from the whole
  // processed file (chunk scope estimates per chunk instead).
  std::optional<NoiseEstimate> global_noise;
  if (cfg.noise_scope == NoiseScope::global) {
    try {
      global_noise = estimate_background(preprocess(raw, cfg.smoothing), cfg.clip);
    } catch (const std::exception& e) {
      throw stage_error(0, "noise", e.what());
    }
  }

  std::vector<detail::ChunkOutput> outputs(plan.size());
  {
    const std::size_t n_workers =
        std::max<std::size_t>(1, std::min<std::size_t>(cfg.workers, plan.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t c = next.fetch_add(1); c < plan.size(); c = next.fetch_add(1)) {
        std::string stage = "preprocess";
        try {
          outputs[c].records = detail::process_chunk(raw, plan[c], static_cast<int>(c),
                                                     cfg, global_noise, stage);
        } catch (const std::exception& e) {
          outputs[c].error_stage = stage;
          outputs[c].error_what = e.what();
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (std::size_t c = 0; c < outputs.size(); ++c)
    if (outputs[c].error_stage)
      throw stage_error(c, *outputs[c].error_stage, outputs[c].error_what);

  // Merge in chunk order, then drop overlap duplicates: strongest first,
  // a record dies if a kept record from another chunk overlaps its box.
  std::vector<CandidateRecord> merged;
  for (detail::ChunkOutput& out : outputs)
    for (CandidateRecord& r : out.records) merged.push_back(std::move(r));

  std::vector<std::size_t> order(merged.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double sa = merged[a].metrics.cluster_snr;
    const double sb = merged[b].metrics.cluster_snr;
    if (sa != sb) return sa > sb;
    if (merged[a].chunk != merged[b].chunk) return merged[a].chunk < merged[b].chunk;
    return merged[a].id < merged[b].id;
  });
  std::vector<std::size_t> kept_idx;
  for (std::size_t i : order) {
    bool duplicate = false;
    for (std::size_t k : kept_idx) {
      if (merged[k].chunk != merged[i].chunk &&
          detail::boxes_overlap(merged[k], merged[i])) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) kept_idx.push_back(i);
  }
  std::sort(kept_idx.begin(), kept_idx.end());  // back to (chunk, local id) order

  // Global cluster ids follow (chunk, local id); supercluster ids follow
  // first appearance among survivors.
  std::vector<CandidateRecord> candidates;
  candidates.reserve(kept_idx.size());
  std::map<std::pair<int, int>, int> sc_ids;
  for (std::size_t i : kept_idx) {
    CandidateRecord r = std::move(merged[i]);
    r.id = static_cast<int>(candidates.size());
    const std::pair<int, int> key{r.chunk, r.supercluster_id};
    const auto [it, fresh] = sc_ids.emplace(key, static_cast<int>(sc_ids.size()));
    r.supercluster_id = it->second;
    (void)fresh;
    candidates.push_back(std::move(r));
  }

  RunSummary summary;
  summary.n_chunks = plan.size();
  summary.n_candidates = candidates.size();
  summary.candidates_path = std::filesystem::path(cfg.output_dir) / "candidates.tsv";
  try {
    write_candidates(candidates, cfg.sort_key, summary.candidates_path);
  } catch (const config_error&) {
    throw;
  } catch (const std::exception& e) {
    throw stage_error(0, "write", e.what());
  }

  if (cfg.top_k_plots > 0 && !candidates.empty()) {
    std::vector<std::size_t> by_key(candidates.size());
    for (std::size_t i = 0; i < by_key.size(); ++i) by_key[i] = i;
    std::sort(by_key.begin(), by_key.end(), [&](std::size_t a, std::size_t b) {
      const double va = detail::sort_value(candidates[a], cfg.sort_key);
      const double vb = detail::sort_value(candidates[b], cfg.sort_key);
      return va != vb ? va > vb : candidates[a].id < candidates[b].id;
    });
    by_key.resize(std::min<std::size_t>(cfg.top_k_plots, by_key.size()));

    // Chunks are re-derived on demand (and cached) so plotting does not
    // require holding every processed chunk in memory.
    std::map<int, std::pair<DynamicSpectrum, NoiseEstimate>> cache;
    for (std::size_t i : by_key) {
      const CandidateRecord& r = candidates[i];
      try {
        auto it = cache.find(r.chunk);
        if (it == cache.end()) {
          const ChunkPlan& span = plan[static_cast<std::size_t>(r.chunk)];
          DynamicSpectrum processed =
              preprocess(slice_time(raw, span.start, span.end), cfg.smoothing);
          NoiseEstimate noise = global_noise
                                    ? *global_noise
                                    : estimate_background(processed, cfg.clip);
          it = cache.emplace(r.chunk, std::make_pair(std::move(processed), noise))
                   .first;
        }
        const auto& [processed, noise] = it->second;
        const CutoutExtent bbox{r.metrics.t_start_bin, r.metrics.t_end_bin,
                                r.metrics.f_start_bin, r.metrics.f_end_bin};
        std::filesystem::path path = std::filesystem::path(cfg.output_dir) /
                                     ("candidate_" + std::to_string(r.id) + ".ppm");
        render_candidate(processed, noise, r.pixels, bbox, cfg.render_margin_bins,
                         cfg.render, path);
        summary.plot_paths.push_back(std::move(path));
      } catch (const std::exception& e) {
        throw stage_error(static_cast<std::size_t>(r.chunk), "render", e.what());
      }
    }
  }
  return summary;
}

}  // namespace fofscope
