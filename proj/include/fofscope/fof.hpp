#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "fofscope/dispersion.hpp"
#include "fofscope/noise.hpp"
#include "fofscope/odr.hpp"
#include "fofscope/spectrum.hpp"

namespace fofscope {

/// Friends-Of-Friends tunables. m1 thresholds single pixels in units of the
/// background RMS; m2 thresholds whole clusters on their summed pixel SNR.
/// The gaps bound the per-axis bin separation of friendship.
struct FofParams {
  double m1 = 5.0;
  double m2 = 10.0;
  int t_gap = 1;
  int f_gap = 1;

  void validate() const {
    if (!(m1 > 0.0) || m2 < 0.0 || t_gap < 1 || f_gap < 1)
      throw invalid_input("fof params: m1 > 0, m2 >= 0, gaps >= 1");
  }
};

struct Pixel {
  int t_bin = 0;
  int f_bin = 0;
  double intensity = 0.0;
  double snr = 0.0;
};

struct ClusterMetrics {
  std::size_t n_pixels = 0;
  double cluster_snr = 0.0;  // summed pixel SNR = snr_mean * n_pixels
  double signal_mean = 0.0;  // mean of mean-subtracted intensity
  double signal_max = 0.0;
  double snr_mean = 0.0;
  double snr_max = 0.0;
  std::size_t t_start_bin = 0, t_end_bin = 0;  // inclusive extents
  std::size_t f_start_bin = 0, f_end_bin = 0;
  std::optional<LineFit> line;  // slope in s/MHz over (f_mhz, t_s)
  std::optional<DmFit> dm;      // from the f^-2 track fit
};

struct Cluster {
  int id = 0;
  std::vector<Pixel> pixels;      // row-major (t, then f)
  ClusterMetrics metrics{};       // filled by compute_metrics / run_fof
};

enum class TrackMode { linear, quadratic };

struct Supercluster {
  int id = 0;
  std::vector<int> member_ids;  // ascending cluster ids
  TrackMode mode = TrackMode::linear;
  std::optional<LineFit> line;  // refit over all member pixels, linear mode
  std::optional<DmFit> quad;    // refit over all member pixels, quadratic mode
  double combined_snr = 0.0;    // sum of member cluster_snr
};

/// All pixels whose SNR is at least m1, in row-major (t, then f) order.
inline std::vector<Pixel> threshold_pixels(const DynamicSpectrum& s,
                                           const NoiseEstimate& noise, double m1) {
  if (!(noise.rms > 0.0))
    throw invalid_input("threshold_pixels undefined for zero-RMS background");
  std::vector<Pixel> marked;
  const auto data = s.data();
  const double inv_rms = 1.0 / noise.rms;
  for (std::size_t t = 0; t < s.n_time(); ++t) {
    const double* row = data.data() + t * s.n_freq();
    for (std::size_t f = 0; f < s.n_freq(); ++f) {
      const double snr = (row[f] - noise.mean) * inv_rms;
      if (snr >= m1)
        marked.push_back({static_cast<int>(t), static_cast<int>(f), row[f], snr});
    }
  }
  return marked;
}

namespace detail {

class UnionFind {
public:
  explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];  // path halving
      i = parent_[i];
    }
    return i;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }

private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

}  // namespace detail

/// Partition pixels into the transitive closure of the friendship relation:
/// p, q are friends iff |p.t - q.t| <= t_gap and |p.f - q.f| <= f_gap.
/// The partition does not depend on input order. Clusters are ordered by
/// (min t_bin, min f_bin) and assigned ids 0..k-1 in that order; pixels
/// within a cluster are row-major. Metrics are left for compute_metrics.
inline std::vector<Cluster> cluster_pixels(std::vector<Pixel> pixels, int t_gap,
                                           int f_gap) {
  if (t_gap < 1 || f_gap < 1) throw invalid_input("cluster gaps must be >= 1");
  if (pixels.empty()) return {};

  std::sort(pixels.begin(), pixels.end(), [](const Pixel& a, const Pixel& b) {
    return a.t_bin != b.t_bin ? a.t_bin < b.t_bin : a.f_bin < b.f_bin;
  });
  const std::size_t n = pixels.size();

  // Rows of marked pixels keyed by t_bin; each row's f_bins ascend, so the
  // neighbourhood of a pixel is a binary search plus a short scan. Linking
  // backward rows only is enough: friendship is symmetric.
  std::vector<int> row_t;
  std::vector<std::size_t> row_begin;
  for (std::size_t i = 0; i < n; ++i) {
    if (row_t.empty() || pixels[i].t_bin != row_t.back()) {
      row_t.push_back(pixels[i].t_bin);
      row_begin.push_back(i);
    }
  }
  row_begin.push_back(n);

  detail::UnionFind uf(n);
  for (std::size_t r = 0; r < row_t.size(); ++r) {
    // candidate partner rows: t in [row_t[r] - t_gap, row_t[r]]
    std::size_t r2 = r;
    while (r2 > 0 && row_t[r2 - 1] >= row_t[r] - t_gap) --r2;
    for (std::size_t i = row_begin[r]; i < row_begin[r + 1]; ++i) {
      const int f = pixels[i].f_bin;
      for (std::size_t q = r2; q <= r; ++q) {
        const std::size_t lo = row_begin[q], hi = row_begin[q + 1];
        std::size_t j = lo + static_cast<std::size_t>(std::lower_bound(
                                 pixels.begin() + static_cast<std::ptrdiff_t>(lo),
                                 pixels.begin() + static_cast<std::ptrdiff_t>(hi),
                                 f - f_gap,
                                 [](const Pixel& p, int v) { return p.f_bin < v; }) -
                             (pixels.begin() + static_cast<std::ptrdiff_t>(lo)));
        for (; j < hi && pixels[j].f_bin <= f + f_gap; ++j) {
          if (j == i) continue;
          uf.unite(i, j);
        }
      }
    }
  }

  // Gather components in first-pixel order; pixels are already row-major, so
  // a component's first occurrence carries its (min t, min f) up to ties.
  std::vector<std::size_t> root_to_cluster(n, static_cast<std::size_t>(-1));
  std::vector<Cluster> clusters;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = uf.find(i);
    if (root_to_cluster[root] == static_cast<std::size_t>(-1)) {
      root_to_cluster[root] = clusters.size();
      clusters.emplace_back();
    }
    clusters[root_to_cluster[root]].pixels.push_back(pixels[i]);
  }

  auto key = [](const Cluster& c) {
    int min_t = c.pixels.front().t_bin;  // row-major: first pixel has min t
    int min_f = c.pixels.front().f_bin;
    for (const Pixel& p : c.pixels) min_f = std::min(min_f, p.f_bin);
    return std::pair<int, int>(min_t, min_f);
  };
  std::stable_sort(clusters.begin(), clusters.end(),
                   [&](const Cluster& a, const Cluster& b) { return key(a) < key(b); });
  for (std::size_t i = 0; i < clusters.size(); ++i)
    clusters[i].id = static_cast<int>(i);
  return clusters;
}

/// Step-5 metrics for one pixel group. Track fits use points
/// (channel center MHz, bin time s) weighted by pixel SNR; they are omitted
/// for degenerate geometry (single pixel, or all pixels sharing one time or
/// one frequency bin). `with_fits = false` skips the fits entirely.
inline ClusterMetrics compute_metrics(std::span<const Pixel> pixels,
                                      const NoiseEstimate& noise,
                                      const DynamicSpectrum& s,
                                      DispersionConstant k = {},
                                      bool with_fits = true) {
  if (pixels.empty()) throw invalid_input("compute_metrics: empty cluster");
  ClusterMetrics m;
  m.n_pixels = pixels.size();

  double snr_sum = 0.0, int_sum = 0.0;
  double snr_max = pixels[0].snr, int_max = pixels[0].intensity;
  int t_min = pixels[0].t_bin, t_max = pixels[0].t_bin;
  int f_min = pixels[0].f_bin, f_max = pixels[0].f_bin;
  for (const Pixel& p : pixels) {
    snr_sum += p.snr;
    int_sum += p.intensity;
    snr_max = std::max(snr_max, p.snr);
    int_max = std::max(int_max, p.intensity);
    t_min = std::min(t_min, p.t_bin);
    t_max = std::max(t_max, p.t_bin);
    f_min = std::min(f_min, p.f_bin);
    f_max = std::max(f_max, p.f_bin);
  }
  const double count = static_cast<double>(m.n_pixels);
  m.cluster_snr = snr_sum;
  m.snr_mean = snr_sum / count;
  m.snr_max = snr_max;
  m.signal_mean = int_sum / count - noise.mean;
  m.signal_max = int_max - noise.mean;
  m.t_start_bin = static_cast<std::size_t>(t_min);
  m.t_end_bin = static_cast<std::size_t>(t_max);
  m.f_start_bin = static_cast<std::size_t>(f_min);
  m.f_end_bin = static_cast<std::size_t>(f_max);

  if (with_fits && t_min != t_max && f_min != f_max) {
    std::vector<double> fs(pixels.size()), ts(pixels.size()), ws(pixels.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      fs[i] = s.freq_at(static_cast<std::size_t>(pixels[i].f_bin));
      ts[i] = s.time_at(static_cast<std::size_t>(pixels[i].t_bin));
      ws[i] = pixels[i].snr;
    }
    m.line = linear_odr(fs, ts, ws);
    m.dm = quadratic_dm_fit(fs, ts, ws, k.k_dm);
  }
  return m;
}

/// Keep clusters whose summed pixel SNR is at least m2 (inclusive),
/// preserving order and ids.
inline std::vector<Cluster> filter_clusters(std::vector<Cluster> clusters, double m2) {
  std::vector<Cluster> kept;
  kept.reserve(clusters.size());
  for (auto& c : clusters)
    if (c.metrics.cluster_snr >= m2) kept.push_back(std::move(c));
  return kept;
}

namespace detail {

struct TrackCentroid {
  double f_mhz = 0.0;
  double t_s = 0.0;
};

inline TrackCentroid snr_weighted_centroid(const Cluster& c, const DynamicSpectrum& s) {
  double wsum = 0.0, fsum = 0.0, tsum = 0.0;
  for (const Pixel& p : c.pixels) {
    const double w = p.snr;
    wsum += w;
    fsum += w * s.freq_at(static_cast<std::size_t>(p.f_bin));
    tsum += w * s.time_at(static_cast<std::size_t>(p.t_bin));
  }
  if (wsum <= 0.0) {
    const double n = static_cast<double>(c.pixels.size());
    for (const Pixel& p : c.pixels) {
      fsum += s.freq_at(static_cast<std::size_t>(p.f_bin));
      tsum += s.time_at(static_cast<std::size_t>(p.t_bin));
    }
    return {fsum / n, tsum / n};
  }
  return {fsum / wsum, tsum / wsum};
}

}  // namespace detail

/// Group clusters whose fitted tracks, extrapolated across the band, pass
/// through each other's centroids. A and B link only if each track predicts
/// the other's centroid time within tol_bins * dt (mutual agreement, so one
/// wild fit cannot absorb unrelated clusters). Clusters without the chosen
/// fit stay singletons. Superclusters are ordered by smallest member id and
/// carry a track refit over the union of member pixels.
inline std::vector<Supercluster> form_superclusters(std::span<const Cluster> clusters,
                                                    TrackMode mode, double tol_bins,
                                                    const DynamicSpectrum& s,
                                                    DispersionConstant k = {}) {
  const std::size_t n = clusters.size();
  std::vector<Supercluster> out;
  if (n == 0) return out;
  if (tol_bins < 0.0) throw invalid_input("supercluster tolerance must be >= 0");

  std::vector<detail::TrackCentroid> centroids(n);
  for (std::size_t i = 0; i < n; ++i)
    centroids[i] = detail::snr_weighted_centroid(clusters[i], s);

  auto track_time = [&](const Cluster& c, double f_mhz) -> std::optional<double> {
    if (mode == TrackMode::linear) {
      if (!c.metrics.line) return std::nullopt;
      return c.metrics.line->eval(f_mhz);
    }
    if (!c.metrics.dm) return std::nullopt;
    return c.metrics.dm->t_ref + k.k_dm * c.metrics.dm->dm / (f_mhz * f_mhz);
  };

  const double tol_s = tol_bins * s.dt_s();
  detail::UnionFind uf(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const auto t_ab = track_time(clusters[a], centroids[b].f_mhz);
      const auto t_ba = track_time(clusters[b], centroids[a].f_mhz);
      if (!t_ab || !t_ba) continue;
      if (std::abs(*t_ab - centroids[b].t_s) <= tol_s &&
          std::abs(*t_ba - centroids[a].t_s) <= tol_s)
        uf.unite(a, b);
    }
  }

  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> root_to_group(n, static_cast<std::size_t>(-1));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = uf.find(i);
    if (root_to_group[root] == static_cast<std::size_t>(-1)) {
      root_to_group[root] = groups.size();
      groups.emplace_back();
    }
    groups[root_to_group[root]].push_back(i);
  }
  std::sort(groups.begin(), groups.end(),
            [&](const auto& a, const auto& b) {
              return clusters[a.front()].id < clusters[b.front()].id;
            });

  for (std::size_t g = 0; g < groups.size(); ++g) {
    Supercluster sc;
    sc.id = static_cast<int>(g);
    sc.mode = mode;
    std::vector<double> fs, ts, ws;
    for (std::size_t idx : groups[g]) {
      const Cluster& c = clusters[idx];
      sc.member_ids.push_back(c.id);
      sc.combined_snr += c.metrics.cluster_snr;
      for (const Pixel& p : c.pixels) {
        fs.push_back(s.freq_at(static_cast<std::size_t>(p.f_bin)));
        ts.push_back(s.time_at(static_cast<std::size_t>(p.t_bin)));
        ws.push_back(p.snr);
      }
    }
    std::sort(sc.member_ids.begin(), sc.member_ids.end());
    if (mode == TrackMode::linear)
      sc.line = linear_odr(fs, ts, ws);
    else
      sc.quad = quadratic_dm_fit(fs, ts, ws, k.k_dm);
    out.push_back(std::move(sc));
  }
  return out;
}

struct FofResult {
  std::vector<Cluster> clusters;
  std::vector<Supercluster> superclusters;
};

/// The full detection chain of one spectrum: threshold, cluster, metrics,
/// m2 filter, superclusters.
inline FofResult run_fof(const DynamicSpectrum& s, const NoiseEstimate& noise,
                         const FofParams& params, TrackMode mode, double tol_bins,
                         DispersionConstant k = {}) {
  params.validate();
  FofResult r;
  r.clusters = cluster_pixels(threshold_pixels(s, noise, params.m1), params.t_gap,
                              params.f_gap);
  for (Cluster& c : r.clusters)
    c.metrics = compute_metrics(c.pixels, noise, s, k, true);
  r.clusters = filter_clusters(std::move(r.clusters), params.m2);
  r.superclusters = form_superclusters(r.clusters, mode, tol_bins, s, k);
  return r;
}

}  // namespace fofscope
