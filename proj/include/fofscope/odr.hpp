#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "fofscope/errors.hpp"

namespace fofscope {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;

  double eval(double x) const { return intercept + slope * x; }
};

/// Arrival-time track that is linear in f^-2.
struct DmFit {
  double dm = 0.0;     // pc cm^-3
  double t_ref = 0.0;  // arrival time extrapolated to infinite frequency, s
};

/// Weighted orthogonal distance regression (total least squares) of a line.
///
/// The line is the principal axis of the weighted scatter matrix of the
/// centered points. Degenerate cases return nullopt: fewer than two points,
/// non-positive total weight, coincident points, (near-)isotropic scatter
/// within 1e-12 of the trace, or a vertical best-fit line whose slope has no
/// finite value.
inline std::optional<LineFit> linear_odr(std::span<const double> x,
                                         std::span<const double> y,
                                         std::span<const double> w = {}) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) return std::nullopt;
  if (!w.empty() && w.size() != n) return std::nullopt;

  double wsum = 0.0, mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    if (wi < 0.0) return std::nullopt;
    wsum += wi;
    mx += wi * x[i];
    my += wi * y[i];
  }
  if (!(wsum > 0.0)) return std::nullopt;
  mx /= wsum;
  my /= wsum;

  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += wi * dx * dx;
    sxy += wi * dx * dy;
    syy += wi * dy * dy;
  }

  const double trace = sxx + syy;
  if (!(trace > 0.0)) return std::nullopt;  // all points coincide
  const double half_gap = std::sqrt(0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy);
  if (2.0 * half_gap <= 1e-12 * trace) return std::nullopt;  // isotropic
  const double lambda = 0.5 * trace + half_gap;  // principal eigenvalue

  // Two algebraically equivalent eigenvector forms; pick the better
  // conditioned one.
  double vx1 = sxy, vy1 = lambda - sxx;
  double vx2 = lambda - syy, vy2 = sxy;
  double vx, vy;
  if (vx1 * vx1 + vy1 * vy1 >= vx2 * vx2 + vy2 * vy2) {
    vx = vx1;
    vy = vy1;
  } else {
    vx = vx2;
    vy = vy2;
  }
  const double norm = std::sqrt(vx * vx + vy * vy);
  if (!(norm > 0.0) || std::abs(vx) <= 1e-12 * norm)
    return std::nullopt;  // vertical line

  LineFit fit;
  fit.slope = vy / vx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

/// Sum of weighted squared orthogonal distances from points to a line.
inline double orthogonal_residual_sum(std::span<const double> x,
                                      std::span<const double> y,
                                      std::span<const double> w,
                                      const LineFit& line) {
  // distance of (x, y) to y = a + b*x is |y - a - b*x| / sqrt(1 + b^2)
  const double denom = 1.0 + line.slope * line.slope;
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    const double r = y[i] - line.intercept - line.slope * x[i];
    sum += wi * r * r / denom;
  }
  return sum;
}

/// Fit a dispersion track by substituting x = f^-2 and running linear ODR on
/// (x, t). The slope divided by k_dm is the dispersion measure; the intercept
/// is the arrival time at infinite frequency. Degenerate when all
/// frequencies coincide (propagated from linear_odr).
inline std::optional<DmFit> quadratic_dm_fit(std::span<const double> f_mhz,
                                             std::span<const double> t_s,
                                             std::span<const double> w,
                                             double k_dm) {
  const std::size_t n = f_mhz.size();
  if (n < 2 || t_s.size() != n) return std::nullopt;
  if (!(k_dm > 0.0)) throw invalid_input("dispersion constant must be positive");
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(f_mhz[i] > 0.0)) throw invalid_input("frequencies must be positive");
    x[i] = 1.0 / (f_mhz[i] * f_mhz[i]);
  }
  const auto line = linear_odr(x, t_s, w);
  if (!line) return std::nullopt;
  return DmFit{line->slope / k_dm, line->intercept};
}

}  // namespace fofscope
