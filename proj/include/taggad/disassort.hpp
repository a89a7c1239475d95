#pragma once

#include <optional>
#include <span>

#include "taggad/common.hpp"

namespace taggad {

// Gaussian KDE evaluated on an even grid. Densities are rescaled so their
// trapezoid integral over the grid is exactly 1, which keeps the divergence
// machinery on proper distributions despite the finite grid.
struct KdeDensity {
  std::vector<double> samples;
  double bandwidth = 0.0;
  std::vector<double> grid;
  std::vector<double> densities;

  bool same_grid_as(const KdeDensity& other) const {
    return grid.size() == other.grid.size() && !grid.empty() &&
           grid.front() == other.grid.front() && grid.back() == other.grid.back();
  }
};

inline constexpr int kDefaultKdeGridPoints = 512;
inline constexpr double kBandwidthFloor = 1e-3;

// Silverman's rule with an absolute floor: 0.9 * min(std, IQR/1.34) * n^(-1/5).
inline double silverman_bandwidth(std::span<const double> samples) {
  const size_t n = samples.size();
  require(n >= 2, "silverman_bandwidth: need at least 2 samples");
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= double(n);
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  double sd = std::sqrt(ss / double(n - 1));

  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    double pos = q * double(n - 1);
    size_t lo = size_t(pos);
    size_t hi = std::min(lo + 1, n - 1);
    double frac = pos - double(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
  };
  double iqr = quantile(0.75) - quantile(0.25);

  double spread = std::min(sd, iqr / 1.34);
  double h = 0.9 * spread * std::pow(double(n), -0.2);
  return std::max(h, kBandwidthFloor);
}

namespace detail {

inline KdeDensity kde_eval(std::span<const double> samples, double h, double lo,
                           double hi, int grid_points) {
  KdeDensity k;
  k.samples.assign(samples.begin(), samples.end());
  k.bandwidth = h;
  k.grid.resize(size_t(grid_points));
  k.densities.assign(size_t(grid_points), 0.0);
  const double step = grid_points > 1 ? (hi - lo) / double(grid_points - 1) : 0.0;
  for (int g = 0; g < grid_points; ++g) k.grid[size_t(g)] = lo + step * double(g);

  const double inv_2h2 = 1.0 / (2.0 * h * h);
  const double norm = 1.0 / (double(samples.size()) * h * std::sqrt(2.0 * M_PI));
  for (int g = 0; g < grid_points; ++g) {
    double x = k.grid[size_t(g)];
    double acc = 0.0;
    for (double s : samples) {
      double d = x - s;
      acc += std::exp(-d * d * inv_2h2);
    }
    k.densities[size_t(g)] = norm * acc;
  }

  // rescale to unit trapezoid mass on the grid
  double mass = 0.0;
  for (int g = 0; g + 1 < grid_points; ++g)
    mass += 0.5 * (k.densities[size_t(g)] + k.densities[size_t(g) + 1]) * step;
  if (mass > 0.0)
    for (double& d : k.densities) d /= mass;
  return k;
}

inline double trapezoid(const std::vector<double>& y, double step) {
  double acc = 0.0;
  for (size_t i = 0; i + 1 < y.size(); ++i) acc += 0.5 * (y[i] + y[i + 1]);
  return acc * step;
}

}  // namespace detail

struct GridHint {
  double lo = 0.0;
  double hi = 0.0;
};

inline KdeDensity kde_fit(std::span<const double> samples,
                          std::optional<GridHint> grid_hint = std::nullopt,
                          int grid_points = kDefaultKdeGridPoints) {
  require(samples.size() >= 2, "kde_fit: need at least 2 samples");
  require(grid_points >= 2, "kde_fit: need at least 2 grid points");
  for (double s : samples)
    require(std::isfinite(s), "kde_fit: non-finite sample");
  double h = silverman_bandwidth(samples);
  double lo, hi;
  if (grid_hint) {
    lo = grid_hint->lo;
    hi = grid_hint->hi;
    require(hi > lo, "kde_fit: degenerate grid hint");
  } else {
    auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    lo = *mn - 3.0 * h;
    hi = *mx + 3.0 * h;
  }
  return detail::kde_eval(samples, h, lo, hi, grid_points);
}

// Fits both sample sets on one shared grid spanning the union of their
// [min - 3h, max + 3h] supports. Required before js_distance.
inline std::pair<KdeDensity, KdeDensity> kde_fit_pair(
    std::span<const double> a, std::span<const double> b,
    int grid_points = kDefaultKdeGridPoints) {
  require(a.size() >= 2 && b.size() >= 2, "kde_fit_pair: need at least 2 samples per set");
  double ha = silverman_bandwidth(a);
  double hb = silverman_bandwidth(b);
  auto [amn, amx] = std::minmax_element(a.begin(), a.end());
  auto [bmn, bmx] = std::minmax_element(b.begin(), b.end());
  GridHint hint{std::min(*amn - 3.0 * ha, *bmn - 3.0 * hb),
                std::max(*amx + 3.0 * ha, *bmx + 3.0 * hb)};
  return {detail::kde_eval(a, ha, hint.lo, hint.hi, grid_points),
          detail::kde_eval(b, hb, hint.lo, hint.hi, grid_points)};
}

// Jensen-Shannon distance sqrt(1/2 KL(p||m) + 1/2 KL(q||m)), m = (p+q)/2,
// base-2 logarithms, trapezoid integration with a 1e-12 density floor inside
// the log ratio. In [0, 1 + 1e-6]; the bound of 1 needs base-2 logs.
inline double js_distance(const KdeDensity& p, const KdeDensity& q) {
  require(p.same_grid_as(q), "js_distance: densities use different grids");
  constexpr double kFloor = 1e-12;
  const size_t g = p.grid.size();
  const double step = (p.grid.back() - p.grid.front()) / double(g - 1);
  std::vector<double> kl_p(g), kl_q(g);
  for (size_t i = 0; i < g; ++i) {
    double pi = p.densities[i];
    double qi = q.densities[i];
    double mi = std::max(0.5 * (pi + qi), kFloor);
    kl_p[i] = pi <= 0.0 ? 0.0 : pi * std::log2(std::max(pi, kFloor) / mi);
    kl_q[i] = qi <= 0.0 ? 0.0 : qi * std::log2(std::max(qi, kFloor) / mi);
  }
  double kp = std::max(0.0, detail::trapezoid(kl_p, step));
  double kq = std::max(0.0, detail::trapezoid(kl_q, step));
  return std::sqrt(0.5 * kp + 0.5 * kq);
}

// JS distance between the KDE of source and target node-level anomaly score
// samples. Both sides are expected min-max normalized per graph. Truncates
// the up-to-1e-6 discretization overshoot so the result stays in [0,1].
inline double node_disassort(std::span<const double> source_node_scores,
                             std::span<const double> target_node_scores,
                             int grid_points = kDefaultKdeGridPoints) {
  auto [p, q] = kde_fit_pair(source_node_scores, target_node_scores, grid_points);
  return std::min(1.0, js_distance(p, q));
}

// Identical construction on the structure channel (1 - normalized affinity).
inline double struct_disassort(std::span<const double> source_struct_scores,
                               std::span<const double> target_struct_scores,
                               int grid_points = kDefaultKdeGridPoints) {
  auto [p, q] = kde_fit_pair(source_struct_scores, target_struct_scores, grid_points);
  return std::min(1.0, js_distance(p, q));
}

// |nd - sd| ^ (1 + (nd + sd)/2), with 0^e = 0.
inline double anomaly_disassort(double nd, double sd) {
  require(nd >= 0.0 && nd <= 1.0, "anomaly_disassort: nd outside [0,1]");
  require(sd >= 0.0 && sd <= 1.0, "anomaly_disassort: sd outside [0,1]");
  double base = std::abs(nd - sd);
  if (base == 0.0) return 0.0;
  return std::pow(base, 1.0 + 0.5 * (nd + sd));
}

// Smoothed min-max normalization of AD values across domains:
// (ad - min + d) / (max - min + 2d) with d = 0.01. Monotone in ad; a list of
// equal values maps to all-0.5.
inline std::vector<double> ad_star(std::span<const double> ads) {
  require(ads.size() >= 2, "ad_star: need at least 2 domains");
  constexpr double kDelta = 0.01;
  auto [mn_it, mx_it] = std::minmax_element(ads.begin(), ads.end());
  double mn = *mn_it, mx = *mx_it;
  std::vector<double> out;
  out.reserve(ads.size());
  for (double ad : ads) out.push_back((ad - mn + kDelta) / (mx - mn + 2.0 * kDelta));
  return out;
}

// KDE-ready score sample sets for one domain.
struct DomainProfile {
  std::vector<double> node_scores;    // normalized residual-channel samples
  std::vector<double> struct_scores;  // normalized (1 - affinity) samples
};

struct DisassortReport {
  double nd = 0.0;
  double sd = 0.0;
  double ad = 0.0;
  std::optional<double> ad_star;
  double h_node_source = 0.0, h_node_target = 0.0;
  double h_struct_source = 0.0, h_struct_target = 0.0;
  int64_t n_source = 0, n_target = 0;
};

inline DisassortReport disassort_report(const DomainProfile& source,
                                        const DomainProfile& target,
                                        int grid_points = kDefaultKdeGridPoints) {
  DisassortReport r;
  auto [pn, qn] = kde_fit_pair(source.node_scores, target.node_scores, grid_points);
  auto [ps, qs] = kde_fit_pair(source.struct_scores, target.struct_scores, grid_points);
  r.nd = std::min(1.0, js_distance(pn, qn));
  r.sd = std::min(1.0, js_distance(ps, qs));
  r.ad = anomaly_disassort(r.nd, r.sd);
  r.h_node_source = pn.bandwidth;
  r.h_node_target = qn.bandwidth;
  r.h_struct_source = ps.bandwidth;
  r.h_struct_target = qs.bandwidth;
  r.n_source = int64_t(source.node_scores.size());
  r.n_target = int64_t(target.node_scores.size());
  return r;
}

}  // namespace taggad
