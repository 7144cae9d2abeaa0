#pragma once

// Trajectory error metrics (RMSE / ME / MaxE / SD in ENU), empirical CDF with
// linear-interpolation percentiles, and histogram (PDF) bin data.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "navfuse/geo.hpp"
#include "navfuse/types.hpp"

namespace navfuse {

enum class ErrorMode { Horizontal2d, Full3d };

struct ErrorMetrics {
  double rmse{0.0};
  double mean_error{0.0};
  double max_error{0.0};
  double std_dev{0.0};
  double rmse_east{0.0};
  double rmse_north{0.0};
  double rmse_up{0.0};
  int count{0};
  int unmatched{0};
};

namespace detail {

inline double median_spacing(const Trajectory& t) {
  if (t.size() < 2) return 1.0;
  std::vector<double> gaps;
  gaps.reserve(t.size() - 1);
  for (size_t i = 1; i < t.size(); ++i) gaps.push_back(t[i].t - t[i - 1].t);
  std::sort(gaps.begin(), gaps.end());
  return gaps[gaps.size() / 2];
}

}  // namespace detail

struct AlignedErrors {
  std::vector<Eigen::Vector3d> enu;  // per matched epoch, ENU about truth's first epoch
  int unmatched{0};
};

/// Matches estimate epochs to truth by nearest timestamp (within half the
/// truth sample period) and expresses the position errors in ENU about the
/// first truth epoch. Unmatched epochs are dropped and counted.
inline AlignedErrors align_errors(const Trajectory& est, const Trajectory& truth) {
  if (est.empty() || truth.empty()) throw std::invalid_argument("align_errors: empty input");

  const FrameRef frame = FrameRef::at(ecef_to_geodetic(EcefCoord::from(truth.front().state.p)));
  const double tol = 0.5 * detail::median_spacing(truth);

  AlignedErrors out;
  out.enu.reserve(est.size());
  for (const auto& s : est) {
    size_t best = 0;
    double best_dt = std::abs(truth[0].t - s.t);
    for (size_t i = 1; i < truth.size(); ++i) {
      const double d = std::abs(truth[i].t - s.t);
      if (d < best_dt) {
        best_dt = d;
        best = i;
      }
    }
    if (best_dt > tol) {
      out.unmatched += 1;
      continue;
    }
    out.enu.push_back(frame.rot_ecef_to_enu * (s.state.p - truth[best].state.p));
  }
  return out;
}

inline std::vector<double> error_norms(const AlignedErrors& e, ErrorMode mode) {
  std::vector<double> norms;
  norms.reserve(e.enu.size());
  for (const auto& v : e.enu) {
    norms.push_back(mode == ErrorMode::Horizontal2d ? v.head<2>().norm() : v.norm());
  }
  return norms;
}

/// ME is the mean error norm, RMSE the root mean square norm, SD the
/// population standard deviation of the norms, MaxE the maximum.
inline ErrorMetrics compute_metrics(const Trajectory& est, const Trajectory& truth,
                                    ErrorMode mode = ErrorMode::Horizontal2d) {
  const AlignedErrors aligned = align_errors(est, truth);

  ErrorMetrics m;
  m.unmatched = aligned.unmatched;
  double sum_sq = 0.0, sum = 0.0;
  Eigen::Vector3d sum_sq_axis = Eigen::Vector3d::Zero();
  for (const auto& e_enu : aligned.enu) {
    const double norm =
        mode == ErrorMode::Horizontal2d ? e_enu.head<2>().norm() : e_enu.norm();
    sum += norm;
    sum_sq += norm * norm;
    sum_sq_axis += e_enu.cwiseProduct(e_enu);
    m.max_error = std::max(m.max_error, norm);
    m.count += 1;
  }
  if (m.count == 0) throw std::invalid_argument("compute_metrics: no overlapping epochs");

  m.mean_error = sum / m.count;
  m.rmse = std::sqrt(sum_sq / m.count);
  const double var = std::max(m.rmse * m.rmse - m.mean_error * m.mean_error, 0.0);
  m.std_dev = std::sqrt(var);
  m.rmse_east = std::sqrt(sum_sq_axis.x() / m.count);
  m.rmse_north = std::sqrt(sum_sq_axis.y() / m.count);
  m.rmse_up = std::sqrt(sum_sq_axis.z() / m.count);
  return m;
}

// ===========================================================================
// CDF / percentiles / histogram
// ===========================================================================

struct CdfReport {
  std::vector<double> sorted;                       // ascending error samples
  std::vector<std::pair<double, double>> points;    // (threshold, cumulative fraction)

  /// Linear-interpolation percentile (index h = p/100 * (n-1)).
  double percentile(double p) const {
    if (sorted.empty()) throw std::invalid_argument("percentile of empty sample");
    if (p <= 0.0) return sorted.front();
    if (p >= 100.0) return sorted.back();
    const double h = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(h));
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
  }
};

inline CdfReport compute_cdf(std::vector<double> errors) {
  if (errors.empty()) throw std::invalid_argument("compute_cdf: empty input");
  std::sort(errors.begin(), errors.end());
  CdfReport r;
  r.points.reserve(errors.size());
  const double n = static_cast<double>(errors.size());
  for (size_t i = 0; i < errors.size(); ++i) {
    r.points.emplace_back(errors[i], static_cast<double>(i + 1) / n);
  }
  r.sorted = std::move(errors);
  return r;
}

struct HistogramReport {
  double bin_width{0.0};
  std::vector<double> edges;   // 65 edges for 64 bins
  std::vector<int> counts;     // 64 bins
  std::vector<double> density; // counts / (total * bin_width)
};

inline HistogramReport compute_histogram(const std::vector<double>& errors, int bins = 64) {
  if (errors.empty()) throw std::invalid_argument("compute_histogram: empty input");
  HistogramReport h;
  const double max = *std::max_element(errors.begin(), errors.end());
  h.bin_width = max > 0.0 ? max / bins : 1.0;
  h.counts.assign(bins, 0);
  for (double v : errors) {
    int b = static_cast<int>(v / h.bin_width);
    b = std::min(std::max(b, 0), bins - 1);
    h.counts[b] += 1;
  }
  h.edges.resize(bins + 1);
  for (int i = 0; i <= bins; ++i) h.edges[i] = i * h.bin_width;
  h.density.resize(bins);
  for (int i = 0; i < bins; ++i) {
    h.density[i] = h.counts[i] / (static_cast<double>(errors.size()) * h.bin_width);
  }
  return h;
}

// ===========================================================================
// Report emission
// ===========================================================================

inline void write_metrics(const std::string& path, const ErrorMetrics& m,
                          const std::string& mode_name) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "mode=%s\ncount=%d\nunmatched=%d\nRMSE=%.6f\nME=%.6f\nMaxE=%.6f\nSD=%.6f\n"
                "rmse_east=%.6f\nrmse_north=%.6f\nrmse_up=%.6f\n",
                mode_name.c_str(), m.count, m.unmatched, m.rmse, m.mean_error, m.max_error,
                m.std_dev, m.rmse_east, m.rmse_north, m.rmse_up);
  out << buf;
}

inline void write_metrics_csv(const std::string& path, const ErrorMetrics& m,
                              const std::string& mode_name) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "mode,count,unmatched,rmse,me,maxe,sd,rmse_east,rmse_north,rmse_up\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%d,%d,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f\n",
                mode_name.c_str(), m.count, m.unmatched, m.rmse, m.mean_error, m.max_error,
                m.std_dev, m.rmse_east, m.rmse_north, m.rmse_up);
  out << buf;
}

inline void write_cdf_csv(const std::string& path, const CdfReport& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "error,cumulative_fraction\n";
  char buf[96];
  for (const auto& [err, frac] : r.points) {
    std::snprintf(buf, sizeof(buf), "%.9f,%.9f\n", err, frac);
    out << buf;
  }
}

inline void write_histogram_csv(const std::string& path, const HistogramReport& h) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "bin_lo,bin_hi,count,density\n";
  char buf[128];
  for (size_t i = 0; i < h.counts.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.9f,%.9f,%d,%.9f\n", h.edges[i], h.edges[i + 1],
                  h.counts[i], h.density[i]);
    out << buf;
  }
}

}  // namespace navfuse
