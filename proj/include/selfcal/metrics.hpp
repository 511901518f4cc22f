#pragma once

// Error metrics for focal lengths and relative poses, and mean average
// accuracy over a threshold grid.

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "selfcal/core.hpp"
#include "selfcal/pose.hpp"

namespace selfcal {

// Scores assigned to a failed estimate.
inline constexpr double kFailedFocalError = 1.0;
inline constexpr double kFailedPoseError = 180.0;

/// |f_est - f_gt| / max(f_est, f_gt).
inline double focal_error(double f_est, double f_gt) {
  return std::abs(f_est - f_gt) / std::max(f_est, f_gt);
}

namespace detail {

inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

inline double angle_between(const Vec3& a, const Vec3& b) {
  // atan2 keeps precision near 0 and 180 degrees.
  return rad2deg(std::atan2(a.cross(b).norm(), a.dot(b)));
}

}  // namespace detail

inline double rotation_error(const Mat3& r_est, const Mat3& r_gt) {
  const Mat3 d = r_est * r_gt.transpose();
  const double c = std::clamp(0.5 * (d.trace() - 1.0), -1.0, 1.0);
  // Small angles from the skew part, large ones from the trace.
  const Vec3 s(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1));
  return detail::rad2deg(std::atan2(0.5 * s.norm(), c));
}

/// Max of rotation and translation-direction errors, degrees. Without
/// cheirality the sign of t_est is unknown and the better of +-t is used.
inline double pose_error(const RelativePose& est, const RelativePose& gt,
                         bool cheirality_applied = true) {
  const double r = rotation_error(est.rotation, gt.rotation);
  double t = detail::angle_between(est.translation, gt.translation);
  if (!cheirality_applied) t = std::min(t, 180.0 - t);
  return std::max(r, t);
}

/// Mean over t_j = j * max_threshold / n_bins (j = 1..n_bins) of the
/// fraction of errors strictly below t_j. Empty input gives 0.
inline double mean_average_accuracy(std::span<const double> errors,
                                    double max_threshold, int n_bins) {
  if (!(max_threshold > 0.0) || n_bins < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "max_threshold must be positive and n_bins at least 1");
  }
  if (errors.empty()) return 0.0;
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (int j = 1; j <= n_bins; ++j) {
    const double t = j * (max_threshold / n_bins);
    const auto below = std::lower_bound(sorted.begin(), sorted.end(), t);
    sum += static_cast<double>(below - sorted.begin()) / sorted.size();
  }
  return sum / n_bins;
}

/// Bins of the given width up to max_threshold (1 degree for pose, 0.01
/// for focal errors).
inline int bins_for(double max_threshold, double bin_width) {
  return std::max(1, static_cast<int>(std::lround(max_threshold / bin_width)));
}

/// Median; the mean of the middle pair for even sizes. NaN when empty.
inline double median(std::span<const double> values) {
  if (values.empty()) return std::nan("");
  std::vector<double> v(values.begin(), values.end());
  const size_t m = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + m, v.end());
  if (v.size() % 2 == 1) return v[m];
  const double hi = v[m];
  const double lo = *std::max_element(v.begin(), v.begin() + m);
  return 0.5 * (lo + hi);
}

/// Errors of one estimate. p_err is NaN when no pose was evaluated.
struct EvalRecord {
  std::string estimator;
  std::array<double, 2> f_err{kFailedFocalError, kFailedFocalError};
  double p_err = std::nan("");
  bool success = false;
};

/// Table-1 style aggregate for one estimator. Focal statistics pool both
/// cameras; failed records count with the failure scores. Pose columns are
/// NaN when no record of the estimator carries a pose error.
struct MetricsSummary {
  std::string estimator;
  int records = 0;
  double median_p_err = std::nan("");
  std::vector<double> maa_p;
  double median_f_err = std::nan("");
  std::vector<double> maa_f;
};

inline constexpr double kPoseBinWidth = 1.0;
inline constexpr double kFocalBinWidth = 0.01;

/// One summary per estimator, in order of first appearance.
inline std::vector<MetricsSummary> summarize(
    std::span<const EvalRecord> records, std::span<const double> pose_maxima,
    std::span<const double> focal_maxima) {
  std::vector<MetricsSummary> out;
  std::vector<std::vector<double>> p_errs, f_errs;
  // Pose columns exist only for estimators with at least one evaluated pose.
  std::vector<bool> has_pose;
  for (const auto& r : records) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& s) {
      return s.estimator == r.estimator;
    });
    size_t i = it - out.begin();
    if (it == out.end()) {
      out.push_back(MetricsSummary{r.estimator});
      p_errs.emplace_back();
      f_errs.emplace_back();
      has_pose.push_back(false);
    }
    ++out[i].records;
    for (double e : r.f_err) {
      f_errs[i].push_back(r.success ? e : kFailedFocalError);
    }
    if (!r.success) {
      p_errs[i].push_back(kFailedPoseError);
    } else if (!std::isnan(r.p_err)) {
      p_errs[i].push_back(r.p_err);
      has_pose[i] = true;
    }
  }
  for (size_t i = 0; i < out.size(); ++i) {
    out[i].median_f_err = median(f_errs[i]);
    for (double m : focal_maxima) {
      out[i].maa_f.push_back(mean_average_accuracy(
          f_errs[i], m, bins_for(m, kFocalBinWidth)));
    }
    if (!has_pose[i]) {
      out[i].maa_p.assign(pose_maxima.size(), std::nan(""));
      continue;
    }
    out[i].median_p_err = median(p_errs[i]);
    for (double m : pose_maxima) {
      out[i].maa_p.push_back(mean_average_accuracy(
          p_errs[i], m, bins_for(m, kPoseBinWidth)));
    }
  }
  return out;
}

}  // namespace selfcal
