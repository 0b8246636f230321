#pragma once

// Small statistics toolkit for the harness and the sampler.

#include <cstddef>
#include <span>
#include <vector>

namespace glat {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double ci_low = 0.0;  // 95% interval for the slope
  double ci_high = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = a + b x. Needs at least three points for an
/// interval; with two the interval collapses to the slope.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// Two-sided 97.5% quantile of Student's t with `dof` degrees of freedom.
double student_t_975(std::size_t dof);

struct BatchEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t batches = 0;
};

/// Mean and standard error from the spread of `batches` equal batch means;
/// trailing samples that do not fill a batch are dropped.
BatchEstimate batch_means(std::span<const double> x, std::size_t batches = 32);

/// Integrated autocorrelation time with the automatic window W >= 5 tau.
/// Returns 0.5 for an uncorrelated series.
double integrated_autocorrelation_time(std::span<const double> x);

struct KsResult {
  double statistic = 0.0;
  double threshold = 0.0;
  bool same = true;
};

/// Two-sample Kolmogorov-Smirnov test; the threshold corresponds to a
/// two-sided significance of 0.0027 (3 sigma).
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

}  // namespace glat
