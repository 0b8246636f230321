#include "glat/stats.hpp"

#include "glat/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace glat {

double student_t_975(std::size_t dof) {
  static constexpr std::array<double, 30> table = {
      12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
      2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
      2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
  if (dof == 0) throw InvalidArgument("student_t_975: zero degrees of freedom");
  if (dof <= table.size()) return table[dof - 1];
  const double z = 1.959964;
  const double v = static_cast<double>(dof);
  return z + (z * z * z + z) / (4.0 * v) + (5 * std::pow(z, 5) + 16 * z * z * z + 3 * z) / (96.0 * v * v);
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("fit_line: size mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw InvalidArgument("fit_line: need at least two points");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw InvalidArgument("fit_line: abscissae are all equal");
  LinearFit f;
  f.points = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      rss += r * r;
    }
    f.slope_stderr = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  }
  const double t = n > 2 ? student_t_975(n - 2) : 0.0;
  f.ci_low = f.slope - t * f.slope_stderr;
  f.ci_high = f.slope + t * f.slope_stderr;
  return f;
}

BatchEstimate batch_means(std::span<const double> x, std::size_t batches) {
  if (batches < 2) throw InvalidArgument("batch_means: need at least two batches");
  const std::size_t size = x.size() / batches;
  if (size == 0)
    throw InsufficientSamplesError("batch_means: " + std::to_string(x.size()) + " samples cannot fill " +
                                   std::to_string(batches) + " batches");
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b)
    means[b] = std::accumulate(x.begin() + b * size, x.begin() + (b + 1) * size, 0.0) / size;
  BatchEstimate e;
  e.batches = batches;
  e.mean = std::accumulate(means.begin(), means.end(), 0.0) / batches;
  double var = 0.0;
  for (double m : means) var += (m - e.mean) * (m - e.mean);
  var /= static_cast<double>(batches - 1);
  e.stderr_ = std::sqrt(var / batches);
  return e;
}

double integrated_autocorrelation_time(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) return 0.5;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  auto autocov = [&](std::size_t t) {
    double s = 0.0;
    for (std::size_t i = 0; i + t < n; ++i) s += (x[i] - mean) * (x[i + t] - mean);
    return s / static_cast<double>(n - t);
  };
  const double c0 = autocov(0);
  if (c0 <= 0.0) return 0.5;
  double tau = 0.5;
  for (std::size_t t = 1; t < n / 2; ++t) {
    tau += autocov(t) / c0;
    if (static_cast<double>(t) >= 5.0 * tau) break;
  }
  return std::max(tau, 0.5);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InsufficientSamplesError("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  KsResult r;
  r.statistic = d;
  const double c = std::sqrt(-0.5 * std::log(0.0027 / 2.0));
  r.threshold = c * std::sqrt((na + nb) / (na * nb));
  r.same = d <= r.threshold;
  return r;
}

}  // namespace glat
