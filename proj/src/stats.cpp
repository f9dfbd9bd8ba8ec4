#include "sde/stats.hpp"

#include <cmath>
#include <vector>

#include "sde/errors.hpp"

namespace sde {

MeanEstimate estimate_mean(std::span<const double> samples) {
  MeanEstimate out;
  out.count = samples.size();
  if (samples.empty()) return out;
  // Welford, in index order so the result is reproducible bit for bit.
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t k = 0;
  for (double v : samples) {
    ++k;
    const double delta = v - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (v - mean);
  }
  out.mean = mean;
  if (k > 1) {
    out.variance = m2 / static_cast<double>(k - 1);
    out.std_error = std::sqrt(out.variance / static_cast<double>(k));
  }
  return out;
}

ProportionEstimate estimate_proportion(std::size_t successes, std::size_t trials, double z) {
  if (successes > trials) throw ArgumentError("successes exceed trials");
  ProportionEstimate out;
  out.successes = successes;
  out.trials = trials;
  if (trials == 0) {
    out.ci = {0.0, 1.0};
    return out;
  }
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  out.p = phat;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (phat + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  out.ci = {std::max(0.0, centre - half), std::min(1.0, centre + half)};
  if (successes == 0) out.ci.lower = 0.0;
  if (successes == trials) out.ci.upper = 1.0;
  return out;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ArgumentError("fit_line: x and y differ in length");
  if (x.size() < 2) throw ArgumentError("fit_line: need at least two points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw ArgumentError("fit_line: x values are all equal");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (x.size() > 2) {
    double rss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      rss += r * r;
    }
    fit.slope_std_error = std::sqrt(rss / (n - 2.0) / sxx);
  }
  return fit;
}

LineFit fit_log_log(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx, ly;
  lx.reserve(x.size());
  ly.reserve(y.size());
  for (double v : x) {
    if (!(v > 0)) throw ArgumentError("fit_log_log: non-positive x");
    lx.push_back(std::log(v));
  }
  for (double v : y) {
    if (!(v > 0)) throw ArgumentError("fit_log_log: non-positive y");
    ly.push_back(std::log(v));
  }
  return fit_line(lx, ly);
}

}  // namespace sde
