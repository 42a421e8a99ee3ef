#ifndef POTLAB_STATS_HPP_
#define POTLAB_STATS_HPP_

#include <span>
#include <vector>

namespace potlab {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;  // 0 with two points
};

// Ordinary least squares of y on x. Needs two or more distinct x values.
LinearFit ols(std::span<const double> x, std::span<const double> y);

// Linear-interpolation quantile (type 7) of unsorted values.
double quantile(std::vector<double> values, double q);
inline double median(std::vector<double> values) {
  return quantile(std::move(values), 0.5);
}

}  // namespace potlab

#endif  // POTLAB_STATS_HPP_
