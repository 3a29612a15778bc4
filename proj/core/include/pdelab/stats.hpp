#pragma once

#include <span>
#include <vector>

namespace pdelab::stats {

double mean(std::span<const double> values);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double stddev(std::span<const double> values);
double median(std::vector<double> values);
/// Interquartile range by linear interpolation between order statistics.
double iqr(std::vector<double> values);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

/// Average ranks (1-based), ties share the mean rank.
std::vector<double> ranks(std::span<const double> values);
double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace pdelab::stats
