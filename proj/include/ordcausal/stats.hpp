#pragma once

#include <span>

namespace ordcausal {

double norm_cdf(double x);
double norm_quantile(double p);  // p in (0,1)

double expit(double x);
double logit(double p);

double mean(std::span<const double> v);
// Population variance (divides by n).
double pop_variance(std::span<const double> v);

}  // namespace ordcausal
