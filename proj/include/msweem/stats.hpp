#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace msweem::stats {

double mean(std::span<const double> xs);

// Population variance (divides by n). Aggregated meta-features use this
// convention throughout so that single-annotator observations are defined.
double variance(std::span<const double> xs);

// Sample variance (divides by n-1); used by the Welch test.
double sample_variance(std::span<const double> xs);

// Regularized incomplete beta function I_x(a, b), continued-fraction
// evaluation (Lentz). Domain: a,b > 0, x in [0,1].
double incomplete_beta(double a, double b, double x);

// Standard normal CDF.
double normal_cdf(double z);

// Two-sided p-value of a Student-t statistic with df degrees of freedom,
// computed through the incomplete beta function (exact, no normal
// approximation).
double t_two_sided_p(double t, double df);

}  // namespace msweem::stats
