#pragma once

#include <functional>

namespace bdn::special {

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

/// Same, with log B(a, b) supplied by the caller (hot loop of the quantile search).
double incomplete_beta(double a, double b, double x, double log_beta);

/// log B(a, b).
double log_beta(double a, double b);

/// Standard normal CDF.
double normal_cdf(double z);

/// Standard normal density.
double normal_pdf(double z);

/// Smallest x in [lo, hi] with cdf(x) >= p, located by bisection to an
/// absolute tolerance on x. `cdf` must be nondecreasing on [lo, hi].
double bisect_quantile(const std::function<double(double)>& cdf, double p,
                       double lo, double hi, double tolerance = 1e-10);

}  // namespace bdn::special
