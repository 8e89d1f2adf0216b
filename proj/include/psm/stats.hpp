#pragma once

#include <span>

namespace psm {

// Regularized incomplete beta function I_x(a, b), continued-fraction
// evaluation (Lentz). Domain: a, b > 0, x in [0, 1].
double regularized_incomplete_beta(double a, double b, double x);

// CDF of Student's t distribution with df degrees of freedom.
double student_t_cdf(double t, double df);

struct WelchResult {
    double t = 0.0;
    double df = 1.0;
    double p_value = 0.5;  // one-sided, H1: mean(x) < mean(y)
    double mean_x = 0.0;
    double mean_y = 0.0;
};

// Welch's unequal-variance two-sample t-test, one-sided towards
// mean(x) < mean(y). A zero standard error is smoothed by a tiny floor so
// degenerate samples produce t = 0 (equal means) or a huge finite |t|.
WelchResult welch_one_sided_less(std::span<const double> x, std::span<const double> y);

}  // namespace psm
