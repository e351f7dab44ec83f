#pragma once

#include <cstddef>
#include <span>

namespace toprec {

// Regularized incomplete beta function I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);

// Two-sided p-value of the Student-t statistic with df degrees of freedom:
// I_{df/(df+t^2)}(df/2, 1/2).
double student_t_two_sided_p(double t, double df);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  size_t n = 0;
};

// Paired t-test on aligned per-user metric vectors. Zero-variance
// differences use the documented convention p = 1 when the mean difference
// is zero and p = 0 otherwise.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> v);
double sample_sd(std::span<const double> v);

}  // namespace toprec
