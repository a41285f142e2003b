#pragma once

#include <span>
#include <string_view>

namespace editfx {

enum class TestMethod { mann_whitney_u, welch_t };

std::string_view to_string(TestMethod method);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  TestMethod method = TestMethod::mann_whitney_u;
  double df = 0.0;     // welch_t only
  bool exact = false;  // mann_whitney_u: exact null distribution used
};

/// Combined sample size at or below which the Mann-Whitney null distribution
/// is enumerated exactly.
inline constexpr std::size_t kMannWhitneyExactCutoff = 20;

/// Two-sided Mann-Whitney U test. The statistic is U for x: the number of
/// (x_i, y_j) pairs with x_i > y_j, ties counting one half.
TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y);

/// Same test with the normal approximation (tie and continuity corrected)
/// forced regardless of sample size.
TestResult mann_whitney_u_normal(std::span<const double> x, std::span<const double> y);

/// Two-sided Welch unequal-variance t test.
TestResult welch_t(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> x);
/// Sample variance (n - 1 denominator).
double sample_variance(std::span<const double> x);
double median(std::span<const double> x);
double quantile(std::span<const double> x, double q);

double normal_cdf(double z);
double student_t_cdf(double t, double df);
double student_t_quantile(double p, double df);

}  // namespace editfx
