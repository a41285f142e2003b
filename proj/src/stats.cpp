#include "editfx/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "editfx/util.hpp"

namespace editfx {

std::string_view to_string(TestMethod method) {
  return method == TestMethod::mann_whitney_u ? "mann_whitney_u" : "welch_t";
}

double mean(std::span<const double> x) {
  if (x.empty()) throw InvalidArgument("mean of empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) throw InvalidArgument("variance needs at least two values");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

double quantile(std::span<const double> x, double q) {
  if (x.empty()) throw InvalidArgument("quantile of empty sample");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

double median(std::span<const double> x) { return quantile(x, 0.5); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double student_t_cdf(double t, double df) {
  boost::math::students_t dist(df);
  return boost::math::cdf(dist, t);
}

double student_t_quantile(double p, double df) {
  boost::math::students_t dist(df);
  return boost::math::quantile(dist, p);
}

namespace {

struct Ranked {
  std::vector<double> ranks;  // midranks of the pooled sample, x first then y
  double tie_term = 0.0;      // sum of (t^3 - t) over tie groups
};

Ranked midranks(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size() + y.size();
  std::vector<std::pair<double, std::size_t>> pooled;
  pooled.reserve(n);
  for (std::size_t i = 0; i < x.size(); ++i) pooled.emplace_back(x[i], i);
  for (std::size_t j = 0; j < y.size(); ++j) pooled.emplace_back(y[j], x.size() + j);
  std::sort(pooled.begin(), pooled.end());
  Ranked out;
  out.ranks.assign(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && pooled[j + 1].first == pooled[i].first) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) out.ranks[pooled[k].second] = rank;
    const double t = static_cast<double>(j - i + 1);
    out.tie_term += t * t * t - t;
    i = j + 1;
  }
  return out;
}

void check_samples(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw InvalidArgument("mann_whitney_u: both samples must be non-empty");
  for (double v : x) {
    if (!std::isfinite(v)) throw InvalidArgument("mann_whitney_u: non-finite value");
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw InvalidArgument("mann_whitney_u: non-finite value");
  }
}

double u_statistic(const Ranked& ranked, std::size_t nx) {
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < nx; ++i) rank_sum += ranked.ranks[i];
  return rank_sum - static_cast<double>(nx) * static_cast<double>(nx + 1) / 2.0;
}

// Permutation distribution of the x rank sum: counts[s] = number of ways to
// pick nx of the pooled (doubled, hence integral) midranks summing to s.
double exact_p_value(const Ranked& ranked, std::size_t nx, double u_obs) {
  const std::size_t n = ranked.ranks.size();
  std::vector<int> doubled(n);
  int total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    doubled[i] = static_cast<int>(std::lround(2.0 * ranked.ranks[i]));
    total += doubled[i];
  }
  // ways[j][s]: j items chosen, doubled sum s
  std::vector<std::vector<double>> ways(nx + 1, std::vector<double>(static_cast<std::size_t>(total) + 1, 0.0));
  ways[0][0] = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int r = doubled[i];
    for (std::size_t j = std::min(i + 1, nx); j >= 1; --j) {
      for (int s = total; s >= r; --s) {
        ways[j][static_cast<std::size_t>(s)] += ways[j - 1][static_cast<std::size_t>(s - r)];
      }
    }
  }
  const double offset2 = static_cast<double>(nx) * static_cast<double>(nx + 1);  // 2 * nx(nx+1)/2
  const double obs2 = 2.0 * u_obs + offset2;
  double all = 0.0, le = 0.0, ge = 0.0;
  for (int s = 0; s <= total; ++s) {
    const double w = ways[nx][static_cast<std::size_t>(s)];
    if (w == 0.0) continue;
    all += w;
    if (s <= obs2 + 1e-9) le += w;
    if (s >= obs2 - 1e-9) ge += w;
  }
  return std::min(1.0, 2.0 * std::min(le, ge) / all);
}

double normal_p_value(const Ranked& ranked, std::size_t nx, std::size_t ny, double u) {
  const double n1 = static_cast<double>(nx), n2 = static_cast<double>(ny);
  const double n = n1 + n2;
  const double mu = n1 * n2 / 2.0;
  const double var = n1 * n2 / 12.0 * ((n + 1.0) - ranked.tie_term / (n * (n - 1.0)));
  if (var <= 0.0) return 1.0;
  const double diff = std::max(0.0, std::abs(u - mu) - 0.5);
  const double z = diff / std::sqrt(var);
  return std::min(1.0, 2.0 * normal_cdf(-z));
}

}  // namespace

TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y) {
  check_samples(x, y);
  const auto ranked = midranks(x, y);
  TestResult r;
  r.method = TestMethod::mann_whitney_u;
  r.statistic = u_statistic(ranked, x.size());
  if (x.size() + y.size() <= kMannWhitneyExactCutoff) {
    r.p_value = exact_p_value(ranked, x.size(), r.statistic);
    r.exact = true;
  } else {
    r.p_value = normal_p_value(ranked, x.size(), y.size(), r.statistic);
  }
  return r;
}

TestResult mann_whitney_u_normal(std::span<const double> x, std::span<const double> y) {
  check_samples(x, y);
  const auto ranked = midranks(x, y);
  TestResult r;
  r.method = TestMethod::mann_whitney_u;
  r.statistic = u_statistic(ranked, x.size());
  r.p_value = normal_p_value(ranked, x.size(), y.size(), r.statistic);
  return r;
}

TestResult welch_t(std::span<const double> x, std::span<const double> y) {
  if (x.size() < 2 || y.size() < 2) throw InvalidArgument("welch_t: each sample needs at least two values");
  const double mx = mean(x), my = mean(y);
  const double vx = sample_variance(x) / static_cast<double>(x.size());
  const double vy = sample_variance(y) / static_cast<double>(y.size());
  if (vx == 0.0 && vy == 0.0) throw InvalidArgument("welch_t: both samples have zero variance");
  TestResult r;
  r.method = TestMethod::welch_t;
  const double se2 = vx + vy;
  r.statistic = (mx - my) / std::sqrt(se2);
  r.df = se2 * se2 /
         (vx * vx / static_cast<double>(x.size() - 1) + vy * vy / static_cast<double>(y.size() - 1));
  r.p_value = std::clamp(2.0 * student_t_cdf(-std::abs(r.statistic), r.df), 0.0, 1.0);
  return r;
}

}  // namespace editfx
