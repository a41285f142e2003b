#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "editfx/corpus.hpp"
#include "editfx/textsim.hpp"

namespace editfx {

/// A point in the (embedding similarity, edit distance) plane.
struct Point2 {
  double similarity = 0.0;
  double distance = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

struct ClusterModel {
  std::size_t k = 0;
  std::vector<Point2> centroids;
  double inertia = 0.0;
  std::uint64_t seed = 0;
};

struct ClusterFit {
  ClusterModel model;
  std::vector<int> labels;             // per input point, in [0, k)
  std::vector<double> inertia_trace;   // inertia after each Lloyd iteration
  std::size_t iterations = 0;
};

enum class InitMethod { kmeans_plus_plus, random };

inline constexpr std::size_t kMaxLloydIterations = 300;
inline constexpr double kDefaultElbowThreshold = 0.15;
inline constexpr std::size_t kDefaultRestarts = 10;

/// One k-means run: K-means++ (or uniform random) seeding, then Lloyd
/// iterations until the assignment is a fixpoint or 300 iterations elapse.
/// Clusters are relabeled by ascending centroid edit distance (ties by
/// similarity) so that cluster 0 is the least-edited group.
ClusterFit kmeans_fit(std::span<const Point2> points, std::size_t k, std::uint64_t seed,
                      InitMethod init = InitMethod::kmeans_plus_plus);

inline ClusterFit kmeanspp_fit(std::span<const Point2> points, std::size_t k, std::uint64_t seed) {
  return kmeans_fit(points, k, seed, InitMethod::kmeans_plus_plus);
}

/// Lowest-inertia fit over `restarts` runs with seeds derived from `seed`;
/// ties go to the earliest restart.
ClusterFit fit_best_of(std::span<const Point2> points, std::size_t k, std::uint64_t seed,
                       std::size_t restarts = kDefaultRestarts, InitMethod init = InitMethod::kmeans_plus_plus,
                       unsigned jobs = 1);

/// Smallest k whose marginal reduction ratio falls below `threshold`.
/// ratios[i] is the ratio for k = i + 1. Returns ratios.size() + 1 if none.
std::size_t elbow_from_ratios(std::span<const double> ratios, double threshold = kDefaultElbowThreshold);

/// Ratios (I(k) - I(k+1)) / I(k) for consecutive inertias I(1..n);
/// a zero I(k) yields ratio 0.
std::vector<double> reduction_ratios(std::span<const double> inertias);

struct ElbowResult {
  std::size_t k = 1;
  std::vector<double> inertias;  // index i -> k = i + 1
  std::vector<double> ratios;
};

ElbowResult elbow_select(std::span<const Point2> points, std::size_t k_max, std::uint64_t seed,
                         double threshold = kDefaultElbowThreshold, unsigned jobs = 1);

std::vector<Point2> points_from_profiles(const std::vector<EditProfile>& profiles);

struct ClusterAssignment {
  std::string record_id;
  int cluster = 0;
};

/// outlet -> per-cluster fraction (length k); each row sums to 1.
using FractionTable = std::map<std::string, std::vector<double>>;

/// Fractions for the given outlets. Empty outlet list, unknown outlet, or a
/// record without an assignment throws.
FractionTable cluster_fractions(const std::vector<ClusterAssignment>& assignments, const Corpus& corpus,
                                std::size_t k, std::span<const std::string> outlets);
FractionTable cluster_fractions(const std::vector<ClusterAssignment>& assignments, const Corpus& corpus,
                                std::size_t k);

std::string model_to_json(const ClusterModel& model);
ClusterModel model_from_json(std::string_view text);

}  // namespace editfx
