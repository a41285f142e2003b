#include "editfx/clusterer.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <numeric>
#include <set>
#include <thread>
#include <unordered_map>

#include "editfx/util.hpp"
#include "json.hpp"

namespace editfx {

namespace {

double sq_dist(const Point2& a, const Point2& b) {
  const double ds = a.similarity - b.similarity;
  const double dd = a.distance - b.distance;
  return ds * ds + dd * dd;
}

std::size_t nearest(const Point2& p, const std::vector<Point2>& centroids, double* best_out = nullptr) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = sq_dist(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (best_out) *best_out = best_d;
  return best;
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<Point2> seed_plus_plus(std::span<const Point2> points, std::size_t k, Rng& rng) {
  std::vector<Point2> centroids;
  centroids.reserve(k);
  centroids.push_back(points[rng() % points.size()]);
  std::vector<double> d2(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) d2[i] = sq_dist(points[i], centroids[0]);
  while (centroids.size() < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = 0;
    if (total <= 0.0) {
      // Every point coincides with a chosen centroid; fall back to uniform.
      pick = rng() % points.size();
    } else {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      pick = points.size() - 1;
      for (std::size_t i = 0; i < points.size(); ++i) {
        acc += d2[i];
        if (acc > target) {
          pick = i;
          break;
        }
      }
    }
    centroids.push_back(points[pick]);
    for (std::size_t i = 0; i < points.size(); ++i) d2[i] = std::min(d2[i], sq_dist(points[i], centroids.back()));
  }
  return centroids;
}

std::vector<Point2> seed_random(std::span<const Point2> points, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(points.size());
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates: first k entries are a uniform sample without replacement.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (points.size() - i));
    std::swap(idx[i], idx[j]);
  }
  std::vector<Point2> centroids;
  for (std::size_t i = 0; i < k; ++i) centroids.push_back(points[idx[i]]);
  return centroids;
}

double inertia_of(std::span<const Point2> points, const std::vector<Point2>& centroids, const std::vector<int>& labels) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) s += sq_dist(points[i], centroids[static_cast<std::size_t>(labels[i])]);
  return s;
}

void canonical_relabel(ClusterFit& fit) {
  const std::size_t k = fit.model.k;
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  const auto& c = fit.model.centroids;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (c[a].distance != c[b].distance) return c[a].distance < c[b].distance;
    return c[a].similarity > c[b].similarity;
  });
  std::vector<int> new_label(k);
  std::vector<Point2> sorted;
  for (std::size_t i = 0; i < k; ++i) {
    new_label[order[i]] = static_cast<int>(i);
    sorted.push_back(c[order[i]]);
  }
  fit.model.centroids = std::move(sorted);
  for (auto& l : fit.labels) l = new_label[static_cast<std::size_t>(l)];
}

}  // namespace

ClusterFit kmeans_fit(std::span<const Point2> points, std::size_t k, std::uint64_t seed, InitMethod init) {
  if (k == 0) throw InvalidArgument("kmeans: k must be positive");
  if (points.size() < k) {
    throw InvalidArgument("kmeans: " + std::to_string(points.size()) + " points is fewer than k = " + std::to_string(k));
  }
  Rng rng(seed);
  ClusterFit fit;
  fit.model.k = k;
  fit.model.seed = seed;
  auto centroids = init == InitMethod::kmeans_plus_plus ? seed_plus_plus(points, k, rng) : seed_random(points, k, rng);
  std::vector<int> labels(points.size(), -1);
  for (std::size_t iter = 0; iter < kMaxLloydIterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const int l = static_cast<int>(nearest(points[i], centroids));
      if (l != labels[i]) {
        labels[i] = l;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<double> ss(k, 0.0), sd(k, 0.0);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto l = static_cast<std::size_t>(labels[i]);
      ss[l] += points[i].similarity;
      sd[l] += points[i].distance;
      ++count[l];
    }
    for (std::size_t c = 0; c < k; ++c) {
      // Empty clusters keep their previous centroid.
      if (count[c] == 0) continue;
      centroids[c] = {ss[c] / static_cast<double>(count[c]), sd[c] / static_cast<double>(count[c])};
    }
    fit.inertia_trace.push_back(inertia_of(points, centroids, labels));
    fit.iterations = iter + 1;
  }
  fit.model.centroids = std::move(centroids);
  fit.labels = std::move(labels);
  fit.model.inertia = inertia_of(points, fit.model.centroids, fit.labels);
  canonical_relabel(fit);
  return fit;
}

ClusterFit fit_best_of(std::span<const Point2> points, std::size_t k, std::uint64_t seed, std::size_t restarts,
                       InitMethod init, unsigned jobs) {
  if (restarts == 0) throw InvalidArgument("fit_best_of: restarts must be positive");
  std::vector<ClusterFit> fits(restarts);
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(restarts)));
  if (jobs == 1) {
    for (std::size_t r = 0; r < restarts; ++r) fits[r] = kmeans_fit(points, k, derive_seed(seed, r), init);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t r = next++; r < restarts; r = next++) fits[r] = kmeans_fit(points, k, derive_seed(seed, r), init);
      });
    }
    for (auto& t : workers) t.join();
  }
  std::size_t best = 0;
  for (std::size_t r = 1; r < restarts; ++r) {
    if (fits[r].model.inertia < fits[best].model.inertia) best = r;
  }
  return std::move(fits[best]);
}

std::vector<double> reduction_ratios(std::span<const double> inertias) {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < inertias.size(); ++i) {
    out.push_back(inertias[i] <= 0.0 ? 0.0 : (inertias[i] - inertias[i + 1]) / inertias[i]);
  }
  return out;
}

std::size_t elbow_from_ratios(std::span<const double> ratios, double threshold) {
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (ratios[i] < threshold) return i + 1;
  }
  return ratios.size() + 1;
}

ElbowResult elbow_select(std::span<const Point2> points, std::size_t k_max, std::uint64_t seed, double threshold,
                         unsigned jobs) {
  if (k_max < 2) throw InvalidArgument("elbow_select: k_max must be at least 2");
  if (points.size() < k_max) throw InvalidArgument("elbow_select: fewer points than k_max");
  ElbowResult out;
  for (std::size_t k = 1; k <= k_max; ++k) {
    out.inertias.push_back(fit_best_of(points, k, derive_seed(seed, 1000 + k), kDefaultRestarts,
                                       InitMethod::kmeans_plus_plus, jobs)
                               .model.inertia);
  }
  out.ratios = reduction_ratios(out.inertias);
  out.k = elbow_from_ratios(out.ratios, threshold);
  return out;
}

std::vector<Point2> points_from_profiles(const std::vector<EditProfile>& profiles) {
  std::vector<Point2> out;
  out.reserve(profiles.size());
  for (const auto& p : profiles) out.push_back({p.embedding_similarity, p.edit_distance});
  return out;
}

FractionTable cluster_fractions(const std::vector<ClusterAssignment>& assignments, const Corpus& corpus, std::size_t k,
                                std::span<const std::string> outlets) {
  if (outlets.empty()) throw InvalidArgument("cluster_fractions: outlet filter is empty");
  if (k == 0) throw InvalidArgument("cluster_fractions: k must be positive");
  std::unordered_map<std::string, int> by_id;
  for (const auto& a : assignments) {
    if (a.cluster < 0 || static_cast<std::size_t>(a.cluster) >= k) {
      throw InvalidArgument("cluster_fractions: cluster index out of range for " + a.record_id);
    }
    by_id[a.record_id] = a.cluster;
  }
  const std::set<std::string> wanted(outlets.begin(), outlets.end());
  FractionTable table;
  std::map<std::string, std::size_t> totals;
  for (const auto& r : corpus.records()) {
    if (!wanted.count(r.outlet)) continue;
    auto it = by_id.find(r.id);
    if (it == by_id.end()) throw InvalidArgument("cluster_fractions: no assignment for record " + r.id);
    auto& row = table[r.outlet];
    row.resize(k, 0.0);
    row[static_cast<std::size_t>(it->second)] += 1.0;
    ++totals[r.outlet];
  }
  for (const auto& o : wanted) {
    if (!totals.count(o)) throw InvalidArgument("cluster_fractions: unknown outlet " + o);
  }
  for (auto& [outlet, row] : table) {
    for (auto& v : row) v /= static_cast<double>(totals[outlet]);
  }
  return table;
}

FractionTable cluster_fractions(const std::vector<ClusterAssignment>& assignments, const Corpus& corpus,
                                std::size_t k) {
  const auto outlets = corpus.outlets();
  return cluster_fractions(assignments, corpus, k, outlets);
}

std::string model_to_json(const ClusterModel& model) {
  nlohmann::ordered_json j;
  j["k"] = model.k;
  auto cents = nlohmann::ordered_json::array();
  for (const auto& c : model.centroids) cents.push_back({c.similarity, c.distance});
  j["centroids"] = cents;
  j["inertia"] = model.inertia;
  j["seed"] = model.seed;
  return j.dump(2) + "\n";
}

ClusterModel model_from_json(std::string_view text) {
  try {
    auto j = nlohmann::json::parse(text);
    ClusterModel m;
    m.k = j.at("k").get<std::size_t>();
    for (const auto& c : j.at("centroids")) m.centroids.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
    m.inertia = j.at("inertia").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    if (m.centroids.size() != m.k) throw DataError("cluster model: centroid count does not match k");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("cluster model JSON: ") + e.what());
  }
}

}  // namespace editfx
