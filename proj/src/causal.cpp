#include "editfx/causal.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <thread>

#include "editfx/stats.hpp"
#include "editfx/util.hpp"

namespace editfx {

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::replies:
      return "replies";
    case Metric::retweets:
      return "retweets";
    case Metric::likes:
      return "likes";
  }
  return "?";
}

double outcome(const PairedRecord& r, Metric m) {
  switch (m) {
    case Metric::replies:
      return static_cast<double>(r.replies);
    case Metric::retweets:
      return static_cast<double>(r.retweets);
    case Metric::likes:
      return static_cast<double>(r.likes);
  }
  return 0.0;
}

// ---------------------------------------------------------------- scenarios

bool Selector::matches(const EditProfile& p) const {
  if (mirrored && p.mirrored != *mirrored) return false;
  if (cluster) {
    if (!p.cluster || *p.cluster != *cluster) return false;
  }
  if (headline_class) {
    if (!p.headline_clickbait) return false;
    if (classify_score(*p.headline_clickbait) != *headline_class) return false;
  }
  if (post_class) {
    if (!p.post_clickbait) return false;
    if (classify_score(*p.post_clickbait) != *post_class) return false;
  }
  return true;
}

namespace {
std::string_view class_name(ClickbaitClass c) { return c == ClickbaitClass::C ? "C" : "NC"; }

ClickbaitClass parse_class(std::string_view s) {
  if (s == "C") return ClickbaitClass::C;
  if (s == "NC") return ClickbaitClass::NC;
  throw DataError("clickbait class must be \"C\" or \"NC\", got \"" + std::string(s) + "\"");
}
}  // namespace

std::string Selector::describe() const {
  std::vector<std::string> parts;
  if (mirrored) parts.push_back(*mirrored ? "mirrored" : "edited");
  if (cluster) parts.push_back("cluster=" + std::to_string(*cluster));
  if (headline_class) parts.push_back("headline=" + std::string(class_name(*headline_class)));
  if (post_class) parts.push_back("post=" + std::string(class_name(*post_class)));
  if (parts.empty()) return "any";
  std::string s = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) s += "," + parts[i];
  return s;
}

Scenario Scenario::edited_vs_mirrored(std::string name, std::string outlet) {
  Scenario s;
  s.name = std::move(name);
  s.outlet = std::move(outlet);
  s.treatment.mirrored = false;
  s.control.mirrored = true;
  return s;
}

Scenario Scenario::cluster_pair(std::string name, std::string outlet, int treatment_cluster, int control_cluster) {
  if (treatment_cluster == control_cluster) throw InvalidArgument("cluster_pair: clusters must differ");
  Scenario s;
  s.name = std::move(name);
  s.outlet = std::move(outlet);
  s.treatment.cluster = treatment_cluster;
  s.control.cluster = control_cluster;
  return s;
}

Scenario Scenario::clickbait_transition(std::string name, std::string outlet, std::string_view pattern) {
  Scenario s;
  s.name = std::move(name);
  s.outlet = std::move(outlet);
  s.exclude_mirrored = true;
  if (pattern == "NC->C") {
    s.treatment.headline_class = ClickbaitClass::NC;
    s.treatment.post_class = ClickbaitClass::C;
    s.control.headline_class = ClickbaitClass::NC;
    s.control.post_class = ClickbaitClass::NC;
  } else if (pattern == "C->NC") {
    s.treatment.headline_class = ClickbaitClass::C;
    s.treatment.post_class = ClickbaitClass::NC;
    s.control.headline_class = ClickbaitClass::C;
    s.control.post_class = ClickbaitClass::C;
  } else {
    throw InvalidArgument("clickbait transition pattern must be \"NC->C\" or \"C->NC\"");
  }
  return s;
}

namespace {

Selector selector_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("selector must be a JSON object");
  Selector s;
  for (const auto& [key, value] : j.items()) {
    if (key == "mirrored") {
      s.mirrored = value.get<bool>();
    } else if (key == "cluster") {
      s.cluster = value.get<int>();
    } else if (key == "headline_class") {
      s.headline_class = parse_class(value.get<std::string>());
    } else if (key == "post_class") {
      s.post_class = parse_class(value.get<std::string>());
    } else {
      throw DataError("unknown selector key: " + key);
    }
  }
  return s;
}

nlohmann::json selector_to_json(const Selector& s) {
  nlohmann::json j = nlohmann::json::object();
  if (s.mirrored) j["mirrored"] = *s.mirrored;
  if (s.cluster) j["cluster"] = *s.cluster;
  if (s.headline_class) j["headline_class"] = class_name(*s.headline_class);
  if (s.post_class) j["post_class"] = class_name(*s.post_class);
  return j;
}

}  // namespace

Scenario scenario_from_json(const nlohmann::json& j) {
  try {
    const auto name = j.at("name").get<std::string>();
    const auto outlet = j.at("outlet").get<std::string>();
    Scenario s;
    const auto kind = j.value("kind", std::string());
    if (kind == "edited_vs_mirrored") {
      s = Scenario::edited_vs_mirrored(name, outlet);
    } else if (kind == "cluster_pair") {
      s = Scenario::cluster_pair(name, outlet, j.at("treatment_cluster").get<int>(), j.at("control_cluster").get<int>());
    } else if (kind == "clickbait_transition") {
      s = Scenario::clickbait_transition(name, outlet, j.at("pattern").get<std::string>());
    } else if (kind.empty()) {
      s.name = name;
      s.outlet = outlet;
      s.treatment = selector_from_json(j.at("treatment"));
      s.control = selector_from_json(j.at("control"));
    } else {
      throw DataError("unknown scenario kind: " + kind);
    }
    if (j.contains("section") && !j.at("section").is_null()) s.section = j.at("section").get<std::string>();
    if (j.contains("time_block") && !j.at("time_block").is_null()) {
      s.time_block = parse_time_block(j.at("time_block").get<std::string>());
    }
    if (j.contains("exclude_mirrored")) s.exclude_mirrored = j.at("exclude_mirrored").get<bool>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("scenario definition: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("scenario definition: ") + e.what());
  }
}

nlohmann::json scenario_to_json(const Scenario& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["outlet"] = s.outlet;
  j["treatment"] = selector_to_json(s.treatment);
  j["control"] = selector_to_json(s.control);
  if (s.section) j["section"] = *s.section;
  if (s.time_block) j["time_block"] = to_string(*s.time_block);
  j["exclude_mirrored"] = s.exclude_mirrored;
  return j;
}

CausalConfig causal_config_from_json(const nlohmann::json& j, CausalConfig c) {
  try {
    if (j.contains("k")) c.k = j.at("k").get<std::size_t>();
    if (j.contains("knn")) c.k = j.at("knn").get<std::size_t>();
    if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
    if (j.contains("tau")) c.tau = j.at("tau").get<double>();
    if (j.contains("folds")) c.folds = j.at("folds").get<std::size_t>();
    if (j.contains("min_group")) c.min_group = j.at("min_group").get<std::size_t>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("jobs")) c.jobs = j.at("jobs").get<unsigned>();
    if (j.contains("exact_pair_cutoff")) c.exact_pair_cutoff = j.at("exact_pair_cutoff").get<std::size_t>();
    if (j.contains("sampled_pairs")) c.sampled_pairs = j.at("sampled_pairs").get<std::size_t>();
    if (j.contains("propensity")) {
      const auto& p = j.at("propensity");
      if (p.contains("hidden")) c.propensity.hidden = p.at("hidden").get<std::vector<std::size_t>>();
      if (p.contains("l2_lambda")) c.propensity.l2_lambda = p.at("l2_lambda").get<double>();
      if (p.contains("epochs")) c.propensity.epochs = p.at("epochs").get<std::size_t>();
      if (p.contains("batch_size")) c.propensity.batch_size = p.at("batch_size").get<std::size_t>();
      if (p.contains("learning_rate")) c.propensity.adam.learning_rate = p.at("learning_rate").get<double>();
      if (p.contains("clip_norm")) c.propensity.adam.clip_norm = p.at("clip_norm").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("causal config: ") + e.what());
  }
  if (c.k == 0) throw DataError("causal config: k must be positive");
  if (c.folds < 2) throw DataError("causal config: at least two folds are required");
  return c;
}

// ---------------------------------------------------------------- matching

std::vector<MatchResult> match(std::span<const ScoredUnit> treatments, std::span<const ScoredUnit> controls,
                               std::size_t k) {
  if (k == 0) throw InvalidArgument("match: k must be positive");
  if (controls.size() < k) {
    throw InvalidArgument("match: " + std::to_string(controls.size()) + " controls is fewer than k = " +
                          std::to_string(k));
  }
  std::vector<const ScoredUnit*> sorted;
  sorted.reserve(controls.size());
  for (const auto& c : controls) sorted.push_back(&c);
  std::sort(sorted.begin(), sorted.end(), [](const ScoredUnit* a, const ScoredUnit* b) {
    if (a->propensity != b->propensity) return a->propensity < b->propensity;
    return a->id < b->id;
  });
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<MatchResult> out;
  out.reserve(treatments.size());
  std::vector<std::pair<double, const ScoredUnit*>> cand;
  for (const auto& t : treatments) {
    const double p = t.propensity;
    auto pos = std::lower_bound(sorted.begin(), sorted.end(), p,
                                [](const ScoredUnit* c, double v) { return c->propensity < v; });
    std::ptrdiff_t left = (pos - sorted.begin()) - 1;
    auto right = static_cast<std::size_t>(pos - sorted.begin());
    cand.clear();
    double kth = inf;
    // Merge outward in non-decreasing gap order; keep everything tied with
    // the k-th gap so the id tie-break sees all of them.
    while (true) {
      const double gl = left >= 0 ? p - sorted[static_cast<std::size_t>(left)]->propensity : inf;
      const double gr = right < sorted.size() ? sorted[right]->propensity - p : inf;
      const double g = std::min(gl, gr);
      if (g == inf) break;
      if (cand.size() >= k && g > kth) break;
      if (gl <= gr) {
        cand.emplace_back(gl, sorted[static_cast<std::size_t>(left--)]);
      } else {
        cand.emplace_back(gr, sorted[right++]);
      }
      if (cand.size() == k) kth = g;
    }
    std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return a.second->id < b.second->id;
    });
    MatchResult m;
    m.treatment_id = t.id;
    for (std::size_t i = 0; i < k; ++i) {
      m.matched_control_ids.push_back(cand[i].second->id);
      m.propensity_gaps.push_back(cand[i].first);
    }
    out.push_back(std::move(m));
  }
  return out;
}

// ---------------------------------------------------------------- balance

BalanceStats evaluate_balance(double achieved, double mu, double sigma, double alpha, double tau) {
  BalanceStats b;
  b.mu = mu;
  b.sigma = sigma;
  b.alpha = alpha;
  b.tau = tau;
  b.threshold = std::max(mu + alpha * sigma, tau);
  b.achieved = achieved;
  b.passed = achieved >= b.threshold;
  return b;
}

DocumentVectors::DocumentVectors(const Corpus& corpus, const EmbeddingTable& table) {
  for (const auto& r : corpus.records()) {
    auto doc = embed_text(table, r.body_text);
    add(r.id, std::move(doc.values), doc.token_hits);
  }
}

void DocumentVectors::add(std::string id, std::vector<double> values, std::size_t token_hits) {
  if (dim_ == 0) dim_ = values.size();
  if (values.size() != dim_) throw InvalidArgument("document vector dimension mismatch");
  if (!index_.emplace(std::move(id), hits_.size()).second) throw InvalidArgument("duplicate document id");
  raw_.insert(raw_.end(), values.begin(), values.end());
  normalize_l2(values);
  unit_.insert(unit_.end(), values.begin(), values.end());
  hits_.push_back(token_hits);
}

std::size_t DocumentVectors::slot(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) throw InvalidArgument("no document vector for record " + std::string(id));
  return it->second;
}

bool DocumentVectors::zero_hit(std::string_view id) const { return hits_[slot(id)] == 0; }

std::span<const double> DocumentVectors::raw(std::string_view id) const {
  return {raw_.data() + slot(id) * dim_, dim_};
}

std::span<const double> DocumentVectors::unit(std::string_view id) const {
  return {unit_.data() + slot(id) * dim_, dim_};
}

double DocumentVectors::similarity(std::string_view a, std::string_view b) const { return cosine(raw(a), raw(b)); }

BalanceStats balance_check(std::vector<MatchResult>& matches, const DocumentVectors& docs, double alpha, double tau,
                           double mu, double sigma) {
  double total = 0.0;
  for (auto& m : matches) {
    double s = 0.0;
    for (const auto& c : m.matched_control_ids) s += docs.similarity(m.treatment_id, c);
    m.mean_similarity = m.matched_control_ids.empty() ? 0.0 : s / static_cast<double>(m.matched_control_ids.size());
    total += m.mean_similarity;
  }
  const double achieved = matches.empty() ? 0.0 : total / static_cast<double>(matches.size());
  return evaluate_balance(achieved, mu, sigma, alpha, tau);
}

SimilarityMoments similarity_moments(const DocumentVectors& docs, std::span<const std::string> ids,
                                     std::uint64_t seed, std::size_t exact_cutoff, std::size_t sampled_pairs) {
  if (ids.size() < 2) throw InvalidArgument("similarity_moments: need at least two documents");
  std::vector<std::span<const double>> vecs;
  vecs.reserve(ids.size());
  for (const auto& id : ids) vecs.push_back(docs.unit(id));
  SimilarityMoments out;
  // Welford accumulation
  double mean_acc = 0.0, m2 = 0.0;
  std::size_t n = 0;
  auto push = [&](double x) {
    ++n;
    const double d = x - mean_acc;
    mean_acc += d / static_cast<double>(n);
    m2 += d * (x - mean_acc);
  };
  if (ids.size() <= exact_cutoff) {
    for (std::size_t i = 0; i < vecs.size(); ++i) {
      for (std::size_t j = i + 1; j < vecs.size(); ++j) push(dot(vecs[i], vecs[j]));
    }
  } else {
    out.sampled = true;
    Rng rng(seed);
    const std::uint64_t m = vecs.size();
    for (std::size_t s = 0; s < sampled_pairs; ++s) {
      const std::uint64_t i = rng() % m;
      std::uint64_t j = rng() % (m - 1);
      if (j >= i) ++j;
      push(dot(vecs[i], vecs[j]));
    }
  }
  out.pairs = n;
  out.mu = mean_acc;
  out.sigma = std::sqrt(m2 / static_cast<double>(n));
  return out;
}

double estimate_eate(const std::vector<MatchResult>& matches, const std::unordered_map<std::string, double>& outcomes,
                     std::size_t k) {
  if (matches.empty()) throw InvalidArgument("estimate_eate: no matched treatments");
  if (k == 0) throw InvalidArgument("estimate_eate: k must be positive");
  auto y = [&](const std::string& id) {
    auto it = outcomes.find(id);
    if (it == outcomes.end()) throw InvalidArgument("estimate_eate: no outcome for record " + id);
    return it->second;
  };
  const double kd = static_cast<double>(k);
  double total = 0.0;
  for (const auto& m : matches) {
    const double yt = y(m.treatment_id);
    double gap = 0.0;
    for (const auto& c : m.matched_control_ids) gap += yt - y(c);
    total += gap / kd;
  }
  return total / static_cast<double>(matches.size());
}

ConfidenceInterval t_interval(std::span<const double> values, double level) {
  if (values.size() < 2) throw InvalidArgument("t_interval: need at least two values");
  ConfidenceInterval ci;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*lo == *hi) {
    ci.mean = ci.low = ci.high = *lo;
    return ci;
  }
  ci.mean = mean(values);
  const double sd = std::sqrt(sample_variance(values));
  const double n = static_cast<double>(values.size());
  const double half = student_t_quantile(0.5 + level / 2.0, n - 1.0) * sd / std::sqrt(n);
  ci.low = ci.mean - half;
  ci.high = ci.mean + half;
  return ci;
}

// ---------------------------------------------------------------- dataset

CausalDataset::CausalDataset(const Corpus& corpus, const std::vector<EditProfile>& profiles,
                             const EmbeddingTable& table)
    : corpus_(&corpus), docs_(corpus, table) {
  for (const auto& p : profiles) {
    if (!corpus.find(p.record_id)) throw InvalidArgument("profile for unknown record " + p.record_id);
    profiles_.emplace(p.record_id, p);
  }
}

const EditProfile& CausalDataset::profile(std::string_view id) const {
  auto it = profiles_.find(std::string(id));
  if (it == profiles_.end()) throw InvalidArgument("no profile for record " + std::string(id));
  return it->second;
}

CausalDataset::Units CausalDataset::select(const Scenario& s) const {
  Units u;
  for (const auto& r : corpus_->records()) {
    if (r.outlet != s.outlet) continue;
    if (s.section && r.section != s.section) continue;
    if (s.time_block && assign_time_block(r) != *s.time_block) continue;
    if (r.has_empty_body() || docs_.zero_hit(r.id)) continue;
    const auto& p = profile(r.id);
    if (s.exclude_mirrored && p.mirrored) continue;
    const bool t = s.treatment.matches(p);
    const bool c = s.control.matches(p);
    if (t && c) {
      throw InvalidArgument("scenario " + s.name + ": record " + r.id + " satisfies both treatment and control");
    }
    if (t) u.treatment.push_back(r.id);
    if (c) u.control.push_back(r.id);
  }
  return u;
}

// ---------------------------------------------------------------- protocol

namespace {

struct FoldOutcome {
  BalanceStats balance;
  std::array<double, 3> eate{};
};

}  // namespace

std::vector<EateReport> run_scenario(const CausalDataset& data, const Scenario& scenario, const CausalConfig& config) {
  const auto units = data.select(scenario);
  const auto floor = std::max(config.min_group, config.k);
  if (units.treatment.size() < floor) {
    throw InsufficientUnits("scenario " + scenario.name + ": treatment selector (" + scenario.treatment.describe() +
                            ") yields " + std::to_string(units.treatment.size()) + " units, need " +
                            std::to_string(floor));
  }
  if (units.control.size() < floor) {
    throw InsufficientUnits("scenario " + scenario.name + ": control selector (" + scenario.control.describe() +
                            ") yields " + std::to_string(units.control.size()) + " units, need " +
                            std::to_string(floor));
  }
  const auto& docs = data.documents();
  const auto& corpus = data.corpus();

  std::vector<std::string> all = units.treatment;
  all.insert(all.end(), units.control.begin(), units.control.end());
  const auto moments =
      similarity_moments(docs, all, derive_seed(config.seed, 7), config.exact_pair_cutoff, config.sampled_pairs);

  std::array<std::unordered_map<std::string, double>, 3> outcomes;
  for (const auto& id : all) {
    const auto& r = corpus.at(id);
    for (std::size_t m = 0; m < 3; ++m) outcomes[m][id] = outcome(r, kAllMetrics[m]);
  }

  // Stratified fold assignment: each arm shuffled and dealt round-robin.
  const std::size_t folds = config.folds;
  std::vector<std::size_t> t_fold(units.treatment.size()), c_fold(units.control.size());
  {
    Rng rng(derive_seed(config.seed, 11));
    std::vector<std::size_t> order(units.treatment.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < order.size(); ++i) t_fold[order[i]] = i % folds;
    order.resize(units.control.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < order.size(); ++i) c_fold[order[i]] = i % folds;
  }

  auto run_fold = [&](std::size_t f) {
    std::vector<std::string> ids;
    std::vector<int> labels;
    for (std::size_t i = 0; i < units.treatment.size(); ++i) {
      if (t_fold[i] != f) {
        ids.push_back(units.treatment[i]);
        labels.push_back(1);
      }
    }
    for (std::size_t i = 0; i < units.control.size(); ++i) {
      if (c_fold[i] != f) {
        ids.push_back(units.control[i]);
        labels.push_back(0);
      }
    }
    nn::Tensor features({ids.size(), docs.dim()});
    for (std::size_t i = 0; i < ids.size(); ++i) {
      auto v = docs.raw(ids[i]);
      std::copy(v.begin(), v.end(), features.row(i).begin());
    }
    const auto model = train_propensity(features, labels, config.propensity, derive_seed(config.seed, 1000 + f));
    const auto scores = model.predict(features);
    std::vector<ScoredUnit> treated, controls;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      (labels[i] == 1 ? treated : controls).push_back({ids[i], scores[i]});
    }
    auto matches = match(treated, controls, config.k);
    FoldOutcome out;
    out.balance = balance_check(matches, docs, config.alpha, config.tau, moments.mu, moments.sigma);
    for (std::size_t m = 0; m < 3; ++m) out.eate[m] = estimate_eate(matches, outcomes[m], config.k);
    return out;
  };

  std::vector<FoldOutcome> fold_out(folds);
  const unsigned jobs = std::max(1u, std::min<unsigned>(config.jobs, static_cast<unsigned>(folds)));
  if (jobs == 1) {
    for (std::size_t f = 0; f < folds; ++f) fold_out[f] = run_fold(f);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(folds);
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t f = next++; f < folds; f = next++) {
          try {
            fold_out[f] = run_fold(f);
          } catch (...) {
            errors[f] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  const bool balance_failed =
      std::any_of(fold_out.begin(), fold_out.end(), [](const FoldOutcome& f) { return !f.balance.passed; });
  std::vector<EateReport> reports;
  for (std::size_t m = 0; m < 3; ++m) {
    EateReport rep;
    rep.scenario = scenario.name;
    rep.metric = kAllMetrics[m];
    for (const auto& f : fold_out) {
      rep.fold_eates.push_back(f.eate[m]);
      rep.balance.push_back(f.balance);
    }
    const auto ci = t_interval(rep.fold_eates);
    rep.mean_eate = ci.mean;
    rep.ci_low = ci.low;
    rep.ci_high = ci.high;
    rep.ci_includes_zero = ci.low <= 0.0 && 0.0 <= ci.high;
    rep.balance_failed = balance_failed;
    rep.discarded = rep.ci_includes_zero || balance_failed;
    std::vector<double> yt, yc;
    for (const auto& id : units.treatment) yt.push_back(outcomes[m].at(id));
    for (const auto& id : units.control) yc.push_back(outcomes[m].at(id));
    rep.naive_difference = mean(yt) - mean(yc);
    rep.naive_standard_error = std::sqrt(sample_variance(yt) / static_cast<double>(yt.size()) +
                                         sample_variance(yc) / static_cast<double>(yc.size()));
    rep.n_treatment = units.treatment.size();
    rep.n_control = units.control.size();
    reports.push_back(std::move(rep));
  }
  return reports;
}

std::vector<EateReport> run_scenario(const Corpus& corpus, const std::vector<EditProfile>& profiles,
                                     const Scenario& scenario, const EmbeddingTable& table,
                                     const CausalConfig& config) {
  CausalDataset data(corpus, profiles, table);
  return run_scenario(data, scenario, config);
}

// ---------------------------------------------------------------- reports

nlohmann::ordered_json outcomes_to_json(const std::vector<ScenarioOutcome>& outcomes, const CausalConfig& config) {
  nlohmann::ordered_json root;
  root["config"] = {{"k", config.k},         {"alpha", config.alpha}, {"tau", config.tau},
                    {"folds", config.folds}, {"min_group", config.min_group}, {"seed", config.seed}};
  auto list = nlohmann::ordered_json::array();
  for (const auto& o : outcomes) {
    nlohmann::ordered_json s;
    s["scenario"] = scenario_to_json(o.scenario);
    s["skipped"] = o.skipped;
    if (o.skipped) {
      s["skip_reason"] = o.skip_reason;
    } else {
      auto reps = nlohmann::ordered_json::array();
      for (const auto& r : o.reports) {
        nlohmann::ordered_json j;
        j["metric"] = to_string(r.metric);
        j["mean_eate"] = r.mean_eate;
        j["ci_low"] = r.ci_low;
        j["ci_high"] = r.ci_high;
        j["discarded"] = r.discarded;
        j["ci_includes_zero"] = r.ci_includes_zero;
        j["balance_failed"] = r.balance_failed;
        j["fold_eates"] = r.fold_eates;
        j["naive_difference"] = r.naive_difference;
        j["naive_standard_error"] = r.naive_standard_error;
        j["n_treatment"] = r.n_treatment;
        j["n_control"] = r.n_control;
        auto bal = nlohmann::ordered_json::array();
        for (const auto& b : r.balance) {
          bal.push_back({{"mu", b.mu},
                         {"sigma", b.sigma},
                         {"alpha", b.alpha},
                         {"tau", b.tau},
                         {"threshold", b.threshold},
                         {"achieved", b.achieved},
                         {"passed", b.passed}});
        }
        j["balance"] = bal;
        reps.push_back(std::move(j));
      }
      s["reports"] = reps;
    }
    list.push_back(std::move(s));
  }
  root["scenarios"] = list;
  return root;
}

std::string outcomes_to_csv(const std::vector<ScenarioOutcome>& outcomes) {
  std::size_t max_folds = 0;
  for (const auto& o : outcomes) {
    for (const auto& r : o.reports) max_folds = std::max(max_folds, r.fold_eates.size());
  }
  std::string out = "scenario,metric,mean_eate,ci_low,ci_high,discarded,balance_passed";
  for (std::size_t f = 0; f < max_folds; ++f) out += ",fold_" + std::to_string(f + 1);
  out += '\n';
  for (const auto& o : outcomes) {
    for (const auto& r : o.reports) {
      out += o.scenario.name + "," + std::string(to_string(r.metric)) + "," + format_double(r.mean_eate) + "," +
             format_double(r.ci_low) + "," + format_double(r.ci_high) + "," + (r.discarded ? "1" : "0") + "," +
             (r.balance_failed ? "0" : "1");
      for (std::size_t f = 0; f < max_folds; ++f) {
        out += ",";
        if (f < r.fold_eates.size()) out += format_double(r.fold_eates[f]);
      }
      out += '\n';
    }
  }
  return out;
}

}  // namespace editfx
