#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "editfx/clickbait.hpp"
#include "editfx/corpus.hpp"
#include "editfx/embedding.hpp"
#include "editfx/propensity.hpp"
#include "editfx/textsim.hpp"
#include "json.hpp"

namespace editfx {

enum class Metric { replies, retweets, likes };
inline constexpr std::array<Metric, 3> kAllMetrics{Metric::replies, Metric::retweets, Metric::likes};
std::string_view to_string(Metric m);
double outcome(const PairedRecord& r, Metric m);

/// Conjunction of optional constraints on a profiled record.
struct Selector {
  std::optional<bool> mirrored;
  std::optional<int> cluster;
  std::optional<ClickbaitClass> headline_class;
  std::optional<ClickbaitClass> post_class;

  bool matches(const EditProfile& p) const;
  std::string describe() const;
};

/// One treatment-vs-control comparison within a single outlet.
struct Scenario {
  std::string name;
  Selector treatment;
  Selector control;
  std::string outlet;
  std::optional<std::string> section;
  std::optional<TimeBlock> time_block;
  bool exclude_mirrored = false;

  static Scenario edited_vs_mirrored(std::string name, std::string outlet);
  static Scenario cluster_pair(std::string name, std::string outlet, int treatment_cluster, int control_cluster);
  /// "NC->C" compares NC->C posts against NC->NC; "C->NC" compares C->NC
  /// against C->C. Mirrored pairs are excluded.
  static Scenario clickbait_transition(std::string name, std::string outlet, std::string_view pattern);
};

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);

struct CausalConfig {
  std::size_t k = 5;
  double alpha = 1.5;
  double tau = 0.8;
  std::size_t folds = 10;
  std::size_t min_group = 30;
  std::uint64_t seed = 1;
  std::size_t exact_pair_cutoff = 2000;
  std::size_t sampled_pairs = 200000;
  unsigned jobs = 1;
  PropensityConfig propensity{};
};

/// Reads k, alpha, tau, folds, min_group, seed, jobs and propensity settings
/// from a JSON object, keeping defaults for absent keys.
CausalConfig causal_config_from_json(const nlohmann::json& j, CausalConfig base = {});

struct ScoredUnit {
  std::string id;
  double propensity = 0.0;
};

struct MatchResult {
  std::string treatment_id;
  std::vector<std::string> matched_control_ids;
  std::vector<double> propensity_gaps;
  double mean_similarity = 0.0;  // filled by balance_check
};

/// For every treatment, the k controls with the smallest propensity gap,
/// sampled with replacement across treatments; equal gaps go to the smaller
/// id. Fewer than k controls throws.
std::vector<MatchResult> match(std::span<const ScoredUnit> treatments, std::span<const ScoredUnit> controls,
                               std::size_t k = 5);

struct BalanceStats {
  double mu = 0.0;
  double sigma = 0.0;
  double tau = 0.8;
  double alpha = 1.5;
  double threshold = 0.0;  // max(mu + alpha * sigma, tau)
  double achieved = 0.0;   // mean over treatments of mean similarity to matched controls
  bool passed = false;
};

/// Evaluates achieved >= max(mu + alpha * sigma, tau).
BalanceStats evaluate_balance(double achieved, double mu, double sigma, double alpha = 1.5, double tau = 0.8);

/// Unit-normalized body-text embeddings keyed by record id.
class DocumentVectors {
public:
  DocumentVectors() = default;
  DocumentVectors(const Corpus& corpus, const EmbeddingTable& table);

  void add(std::string id, std::vector<double> values, std::size_t token_hits);
  std::size_t dim() const { return dim_; }
  bool contains(std::string_view id) const { return index_.count(std::string(id)) != 0; }
  bool zero_hit(std::string_view id) const;
  /// Raw averaged vector.
  std::span<const double> raw(std::string_view id) const;
  /// Unit-length copy (zero vector stays zero).
  std::span<const double> unit(std::string_view id) const;
  /// Cosine similarity of two documents.
  double similarity(std::string_view a, std::string_view b) const;

private:
  std::size_t slot(std::string_view id) const;
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> raw_;
  std::vector<double> unit_;
  std::vector<std::size_t> hits_;
};

/// Computes each match's mean similarity and evaluates the balance gate.
BalanceStats balance_check(std::vector<MatchResult>& matches, const DocumentVectors& docs, double alpha, double tau,
                           double mu, double sigma);

struct SimilarityMoments {
  double mu = 0.0;
  double sigma = 0.0;  // population standard deviation
  std::size_t pairs = 0;
  bool sampled = false;
};

/// Mean and standard deviation of cosine similarity over all unordered
/// document pairs; above `exact_cutoff` documents, over `sampled_pairs`
/// uniformly drawn distinct pairs.
SimilarityMoments similarity_moments(const DocumentVectors& docs, std::span<const std::string> ids,
                                     std::uint64_t seed, std::size_t exact_cutoff = 2000,
                                     std::size_t sampled_pairs = 200000);

/// sum_t sum_m (y_t - y_m) / k / N_T. A matched id without an outcome throws.
double estimate_eate(const std::vector<MatchResult>& matches, const std::unordered_map<std::string, double>& outcomes,
                     std::size_t k);

struct ConfidenceInterval {
  double mean = 0.0;
  double low = 0.0;
  double high = 0.0;
};

/// Student-t interval over fold values (n - 1 degrees of freedom).
ConfidenceInterval t_interval(std::span<const double> values, double level = 0.95);

struct EateReport {
  std::string scenario;
  Metric metric = Metric::likes;
  std::vector<double> fold_eates;
  double mean_eate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool ci_includes_zero = false;
  bool balance_failed = false;  // some fold failed the balance gate ("unmatched")
  bool discarded = false;       // ci_includes_zero || balance_failed
  std::vector<BalanceStats> balance;  // per fold
  double naive_difference = 0.0;      // unmatched treated mean - control mean
  double naive_standard_error = 0.0;
  std::size_t n_treatment = 0;
  std::size_t n_control = 0;
};

/// Raised when a scenario's selectors yield too few units.
class InsufficientUnits : public Error {
public:
  using Error::Error;
};

/// Corpus, profiles and body embeddings prepared once for many scenarios.
class CausalDataset {
public:
  CausalDataset(const Corpus& corpus, const std::vector<EditProfile>& profiles, const EmbeddingTable& table);

  const Corpus& corpus() const { return *corpus_; }
  const DocumentVectors& documents() const { return docs_; }
  const EditProfile& profile(std::string_view id) const;

  struct Units {
    std::vector<std::string> treatment;
    std::vector<std::string> control;
  };
  /// Applies filters and selectors; records with empty or zero-hit bodies
  /// are dropped. Overlapping selectors throw.
  Units select(const Scenario& scenario) const;

private:
  const Corpus* corpus_;
  std::unordered_map<std::string, EditProfile> profiles_;
  DocumentVectors docs_;
};

/// 10-fold protocol: for each fold, train the propensity model on the other
/// 90%, match and balance-check within that 90%, and measure EATE for each
/// engagement metric. Throws InsufficientUnits below the group-size floor.
std::vector<EateReport> run_scenario(const CausalDataset& data, const Scenario& scenario, const CausalConfig& config);
std::vector<EateReport> run_scenario(const Corpus& corpus, const std::vector<EditProfile>& profiles,
                                     const Scenario& scenario, const EmbeddingTable& table, const CausalConfig& config);

struct ScenarioOutcome {
  Scenario scenario;
  bool skipped = false;
  std::string skip_reason;
  std::vector<EateReport> reports;
};

nlohmann::ordered_json outcomes_to_json(const std::vector<ScenarioOutcome>& outcomes, const CausalConfig& config);
/// scenario, metric, mean_eate, ci_low, ci_high, discarded, balance_passed, fold_1..fold_n
std::string outcomes_to_csv(const std::vector<ScenarioOutcome>& outcomes);

}  // namespace editfx
