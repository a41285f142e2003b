#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "editfx/corpus.hpp"
#include "editfx/embedding.hpp"
#include "editfx/layers.hpp"
#include "editfx/optim.hpp"
#include "editfx/stats.hpp"
#include "editfx/textsim.hpp"

namespace editfx {

struct LabeledHeadline {
  std::string text;
  int label = 0;  // 1 = clickbait, 0 = not
};

enum class ClickbaitClass { C, NC };

inline constexpr double kClickbaitThreshold = 0.5;

/// C iff score > threshold (strict).
ClickbaitClass classify_score(double score, double threshold = kClickbaitThreshold);

struct ClickbaitConfig {
  std::size_t hidden_size = 64;
  std::size_t attention_size = 64;
  std::size_t embedding_dim = 50;  // used only when no embedding table seeds the token vectors
  std::size_t max_tokens = 64;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::size_t patience = 3;
  std::size_t min_examples = 20;
  double test_fraction = 0.1;
  double validation_fraction = 0.1;
  std::uint64_t seed = 7;
  nn::AdamConfig adam{};
};

/// Embedding lookup -> bidirectional GRU -> attention pooling -> one sigmoid
/// unit. Token 0 is the shared unknown-token vector.
class ClickbaitModel {
public:
  ClickbaitModel() = default;
  /// Builds a fresh model over `vocabulary`. Token vectors come from `table`
  /// when it has the token, otherwise from a seeded uniform draw.
  ClickbaitModel(const std::vector<std::string>& vocabulary, const ClickbaitConfig& config,
                 const EmbeddingTable* table, std::uint64_t seed);

  std::size_t vocabulary_size() const { return tokens_.size(); }
  std::size_t hidden_size() const { return fw_.hidden_size(); }
  std::size_t max_tokens() const { return max_tokens_; }
  double threshold() const { return kClickbaitThreshold; }

  /// Token ids, truncated to max_tokens; [unknown] when nothing tokenizes.
  std::vector<std::size_t> encode(std::string_view text) const;

  /// Sigmoid output in [0, 1]. Empty text throws.
  double score(std::string_view text) const;
  ClickbaitClass classify(std::string_view text) const;

  double predict(const std::vector<std::size_t>& ids) const;
  /// BCE loss for one example; accumulates gradients when `backprop`.
  double loss(const std::vector<std::size_t>& ids, double label, bool backprop);

  nn::ParamRefs parameters();

  void save(const std::filesystem::path& path) const;
  static ClickbaitModel load(const std::filesystem::path& path);

private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t max_tokens_ = 64;
  std::uint64_t seed_ = 0;
  nn::Param embeddings_;
  nn::GruCell fw_, bw_;
  nn::AttentionHead attention_;
  nn::DenseLayer output_;
};

struct BinaryConfusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  double precision() const;
  double recall() const;
  /// Harmonic mean of precision and recall on the positive class; 0 when
  /// either is undefined or zero.
  double f1() const;
};

BinaryConfusion confusion(std::span<const int> truth, std::span<const int> predicted);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per-class shuffle, then round(n_class * fraction) of each class to test.
SplitIndices stratified_split(std::span<const int> labels, double test_fraction, std::uint64_t seed);

struct ClickbaitTrainResult {
  ClickbaitModel model;
  double test_f1 = 0.0;
  BinaryConfusion test_confusion;
  std::vector<double> validation_f1;  // per completed epoch
  std::size_t epochs_run = 0;
};

/// 90:10 stratified split, Adam with gradient clipping on BCE, early stop on
/// validation F1 (carved from the training part). Returns the held-out F1.
ClickbaitTrainResult train_clickbait(const std::vector<LabeledHeadline>& dataset, const ClickbaitConfig& config,
                                     const EmbeddingTable* table = nullptr);

/// `text,label` CSV with a header row.
std::vector<LabeledHeadline> load_labeled_csv(const std::filesystem::path& path);
std::vector<LabeledHeadline> parse_labeled_csv(std::string_view content);
std::string labeled_to_csv(const std::vector<LabeledHeadline>& data);

/// Scores headline and post of every profiled record in place.
void score_profiles(const ClickbaitModel& model, const Corpus& corpus, std::vector<EditProfile>& profiles);

struct ShiftTable {
  std::string outlet;
  std::size_t headlines_c = 0;   // denominator of P(NC|C)
  std::size_t headlines_nc = 0;  // denominator of P(C|NC)
  std::size_t c_to_nc = 0;
  std::size_t nc_to_c = 0;
  std::optional<double> p_nc_given_c;  // nullopt when headlines_c == 0
  std::optional<double> p_c_given_nc;  // nullopt when headlines_nc == 0
};

/// P(post class | headline class) for one outlet. Profiles lacking scores or
/// an unknown outlet throw.
ShiftTable conditional_shift_table(const std::vector<EditProfile>& profiles, const Corpus& corpus,
                                   std::string_view outlet, double threshold = kClickbaitThreshold);

struct ClickbaitComparison {
  std::string outlet;
  double mean_headline = 0.0;
  double mean_post = 0.0;
  std::optional<TestResult> post_vs_headline;  // Welch t; nullopt when degenerate
};

ClickbaitComparison compare_clickbait_scores(const std::vector<EditProfile>& profiles, const Corpus& corpus,
                                             std::string_view outlet);

}  // namespace editfx
