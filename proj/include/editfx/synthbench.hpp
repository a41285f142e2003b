#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "editfx/clickbait.hpp"
#include "editfx/corpus.hpp"
#include "editfx/embedding.hpp"
#include "json.hpp"

namespace editfx {

/// Per-metric values in the order replies, retweets, likes.
using MetricTriple = std::array<double, 3>;

struct SynthTopic {
  std::string id;
  std::vector<std::string> vocabulary;
  MetricTriple base_means{};
  double treatment_probability = 0.5;
  double weight = 1.0;  // relative sampling weight
};

struct SynthSpec {
  std::size_t n_records = 1000;
  std::vector<SynthTopic> topics;
  MetricTriple true_effect{};
  double noise = 0.1;  // gamma-multiplier dispersion; 0 gives pure Poisson
  std::uint64_t seed = 1;
  std::string outlet = "synth";
  std::size_t body_tokens = 30;
  std::size_t headline_tokens = 6;
  std::size_t embedding_dim = 32;
  double embedding_spread = 1.0;  // token scatter around the topic centre
};

/// Throws DataError on n_records < 60, probabilities outside [0, 1], empty
/// topic lists or vocabularies, negative noise or weights.
void validate(const SynthSpec& spec);

SynthSpec synth_spec_from_json(const nlohmann::json& j);
nlohmann::ordered_json synth_spec_to_json(const SynthSpec& spec);
SynthSpec load_synth_spec(const std::filesystem::path& path);

/// `count` topics with generated vocabularies; treatment probability and
/// base likes both rise across topics (from 0.1 to 0.9 and 20 to 200), so
/// topic confounds treatment and outcome.
SynthSpec confounded_spec(std::size_t n_records, double delta_likes, std::uint64_t seed, std::size_t topics = 6);
/// Same topics, every treatment probability 0.5 and equal base means.
SynthSpec unconfounded_spec(std::size_t n_records, double delta_likes, std::uint64_t seed, std::size_t topics = 6);

struct TruthRecord {
  std::string id;
  std::string topic;
  bool treated = false;
  MetricTriple expected{};  // pre-noise mean, after clamping at 0
  bool clamped = false;     // base + effect was negative for some metric
};

struct SynthOutput {
  Corpus corpus;
  std::vector<TruthRecord> truth;
  EmbeddingTable table;
};

/// Treated records get an edited post, controls a mirrored one. Outcomes are
/// Poisson draws whose mean is the topic base plus the effect (if treated),
/// scaled by a Gamma(1/noise, noise) multiplier.
SynthOutput generate(const SynthSpec& spec);

/// Word vectors for every token the generator can emit: topic tokens scatter
/// around a random topic centre, filler tokens are isotropic.
EmbeddingTable synth_embedding_table(const SynthSpec& spec);

std::string truth_to_jsonl(const std::vector<TruthRecord>& truth);

/// Class-disjoint vocabularies, so a bag-of-words model separates them.
std::vector<LabeledHeadline> separable_clickbait_corpus(std::size_t n, std::uint64_t seed);

}  // namespace editfx
