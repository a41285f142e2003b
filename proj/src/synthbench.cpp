#include "editfx/synthbench.hpp"

#include <cmath>
#include <random>
#include <set>

#include "editfx/util.hpp"

namespace editfx {

namespace {

constexpr std::array<const char*, 3> kMetricKeys{"replies", "retweets", "likes"};

const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words{"breaking", "watch", "must", "read", "update", "wow",
                                              "just",     "in",    "here", "why",  "new",    "look"};
  return words;
}

MetricTriple triple_from_json(const nlohmann::json& j, const char* what) {
  MetricTriple t{};
  if (!j.is_object()) throw DataError(std::string(what) + " must be an object keyed by metric");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (std::size_t m = 0; m < 3; ++m) {
      if (key == kMetricKeys[m]) {
        t[m] = value.get<double>();
        known = true;
      }
    }
    if (!known) throw DataError(std::string(what) + ": unknown metric " + key);
  }
  return t;
}

nlohmann::ordered_json triple_to_json(const MetricTriple& t) {
  nlohmann::ordered_json j;
  for (std::size_t m = 0; m < 3; ++m) j[kMetricKeys[m]] = t[m];
  return j;
}

std::vector<std::string> generated_vocabulary(std::size_t topic, std::size_t size) {
  std::vector<std::string> v;
  for (std::size_t w = 0; w < size; ++w) v.push_back("t" + std::to_string(topic) + "w" + std::to_string(w));
  return v;
}

std::string join(const std::vector<std::string>& words) {
  std::string s;
  for (const auto& w : words) {
    if (!s.empty()) s += ' ';
    s += w;
  }
  return s;
}

}  // namespace

void validate(const SynthSpec& spec) {
  if (spec.n_records < 60) throw DataError("synth spec: n_records must be at least 60");
  if (spec.topics.empty()) throw DataError("synth spec: no topics");
  if (spec.noise < 0.0 || !std::isfinite(spec.noise)) throw DataError("synth spec: noise must be non-negative");
  if (spec.body_tokens == 0 || spec.headline_tokens == 0) throw DataError("synth spec: token counts must be positive");
  if (spec.embedding_dim == 0) throw DataError("synth spec: embedding_dim must be positive");
  if (spec.outlet.empty()) throw DataError("synth spec: outlet must be non-empty");
  double total_weight = 0.0;
  std::set<std::string> ids;
  for (const auto& t : spec.topics) {
    if (t.id.empty()) throw DataError("synth spec: topic id must be non-empty");
    if (!ids.insert(t.id).second) throw DataError("synth spec: duplicate topic id " + t.id);
    if (t.vocabulary.empty()) throw DataError("synth spec: topic " + t.id + " has an empty vocabulary");
    if (!(t.treatment_probability >= 0.0 && t.treatment_probability <= 1.0)) {
      throw DataError("synth spec: topic " + t.id + " treatment probability outside [0, 1]");
    }
    if (!(t.weight >= 0.0) || !std::isfinite(t.weight)) throw DataError("synth spec: topic weight must be >= 0");
    for (double b : t.base_means) {
      if (!std::isfinite(b)) throw DataError("synth spec: non-finite base mean in topic " + t.id);
    }
    for (const auto& w : t.vocabulary) {
      if (tokenize(w) != std::vector<std::string>{w}) {
        throw DataError("synth spec: vocabulary entry \"" + w + "\" is not a single lowercase token");
      }
    }
    total_weight += t.weight;
  }
  if (total_weight <= 0.0) throw DataError("synth spec: topic weights sum to zero");
  for (double d : spec.true_effect) {
    if (!std::isfinite(d)) throw DataError("synth spec: non-finite true effect");
  }
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  SynthSpec s;
  try {
    s.n_records = j.at("n_records").get<std::size_t>();
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("noise")) s.noise = j.at("noise").get<double>();
    if (j.contains("outlet")) s.outlet = j.at("outlet").get<std::string>();
    if (j.contains("body_tokens")) s.body_tokens = j.at("body_tokens").get<std::size_t>();
    if (j.contains("headline_tokens")) s.headline_tokens = j.at("headline_tokens").get<std::size_t>();
    if (j.contains("embedding_dim")) s.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    if (j.contains("embedding_spread")) s.embedding_spread = j.at("embedding_spread").get<double>();
    if (j.contains("true_effect")) s.true_effect = triple_from_json(j.at("true_effect"), "true_effect");
    std::size_t index = 0;
    for (const auto& tj : j.at("topics")) {
      SynthTopic t;
      t.id = tj.value("id", "topic" + std::to_string(index));
      if (tj.contains("vocabulary")) {
        t.vocabulary = tj.at("vocabulary").get<std::vector<std::string>>();
      } else {
        t.vocabulary = generated_vocabulary(index, tj.value("vocabulary_size", std::size_t{40}));
      }
      if (tj.contains("base_means")) t.base_means = triple_from_json(tj.at("base_means"), "base_means");
      t.treatment_probability = tj.at("treatment_probability").get<double>();
      if (tj.contains("weight")) t.weight = tj.at("weight").get<double>();
      s.topics.push_back(std::move(t));
      ++index;
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("synth spec: ") + e.what());
  }
  validate(s);
  return s;
}

nlohmann::ordered_json synth_spec_to_json(const SynthSpec& spec) {
  nlohmann::ordered_json j;
  j["n_records"] = spec.n_records;
  j["seed"] = spec.seed;
  j["noise"] = spec.noise;
  j["outlet"] = spec.outlet;
  j["body_tokens"] = spec.body_tokens;
  j["headline_tokens"] = spec.headline_tokens;
  j["embedding_dim"] = spec.embedding_dim;
  j["embedding_spread"] = spec.embedding_spread;
  j["true_effect"] = triple_to_json(spec.true_effect);
  auto topics = nlohmann::ordered_json::array();
  for (const auto& t : spec.topics) {
    nlohmann::ordered_json tj;
    tj["id"] = t.id;
    tj["vocabulary"] = t.vocabulary;
    tj["base_means"] = triple_to_json(t.base_means);
    tj["treatment_probability"] = t.treatment_probability;
    tj["weight"] = t.weight;
    topics.push_back(std::move(tj));
  }
  j["topics"] = topics;
  return j;
}

SynthSpec load_synth_spec(const std::filesystem::path& path) {
  const auto text = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return synth_spec_from_json(j);
}

SynthSpec confounded_spec(std::size_t n_records, double delta_likes, std::uint64_t seed, std::size_t topics) {
  if (topics < 2) throw InvalidArgument("confounded_spec: need at least two topics");
  SynthSpec s;
  s.n_records = n_records;
  s.seed = seed;
  s.true_effect = {0.0, 0.0, delta_likes};
  for (std::size_t i = 0; i < topics; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(topics - 1);
    SynthTopic t;
    t.id = "topic" + std::to_string(i);
    t.vocabulary = generated_vocabulary(i, 40);
    t.treatment_probability = 0.1 + 0.8 * f;
    t.base_means = {2.0 + 18.0 * f, 5.0 + 45.0 * f, 20.0 + 180.0 * f};
    s.topics.push_back(std::move(t));
  }
  return s;
}

SynthSpec unconfounded_spec(std::size_t n_records, double delta_likes, std::uint64_t seed, std::size_t topics) {
  auto s = confounded_spec(n_records, delta_likes, seed, topics);
  for (auto& t : s.topics) {
    t.treatment_probability = 0.5;
    t.base_means = {10.0, 25.0, 100.0};
  }
  return s;
}

EmbeddingTable synth_embedding_table(const SynthSpec& spec) {
  validate(spec);
  const std::size_t dim = spec.embedding_dim;
  Rng rng(derive_seed(spec.seed, 0xE3B));
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
  std::vector<std::string> tokens;
  std::vector<double> values;
  std::set<std::string> seen;
  auto emit = [&](const std::string& token, const std::vector<double>& centre, double spread) {
    if (!seen.insert(token).second) return;
    tokens.push_back(token);
    for (std::size_t d = 0; d < dim; ++d) values.push_back(centre[d] + spread * gauss(rng));
  };
  const std::vector<double> origin(dim, 0.0);
  for (const auto& t : spec.topics) {
    std::vector<double> centre(dim);
    for (auto& c : centre) c = gauss(rng);
    for (const auto& w : t.vocabulary) emit(w, centre, spec.embedding_spread);
  }
  for (const auto& w : filler_words()) emit(w, origin, 1.0);
  return EmbeddingTable(dim, std::move(tokens), std::move(values));
}

SynthOutput generate(const SynthSpec& spec) {
  validate(spec);
  auto table = synth_embedding_table(spec);
  Rng rng(derive_seed(spec.seed, 0x5EC));
  std::vector<double> weights;
  for (const auto& t : spec.topics) weights.push_back(t.weight);
  std::discrete_distribution<std::size_t> pick_topic(weights.begin(), weights.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::int64_t> offset(0, 30 * 86400 - 1);
  const std::int64_t start = *parse_iso8601_utc("2018-06-01T00:00:00Z");
  const auto& filler = filler_words();
  std::uniform_int_distribution<std::size_t> pick_filler(0, filler.size() - 1);
  const std::size_t width = std::to_string(spec.n_records).size();

  std::vector<PairedRecord> records;
  std::vector<TruthRecord> truth;
  records.reserve(spec.n_records);
  truth.reserve(spec.n_records);
  for (std::size_t i = 0; i < spec.n_records; ++i) {
    const auto& topic = spec.topics[pick_topic(rng)];
    std::uniform_int_distribution<std::size_t> pick_word(0, topic.vocabulary.size() - 1);
    auto draw_words = [&](std::size_t n) {
      std::vector<std::string> w;
      for (std::size_t j = 0; j < n; ++j) w.push_back(topic.vocabulary[pick_word(rng)]);
      return w;
    };
    PairedRecord r;
    std::string num = std::to_string(i);
    r.id = "s" + std::string(width - num.size(), '0') + num;
    r.outlet = spec.outlet;
    r.headline = join(draw_words(spec.headline_tokens));
    r.body_text = join(draw_words(spec.body_tokens));
    const bool treated = unit(rng) < topic.treatment_probability;
    if (treated) {
      r.post_text = filler[pick_filler(rng)] + ": " + r.headline + " " + filler[pick_filler(rng)];
    } else {
      r.post_text = r.headline;
    }
    r.created_unix = start + offset(rng);
    r.created_at = format_iso8601_utc(r.created_unix);

    TruthRecord tr;
    tr.id = r.id;
    tr.topic = topic.id;
    tr.treated = treated;
    std::array<std::int64_t, 3> y{};
    for (std::size_t m = 0; m < 3; ++m) {
      double mean = topic.base_means[m] + (treated ? spec.true_effect[m] : 0.0);
      if (mean < 0.0) {
        mean = 0.0;
        tr.clamped = true;
      }
      tr.expected[m] = mean;
      double lambda = mean;
      if (spec.noise > 0.0) {
        std::gamma_distribution<double> mult(1.0 / spec.noise, spec.noise);
        lambda *= mult(rng);
      }
      if (lambda > 0.0) {
        std::poisson_distribution<std::int64_t> draw(lambda);
        y[m] = draw(rng);
      }
    }
    r.replies = y[0];
    r.retweets = y[1];
    r.likes = y[2];
    records.push_back(std::move(r));
    truth.push_back(std::move(tr));
  }
  Corpus corpus(std::move(records), "synth:" + std::to_string(spec.seed));
  return SynthOutput{std::move(corpus), std::move(truth), std::move(table)};
}

std::string truth_to_jsonl(const std::vector<TruthRecord>& truth) {
  std::string out;
  for (const auto& t : truth) {
    nlohmann::ordered_json j;
    j["id"] = t.id;
    j["topic"] = t.topic;
    j["treated"] = t.treated;
    j["expected"] = triple_to_json(t.expected);
    j["clamped"] = t.clamped;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<LabeledHeadline> separable_clickbait_corpus(std::size_t n, std::uint64_t seed) {
  static const std::vector<std::string> bait{
      "you",     "won't",   "believe", "shocking", "amazing", "this",    "secret",  "trick",   "insane",
      "reasons", "what",    "happened", "next",    "omg",     "epic",    "hilarious", "literally", "adorable",
      "guess",   "weird",   "totally", "ultimate", "genius",  "photos",  "cute",    "mind",    "blowing"};
  static const std::vector<std::string> news{
      "senate",  "approves", "budget",  "minister", "announces", "inflation", "report",   "court",  "rules",
      "election", "results", "economy", "trade",    "talks",     "council",   "policy",   "agency", "officials",
      "quarterly", "earnings", "summit", "treaty",  "parliament", "governor", "investigation", "tariffs", "census"};
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> len(5, 10);
  std::vector<LabeledHeadline> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    const auto& vocab = label == 1 ? bait : news;
    std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
    std::vector<std::string> words;
    const std::size_t l = len(rng);
    for (std::size_t j = 0; j < l; ++j) words.push_back(vocab[pick(rng)]);
    out.push_back({join(words), label});
  }
  return out;
}

}  // namespace editfx
