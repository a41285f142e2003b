#include "editfx/clickbait.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "editfx/serialize.hpp"
#include "editfx/util.hpp"

namespace editfx {

ClickbaitClass classify_score(double score, double threshold) {
  return score > threshold ? ClickbaitClass::C : ClickbaitClass::NC;
}

namespace {
constexpr const char* kUnknownToken = "<unk>";
}

ClickbaitModel::ClickbaitModel(const std::vector<std::string>& vocabulary, const ClickbaitConfig& config,
                               const EmbeddingTable* table, std::uint64_t seed)
    : max_tokens_(config.max_tokens), seed_(seed) {
  if (config.max_tokens == 0) throw InvalidArgument("clickbait: max_tokens must be positive");
  tokens_.push_back(kUnknownToken);
  for (const auto& t : vocabulary) {
    if (t != kUnknownToken && !index_.count(t)) {
      index_.emplace(t, tokens_.size());
      tokens_.push_back(t);
    }
  }
  const std::size_t dim = table ? table->dim() : config.embedding_dim;
  Rng rng(seed);
  nn::Tensor emb({tokens_.size(), dim});
  std::uniform_real_distribution<double> init(-0.1, 0.1);
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    auto vec = table && i > 0 ? table->lookup(tokens_[i]) : std::span<const double>{};
    auto row = emb.row(i);
    if (!vec.empty()) {
      std::copy(vec.begin(), vec.end(), row.begin());
    } else {
      for (auto& v : row) v = init(rng);
    }
  }
  embeddings_ = nn::Param("embeddings", std::move(emb));
  fw_ = nn::GruCell("gru_fw", dim, config.hidden_size, rng);
  bw_ = nn::GruCell("gru_bw", dim, config.hidden_size, rng);
  attention_ = nn::AttentionHead("attention", 2 * config.hidden_size, config.attention_size, rng);
  output_ = nn::DenseLayer("output", 2 * config.hidden_size, 1, nn::Activation::sigmoid, rng);
}

std::vector<std::size_t> ClickbaitModel::encode(std::string_view text) const {
  std::vector<std::size_t> ids;
  for (const auto& tok : tokenize(text)) {
    if (ids.size() == max_tokens_) break;
    auto it = index_.find(tok);
    ids.push_back(it == index_.end() ? 0 : it->second);
  }
  if (ids.empty()) ids.push_back(0);
  return ids;
}

double ClickbaitModel::predict(const std::vector<std::size_t>& ids) const {
  const std::size_t dim = embeddings_.value.cols();
  nn::Tensor x({ids.size(), dim});
  for (std::size_t t = 0; t < ids.size(); ++t) {
    auto src = embeddings_.value.row(ids[t]);
    std::copy(src.begin(), src.end(), x.row(t).begin());
  }
  auto tr = nn::forward_gru_bidirectional(fw_, bw_, x);
  auto att = attention_.forward(tr.states);
  return output_.forward(att.context)[0];
}

double ClickbaitModel::loss(const std::vector<std::size_t>& ids, double label, bool backprop) {
  const std::size_t dim = embeddings_.value.cols();
  nn::Tensor x({ids.size(), dim});
  for (std::size_t t = 0; t < ids.size(); ++t) {
    auto src = embeddings_.value.row(ids[t]);
    std::copy(src.begin(), src.end(), x.row(t).begin());
  }
  auto tr = nn::forward_gru_bidirectional(fw_, bw_, x);
  auto att = attention_.forward(tr.states);
  const double p = output_.forward(att.context)[0];
  const double value = nn::binary_cross_entropy(p, label);
  if (!backprop) return value;

  const double delta = p - label;
  const std::size_t d = att.context.size();
  nn::Tensor grad_ctx({d});
  output_.bias.grad[0] += delta;
  for (std::size_t i = 0; i < d; ++i) {
    output_.weights.grad[i] += att.context[i] * delta;
    grad_ctx[i] = output_.weights.value[i] * delta;
  }
  auto grad_states = attention_.backward(tr.states, att, grad_ctx);
  auto grad_x = nn::backward_gru_bidirectional(fw_, bw_, tr, grad_states);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    auto dst = embeddings_.grad.row(ids[t]);
    auto src = grad_x.row(t);
    for (std::size_t j = 0; j < dim; ++j) dst[j] += src[j];
  }
  return value;
}

double ClickbaitModel::score(std::string_view text) const {
  if (normalize(text).empty()) throw InvalidArgument("clickbait score: empty text");
  return predict(encode(text));
}

ClickbaitClass ClickbaitModel::classify(std::string_view text) const { return classify_score(score(text), threshold()); }

nn::ParamRefs ClickbaitModel::parameters() {
  nn::ParamRefs out{&embeddings_};
  for (auto* p : fw_.parameters()) out.push_back(p);
  for (auto* p : bw_.parameters()) out.push_back(p);
  for (auto* p : attention_.parameters()) out.push_back(p);
  for (auto* p : output_.parameters()) out.push_back(p);
  return out;
}

void ClickbaitModel::save(const std::filesystem::path& path) const {
  nlohmann::json header;
  header["model"] = "clickbait_bigru_attention";
  header["tokens"] = tokens_;
  header["embedding_dim"] = embeddings_.value.cols();
  header["hidden_size"] = fw_.hidden_size();
  header["attention_size"] = attention_.context.value.size();
  header["max_tokens"] = max_tokens_;
  header["seed"] = seed_;
  header["threshold"] = kClickbaitThreshold;
  auto& self = const_cast<ClickbaitModel&>(*this);
  nn::save_params(path, header, self.parameters());
}

ClickbaitModel ClickbaitModel::load(const std::filesystem::path& path) {
  auto loaded = nn::load_params(path);
  const auto& h = loaded.header;
  if (h.value("model", "") != "clickbait_bigru_attention") throw DataError("not a clickbait model file");
  ClickbaitConfig cfg;
  cfg.embedding_dim = h.at("embedding_dim").get<std::size_t>();
  cfg.hidden_size = h.at("hidden_size").get<std::size_t>();
  cfg.attention_size = h.at("attention_size").get<std::size_t>();
  cfg.max_tokens = h.at("max_tokens").get<std::size_t>();
  auto tokens = h.at("tokens").get<std::vector<std::string>>();
  if (tokens.empty() || tokens[0] != kUnknownToken) throw DataError("clickbait model: bad vocabulary");
  std::vector<std::string> vocab(tokens.begin() + 1, tokens.end());
  ClickbaitModel model(vocab, cfg, nullptr, h.at("seed").get<std::uint64_t>());
  nn::assign_params(loaded, model.parameters());
  return model;
}

// ---------------------------------------------------------------- metrics, split

double BinaryConfusion::precision() const { return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp); }
double BinaryConfusion::recall() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn); }
double BinaryConfusion::f1() const {
  const double p = precision(), r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

BinaryConfusion confusion(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw InvalidArgument("confusion: length mismatch");
  BinaryConfusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == 1) {
      predicted[i] == 1 ? ++c.tp : ++c.fn;
    } else {
      predicted[i] == 1 ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

SplitIndices stratified_split(std::span<const int> labels, double test_fraction, std::uint64_t seed) {
  if (test_fraction < 0.0 || test_fraction >= 1.0) throw InvalidArgument("test fraction must be in [0, 1)");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  SplitIndices out;
  Rng rng(seed);
  for (auto& [label, idx] : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(idx.size()) * test_fraction));
    out.test.insert(out.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    out.train.insert(out.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

// ---------------------------------------------------------------- training

namespace {

double f1_on(const ClickbaitModel& model, const std::vector<std::vector<std::size_t>>& encoded,
             const std::vector<int>& labels, std::span<const std::size_t> idx, BinaryConfusion* out = nullptr) {
  std::vector<int> truth, pred;
  for (auto i : idx) {
    truth.push_back(labels[i]);
    pred.push_back(classify_score(model.predict(encoded[i])) == ClickbaitClass::C ? 1 : 0);
  }
  auto c = confusion(truth, pred);
  if (out) *out = c;
  return c.f1();
}

}  // namespace

ClickbaitTrainResult train_clickbait(const std::vector<LabeledHeadline>& dataset, const ClickbaitConfig& config,
                                     const EmbeddingTable* table) {
  if (dataset.size() < config.min_examples) {
    throw InvalidArgument("clickbait training needs at least " + std::to_string(config.min_examples) +
                          " examples, got " + std::to_string(dataset.size()));
  }
  std::vector<int> labels;
  std::set<int> classes;
  for (const auto& ex : dataset) {
    if (ex.label != 0 && ex.label != 1) throw InvalidArgument("clickbait labels must be 0 or 1");
    if (normalize(ex.text).empty()) throw InvalidArgument("clickbait training text is empty");
    labels.push_back(ex.label);
    classes.insert(ex.label);
  }
  if (classes.size() < 2) throw InvalidArgument("clickbait training data contains a single class");

  const auto outer = stratified_split(labels, config.test_fraction, config.seed);
  std::vector<int> train_labels;
  for (auto i : outer.train) train_labels.push_back(labels[i]);
  const auto inner = stratified_split(train_labels, config.validation_fraction, derive_seed(config.seed, 1));
  std::vector<std::size_t> fit_idx, val_idx;
  for (auto j : inner.train) fit_idx.push_back(outer.train[j]);
  for (auto j : inner.test) val_idx.push_back(outer.train[j]);
  if (val_idx.empty()) val_idx = fit_idx;

  // Vocabulary from the fitting portion only, in first-seen order.
  std::vector<std::string> vocab;
  std::set<std::string> seen;
  for (auto i : fit_idx) {
    for (auto& tok : tokenize(dataset[i].text)) {
      if (seen.insert(tok).second) vocab.push_back(tok);
    }
  }
  ClickbaitTrainResult result;
  result.model = ClickbaitModel(vocab, config, table, derive_seed(config.seed, 2));
  auto& model = result.model;
  std::vector<std::vector<std::size_t>> encoded;
  encoded.reserve(dataset.size());
  for (const auto& ex : dataset) encoded.push_back(model.encode(ex.text));

  auto params = model.parameters();
  nn::AdamState adam(config.adam);
  Rng rng(derive_seed(config.seed, 3));
  std::vector<nn::Tensor> best = [&] {
    std::vector<nn::Tensor> v;
    for (auto* p : params) v.push_back(p->value);
    return v;
  }();
  double best_f1 = -1.0;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  const std::size_t batch = std::max<std::size_t>(1, config.batch_size);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(fit_idx.begin(), fit_idx.end(), rng);
    for (std::size_t start = 0; start < fit_idx.size(); start += batch) {
      const std::size_t end = std::min(fit_idx.size(), start + batch);
      nn::zero_grads(params);
      for (std::size_t b = start; b < end; ++b) {
        model.loss(encoded[fit_idx[b]], static_cast<double>(labels[fit_idx[b]]), true);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (auto* p : params) {
        for (auto& g : p->grad.data()) g *= inv;
      }
      nn::adam_step(adam, params);
    }
    const double f1 = f1_on(model, encoded, labels, val_idx);
    double val_loss = 0.0;
    for (auto i : val_idx) val_loss += model.loss(encoded[i], static_cast<double>(labels[i]), false);
    val_loss /= static_cast<double>(val_idx.size());
    result.validation_f1.push_back(f1);
    result.epochs_run = epoch + 1;
    // equal F1 still counts as progress when validation loss drops
    if (f1 > best_f1 || (f1 == best_f1 && val_loss < best_loss)) {
      best_f1 = f1;
      best_loss = val_loss;
      stale = 0;
      for (std::size_t k = 0; k < params.size(); ++k) best[k] = params[k]->value;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  for (std::size_t k = 0; k < params.size(); ++k) params[k]->value = best[k];
  result.test_f1 = f1_on(model, encoded, labels, outer.test, &result.test_confusion);
  return result;
}

// ---------------------------------------------------------------- data files

std::vector<LabeledHeadline> parse_labeled_csv(std::string_view content) {
  std::vector<LabeledHeadline> out;
  std::size_t pos = 0, line_no = 0;
  bool header = true;
  while (pos < content.size()) {
    // Quoted fields may not span lines in this format.
    auto nl = content.find('\n', pos);
    auto line = content.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? content.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line != "text,label") throw DataError("labeled CSV must start with the header `text,label`");
      continue;
    }
    const auto comma = line.rfind(',');
    if (comma == std::string_view::npos) throw DataError("labeled CSV line " + std::to_string(line_no) + ": no label");
    auto text_cell = line.substr(0, comma);
    auto label_cell = line.substr(comma + 1);
    std::string text;
    if (!text_cell.empty() && text_cell.front() == '"') {
      if (text_cell.size() < 2 || text_cell.back() != '"') {
        throw DataError("labeled CSV line " + std::to_string(line_no) + ": unbalanced quotes");
      }
      for (std::size_t i = 1; i + 1 < text_cell.size(); ++i) {
        text.push_back(text_cell[i]);
        if (text_cell[i] == '"' && i + 2 < text_cell.size() && text_cell[i + 1] == '"') ++i;
      }
    } else {
      text = std::string(text_cell);
    }
    if (label_cell != "0" && label_cell != "1") {
      throw DataError("labeled CSV line " + std::to_string(line_no) + ": label must be 0 or 1");
    }
    out.push_back({std::move(text), label_cell == "1" ? 1 : 0});
  }
  return out;
}

std::vector<LabeledHeadline> load_labeled_csv(const std::filesystem::path& path) {
  return parse_labeled_csv(read_file(path));
}

std::string labeled_to_csv(const std::vector<LabeledHeadline>& data) {
  std::string out = "text,label\n";
  for (const auto& ex : data) {
    if (ex.text.find_first_of(",\"") != std::string::npos) {
      out += '"';
      for (char c : ex.text) {
        if (c == '"') out += '"';
        out += c;
      }
      out += '"';
    } else {
      out += ex.text;
    }
    out += ex.label ? ",1\n" : ",0\n";
  }
  return out;
}

// ---------------------------------------------------------------- analyses

void score_profiles(const ClickbaitModel& model, const Corpus& corpus, std::vector<EditProfile>& profiles) {
  for (auto& p : profiles) {
    const auto& r = corpus.at(p.record_id);
    p.headline_clickbait = model.score(r.headline);
    p.post_clickbait = model.score(r.post_text);
  }
}

ShiftTable conditional_shift_table(const std::vector<EditProfile>& profiles, const Corpus& corpus,
                                   std::string_view outlet, double threshold) {
  ShiftTable t;
  t.outlet = std::string(outlet);
  std::size_t seen = 0;
  for (const auto& p : profiles) {
    const auto& r = corpus.at(p.record_id);
    if (r.outlet != outlet) continue;
    if (!p.headline_clickbait || !p.post_clickbait) {
      throw InvalidArgument("profile " + p.record_id + " lacks clickbait scores");
    }
    ++seen;
    const auto head = classify_score(*p.headline_clickbait, threshold);
    const auto post = classify_score(*p.post_clickbait, threshold);
    if (head == ClickbaitClass::C) {
      ++t.headlines_c;
      if (post == ClickbaitClass::NC) ++t.c_to_nc;
    } else {
      ++t.headlines_nc;
      if (post == ClickbaitClass::C) ++t.nc_to_c;
    }
  }
  if (seen == 0) throw InvalidArgument("unknown outlet: " + std::string(outlet));
  if (t.headlines_c) t.p_nc_given_c = static_cast<double>(t.c_to_nc) / static_cast<double>(t.headlines_c);
  if (t.headlines_nc) t.p_c_given_nc = static_cast<double>(t.nc_to_c) / static_cast<double>(t.headlines_nc);
  return t;
}

ClickbaitComparison compare_clickbait_scores(const std::vector<EditProfile>& profiles, const Corpus& corpus,
                                             std::string_view outlet) {
  std::vector<double> heads, posts;
  for (const auto& p : profiles) {
    if (corpus.at(p.record_id).outlet != outlet) continue;
    if (!p.headline_clickbait || !p.post_clickbait) {
      throw InvalidArgument("profile " + p.record_id + " lacks clickbait scores");
    }
    heads.push_back(*p.headline_clickbait);
    posts.push_back(*p.post_clickbait);
  }
  if (heads.empty()) throw InvalidArgument("unknown outlet: " + std::string(outlet));
  ClickbaitComparison c;
  c.outlet = std::string(outlet);
  c.mean_headline = mean(heads);
  c.mean_post = mean(posts);
  try {
    c.post_vs_headline = welch_t(posts, heads);
  } catch (const InvalidArgument&) {
    c.post_vs_headline.reset();
  }
  return c;
}

}  // namespace editfx
