#include "editfx/propensity.hpp"

#include <algorithm>
#include <numeric>

#include "editfx/util.hpp"

namespace editfx {

PropensityModel::PropensityModel(std::size_t input_size, const PropensityConfig& config, std::uint64_t seed) {
  if (config.hidden.empty()) throw InvalidArgument("propensity model needs at least one hidden layer");
  std::vector<nn::Mlp::LayerSpec> specs;
  for (auto units : config.hidden) specs.push_back({units, nn::Activation::relu});
  specs.push_back({1, nn::Activation::sigmoid});
  Rng rng(seed);
  net_ = nn::Mlp(input_size, specs, rng);
  net_.set_l2(config.hidden.size() - 1, config.l2_lambda);
}

double PropensityModel::predict(std::span<const double> features) const {
  nn::Tensor x({features.size()}, std::vector<double>(features.begin(), features.end()));
  return net_.forward(x)[0];
}

std::vector<double> PropensityModel::predict(const nn::Tensor& features) const {
  auto out = net_.forward(features);
  return out.data();
}

PropensityModel train_propensity(const nn::Tensor& features, std::span<const int> treated,
                                 const PropensityConfig& config, std::uint64_t seed) {
  const std::size_t n = features.rows();
  if (treated.size() != n) throw InvalidArgument("train_propensity: label count does not match features");
  const auto positives = std::count(treated.begin(), treated.end(), 1);
  if (positives == 0 || static_cast<std::size_t>(positives) == n) {
    throw InvalidArgument("train_propensity: both treatment and control units are required");
  }
  PropensityModel model(features.cols(), config, seed);
  auto& net = model.network();
  auto params = net.parameters();
  nn::AdamState adam(config.adam);
  Rng rng(derive_seed(seed, 1));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch = std::max<std::size_t>(1, config.batch_size);
  const std::size_t dim = features.cols();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      nn::Tensor x({end - start, dim});
      std::vector<double> y(end - start);
      for (std::size_t b = start; b < end; ++b) {
        auto src = features.row(order[b]);
        std::copy(src.begin(), src.end(), x.row(b - start).begin());
        y[b - start] = treated[order[b]];
      }
      nn::zero_grads(params);
      net.bce_loss(x, y, true);
      nn::adam_step(adam, params);
    }
  }
  return model;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw InvalidArgument("roc_auc: length mismatch");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[idx[k]] == 1) {
        pos_rank_sum += rank;
        ++n_pos;
      }
    }
    i = j + 1;
  }
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw InvalidArgument("roc_auc: both classes are required");
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

}  // namespace editfx
