#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "editfx/layers.hpp"
#include "editfx/optim.hpp"

namespace editfx {

struct PropensityConfig {
  std::vector<std::size_t> hidden{128, 64};
  double l2_lambda = 0.001;  // on the last hidden layer's weights
  std::size_t epochs = 15;
  std::size_t batch_size = 32;
  nn::AdamConfig adam{};
};

/// P(treatment | averaged body-text vector): relu hidden layers and one
/// sigmoid output unit.
class PropensityModel {
public:
  PropensityModel() = default;
  PropensityModel(std::size_t input_size, const PropensityConfig& config, std::uint64_t seed);

  std::size_t input_size() const { return net_.input_size(); }
  double predict(std::span<const double> features) const;
  /// One score per row of `features` ([N, input_size]).
  std::vector<double> predict(const nn::Tensor& features) const;

  nn::Mlp& network() { return net_; }
  const nn::Mlp& network() const { return net_; }

private:
  nn::Mlp net_;
};

/// Minimizes BCE (treated = 1) plus the L2 penalty with mini-batch Adam.
/// Labels must contain both classes.
PropensityModel train_propensity(const nn::Tensor& features, std::span<const int> treated,
                                 const PropensityConfig& config, std::uint64_t seed);

/// Area under the ROC curve, ties counted one half.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace editfx
