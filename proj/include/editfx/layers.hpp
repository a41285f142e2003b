#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "editfx/tensor.hpp"

namespace editfx::nn {

enum class Activation { relu, sigmoid, identity };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view s);

/// Fully connected layer: activation(input . W + b), W is [in, out].
class DenseLayer {
public:
  DenseLayer() = default;
  DenseLayer(std::string name, std::size_t in, std::size_t out, Activation activation);
  DenseLayer(std::string name, std::size_t in, std::size_t out, Activation activation, Rng& rng);

  std::size_t in() const { return weights.value.rows(); }
  std::size_t out() const { return weights.value.cols(); }

  /// input is [B, in] or [in]; output has the matching rank.
  Tensor forward(const Tensor& input) const;
  /// Accumulates parameter gradients and returns d(loss)/d(input).
  Tensor backward(const Tensor& input, const Tensor& output, const Tensor& grad_output);

  ParamRefs parameters() { return {&weights, &bias}; }

  Param weights;
  Param bias;
  Activation activation = Activation::identity;
};

Tensor forward_dense(const DenseLayer& layer, const Tensor& input);

/// GRU cell, row-vector convention (gate pre-activation = x . W + h . U + b):
///   z = sigmoid(x Wz + h Uz + bz)
///   r = sigmoid(x Wr + h Ur + br)
///   c = tanh(x Wh + (r * h) Uh + bh)
///   h' = (1 - z) * h + z * c
class GruCell {
public:
  GruCell() = default;
  GruCell(std::string name, std::size_t input_size, std::size_t hidden_size);
  GruCell(std::string name, std::size_t input_size, std::size_t hidden_size, Rng& rng);

  std::size_t input_size() const { return wz.value.rows(); }
  std::size_t hidden_size() const { return wz.value.cols(); }

  struct Trace {
    Tensor inputs;  // [T, I] in processing order
    Tensor z, r, c, h;  // [T, H]
  };

  /// Runs the cell over rows of `inputs` ([T, I]) from a zero initial state.
  Trace run(const Tensor& inputs) const;
  /// Backpropagates d(loss)/d(h_t) for every step; returns d(loss)/d(inputs).
  Tensor backward(const Trace& trace, const Tensor& grad_h);

  ParamRefs parameters() { return {&wz, &uz, &bz, &wr, &ur, &br, &wh, &uh, &bh}; }

  Param wz, uz, bz, wr, ur, br, wh, uh, bh;
};

struct BiGruTrace {
  GruCell::Trace forward;
  GruCell::Trace backward;  // over the reversed sequence
  Tensor states;            // [T, 2H]: forward state then backward state at each t
};

/// Concatenated forward/backward hidden states [T, 2H]. Empty input throws.
BiGruTrace forward_gru_bidirectional(const GruCell& fw, const GruCell& bw, const Tensor& sequence);
/// grad_states is [T, 2H]; returns d(loss)/d(sequence) [T, I].
Tensor backward_gru_bidirectional(GruCell& fw, GruCell& bw, const BiGruTrace& trace, const Tensor& grad_states);

/// Additive attention pooling: u_t = tanh(h_t W + b), score_t = u_t . v,
/// weights = softmax(scores), context = sum_t weights_t h_t.
class AttentionHead {
public:
  AttentionHead() = default;
  AttentionHead(std::string name, std::size_t state_size, std::size_t attention_size);
  AttentionHead(std::string name, std::size_t state_size, std::size_t attention_size, Rng& rng);

  struct Output {
    Tensor context;  // [D]
    Tensor weights;  // [T]
    Tensor projected;  // [T, A], the u_t
  };

  Output forward(const Tensor& states) const;
  /// Returns d(loss)/d(states) given d(loss)/d(context).
  Tensor backward(const Tensor& states, const Output& out, const Tensor& grad_context);

  ParamRefs parameters() { return {&projection, &bias, &context}; }

  Param projection;  // [D, A]
  Param bias;        // [A]
  Param context;     // [A]
};

AttentionHead::Output attend(const AttentionHead& head, const Tensor& states);

inline constexpr double kProbabilityEpsilon = 1e-12;

/// -(y ln p + (1 - y) ln(1 - p)), p clamped to [eps, 1 - eps].
double binary_cross_entropy(double prediction, double label);

/// Feed-forward stack with optional L2 penalty lambda * sum(W^2) on the
/// weights of one designated layer.
class Mlp {
public:
  struct LayerSpec {
    std::size_t units;
    Activation activation;
  };

  Mlp() = default;
  Mlp(std::size_t input_size, const std::vector<LayerSpec>& layers, Rng& rng);

  std::size_t input_size() const { return layers_.front().in(); }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  void set_l2(std::size_t layer_index, double lambda);
  std::size_t l2_layer() const { return l2_layer_; }
  double l2_lambda() const { return l2_lambda_; }
  double l2_penalty() const;

  Tensor forward(const Tensor& input) const;

  /// Mean binary cross-entropy over rows plus the L2 penalty. When
  /// `backprop` is set, gradients are accumulated into the parameters.
  /// The final layer must be a single sigmoid unit.
  double bce_loss(const Tensor& inputs, std::span<const double> labels, bool backprop);

  ParamRefs parameters();

private:
  std::vector<DenseLayer> layers_;
  std::size_t l2_layer_ = 0;
  double l2_lambda_ = 0.0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

/// Compares analytic gradients with central differences on every scalar of
/// every parameter. `loss` is called with true to accumulate gradients into
/// zeroed grads, and with false for plain evaluation. Relative error is
/// |a - n| / max(|a| + |n|, 1e-6).
GradCheckResult check_gradients(const ParamRefs& params, const std::function<double(bool)>& loss,
                                double step = 1e-5);

}  // namespace editfx::nn
