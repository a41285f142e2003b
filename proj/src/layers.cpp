#include "editfx/layers.hpp"

#include <algorithm>
#include <cmath>

namespace editfx::nn {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::sigmoid:
      return "sigmoid";
    case Activation::identity:
      return "identity";
  }
  return "identity";
}

Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "identity") return Activation::identity;
  throw InvalidArgument("unknown activation: " + std::string(s));
}

// ---------------------------------------------------------------- dense

DenseLayer::DenseLayer(std::string name, std::size_t in, std::size_t out, Activation act)
    : weights(name + ".W", Tensor({in, out})), bias(name + ".b", Tensor({out})), activation(act) {
  if (in == 0 || out == 0) throw InvalidArgument("dense layer dimensions must be positive");
}

DenseLayer::DenseLayer(std::string name, std::size_t in, std::size_t out, Activation act, Rng& rng)
    : DenseLayer(std::move(name), in, out, act) {
  xavier_uniform(weights.value, in, out, rng);
}

Tensor DenseLayer::forward(const Tensor& input) const {
  const std::size_t n_in = in(), n_out = out();
  const bool single = input.rank() == 1;
  if ((single && input.dim(0) != n_in) || (!single && (input.rank() != 2 || input.cols() != n_in))) {
    throw InvalidArgument("dense forward: input shape " + input.shape_string() + " does not match in = " +
                          std::to_string(n_in));
  }
  const std::size_t batch = single ? 1 : input.rows();
  Tensor out = single ? Tensor({n_out}) : Tensor({batch, n_out});
  const double* w = weights.value.data().data();
  const double* b = bias.value.data().data();
  for (std::size_t r = 0; r < batch; ++r) {
    double* o = out.data().data() + r * n_out;
    const double* x = input.data().data() + r * n_in;
    std::copy(b, b + n_out, o);
    for (std::size_t i = 0; i < n_in; ++i) {
      const double xi = x[i];
      if (xi == 0.0) continue;
      const double* wi = w + i * n_out;
      for (std::size_t j = 0; j < n_out; ++j) o[j] += xi * wi[j];
    }
    switch (activation) {
      case Activation::relu:
        for (std::size_t j = 0; j < n_out; ++j) o[j] = o[j] > 0.0 ? o[j] : 0.0;
        break;
      case Activation::sigmoid:
        for (std::size_t j = 0; j < n_out; ++j) o[j] = sigmoid(o[j]);
        break;
      case Activation::identity:
        break;
    }
  }
  return out;
}

Tensor DenseLayer::backward(const Tensor& input, const Tensor& output, const Tensor& grad_output) {
  const std::size_t n_in = in(), n_out = out();
  const std::size_t batch = input.rank() == 1 ? 1 : input.rows();
  if (grad_output.size() != batch * n_out || output.size() != batch * n_out) {
    throw InvalidArgument("dense backward: gradient shape mismatch");
  }
  Tensor grad_in(input.shape());
  std::vector<double> delta(n_out);
  double* gw = weights.grad.data().data();
  double* gb = bias.grad.data().data();
  const double* w = weights.value.data().data();
  for (std::size_t r = 0; r < batch; ++r) {
    const double* go = grad_output.data().data() + r * n_out;
    const double* o = output.data().data() + r * n_out;
    const double* x = input.data().data() + r * n_in;
    for (std::size_t j = 0; j < n_out; ++j) {
      switch (activation) {
        case Activation::relu:
          delta[j] = o[j] > 0.0 ? go[j] : 0.0;
          break;
        case Activation::sigmoid:
          delta[j] = go[j] * o[j] * (1.0 - o[j]);
          break;
        case Activation::identity:
          delta[j] = go[j];
          break;
      }
      gb[j] += delta[j];
    }
    double* gx = grad_in.data().data() + r * n_in;
    for (std::size_t i = 0; i < n_in; ++i) {
      const double xi = x[i];
      const double* wi = w + i * n_out;
      double* gwi = gw + i * n_out;
      double acc = 0.0;
      for (std::size_t j = 0; j < n_out; ++j) {
        gwi[j] += xi * delta[j];
        acc += wi[j] * delta[j];
      }
      gx[i] = acc;
    }
  }
  return grad_in;
}

Tensor forward_dense(const DenseLayer& layer, const Tensor& input) { return layer.forward(input); }

// ---------------------------------------------------------------- GRU

namespace {

// out[j] += sum_i x[i] * W[i, j]
inline void add_vec_mat(const double* x, std::size_t n_in, const Tensor& w, double* out) {
  const std::size_t n_out = w.cols();
  const double* wd = w.data().data();
  for (std::size_t i = 0; i < n_in; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* wi = wd + i * n_out;
    for (std::size_t j = 0; j < n_out; ++j) out[j] += xi * wi[j];
  }
}

// grad_w[i, j] += x[i] * d[j]; grad_x[i] += sum_j W[i, j] d[j]
inline void backprop_vec_mat(const double* x, std::size_t n_in, const Tensor& w, Tensor& grad_w, const double* d,
                             double* grad_x) {
  const std::size_t n_out = w.cols();
  const double* wd = w.data().data();
  double* gw = grad_w.data().data();
  for (std::size_t i = 0; i < n_in; ++i) {
    const double xi = x[i];
    const double* wi = wd + i * n_out;
    double* gwi = gw + i * n_out;
    double acc = 0.0;
    for (std::size_t j = 0; j < n_out; ++j) {
      gwi[j] += xi * d[j];
      acc += wi[j] * d[j];
    }
    if (grad_x) grad_x[i] += acc;
  }
}

}  // namespace

GruCell::GruCell(std::string name, std::size_t in, std::size_t h)
    : wz(name + ".Wz", Tensor({in, h})),
      uz(name + ".Uz", Tensor({h, h})),
      bz(name + ".bz", Tensor({h})),
      wr(name + ".Wr", Tensor({in, h})),
      ur(name + ".Ur", Tensor({h, h})),
      br(name + ".br", Tensor({h})),
      wh(name + ".Wh", Tensor({in, h})),
      uh(name + ".Uh", Tensor({h, h})),
      bh(name + ".bh", Tensor({h})) {
  if (in == 0 || h == 0) throw InvalidArgument("GRU sizes must be positive");
}

GruCell::GruCell(std::string name, std::size_t in, std::size_t h, Rng& rng) : GruCell(std::move(name), in, h) {
  for (auto* p : {&wz, &wr, &wh}) xavier_uniform(p->value, in, h, rng);
  for (auto* p : {&uz, &ur, &uh}) xavier_uniform(p->value, h, h, rng);
}

GruCell::Trace GruCell::run(const Tensor& inputs) const {
  const std::size_t n_in = input_size(), n_h = hidden_size();
  if (inputs.rank() != 2 || inputs.cols() != n_in) {
    throw InvalidArgument("GRU: input shape " + inputs.shape_string() + " does not match input size " +
                          std::to_string(n_in));
  }
  const std::size_t steps = inputs.rows();
  if (steps == 0) throw InvalidArgument("GRU: empty sequence");
  Trace tr{inputs, Tensor({steps, n_h}), Tensor({steps, n_h}), Tensor({steps, n_h}), Tensor({steps, n_h})};
  std::vector<double> h_prev(n_h, 0.0), rh(n_h);
  for (std::size_t t = 0; t < steps; ++t) {
    const double* x = inputs.data().data() + t * n_in;
    double* z = tr.z.row(t).data();
    double* r = tr.r.row(t).data();
    double* c = tr.c.row(t).data();
    double* h = tr.h.row(t).data();
    std::copy(bz.value.data().begin(), bz.value.data().end(), z);
    std::copy(br.value.data().begin(), br.value.data().end(), r);
    std::copy(bh.value.data().begin(), bh.value.data().end(), c);
    add_vec_mat(x, n_in, wz.value, z);
    add_vec_mat(h_prev.data(), n_h, uz.value, z);
    add_vec_mat(x, n_in, wr.value, r);
    add_vec_mat(h_prev.data(), n_h, ur.value, r);
    for (std::size_t j = 0; j < n_h; ++j) {
      z[j] = sigmoid(z[j]);
      r[j] = sigmoid(r[j]);
      rh[j] = r[j] * h_prev[j];
    }
    add_vec_mat(x, n_in, wh.value, c);
    add_vec_mat(rh.data(), n_h, uh.value, c);
    for (std::size_t j = 0; j < n_h; ++j) {
      c[j] = std::tanh(c[j]);
      h[j] = (1.0 - z[j]) * h_prev[j] + z[j] * c[j];
    }
    std::copy(h, h + n_h, h_prev.begin());
  }
  return tr;
}

Tensor GruCell::backward(const Trace& tr, const Tensor& grad_h) {
  const std::size_t n_in = input_size(), n_h = hidden_size();
  const std::size_t steps = tr.inputs.rows();
  Tensor grad_x({steps, n_in});
  std::vector<double> dh_next(n_h, 0.0), dh(n_h), da_z(n_h), da_r(n_h), da_c(n_h), d_rh(n_h), rh(n_h),
      h_prev(n_h);
  for (std::size_t t = steps; t-- > 0;) {
    const double* x = tr.inputs.data().data() + t * n_in;
    const double* z = tr.z.row(t).data();
    const double* r = tr.r.row(t).data();
    const double* c = tr.c.row(t).data();
    if (t > 0) {
      std::copy(tr.h.row(t - 1).begin(), tr.h.row(t - 1).end(), h_prev.begin());
    } else {
      std::fill(h_prev.begin(), h_prev.end(), 0.0);
    }
    const double* g = grad_h.row(t).data();
    for (std::size_t j = 0; j < n_h; ++j) {
      dh[j] = g[j] + dh_next[j];
      const double dz = dh[j] * (c[j] - h_prev[j]);
      const double dc = dh[j] * z[j];
      da_z[j] = dz * z[j] * (1.0 - z[j]);
      da_c[j] = dc * (1.0 - c[j] * c[j]);
      dh_next[j] = dh[j] * (1.0 - z[j]);
      rh[j] = r[j] * h_prev[j];
      d_rh[j] = 0.0;
    }
    double* gx = grad_x.data().data() + t * n_in;
    // candidate path
    for (std::size_t j = 0; j < n_h; ++j) bh.grad[j] += da_c[j];
    backprop_vec_mat(x, n_in, wh.value, wh.grad, da_c.data(), gx);
    backprop_vec_mat(rh.data(), n_h, uh.value, uh.grad, da_c.data(), d_rh.data());
    for (std::size_t j = 0; j < n_h; ++j) {
      const double dr = d_rh[j] * h_prev[j];
      dh_next[j] += d_rh[j] * r[j];
      da_r[j] = dr * r[j] * (1.0 - r[j]);
    }
    for (std::size_t j = 0; j < n_h; ++j) {
      bz.grad[j] += da_z[j];
      br.grad[j] += da_r[j];
    }
    backprop_vec_mat(x, n_in, wz.value, wz.grad, da_z.data(), gx);
    backprop_vec_mat(h_prev.data(), n_h, uz.value, uz.grad, da_z.data(), dh_next.data());
    backprop_vec_mat(x, n_in, wr.value, wr.grad, da_r.data(), gx);
    backprop_vec_mat(h_prev.data(), n_h, ur.value, ur.grad, da_r.data(), dh_next.data());
  }
  return grad_x;
}

namespace {
Tensor reversed_rows(const Tensor& t) {
  Tensor out(t.shape());
  const std::size_t n = t.rows(), c = t.cols();
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(t.row(n - 1 - i).begin(), t.row(n - 1 - i).end(), out.data().begin() + static_cast<std::ptrdiff_t>(i * c));
  }
  return out;
}
}  // namespace

BiGruTrace forward_gru_bidirectional(const GruCell& fw, const GruCell& bw, const Tensor& sequence) {
  if (sequence.rank() != 2 || sequence.rows() == 0) throw InvalidArgument("bidirectional GRU: empty sequence");
  if (fw.hidden_size() != bw.hidden_size()) throw InvalidArgument("bidirectional GRU: hidden size mismatch");
  BiGruTrace tr{fw.run(sequence), bw.run(reversed_rows(sequence)), Tensor()};
  const std::size_t steps = sequence.rows(), h = fw.hidden_size();
  tr.states = Tensor({steps, 2 * h});
  for (std::size_t t = 0; t < steps; ++t) {
    auto out = tr.states.row(t);
    auto f = tr.forward.h.row(t);
    auto b = tr.backward.h.row(steps - 1 - t);
    std::copy(f.begin(), f.end(), out.begin());
    std::copy(b.begin(), b.end(), out.begin() + static_cast<std::ptrdiff_t>(h));
  }
  return tr;
}

Tensor backward_gru_bidirectional(GruCell& fw, GruCell& bw, const BiGruTrace& tr, const Tensor& grad_states) {
  const std::size_t steps = tr.states.rows(), h = fw.hidden_size();
  Tensor gf({steps, h}), gb({steps, h});
  for (std::size_t t = 0; t < steps; ++t) {
    auto g = grad_states.row(t);
    std::copy(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(h), gf.row(t).begin());
    std::copy(g.begin() + static_cast<std::ptrdiff_t>(h), g.end(), gb.row(steps - 1 - t).begin());
  }
  Tensor dx = fw.backward(tr.forward, gf);
  Tensor dx_rev = bw.backward(tr.backward, gb);
  for (std::size_t t = 0; t < steps; ++t) {
    auto dst = dx.row(t);
    auto src = dx_rev.row(steps - 1 - t);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
  return dx;
}

// ---------------------------------------------------------------- attention

AttentionHead::AttentionHead(std::string name, std::size_t d, std::size_t a)
    : projection(name + ".W", Tensor({d, a})), bias(name + ".b", Tensor({a})), context(name + ".v", Tensor({a})) {
  if (d == 0 || a == 0) throw InvalidArgument("attention sizes must be positive");
}

AttentionHead::AttentionHead(std::string name, std::size_t d, std::size_t a, Rng& rng)
    : AttentionHead(std::move(name), d, a) {
  xavier_uniform(projection.value, d, a, rng);
  xavier_uniform(context.value, a, 1, rng);
}

AttentionHead::Output AttentionHead::forward(const Tensor& states) const {
  const std::size_t d = projection.value.rows(), a = projection.value.cols();
  if (states.rank() != 2 || states.cols() != d) {
    throw InvalidArgument("attention: state shape " + states.shape_string() + " does not match " + std::to_string(d));
  }
  const std::size_t steps = states.rows();
  if (steps == 0) throw InvalidArgument("attention: empty sequence");
  Output out{Tensor({d}), Tensor({steps}), Tensor({steps, a})};
  std::vector<double> scores(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    double* u = out.projected.row(t).data();
    std::copy(bias.value.data().begin(), bias.value.data().end(), u);
    add_vec_mat(states.row(t).data(), d, projection.value, u);
    double s = 0.0;
    for (std::size_t j = 0; j < a; ++j) {
      u[j] = std::tanh(u[j]);
      s += u[j] * context.value[j];
    }
    scores[t] = s;
  }
  const double mx = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    out.weights[t] = std::exp(scores[t] - mx);
    total += out.weights[t];
  }
  for (std::size_t t = 0; t < steps; ++t) {
    out.weights[t] /= total;
    auto h = states.row(t);
    for (std::size_t j = 0; j < d; ++j) out.context[j] += out.weights[t] * h[j];
  }
  return out;
}

Tensor AttentionHead::backward(const Tensor& states, const Output& out, const Tensor& grad_context) {
  const std::size_t d = projection.value.rows(), a = projection.value.cols();
  const std::size_t steps = states.rows();
  Tensor grad_states(states.shape());
  std::vector<double> d_alpha(steps);
  double weighted = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    auto h = states.row(t);
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      s += grad_context[j] * h[j];
      grad_states.at(t, j) += out.weights[t] * grad_context[j];
    }
    d_alpha[t] = s;
    weighted += out.weights[t] * s;
  }
  std::vector<double> da(a);
  for (std::size_t t = 0; t < steps; ++t) {
    const double d_score = out.weights[t] * (d_alpha[t] - weighted);
    auto u = out.projected.row(t);
    for (std::size_t j = 0; j < a; ++j) {
      context.grad[j] += d_score * u[j];
      da[j] = d_score * context.value[j] * (1.0 - u[j] * u[j]);
      bias.grad[j] += da[j];
    }
    backprop_vec_mat(states.row(t).data(), d, projection.value, projection.grad, da.data(), grad_states.row(t).data());
  }
  return grad_states;
}

AttentionHead::Output attend(const AttentionHead& head, const Tensor& states) { return head.forward(states); }

// ---------------------------------------------------------------- losses, MLP

double binary_cross_entropy(double prediction, double label) {
  const double p = std::clamp(prediction, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
  return -(label * std::log(p) + (1.0 - label) * std::log(1.0 - p));
}

Mlp::Mlp(std::size_t input_size, const std::vector<LayerSpec>& specs, Rng& rng) {
  if (specs.empty()) throw InvalidArgument("MLP needs at least one layer");
  std::size_t in = input_size;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    layers_.emplace_back("dense" + std::to_string(i), in, specs[i].units, specs[i].activation, rng);
    in = specs[i].units;
  }
}

void Mlp::set_l2(std::size_t layer_index, double lambda) {
  if (layer_index >= layers_.size()) throw InvalidArgument("L2 layer index out of range");
  if (lambda < 0.0) throw InvalidArgument("L2 coefficient must be non-negative");
  l2_layer_ = layer_index;
  l2_lambda_ = lambda;
}

double Mlp::l2_penalty() const {
  if (l2_lambda_ == 0.0) return 0.0;
  double s = 0.0;
  for (double w : layers_[l2_layer_].weights.value.data()) s += w * w;
  return l2_lambda_ * s;
}

Tensor Mlp::forward(const Tensor& input) const {
  Tensor x = input;
  for (const auto& layer : layers_) x = layer.forward(x);
  return x;
}

double Mlp::bce_loss(const Tensor& inputs, std::span<const double> labels, bool backprop) {
  const auto& last = layers_.back();
  if (last.out() != 1 || last.activation != Activation::sigmoid) {
    throw InvalidArgument("bce_loss needs a single sigmoid output unit");
  }
  const std::size_t batch = inputs.rows();
  if (labels.size() != batch) throw InvalidArgument("bce_loss: label count does not match batch");
  std::vector<Tensor> acts;
  acts.reserve(layers_.size() + 1);
  acts.push_back(inputs);
  for (const auto& layer : layers_) acts.push_back(layer.forward(acts.back()));
  const Tensor& pred = acts.back();
  double loss = 0.0;
  for (std::size_t i = 0; i < batch; ++i) loss += binary_cross_entropy(pred[i], labels[i]);
  loss /= static_cast<double>(batch);
  loss += l2_penalty();
  if (!backprop) return loss;

  // Gradient w.r.t. the output layer pre-activation is (p - y) / B; feed it
  // through the sigmoid's local derivative by dividing it back out.
  const std::size_t n = layers_.size();
  Tensor grad({batch, 1});
  std::vector<double> delta(batch);
  for (std::size_t i = 0; i < batch; ++i) delta[i] = (pred[i] - labels[i]) / static_cast<double>(batch);
  {
    auto& out_layer = layers_[n - 1];
    const Tensor& x = acts[n - 1];
    Tensor gx({batch, out_layer.in()});
    for (std::size_t r = 0; r < batch; ++r) {
      out_layer.bias.grad[0] += delta[r];
      for (std::size_t i = 0; i < out_layer.in(); ++i) {
        out_layer.weights.grad[i] += x.at(r, i) * delta[r];
        gx.at(r, i) = out_layer.weights.value[i] * delta[r];
      }
    }
    grad = std::move(gx);
  }
  for (std::size_t l = n - 1; l-- > 0;) grad = layers_[l].backward(acts[l], acts[l + 1], grad);
  if (l2_lambda_ != 0.0) {
    auto& w = layers_[l2_layer_].weights;
    for (std::size_t i = 0; i < w.value.size(); ++i) w.grad[i] += 2.0 * l2_lambda_ * w.value[i];
  }
  return loss;
}

ParamRefs Mlp::parameters() {
  ParamRefs out;
  for (auto& l : layers_) {
    auto p = l.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

// ---------------------------------------------------------------- gradient check

GradCheckResult check_gradients(const ParamRefs& params, const std::function<double(bool)>& loss, double step) {
  zero_grads(params);
  loss(true);
  GradCheckResult result;
  for (auto* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double original = p->value[i];
      p->value[i] = original + step;
      const double up = loss(false);
      p->value[i] = original - step;
      const double down = loss(false);
      p->value[i] = original;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = p->grad[i];
      const double rel = std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), 1e-6);
      ++result.checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_param = p->name;
        result.worst_index = i;
      }
    }
  }
  return result;
}

}  // namespace editfx::nn
