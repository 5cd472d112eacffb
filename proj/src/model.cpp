#include "migdir/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "migdir/angle.hpp"
#include "migdir/errors.hpp"
#include "migdir/kernels.hpp"
#include "migdir/rng.hpp"

namespace migdir {
namespace {

void check_finite(const Tensor& t, std::size_t layer) {
  for (double v : t.data) {
    if (!std::isfinite(v)) {
      throw NumericError("non-finite value in layer " + std::to_string(layer));
    }
  }
}

// ReLU on/off states, bit-packed; the gradient checker compares these
// between probe points.
void append_sign_bits(const Tensor& z, std::vector<std::int64_t>* out) {
  std::int64_t word = 0;
  int fill = 0;
  for (double v : z.data) {
    word = (word << 1) | (v > 0.0 ? 1 : 0);
    if (++fill == 64) {
      out->push_back(word);
      word = 0;
      fill = 0;
    }
  }
  if (fill) out->push_back(word);
}

void append_argmax_codes(const std::vector<std::uint8_t>& arg,
                         std::vector<std::int64_t>* out) {
  std::int64_t word = 0;
  int fill = 0;
  for (std::uint8_t a : arg) {
    word = (word << 2) | a;
    if (++fill == 32) {
      out->push_back(word);
      word = 0;
      fill = 0;
    }
  }
  if (fill) out->push_back(word);
}

// Activation step of dense layer `li` (ReLU for hidden layers, the head
// activation for the last one). Shared by the full forward pass and the
// suffix re-runs.
Tensor apply_dense_activation(const Model& m, std::size_t li, const Tensor& z,
                              ForwardTrace* trace,
                              std::vector<std::int64_t>* branches) {
  const bool is_head = li + 1 == m.layers.size();
  Tensor a(z.shape);
  if (!is_head) {
    if (branches) append_sign_bits(z, branches);
    kernels::par::relu_forward(z.data.data(), a.data.data(), z.size());
    return a;
  }
  for (std::size_t i = 0; i < z.data.size(); ++i) {
    const ActResult r = activate(m.head_activation, z.data[i]);
    a.data[i] = r.value;
    if (branches && m.head_activation == ActivationKind::Cyclic) {
      branches->push_back(
          static_cast<std::int64_t>(std::floor(z.data[i] / kTwoPi)));
    }
  }
  if (trace) {
    trace->head_z = z;
    trace->output = a;
  }
  return a;
}

Tensor run_layers(const Model& m, std::size_t start, Tensor cur,
                  ForwardTrace* trace, std::vector<std::int64_t>* branches) {
  const std::size_t nlayers = m.layers.size();
  for (std::size_t li = start; li < nlayers; ++li) {
    if (trace) trace->inputs[li] = cur;
    if (const auto* conv = std::get_if<ConvSpec>(&m.layers[li])) {
      const int n = cur.shape[0], h = cur.shape[1], w = cur.shape[2],
                ci = cur.shape[3];
      Tensor z({n, h - conv->kh + 1, w - conv->kw + 1, conv->out_channels});
      kernels::par::conv2d_forward(cur.data.data(), m.params[li].w.data.data(),
                                   m.params[li].b.data.data(), z.data.data(),
                                   n, h, w, ci, conv->kh, conv->kw,
                                   conv->out_channels);
      check_finite(z, li);
      if (branches) append_sign_bits(z, branches);
      Tensor a(z.shape);
      kernels::par::relu_forward(z.data.data(), a.data.data(), z.size());
      if (trace) trace->preact[li] = std::move(z);
      cur = std::move(a);
    } else if (std::holds_alternative<PoolSpec>(m.layers[li])) {
      const int n = cur.shape[0], h = cur.shape[1], w = cur.shape[2],
                c = cur.shape[3];
      Tensor out({n, h / 2, w / 2, c});
      std::vector<std::uint8_t> arg(static_cast<std::size_t>(out.size()));
      kernels::par::maxpool2_forward(cur.data.data(), out.data.data(),
                                     arg.data(), n, h, w, c);
      if (branches) append_argmax_codes(arg, branches);
      if (trace) trace->pool_argmax[li] = std::move(arg);
      cur = std::move(out);
    } else if (std::holds_alternative<FlattenSpec>(m.layers[li])) {
      const int n = cur.shape[0];
      const std::int64_t flat = cur.size() / n;
      cur.shape = {n, static_cast<int>(flat)};
    } else {
      const auto& dense = std::get<DenseSpec>(m.layers[li]);
      const int n = cur.shape[0], in_dim = cur.shape[1];
      Tensor z({n, dense.units});
      kernels::par::dense_forward(cur.data.data(), m.params[li].w.data.data(),
                                  m.params[li].b.data.data(), z.data.data(), n,
                                  in_dim, dense.units);
      check_finite(z, li);
      Tensor a = apply_dense_activation(m, li, z, trace, branches);
      if (trace) trace->preact[li] = std::move(z);
      cur = std::move(a);
    }
  }
  return cur;
}

struct FanCount {
  std::int64_t in = 0;
  std::int64_t out = 0;
};

FanCount fans(const LayerSpec& spec, const Tensor& w) {
  if (std::holds_alternative<ConvSpec>(spec)) {
    const auto& s = w.shape;  // [kh, kw, cin, cout]
    return {static_cast<std::int64_t>(s[0]) * s[1] * s[2],
            static_cast<std::int64_t>(s[0]) * s[1] * s[3]};
  }
  return {w.shape[0], w.shape[1]};
}

}  // namespace

Model build_model(int input_size, std::vector<LayerSpec> layers,
                  int head_arity, ActivationKind head_activation,
                  std::uint64_t seed) {
  if (input_size < 1) throw ConfigError("build_model: bad input size");
  if (head_arity != 1 && head_arity != 2) {
    throw ConfigError("build_model: head arity must be 1 or 2");
  }
  const bool cyclic_head = head_activation == ActivationKind::Cyclic;
  if ((head_arity == 1) != cyclic_head) {
    throw ConfigError(
        "build_model: cyclic head pairs with one output, identity/sigmoid "
        "with two");
  }
  if (layers.empty() || !std::holds_alternative<DenseSpec>(layers.back()) ||
      std::get<DenseSpec>(layers.back()).units != head_arity) {
    throw ConfigError("build_model: last layer must be dense with one unit "
                      "per output");
  }

  Model m;
  m.input_size = input_size;
  m.head_arity = head_arity;
  m.head_activation = head_activation;
  m.init_seed = seed;
  m.layers = std::move(layers);
  m.params.resize(m.layers.size());
  m.grads.resize(m.layers.size());

  // Walk the shapes once to validate the stack and size the parameters.
  int h = input_size, w = input_size, c = 1;
  bool flat = false;
  std::int64_t flat_dim = 0;
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    const std::string where = "layer " + std::to_string(li);
    if (const auto* conv = std::get_if<ConvSpec>(&m.layers[li])) {
      if (flat) throw ConfigError(where + ": conv after flatten");
      if (conv->kh < 1 || conv->kw < 1 || conv->out_channels < 1 ||
          conv->kh > h || conv->kw > w) {
        throw ConfigError(where + ": kernel does not fit input " +
                          shape_string({h, w, c}));
      }
      m.params[li].w = Tensor({conv->kh, conv->kw, c, conv->out_channels});
      m.params[li].b = Tensor({conv->out_channels});
      h -= conv->kh - 1;
      w -= conv->kw - 1;
      c = conv->out_channels;
    } else if (std::holds_alternative<PoolSpec>(m.layers[li])) {
      if (flat) throw ConfigError(where + ": pool after flatten");
      if (h < 2 || w < 2) throw ConfigError(where + ": input too small to pool");
      h /= 2;
      w /= 2;
    } else if (std::holds_alternative<FlattenSpec>(m.layers[li])) {
      if (flat) throw ConfigError(where + ": repeated flatten");
      flat = true;
      flat_dim = static_cast<std::int64_t>(h) * w * c;
    } else {
      const auto& dense = std::get<DenseSpec>(m.layers[li]);
      if (!flat) throw ConfigError(where + ": dense before flatten");
      if (dense.units < 1) throw ConfigError(where + ": bad unit count");
      m.params[li].w = Tensor({static_cast<int>(flat_dim), dense.units});
      m.params[li].b = Tensor({dense.units});
      flat_dim = dense.units;
    }
  }
  if (!flat) throw ConfigError("build_model: network never flattens");

  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    if (m.params[li].w.data.empty()) continue;
    m.grads[li].w = Tensor(m.params[li].w.shape);
    m.grads[li].b = Tensor(m.params[li].b.shape);

    const FanCount f = fans(m.layers[li], m.params[li].w);
    const bool is_head = li + 1 == m.layers.size();
    const double limit =
        is_head ? std::sqrt(6.0 / static_cast<double>(f.in + f.out))
                : std::sqrt(6.0 / static_cast<double>(f.in));
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(li)));
    for (double& v : m.params[li].w.data) {
      v = rng.uniform(-limit, limit);
    }
  }
  return m;
}

Model probing_cnn(int input_size, ModelScale scale, int head_arity,
                  ActivationKind head_activation, std::uint64_t seed) {
  if (input_size != 32 && input_size != 64 && input_size != 128) {
    throw ConfigError("probing_cnn: input size must be 32, 64, or 128");
  }
  const int c1 = scale == ModelScale::Paper ? 16 : 8;
  const int c2 = scale == ModelScale::Paper ? 32 : 16;
  const int d1 = scale == ModelScale::Paper ? 256 : 128;
  std::vector<LayerSpec> layers{
      ConvSpec{5, 5, c1}, PoolSpec{},    ConvSpec{3, 3, c2},
      PoolSpec{},         FlattenSpec{}, DenseSpec{d1},
      DenseSpec{16},      DenseSpec{head_arity}};
  return build_model(input_size, std::move(layers), head_arity,
                     head_activation, seed);
}

std::int64_t param_count(const Model& m) {
  std::int64_t n = 0;
  for (const LayerParams& p : m.params) {
    n += p.w.size() + p.b.size();
  }
  return n;
}

Tensor forward(const Model& m, const Tensor& batch, ForwardTrace* trace) {
  if (batch.shape.size() != 4 || batch.shape[1] != m.input_size ||
      batch.shape[2] != m.input_size || batch.shape[3] != 1 ||
      batch.shape[0] < 1) {
    throw std::invalid_argument("forward: batch must be [n, " +
                                std::to_string(m.input_size) + ", " +
                                std::to_string(m.input_size) + ", 1], got " +
                                shape_string(batch.shape));
  }
  if (trace) {
    trace->batch = batch.shape[0];
    trace->inputs.assign(m.layers.size(), Tensor{});
    trace->preact.assign(m.layers.size(), Tensor{});
    trace->pool_argmax.assign(m.layers.size(), {});
  }
  return run_layers(m, 0, batch, trace, nullptr);
}

Tensor forward_from(const Model& m, std::size_t layer, const Tensor& input,
                    std::vector<std::int64_t>* branches) {
  return run_layers(m, layer, input, nullptr, branches);
}

Tensor forward_from_preact(const Model& m, std::size_t layer, const Tensor& z,
                           std::vector<std::int64_t>* branches) {
  if (layer >= m.layers.size() ||
      !std::holds_alternative<DenseSpec>(m.layers[layer])) {
    throw std::invalid_argument("forward_from_preact: not a dense layer");
  }
  Tensor a = apply_dense_activation(m, layer, z, nullptr, branches);
  return run_layers(m, layer + 1, std::move(a), nullptr, branches);
}

void backward(Model& m, const ForwardTrace& trace, const Tensor& dloss_dout) {
  if (trace.batch == 0) {
    throw std::logic_error("backward: trace was never filled by forward");
  }
  if (dloss_dout.shape != trace.output.shape) {
    throw std::invalid_argument("backward: loss gradient shape " +
                                shape_string(dloss_dout.shape) +
                                " does not match output " +
                                shape_string(trace.output.shape));
  }

  // Head activation first; afterwards `cur` always holds the gradient with
  // respect to the current layer's pre-activation (dense/conv) or output
  // (pool/flatten).
  Tensor cur(dloss_dout.shape);
  for (std::size_t i = 0; i < cur.data.size(); ++i) {
    cur.data[i] = dloss_dout.data[i] *
                  activate(m.head_activation, trace.head_z.data[i]).derivative;
  }

  for (std::size_t li = m.layers.size(); li-- > 0;) {
    const Tensor& x = trace.inputs[li];
    if (const auto* conv = std::get_if<ConvSpec>(&m.layers[li])) {
      const int n = x.shape[0], h = x.shape[1], w = x.shape[2],
                ci = x.shape[3];
      Tensor dz(cur.shape);
      kernels::par::relu_backward(trace.preact[li].data.data(),
                                  cur.data.data(), dz.data.data(), cur.size());
      kernels::par::conv2d_backward_params(
          x.data.data(), dz.data.data(), m.grads[li].w.data.data(),
          m.grads[li].b.data.data(), n, h, w, ci, conv->kh, conv->kw,
          conv->out_channels);
      Tensor dx(x.shape);
      kernels::par::conv2d_backward_input(dz.data.data(),
                                          m.params[li].w.data.data(),
                                          dx.data.data(), n, h, w, ci,
                                          conv->kh, conv->kw,
                                          conv->out_channels);
      cur = std::move(dx);
    } else if (std::holds_alternative<PoolSpec>(m.layers[li])) {
      const int n = x.shape[0], h = x.shape[1], w = x.shape[2],
                c = x.shape[3];
      Tensor dx(x.shape);
      kernels::par::maxpool2_backward(cur.data.data(),
                                      trace.pool_argmax[li].data(),
                                      dx.data.data(), n, h, w, c);
      cur = std::move(dx);
    } else if (std::holds_alternative<FlattenSpec>(m.layers[li])) {
      cur.shape = x.shape;
    } else {
      const auto& dense = std::get<DenseSpec>(m.layers[li]);
      const int n = x.shape[0], in_dim = x.shape[1];
      Tensor dz;
      if (li + 1 == m.layers.size()) {
        dz = std::move(cur);  // head derivative is already in
      } else {
        dz = Tensor(cur.shape);
        kernels::par::relu_backward(trace.preact[li].data.data(),
                                    cur.data.data(), dz.data.data(),
                                    cur.size());
      }
      kernels::par::dense_backward_params(
          x.data.data(), dz.data.data(), m.grads[li].w.data.data(),
          m.grads[li].b.data.data(), n, in_dim, dense.units);
      Tensor dx({n, in_dim});
      kernels::par::dense_backward_input(dz.data.data(),
                                         m.params[li].w.data.data(),
                                         dx.data.data(), n, in_dim,
                                         dense.units);
      cur = std::move(dx);
    }
  }
}

void zero_gradients(Model& m) {
  for (LayerParams& g : m.grads) {
    std::fill(g.w.data.begin(), g.w.data.end(), 0.0);
    std::fill(g.b.data.begin(), g.b.data.end(), 0.0);
  }
}

}  // namespace migdir
