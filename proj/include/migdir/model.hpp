#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "migdir/activation.hpp"
#include "migdir/tensor.hpp"

namespace migdir {

// Layer vocabulary. Convolutions are valid (no padding), stride 1, followed
// by ReLU. Pooling is 2x2, stride 2, truncating odd edges. Dense layers are
// followed by ReLU except for the last one, which carries the head
// activation.
struct ConvSpec {
  int kh = 3;
  int kw = 3;
  int out_channels = 1;
};
struct PoolSpec {};
struct FlattenSpec {};
struct DenseSpec {
  int units = 1;
};
using LayerSpec = std::variant<ConvSpec, PoolSpec, FlattenSpec, DenseSpec>;

struct LayerParams {
  Tensor w;  // conv: [kh, kw, cin, cout]; dense: [in, out]
  Tensor b;  // [cout] / [out]
};

enum class ModelScale { Paper, Desk };

struct Model {
  int input_size = 0;  // square grayscale input, [n, size, size, 1]
  int head_arity = 1;
  ActivationKind head_activation = ActivationKind::Cyclic;
  std::uint64_t init_seed = 0;
  std::vector<LayerSpec> layers;
  std::vector<LayerParams> params;  // parallel to layers; empty w for
  std::vector<LayerParams> grads;   // pool/flatten
};

// Everything backward needs, captured layer by layer during forward.
struct ForwardTrace {
  int batch = 0;
  std::vector<Tensor> inputs;  // inputs[i] = what layer i consumed
  std::vector<Tensor> preact;  // conv/dense pre-activations, else empty
  std::vector<std::vector<std::uint8_t>> pool_argmax;  // else empty
  Tensor head_z;   // pre-activation of the head, [n, arity]
  Tensor output;   // after head activation, [n, arity]
};

/// Validates the stack and initializes parameters (uniform He for the ReLU
/// layers, uniform Xavier for the head, zero biases; deterministic per seed).
/// The last layer must be Dense with units == head_arity; the head activation
/// must match the arity (Cyclic for 1, Identity or SigmoidLike for 2).
Model build_model(int input_size, std::vector<LayerSpec> layers,
                  int head_arity, ActivationKind head_activation,
                  std::uint64_t seed);

/// The fixed probing architecture: conv 5x5 / pool / conv 3x3 / pool /
/// flatten / dense / dense 16 / head. Paper scale uses 16/32 channels and a
/// 256 dense layer; desk scale halves them to 8/16/128 for fast runs.
/// input_size must be 32, 64, or 128.
Model probing_cnn(int input_size, ModelScale scale, int head_arity,
                  ActivationKind head_activation, std::uint64_t seed);

std::int64_t param_count(const Model& m);

/// Runs the batch [n, size, size, 1] through the stack; returns [n, arity].
/// Fills `trace` (if given) for a later backward call. Throws NumericError
/// naming the layer if a non-finite value appears.
Tensor forward(const Model& m, const Tensor& batch, ForwardTrace* trace);

/// Accumulates parameter gradients of the traced batch into m.grads, given
/// the loss gradient with respect to the activated output [n, arity].
/// Throws std::logic_error if the trace was never filled by forward.
void backward(Model& m, const ForwardTrace& trace, const Tensor& dloss_dout);

void zero_gradients(Model& m);

/// Re-runs the stack starting at `layer`, whose input is `input`. When
/// `branches` is non-null, each ReLU unit's on/off state, each pool window's
/// argmax, and the cyclic head's period index are appended to it; the
/// gradient checker compares these between probe points to recognize
/// derivative discontinuities inside the differencing interval.
Tensor forward_from(const Model& m, std::size_t layer, const Tensor& input,
                    std::vector<std::int64_t>* branches);

/// Same, but resumes from a replacement pre-activation for dense layer
/// `layer` (the layer's own matmul is skipped).
Tensor forward_from_preact(const Model& m, std::size_t layer, const Tensor& z,
                           std::vector<std::int64_t>* branches);

/// Checkpoint format: a JSON header (architecture, head, seed), a NUL byte,
/// then every parameter tensor as little-endian 64-bit floats, weights before
/// bias, in layer order. Round-trips bit-exactly.
void save_model(const Model& m, const std::string& path);
Model load_model(const std::string& path);

}  // namespace migdir
