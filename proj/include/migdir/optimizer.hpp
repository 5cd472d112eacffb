#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "migdir/model.hpp"

namespace migdir {

// v = momentum * v + g;  p -= lr * v
struct SgdConfig {
  double lr = 0.01;
  double momentum = 0.0;
};

// Bias-corrected Adam; the defaults are the usual ones.
struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

using OptimizerConfig = std::variant<SgdConfig, AdamConfig>;

/// Applies m.grads to m.params. Slots mirror the parameter shapes; updates
/// are elementwise and deterministic.
class Optimizer {
 public:
  Optimizer(OptimizerConfig cfg, const Model& m);

  void step(Model& m);

  std::int64_t steps() const { return t_; }

 private:
  OptimizerConfig cfg_;
  std::vector<LayerParams> m1_;  // momentum / first moment
  std::vector<LayerParams> m2_;  // second moment (Adam only)
  std::int64_t t_ = 0;
};

}  // namespace migdir
