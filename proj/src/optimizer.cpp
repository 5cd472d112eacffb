#include "migdir/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <tuple>

namespace migdir {
namespace {

std::vector<LayerParams> zero_slots(const Model& m) {
  std::vector<LayerParams> slots(m.params.size());
  for (std::size_t li = 0; li < m.params.size(); ++li) {
    if (m.params[li].w.data.empty()) continue;
    slots[li].w = Tensor(m.params[li].w.shape);
    slots[li].b = Tensor(m.params[li].b.shape);
  }
  return slots;
}

}  // namespace

Optimizer::Optimizer(OptimizerConfig cfg, const Model& m) : cfg_(cfg) {
  m1_ = zero_slots(m);
  if (std::holds_alternative<AdamConfig>(cfg_)) {
    m2_ = zero_slots(m);
  }
}

void Optimizer::step(Model& m) {
  if (m1_.size() != m.params.size()) {
    throw std::logic_error("Optimizer: slot/model layer count mismatch");
  }
  ++t_;
  if (const auto* sgd = std::get_if<SgdConfig>(&cfg_)) {
    for (std::size_t li = 0; li < m.params.size(); ++li) {
      for (auto [p, g, v] : {std::tuple{&m.params[li].w, &m.grads[li].w,
                                        &m1_[li].w},
                             std::tuple{&m.params[li].b, &m.grads[li].b,
                                        &m1_[li].b}}) {
        for (std::size_t i = 0; i < p->data.size(); ++i) {
          v->data[i] = sgd->momentum * v->data[i] + g->data[i];
          p->data[i] -= sgd->lr * v->data[i];
        }
      }
    }
    return;
  }
  const auto& adam = std::get<AdamConfig>(cfg_);
  const double c1 = 1.0 - std::pow(adam.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(adam.beta2, static_cast<double>(t_));
  for (std::size_t li = 0; li < m.params.size(); ++li) {
    for (auto [p, g, mo, ve] :
         {std::tuple{&m.params[li].w, &m.grads[li].w, &m1_[li].w, &m2_[li].w},
          std::tuple{&m.params[li].b, &m.grads[li].b, &m1_[li].b,
                     &m2_[li].b}}) {
      for (std::size_t i = 0; i < p->data.size(); ++i) {
        const double gi = g->data[i];
        mo->data[i] = adam.beta1 * mo->data[i] + (1.0 - adam.beta1) * gi;
        ve->data[i] = adam.beta2 * ve->data[i] + (1.0 - adam.beta2) * gi * gi;
        const double mhat = mo->data[i] / c1;
        const double vhat = ve->data[i] / c2;
        p->data[i] -= adam.lr * mhat / (std::sqrt(vhat) + adam.eps);
      }
    }
  }
}

}  // namespace migdir
