#pragma once

#include <cstdint>
#include <span>

#include "migdir/loss.hpp"
#include "migdir/model.hpp"
#include "migdir/tensor.hpp"

namespace migdir {

struct GradcheckReport {
  bool pass = false;
  double max_rel_err = 0.0;       // over compared parameters
  int worst_layer = -1;
  std::int64_t worst_index = -1;  // flat index in that layer, weights then bias
  std::int64_t checked = 0;
  std::int64_t skipped = 0;       // probe interval crossed a kink
};

/// Central-difference verification of backward(): every parameter is probed
/// at +/- h and compared at relative tolerance `tol`, with denominator
/// max(|analytic|, |numeric|, 1e-8). A probe pair whose activation branches
/// disagree (ReLU or pool-argmax flip, cyclic wrap, loss kink) straddles a
/// derivative discontinuity; such parameters are counted as skipped, not
/// failed. The sample is a single input [1, s, s, 1]; target arity must match
/// the loss. Requires param_count(m) < 1e5.
GradcheckReport gradcheck(Model& m, LossKind loss_kind, const Tensor& sample,
                          std::span<const double> target, double h = 1e-4,
                          double tol = 1e-4);

}  // namespace migdir
