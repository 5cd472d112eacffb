#include "migdir/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "migdir/angle.hpp"
#include "migdir/errors.hpp"

namespace migdir {
namespace {

double sgn(double u) { return u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0); }

// Which side of each loss kink the evaluation landed on.
void append_loss_branch(LossKind kind, std::span<const double> p,
                        std::span<const double> t,
                        std::vector<std::int64_t>& sig) {
  switch (kind) {
    case LossKind::Linear:
      sig.push_back(static_cast<std::int64_t>(sgn(p[0] - t[0])));
      break;
    case LossKind::LinearSq:
      break;  // smooth
    case LossKind::Cyclic:
    case LossKind::CyclicSq: {
      const double u = p[0] - t[0];
      const double a = std::abs(u);
      sig.push_back(a <= kTwoPi - a ? 1 : 0);
      if (kind == LossKind::Cyclic) {
        sig.push_back(static_cast<std::int64_t>(sgn(u)));
      }
      break;
    }
    case LossKind::Cos:
      break;  // smooth
    case LossKind::Dist:
    case LossKind::DistSq:
      sig.push_back(static_cast<std::int64_t>(sgn(p[0] - t[0])));
      sig.push_back(static_cast<std::int64_t>(sgn(p[1] - t[1])));
      break;
  }
}

struct Probe {
  double value = 0.0;
  std::vector<std::int64_t> branches;
};

// Loss at the network output after nudging one parameter by `delta`.
// Dense-layer parameters touch exactly one pre-activation unit, so only the
// suffix of the network is re-run from a patched pre-activation; conv
// parameters perturb the layer in place and re-run from its cached input.
Probe probe_param(Model& m, const ForwardTrace& trace, LossKind kind,
                  std::span<const double> target, std::size_t li, bool is_bias,
                  std::int64_t idx, double delta) {
  Probe pr;
  Tensor out;
  if (const auto* dense = std::get_if<DenseSpec>(&m.layers[li])) {
    Tensor z = trace.preact[li];
    if (is_bias) {
      z.data[static_cast<std::size_t>(idx)] += delta;
    } else {
      const std::int64_t o = idx % dense->units;
      const std::int64_t i = idx / dense->units;
      z.data[static_cast<std::size_t>(o)] +=
          delta * trace.inputs[li].data[static_cast<std::size_t>(i)];
    }
    out = forward_from_preact(m, li, z, &pr.branches);
  } else {
    double& p = is_bias ? m.params[li].b.data[static_cast<std::size_t>(idx)]
                        : m.params[li].w.data[static_cast<std::size_t>(idx)];
    const double saved = p;
    p = saved + delta;
    out = forward_from(m, li, trace.inputs[li], &pr.branches);
    p = saved;
  }
  pr.value = loss(kind, out.data, target).value;
  append_loss_branch(kind, out.data, target, pr.branches);
  return pr;
}

}  // namespace

GradcheckReport gradcheck(Model& m, LossKind loss_kind, const Tensor& sample,
                          std::span<const double> target, double h,
                          double tol) {
  if (param_count(m) >= 100000) {
    throw ConfigError("gradcheck: model has " +
                      std::to_string(param_count(m)) +
                      " parameters; differencing needs < 1e5");
  }
  if (static_cast<int>(target.size()) != loss_arity(loss_kind) ||
      loss_arity(loss_kind) != m.head_arity) {
    throw std::invalid_argument("gradcheck: loss arity does not match head");
  }
  if (sample.shape.size() != 4 || sample.shape[0] != 1) {
    throw std::invalid_argument("gradcheck: sample must be a single input");
  }

  ForwardTrace trace;
  const Tensor out = forward(m, sample, &trace);
  const LossResult at_point = loss(loss_kind, out.data, target);
  zero_gradients(m);
  Tensor dl({1, m.head_arity});
  for (int i = 0; i < m.head_arity; ++i) {
    dl.data[static_cast<std::size_t>(i)] = at_point.grad[static_cast<std::size_t>(i)];
  }
  backward(m, trace, dl);
  for (const LayerParams& g : m.grads) {
    for (const Tensor* t : {&g.w, &g.b}) {
      for (double v : t->data) {
        if (!std::isfinite(v)) {
          throw NumericError("gradcheck: non-finite analytic gradient");
        }
      }
    }
  }

  GradcheckReport rep;
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    const std::int64_t nw = m.params[li].w.size();
    const std::int64_t nb = m.params[li].b.size();
    for (std::int64_t flat = 0; flat < nw + nb; ++flat) {
      const bool is_bias = flat >= nw;
      const std::int64_t idx = is_bias ? flat - nw : flat;
      const Probe up = probe_param(m, trace, loss_kind, target, li, is_bias,
                                   idx, h);
      const Probe dn = probe_param(m, trace, loss_kind, target, li, is_bias,
                                   idx, -h);
      if (up.branches != dn.branches) {
        ++rep.skipped;
        continue;
      }
      const double fd = (up.value - dn.value) / (2.0 * h);
      const double analytic =
          is_bias ? m.grads[li].b.data[static_cast<std::size_t>(idx)]
                  : m.grads[li].w.data[static_cast<std::size_t>(idx)];
      const double rel = std::abs(analytic - fd) /
                         std::max({std::abs(analytic), std::abs(fd), 1e-8});
      ++rep.checked;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_layer = static_cast<int>(li);
        rep.worst_index = flat;
      }
    }
  }
  rep.pass = rep.max_rel_err < tol;
  return rep;
}

}  // namespace migdir
