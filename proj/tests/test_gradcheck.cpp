#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <stdexcept>
#include <vector>

#include "migdir/angle.hpp"
#include "migdir/errors.hpp"
#include "migdir/gradcheck.hpp"
#include "migdir/loss.hpp"
#include "migdir/model.hpp"
#include "migdir/rng.hpp"

using namespace migdir;

namespace {

Tensor random_sample(Rng& rng, int size) {
  Tensor t({1, size, size, 1});
  for (double& v : t.data) v = rng.uniform(0.0, 1.0);
  return t;
}

const std::vector<LayerSpec> kToyStack{ConvSpec{3, 3, 2}, PoolSpec{},
                                       FlattenSpec{}, DenseSpec{4},
                                       DenseSpec{2}};
const std::vector<LayerSpec> kToyStack1{ConvSpec{3, 3, 2}, PoolSpec{},
                                        FlattenSpec{}, DenseSpec{4},
                                        DenseSpec{1}};

}  // namespace

TEST_CASE("analytic gradients agree with differences on a paired head") {
  Rng rng(31);
  Model m = build_model(8, kToyStack, 2, ActivationKind::Identity, 4);
  const Tensor x = random_sample(rng, 8);
  const std::vector<double> target{0.4, -0.9};
  const GradcheckReport rep = gradcheck(m, LossKind::DistSq, x, target);
  CHECK(rep.pass);
  CHECK(rep.max_rel_err < 1e-4);
  CHECK(rep.checked > 0);
  // The toy stack is tiny; at most a handful of branch flips is plausible.
  CHECK(rep.skipped < rep.checked);
}

TEST_CASE("analytic gradients agree with differences on a cyclic head") {
  Rng rng(32);
  Model m = build_model(8, kToyStack1, 1, ActivationKind::Cyclic, 6);
  const Tensor x = random_sample(rng, 8);
  const std::vector<double> target{1.0};
  const GradcheckReport rep = gradcheck(m, LossKind::Cos, x, target);
  CHECK(rep.pass);
  CHECK(rep.checked > 0);
}

TEST_CASE("a target at the cut locus is skipped, not failed") {
  Rng rng(33);
  Model m = build_model(8, kToyStack1, 1, ActivationKind::Cyclic, 8);
  const Tensor x = random_sample(rng, 8);
  const double p0 = forward(m, x, nullptr).data[0];
  // Nearly antipodal target: the shorter-arc side flips under perturbations
  // larger than 1e-5, which the head bias probe (step 1e-4) must hit.
  const std::vector<double> target{wrap(p0 - kPi + 1e-5).radians()};
  const GradcheckReport rep = gradcheck(m, LossKind::Cyclic, x, target);
  CHECK(rep.skipped >= 1);
  CHECK(rep.pass);
}

TEST_CASE("the checker scales to the fast-run network") {
  Rng rng(34);
  Model m = probing_cnn(32, ModelScale::Desk, 2, ActivationKind::SigmoidLike,
                        12);
  const Tensor x = random_sample(rng, 32);
  const std::vector<double> target{angle_to_unit(Angle(2.0)).x,
                                   angle_to_unit(Angle(2.0)).y};
  const GradcheckReport rep = gradcheck(m, LossKind::Dist, x, target);
  CHECK(rep.pass);
  CHECK(rep.checked > 70000);
}

TEST_CASE("gradcheck rejects bad calls") {
  Rng rng(35);
  Model big = probing_cnn(32, ModelScale::Paper, 2, ActivationKind::Identity,
                          1);
  const Tensor x32 = random_sample(rng, 32);
  const std::vector<double> target2{0.1, 0.2};
  // Too many parameters for exhaustive differencing.
  CHECK_THROWS_AS(gradcheck(big, LossKind::DistSq, x32, target2), ConfigError);

  Model m = build_model(8, kToyStack, 2, ActivationKind::Identity, 4);
  const Tensor x8 = random_sample(rng, 8);
  const std::vector<double> target1{0.1};
  // Target arity must match the loss and head.
  CHECK_THROWS_AS(gradcheck(m, LossKind::DistSq, x8, target1),
                  std::invalid_argument);
  CHECK_THROWS_AS(gradcheck(m, LossKind::Cos, x8, target2),
                  std::invalid_argument);
}
