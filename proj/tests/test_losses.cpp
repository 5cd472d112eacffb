#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "migdir/angle.hpp"
#include "migdir/errors.hpp"
#include "migdir/loss.hpp"
#include "migdir/rng.hpp"

using namespace migdir;

namespace {

const std::vector<LossKind> kAngleLosses{LossKind::Linear, LossKind::LinearSq,
                                         LossKind::Cyclic, LossKind::CyclicSq,
                                         LossKind::Cos};
const std::vector<LossKind> kCoordLosses{LossKind::Dist, LossKind::DistSq};

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

LossResult eval1(LossKind k, double pred, double tgt) {
  const double p[1] = {pred};
  const double t[1] = {tgt};
  return loss(k, p, t);
}

LossResult eval2(LossKind k, double px, double py, double tx, double ty) {
  const double p[2] = {px, py};
  const double t[2] = {tx, ty};
  return loss(k, p, t);
}

// Angle losses kink where |pred - tgt| hits a multiple of pi; coordinate
// losses kink where either component difference vanishes. Points that close
// to a kink are excluded from differencing.
bool near_kink(LossKind k, const std::vector<double>& p,
               const std::vector<double>& t, double margin) {
  if (loss_arity(k) == 1) {
    const double u = std::abs(p[0] - t[0]);
    return u < margin || std::abs(u - kPi) < margin ||
           std::abs(u - kTwoPi) < margin;
  }
  return std::abs(p[0] - t[0]) < margin || std::abs(p[1] - t[1]) < margin;
}

}  // namespace

TEST_CASE("loss values and gradients at fixed points") {
  const LossResult cyc = eval1(LossKind::Cyclic, 0.0, 1.5 * kPi);
  CHECK(cyc.value == doctest::Approx(kPi / 2).epsilon(1e-12));
  CHECK(cyc.grad[0] == 1.0);  // shorter arc runs forward across the seam

  const LossResult cos_min = eval1(LossKind::Cos, 1.2, 1.2);
  CHECK(cos_min.value == -1.0);
  CHECK(cos_min.grad[0] == 0.0);

  const LossResult dsq = eval2(LossKind::DistSq, 1.0, 0.0, 0.0, 1.0);
  CHECK(dsq.value == 4.0);
  CHECK(dsq.grad[0] == 4.0);
  CHECK(dsq.grad[1] == -4.0);

  const LossResult lin = eval1(LossKind::Linear, 0.5, 0.2);
  CHECK(lin.value == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(lin.grad[0] == 1.0);
}

TEST_CASE("subgradients at the non-smooth points") {
  CHECK(eval1(LossKind::Linear, 0.7, 0.7).grad[0] == 0.0);
  CHECK(eval2(LossKind::Dist, 1.0, 2.0, 1.0, 0.5).grad[0] == 0.0);

  // Antipodal pair: both branches of the min are pi; the |a - b| branch wins.
  const LossResult tie = eval1(LossKind::Cyclic, kPi, 0.0);
  CHECK(tie.value == doctest::Approx(kPi));
  CHECK(tie.grad[0] == 1.0);
  CHECK(eval1(LossKind::Cyclic, 0.0, kPi).grad[0] == -1.0);
}

TEST_CASE("loss arity is enforced") {
  const double one[1] = {0.0};
  const double two[2] = {0.0, 1.0};
  CHECK(loss_arity(LossKind::Cos) == 1);
  CHECK(loss_arity(LossKind::DistSq) == 2);
  CHECK_THROWS_AS(loss(LossKind::Dist, one, one), std::invalid_argument);
  CHECK_THROWS_AS(loss(LossKind::Linear, two, two), std::invalid_argument);
}

TEST_CASE("gradients match central finite differences") {
  Rng rng(31);
  const double h = 1e-5;
  std::vector<LossKind> all = kAngleLosses;
  all.insert(all.end(), kCoordLosses.begin(), kCoordLosses.end());

  for (LossKind k : all) {
    const int arity = loss_arity(k);
    int accepted = 0;
    while (accepted < 1000) {
      std::vector<double> p(arity), t(arity);
      for (int j = 0; j < arity; ++j) {
        p[j] = arity == 1 ? rng.uniform(0.0, kTwoPi) : rng.uniform(-2.0, 2.0);
        t[j] = arity == 1 ? rng.uniform(0.0, kTwoPi) : rng.uniform(-2.0, 2.0);
      }
      if (near_kink(k, p, t, 1e-3)) continue;
      const LossResult r = loss(k, p, t);
      for (int j = 0; j < arity; ++j) {
        std::vector<double> up = p, dn = p;
        up[j] += h;
        dn[j] -= h;
        const double fd =
            (loss(k, up, t).value - loss(k, dn, t).value) / (2.0 * h);
        CHECK(rel_err(r.grad[j], fd) < 1e-4);
      }
      ++accepted;
    }
  }
}

TEST_CASE("cyclic loss is symmetric and cosine loss is periodic") {
  Rng rng(32);
  for (int i = 0; i < 5000; ++i) {
    const double a = rng.uniform(0.0, kTwoPi);
    const double b = rng.uniform(0.0, kTwoPi);
    CHECK(eval1(LossKind::Cyclic, a, b).value ==
          eval1(LossKind::Cyclic, b, a).value);
    CHECK(std::abs(eval1(LossKind::Cos, a + kTwoPi, b).value -
                   eval1(LossKind::Cos, a, b).value) <= 1e-12);
    CHECK(std::abs(eval1(LossKind::Cos, a, b + kTwoPi).value -
                   eval1(LossKind::Cos, a, b).value) <= 1e-12);
  }
}

TEST_CASE("squared variants are the square of their base loss") {
  Rng rng(33);
  for (int i = 0; i < 5000; ++i) {
    const double a = rng.uniform(-1.0, kTwoPi + 1.0);
    const double b = rng.uniform(-1.0, kTwoPi + 1.0);
    const double lin = eval1(LossKind::Linear, a, b).value;
    CHECK(eval1(LossKind::LinearSq, a, b).value == lin * lin);
    const double cyc = eval1(LossKind::Cyclic, a, b).value;
    CHECK(eval1(LossKind::CyclicSq, a, b).value == cyc * cyc);

    const double x = rng.uniform(-2.0, 2.0), y = rng.uniform(-2.0, 2.0);
    const double u = rng.uniform(-2.0, 2.0), v = rng.uniform(-2.0, 2.0);
    const double d = eval2(LossKind::Dist, x, y, u, v).value;
    CHECK(eval2(LossKind::DistSq, x, y, u, v).value == d * d);
  }
}

TEST_CASE("cycle-sensitive losses bottom out exactly at the target") {
  Rng rng(34);
  for (int i = 0; i < 2000; ++i) {
    const double tgt = rng.uniform(0.0, kTwoPi);
    const double elsewhere = rng.uniform(0.0, kTwoPi);
    CHECK(eval1(LossKind::Cyclic, tgt, tgt).value == 0.0);
    CHECK(eval1(LossKind::CyclicSq, tgt, tgt).value == 0.0);
    CHECK(eval1(LossKind::Cos, tgt, tgt).value == -1.0);
    CHECK(eval1(LossKind::Cyclic, elsewhere, tgt).value >= 0.0);
    CHECK(eval1(LossKind::Cyclic, elsewhere, tgt).value <= kPi);
    CHECK(eval1(LossKind::Cos, elsewhere, tgt).value >= -1.0);
    CHECK(eval1(LossKind::Cos, elsewhere, tgt).value <= 1.0);
  }
}

TEST_CASE("batch loss averages values and gradients") {
  const double p1[1] = {1.0};
  const double t1[1] = {0.4};
  const LossResult single = loss(LossKind::LinearSq, p1, t1);
  const LossResult batch1 = batch_loss(LossKind::LinearSq, p1, t1);
  CHECK(batch1.value == single.value);
  CHECK(batch1.grad[0] == single.grad[0]);

  const double p2[2] = {1.0, 1.0};
  const double t2[2] = {0.4, 0.4};
  const LossResult batch2 = batch_loss(LossKind::LinearSq, p2, t2);
  CHECK(batch2.value == single.value);
  CHECK(batch2.grad[0] == single.grad[0]);

  const double pc[2] = {0.0, 0.0};
  const double tc[2] = {0.0, kPi};
  CHECK(batch_loss(LossKind::Cos, pc, tc).value == 0.0);

  CHECK_THROWS_AS(batch_loss(LossKind::Cos, std::span<const double>{},
                             std::span<const double>{}),
                  std::invalid_argument);
  CHECK_THROWS_AS(batch_loss(LossKind::Cos, p2, t1), std::invalid_argument);
  const double p3[3] = {0.0, 0.0, 0.0};
  CHECK_THROWS_AS(batch_loss(LossKind::Dist, p3, p3), std::invalid_argument);
}

TEST_CASE("loss names round-trip") {
  for (LossKind k : {LossKind::Linear, LossKind::LinearSq, LossKind::Cyclic,
                     LossKind::CyclicSq, LossKind::Cos, LossKind::Dist,
                     LossKind::DistSq}) {
    CHECK(loss_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(loss_from_string("hinge"), ConfigError);
}
