#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "migdir/angle.hpp"
#include "migdir/dataset.hpp"
#include "migdir/model.hpp"

namespace migdir {

// n total predictions: the unrotated original plus n-1 seeded random
// rotations.
struct TtaConfig {
  int n = 1;
  std::uint64_t seed = 0;
};

// Whatever can turn an image into a direction; nullopt marks a degenerate
// output with no decodable direction.
using Predictor = std::function<std::optional<Angle>(const Image&)>;

/// Ensemble prediction: evaluates the original first, then each rotated copy
/// in draw order (angles uniform on [0, 2pi) from Rng(seed)), corrects copy
/// predictions by wrap(p - theta), drops degenerate ones, and fuses the rest
/// with the minimal-span average. With n = 1 this is exactly the plain
/// prediction. Throws DegenerateDirection only if every copy dropped.
Angle tta_predict(const Predictor& predict, const Image& img,
                  const TtaConfig& cfg);

/// The model-backed predictor: single-image forward pass, decoded per the
/// model's head encoding.
Predictor model_predictor(const Model& m);

struct TtaFoldInput {
  const Model* model = nullptr;
  std::vector<const LabeledImage*> test;
};

struct TtaRow {
  int n = 0;
  std::vector<double> per_fold;  // E_deg
  double mean = 0.0;
  double stddev = 0.0;
};

/// E_deg versus ensemble size across folds. Per-image seeds derive from
/// (seed, n, fold, image index), so rows and folds are independent and the
/// whole table is reproducible. Degenerate ensembles score as angle 0, the
/// same fallback eval_model uses.
std::vector<TtaRow> tta_eval(const std::vector<TtaFoldInput>& folds,
                             const std::vector<int>& n_grid,
                             std::uint64_t seed);

}  // namespace migdir
