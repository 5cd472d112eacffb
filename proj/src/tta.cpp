#include "migdir/tta.hpp"

#include <cmath>
#include <stdexcept>

#include "migdir/errors.hpp"
#include "migdir/fusion.hpp"
#include "migdir/rng.hpp"
#include "migdir/train_eval.hpp"

namespace migdir {

Angle tta_predict(const Predictor& predict, const Image& img,
                  const TtaConfig& cfg) {
  if (cfg.n < 1) throw std::invalid_argument("tta: n must be >= 1");
  std::vector<Angle> kept;
  kept.reserve(static_cast<std::size_t>(cfg.n));
  if (const auto p = predict(img)) kept.push_back(*p);

  Rng rng(cfg.seed);
  for (int j = 1; j < cfg.n; ++j) {
    const double theta = rng.uniform(0.0, kTwoPi);
    const auto p = predict(rotate_image(img, Angle(theta)));
    if (p) kept.push_back(wrap(p->radians() - theta));
  }
  if (kept.empty()) {
    throw DegenerateDirection("tta: every copy produced a degenerate output");
  }
  return fuse_predictions(kept);
}

Predictor model_predictor(const Model& m) {
  return [&m](const Image& img) {
    return predict_batch(m, {&img}, 1).front();
  };
}

std::vector<TtaRow> tta_eval(const std::vector<TtaFoldInput>& folds,
                             const std::vector<int>& n_grid,
                             std::uint64_t seed) {
  if (folds.empty()) throw std::invalid_argument("tta_eval: no folds");
  std::vector<TtaRow> rows;
  rows.reserve(n_grid.size());
  for (const int n : n_grid) {
    TtaRow row;
    row.n = n;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      const TtaFoldInput& fi = folds[f];
      if (!fi.model || fi.test.empty()) {
        throw std::invalid_argument("tta_eval: fold without model or data");
      }
      const Predictor predict = model_predictor(*fi.model);
      std::vector<Angle> preds, labels;
      preds.reserve(fi.test.size());
      labels.reserve(fi.test.size());
      for (std::size_t i = 0; i < fi.test.size(); ++i) {
        TtaConfig cfg;
        cfg.n = n;
        cfg.seed = derive_seed(seed, static_cast<std::uint64_t>(n), f, i);
        Angle p(0.0);
        try {
          p = tta_predict(predict, fi.test[i]->image, cfg);
        } catch (const DegenerateDirection&) {
          // Matches eval_model's stand-in for undecodable outputs.
        }
        preds.push_back(p);
        labels.push_back(fi.test[i]->label);
      }
      row.per_fold.push_back(e_deg(preds, labels));
    }
    double sum = 0.0;
    for (double v : row.per_fold) sum += v;
    row.mean = sum / static_cast<double>(row.per_fold.size());
    if (row.per_fold.size() > 1) {
      double ss = 0.0;
      for (double v : row.per_fold) ss += (v - row.mean) * (v - row.mean);
      row.stddev =
          std::sqrt(ss / static_cast<double>(row.per_fold.size() - 1));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace migdir
