#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "migdir/activation.hpp"
#include "migdir/angle.hpp"
#include "migdir/dataset.hpp"
#include "migdir/loss.hpp"
#include "migdir/model.hpp"

namespace migdir {

// 1N: the head is a single wrapped angle. 2N: the head is a point near the
// unit circle, decoded through atan2.
enum class Encoding { OneN, TwoN };

std::string to_string(Encoding e);
Encoding encoding_from_string(const std::string& name);

struct RunConfig {
  Encoding encoding = Encoding::TwoN;
  ActivationKind activation = ActivationKind::SigmoidLike;
  LossKind loss = LossKind::DistSq;
  int epochs = 12;
  int batch_size = 32;
  std::uint64_t seed = 0;
  ModelScale scale = ModelScale::Desk;
  // Training pool size as a multiple of the split: 1 keeps the originals
  // only, m adds m-1 seeded augmented copies per original.
  int augment_multiplier = 2;
};

/// Only the nine published combinations pass: the angle head (1N, Cyclic
/// activation) with Linear/LinearSq/Cyclic/CyclicSq/Cos, and the coordinate
/// head (2N, Identity or SigmoidLike) with Dist/DistSq. Anything else, or a
/// non-positive epoch/batch/multiplier setting, -> ConfigError.
void validate_run_config(const RunConfig& cfg);

/// JSON object with exactly the RunConfig field names (all optional,
/// defaults apply): encoding, activation, loss, epochs, batch_size, seed,
/// scale, augment_multiplier. Unknown keys -> ConfigError; malformed JSON ->
/// ParseError.
RunConfig run_config_from_json(const std::string& text);
std::string run_config_to_json(const RunConfig& cfg);

/// Mean cyclic deviation in degrees. Empty or mismatched inputs ->
/// std::invalid_argument.
double e_deg(std::span<const Angle> predictions, std::span<const Angle> targets);

/// Angle of a head output row. 1N rows are already wrapped angles; 2N rows
/// decode through atan2 unless the point is within 1e-9 of the origin, which
/// has no direction (nullopt).
std::optional<Angle> decode_output(Encoding enc, std::span<const double> row);

Encoding model_encoding(const Model& m);

/// Model predictions for a set of images, batched; rows decode per the
/// model's encoding. Image sizes must match the model input.
std::vector<std::optional<Angle>> predict_batch(
    const Model& m, const std::vector<const Image*>& images, int batch_size);

/// E_deg of the model on labeled items; degenerate decodes count as angle 0
/// (and are rare enough not to matter).
double eval_model(const Model& m, const std::vector<const LabeledImage*>& items,
                  int batch_size);

struct FoldResult {
  int fold_index = 0;
  double test_e_deg = 0.0;
  double best_val_e_deg = 0.0;
  int best_epoch = -1;  // -1 when epochs == 0 (untrained initial weights)
  bool failed = false;
  int failed_epoch = -1;  // set when training diverged
};

struct TrainOutcome {
  Model model;  // parameters of the best-validation epoch
  FoldResult result;
};

/// Trains the probing CNN on the fold's (augmented) training split with Adam,
/// scores validation E_deg after every epoch, and returns the parameters of
/// the best epoch together with their test E_deg. A non-finite loss or
/// activation marks the run failed at that epoch and stops it; the best
/// checkpoint so far still gets evaluated. Deterministic for a given
/// (config, dataset, fold).
TrainOutcome train(const RunConfig& cfg, const std::vector<LabeledImage>& data,
                   const FoldSplit& fold);

struct EvalReport {
  std::vector<double> per_fold;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation across folds
  double max_error_bound = 0.0;  // mean + 3 * stddev
};

EvalReport summarize(const std::vector<double>& per_fold);

struct SweepRow {
  RunConfig config;
  std::vector<FoldResult> folds;
  EvalReport report;  // over non-failed folds
  bool best = false;
};

/// All nine configurations, published order, trained on every fold. `base`
/// supplies the shared knobs (epochs, batch, seed, scale, multiplier); its
/// encoding/activation/loss are ignored. Failed runs are recorded and the
/// sweep continues; `best` marks the lowest mean among rows with no failures.
std::vector<SweepRow> sweep(const RunConfig& base,
                            const std::vector<LabeledImage>& data,
                            const std::vector<FoldSplit>& folds);

/// One line per (configuration, fold): encoding,activation,loss,fold,e_deg.
/// Failed folds print `failed` in the e_deg column.
std::string sweep_csv(const std::vector<SweepRow>& rows);
/// JSON array with per-config mean/std/max_error_bound and the best flag.
std::string sweep_json(const std::vector<SweepRow>& rows);

// Accuracy of a 4-class quadrant classifier plus how its errors distribute
// over the three wrong quadrants.
struct QuadrantBaseline {
  double accuracy = 1.0;
  double neighbor1 = 0.0;
  double neighbor2 = 0.0;
  double opposite = 0.0;
};

/// The fractions must sum to 1 within 1e-9.
QuadrantBaseline equal_thirds(double accuracy);

struct BaselineInaccuracy {
  double avg_deg = 0.0;
  double max_deg = 0.0;
};

/// Best-case angular inaccuracy of a quadrant classifier that answers with
/// the quadrant center: a correct quadrant costs pi/8 on average (pi/4 at
/// worst), a neighbor pi/2 (3pi/4), the opposite quadrant 7pi/8 (pi).
BaselineInaccuracy quadrant_inaccuracy(const QuadrantBaseline& b);

}  // namespace migdir
