#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "migdir/angle.hpp"
#include "migdir/image.hpp"
#include "migdir/rng.hpp"

namespace migdir {

struct LabeledImage {
  Image image;
  Angle label;
  std::string id;
};

// Cell positions in micrometers, time-ordered.
struct Track {
  std::vector<std::array<double, 2>> positions;
  double frame_interval = 1.0;
};

// Each enabled transform draws independently per call: rotation uniform on
// [0, 2pi), shifts uniform on +-shift_frac of the image size, scaling factor
// uniform on 1 +- scale_delta, mirrors by fair coin when allowed.
struct AugmentConfig {
  double shift_frac = 0.2;
  double scale_delta = 0.1;
  bool h_mirror = true;
  bool v_mirror = true;
  std::uint64_t seed = 0;
};

// One concrete draw. Image operations apply mirrors first, then rotation,
// then scaling, then shift, composed into a single resampling pass; the label
// picks up the matching corrections in the same order.
struct AugmentParams {
  double theta = 0.0;
  double shift_x_frac = 0.0;  // of image size
  double shift_y_frac = 0.0;
  double scale = 1.0;
  bool h_mirror = false;
  bool v_mirror = false;
};

struct FoldSplit {
  int fold_index = 0;
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

/// Renders a synthetic polarized cell: an elliptical soft body centered in
/// the frame plus a brighter protrusion lobe offset along `direction`, with
/// per-sample shape jitter and additive Gaussian noise (sigma 0.05) clipped
/// to [0, 1]. label = direction. size < 32 -> ConfigError.
LabeledImage generate_cell(int size, Angle direction, std::uint64_t seed);

/// Net displacement direction, last position minus first, as wrap(atan2(dy,
/// dx)). Tracks that move min_displacement or less are rejected (nullopt),
/// not errors. Fewer than 2 positions -> std::invalid_argument.
std::optional<Angle> track_to_label(const Track& t,
                                    double min_displacement_um = 5.0);

/// Deterministic augmentation with explicit parameters. Label algebra:
/// horizontal mirror pi - l, vertical mirror -l, rotation l + theta, shift
/// and scale untouched; result wrapped. Resampling is bilinear; pixels pulled
/// from outside the source read its background level.
LabeledImage apply_augment(const LabeledImage& img, const AugmentParams& p);

/// Draws AugmentParams from `rng` per `cfg` (always rotates) and applies.
LabeledImage augment(const LabeledImage& img, const AugmentConfig& cfg,
                     Rng& rng);

/// k independent seeded shuffles of `ids`, each split train/val/test by
/// floor(train_frac n) / floor(val_frac n) / remainder-to-test. Fewer than 10
/// ids -> ConfigError.
std::vector<FoldSplit> make_folds(const std::vector<std::string>& ids,
                                  int k = 4, double train_frac = 0.4,
                                  double val_frac = 0.1,
                                  std::uint64_t seed = 0);

/// Directory of `<id>.pgm` files plus `labels.csv` ("id,angle_rad", `.`
/// decimal, LF endings). Labels are written with enough digits to round-trip
/// exactly; pixels quantize to 1/255. Labels outside [0, 2pi) are wrapped on
/// load with a warning on stderr. Malformed input -> ParseError naming the
/// file and byte offset.
void save_dataset(const std::string& dir,
                  const std::vector<LabeledImage>& items);
std::vector<LabeledImage> load_dataset(const std::string& dir);

}  // namespace migdir
