#pragma once

#include <span>
#include <vector>

#include "migdir/angle.hpp"

namespace migdir {

/// An ordered, non-empty collection of direction predictions for one input.
using PredictionSet = std::vector<Angle>;

/// Min-span circular average. Sorts the predictions ascending, then scans the
/// n rotations of the circular order (conceptually: add 2*pi to the smallest
/// element and re-sort, n times), keeps the arrangement with the smallest
/// spread d = max - min (ties go to the first arrangement encountered), and
/// returns the arithmetic mean of that arrangement wrapped into [0, 2*pi).
/// Throws std::invalid_argument on an empty set.
Angle fuse_predictions(std::span<const Angle> predictions);

/// Resultant-vector circular mean: atan2(sum sin p_i, sum cos p_i).
/// Throws DegenerateDirection when the resultant length is <= 1e-9
/// (e.g. an antipodal pair).
Angle circular_mean(std::span<const Angle> predictions);

}  // namespace migdir
