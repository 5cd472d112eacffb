#pragma once

#include <string>
#include <vector>

#include "migdir/angle.hpp"

namespace migdir {

// Square grayscale raster, row-major, values in [0, 1]. Pixel centers sit on
// integer coordinates; the geometric center is ((size-1)/2, (size-1)/2).
struct Image {
  int size = 0;
  std::vector<double> pixels;

  Image() = default;
  explicit Image(int n);

  double& at(int y, int x) { return pixels[static_cast<std::size_t>(y) * size + x]; }
  double at(int y, int x) const {
    return pixels[static_cast<std::size_t>(y) * size + x];
  }
};

// Affine map src = A * dst + t, row-major coefficients. Used as the dst->src
// sampling map of warp_affine, so composition reads right to left: (f * g)
// applies g first.
struct Affine {
  double a = 1.0, b = 0.0, tx = 0.0;
  double c = 0.0, d = 1.0, ty = 0.0;

  static Affine identity() { return {}; }
  static Affine translation(double dx, double dy);
  /// Rotation by theta about (cx, cy). Angles follow the image frame: +x
  /// right, +y down, positive rotation turns +x toward +y.
  static Affine rotation_about(double theta, double cx, double cy);
  static Affine scale_about(double factor, double cx, double cy);
  static Affine mirror_h(int size);  // x -> size-1-x
  static Affine mirror_v(int size);  // y -> size-1-y

  friend Affine operator*(const Affine& f, const Affine& g);
};

/// Median of the one-pixel border ring; the fill value for pixels that an
/// affine warp pulls from outside the source.
double background_level(const Image& img);

/// Bilinear resampling of `src` through the dst->src map. Out-of-range
/// samples read `fill`. Output values never leave the hull of inputs.
Image warp_affine(const Image& src, const Affine& dst_to_src, double fill);

/// Rotation by theta about the image center, edges filled with the source's
/// background level. Every rotation in the project (augmentation, test-time
/// ensembles) goes through here.
Image rotate_image(const Image& img, Angle theta);

/// Binary 8-bit PGM ("P5", maxval 255), pixel byte = round(255 * value).
void write_pgm(const Image& img, const std::string& path);

/// Accepts exactly the files write_pgm produces plus standard `#` header
/// comments. Malformed or non-square input -> ParseError naming the file and
/// the byte offset of the defect.
Image read_pgm(const std::string& path);

}  // namespace migdir
