#include "migdir/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "migdir/errors.hpp"

namespace migdir {

Image::Image(int n) {
  if (n <= 0) throw std::invalid_argument("Image: size must be positive");
  size = n;
  pixels.assign(static_cast<std::size_t>(n) * n, 0.0);
}

Affine Affine::translation(double dx, double dy) {
  Affine m;
  m.tx = dx;
  m.ty = dy;
  return m;
}

Affine Affine::rotation_about(double theta, double cx, double cy) {
  const double co = std::cos(theta), si = std::sin(theta);
  Affine m;
  m.a = co;
  m.b = -si;
  m.c = si;
  m.d = co;
  m.tx = cx - co * cx + si * cy;
  m.ty = cy - si * cx - co * cy;
  return m;
}

Affine Affine::scale_about(double factor, double cx, double cy) {
  Affine m;
  m.a = factor;
  m.d = factor;
  m.tx = cx * (1.0 - factor);
  m.ty = cy * (1.0 - factor);
  return m;
}

Affine Affine::mirror_h(int size) {
  Affine m;
  m.a = -1.0;
  m.tx = size - 1.0;
  return m;
}

Affine Affine::mirror_v(int size) {
  Affine m;
  m.d = -1.0;
  m.ty = size - 1.0;
  return m;
}

Affine operator*(const Affine& f, const Affine& g) {
  Affine m;
  m.a = f.a * g.a + f.b * g.c;
  m.b = f.a * g.b + f.b * g.d;
  m.c = f.c * g.a + f.d * g.c;
  m.d = f.c * g.b + f.d * g.d;
  m.tx = f.a * g.tx + f.b * g.ty + f.tx;
  m.ty = f.c * g.tx + f.d * g.ty + f.ty;
  return m;
}

double background_level(const Image& img) {
  if (img.size <= 0) throw std::invalid_argument("background_level: empty image");
  std::vector<double> ring;
  const int n = img.size;
  ring.reserve(4 * n);
  for (int x = 0; x < n; ++x) {
    ring.push_back(img.at(0, x));
    ring.push_back(img.at(n - 1, x));
  }
  for (int y = 1; y + 1 < n; ++y) {
    ring.push_back(img.at(y, 0));
    ring.push_back(img.at(y, n - 1));
  }
  std::sort(ring.begin(), ring.end());
  const std::size_t m = ring.size();
  return m % 2 ? ring[m / 2] : 0.5 * (ring[m / 2 - 1] + ring[m / 2]);
}

Image warp_affine(const Image& src, const Affine& m, double fill) {
  Image out(src.size);
  const int n = src.size;
  auto sample = [&](int y, int x) {
    return (x >= 0 && x < n && y >= 0 && y < n) ? src.at(y, x) : fill;
  };
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double sx = m.a * x + m.b * y + m.tx;
      const double sy = m.c * x + m.d * y + m.ty;
      const double fx0 = std::floor(sx), fy0 = std::floor(sy);
      const int x0 = static_cast<int>(fx0), y0 = static_cast<int>(fy0);
      const double wx = sx - fx0, wy = sy - fy0;
      const double top = (1.0 - wx) * sample(y0, x0) + wx * sample(y0, x0 + 1);
      const double bot =
          (1.0 - wx) * sample(y0 + 1, x0) + wx * sample(y0 + 1, x0 + 1);
      out.at(y, x) = (1.0 - wy) * top + wy * bot;
    }
  }
  return out;
}

Image rotate_image(const Image& img, Angle theta) {
  const double c = (img.size - 1) / 2.0;
  // dst->src is the inverse rotation.
  return warp_affine(img, Affine::rotation_about(-theta.radians(), c, c),
                     background_level(img));
}

void write_pgm(const Image& img, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error(path + ": cannot open for writing");
  std::string header = "P5\n" + std::to_string(img.size) + " " +
                       std::to_string(img.size) + "\n255\n";
  bool ok = std::fwrite(header.data(), 1, header.size(), f) == header.size();
  std::vector<unsigned char> row(static_cast<std::size_t>(img.size));
  for (int y = 0; y < img.size && ok; ++y) {
    for (int x = 0; x < img.size; ++x) {
      const double v = std::clamp(img.at(y, x), 0.0, 1.0);
      row[static_cast<std::size_t>(x)] =
          static_cast<unsigned char>(std::lround(255.0 * v));
    }
    ok = std::fwrite(row.data(), 1, row.size(), f) == row.size();
  }
  if (std::fclose(f) != 0) ok = false;
  if (!ok) throw std::runtime_error(path + ": write failed");
}

namespace {

[[noreturn]] void pgm_fail(const std::string& path, long offset,
                           const std::string& what) {
  throw ParseError(path + ": byte " + std::to_string(offset) + ": " + what);
}

// Reads one whitespace-delimited header token, skipping `#` comments.
long read_header_int(std::FILE* f, const std::string& path, long& offset,
                     const char* field) {
  int ch;
  for (;;) {
    ch = std::fgetc(f);
    ++offset;
    if (ch == '#') {
      while (ch != EOF && ch != '\n') {
        ch = std::fgetc(f);
        ++offset;
      }
    } else if (ch == EOF) {
      pgm_fail(path, offset - 1, std::string("missing ") + field);
    } else if (!std::isspace(ch)) {
      break;
    }
  }
  if (!std::isdigit(ch)) {
    pgm_fail(path, offset - 1, std::string("expected digit in ") + field);
  }
  long value = 0;
  while (std::isdigit(ch)) {
    value = value * 10 + (ch - '0');
    if (value > 1 << 20) pgm_fail(path, offset - 1, "header value out of range");
    ch = std::fgetc(f);
    ++offset;
  }
  if (ch != EOF && !std::isspace(ch)) {
    pgm_fail(path, offset - 1, std::string("junk after ") + field);
  }
  return value;
}

}  // namespace

Image read_pgm(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw ParseError(path + ": cannot open");
  long offset = 0;
  auto fail = [&](const std::string& what) {
    std::fclose(f);
    pgm_fail(path, offset, what);
  };

  char magic[2];
  if (std::fread(magic, 1, 2, f) != 2 || magic[0] != 'P' || magic[1] != '5') {
    fail("not a P5 PGM");
  }
  offset = 2;
  long w, h, maxval;
  try {
    w = read_header_int(f, path, offset, "width");
    h = read_header_int(f, path, offset, "height");
    maxval = read_header_int(f, path, offset, "maxval");
  } catch (...) {
    std::fclose(f);
    throw;
  }
  // read_header_int consumed exactly one whitespace byte after maxval, which
  // is the header/pixel separator; pixel data starts at `offset`.
  if (w != h) fail("image is not square (" + std::to_string(w) + "x" +
                   std::to_string(h) + ")");
  if (w <= 0) fail("zero-sized image");
  if (maxval != 255) fail("maxval must be 255, got " + std::to_string(maxval));

  Image img(static_cast<int>(w));
  std::vector<unsigned char> raw(img.pixels.size());
  const std::size_t got = std::fread(raw.data(), 1, raw.size(), f);
  if (got != raw.size()) {
    offset += static_cast<long>(got);
    fail("pixel data truncated");
  }
  if (std::fgetc(f) != EOF) {
    offset += static_cast<long>(got);
    fail("trailing bytes after pixel data");
  }
  std::fclose(f);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    img.pixels[i] = raw[i] / 255.0;
  }
  return img;
}

}  // namespace migdir
