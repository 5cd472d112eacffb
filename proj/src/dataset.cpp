#include "migdir/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <stdexcept>

#include "migdir/errors.hpp"

namespace migdir {

LabeledImage generate_cell(int size, Angle direction, std::uint64_t seed) {
  if (size < 32) {
    throw ConfigError("generate_cell: size must be at least 32, got " +
                      std::to_string(size));
  }
  Rng rng(seed);
  const double c = (size - 1) / 2.0;

  // Shape jitter, drawn before the pixel noise so layouts are reproducible
  // field by field. The body stays centrally symmetric; only the lobe breaks
  // the symmetry, so the intensity centroid points along `direction`.
  const double psi = rng.uniform(0.0, kTwoPi);  // body orientation
  const double ra = size * rng.uniform(0.24, 0.32);
  const double rb = size * rng.uniform(0.16, 0.22);
  const double lobe_r = size * rng.uniform(0.18, 0.26);
  const double lobe_sigma = size * rng.uniform(0.08, 0.12);
  const double lobe_amp = rng.uniform(0.35, 0.45);

  const double dx = std::cos(direction.radians());
  const double dy = std::sin(direction.radians());
  const double lx = c + lobe_r * dx;
  const double ly = c + lobe_r * dy;
  const double cpsi = std::cos(psi), spsi = std::sin(psi);

  LabeledImage cell;
  cell.image = Image(size);
  cell.label = direction;
  cell.id = "cell_" + std::to_string(seed);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double px = x - c, py = y - c;
      // Elliptical radius in the body frame.
      const double pu = cpsi * px + spsi * py;
      const double pv = -spsi * px + cpsi * py;
      const double u = std::sqrt((pu / ra) * (pu / ra) + (pv / rb) * (pv / rb));
      double s = std::clamp((1.1 - u) / 0.3, 0.0, 1.0);
      s = s * s * (3.0 - 2.0 * s);  // soft body edge
      const double gx = x - lx, gy = y - ly;
      const double lobe =
          lobe_amp *
          std::exp(-(gx * gx + gy * gy) / (2.0 * lobe_sigma * lobe_sigma));
      const double v = 0.08 + 0.45 * s + lobe + rng.normal(0.0, 0.05);
      cell.image.at(y, x) = std::clamp(v, 0.0, 1.0);
    }
  }
  return cell;
}

std::optional<Angle> track_to_label(const Track& t,
                                    double min_displacement_um) {
  if (t.positions.size() < 2) {
    throw std::invalid_argument("track_to_label: need at least 2 positions");
  }
  const auto& first = t.positions.front();
  const auto& last = t.positions.back();
  const double dx = last[0] - first[0];
  const double dy = last[1] - first[1];
  if (std::hypot(dx, dy) <= min_displacement_um) return std::nullopt;
  return wrap(std::atan2(dy, dx));
}

LabeledImage apply_augment(const LabeledImage& img, const AugmentParams& p) {
  if (!(p.scale > 0.0)) {
    throw std::invalid_argument("apply_augment: scale must be positive");
  }
  const int n = img.image.size;
  const double c = (n - 1) / 2.0;

  // dst->src sampling map: the inverses compose right to left, shift first,
  // mirrors last, which plays the forward ops mirrors -> rotation -> scale ->
  // shift in one resampling pass.
  Affine m = Affine::translation(-p.shift_x_frac * n, -p.shift_y_frac * n);
  m = Affine::scale_about(1.0 / p.scale, c, c) * m;
  m = Affine::rotation_about(-p.theta, c, c) * m;
  if (p.v_mirror) m = Affine::mirror_v(n) * m;
  if (p.h_mirror) m = Affine::mirror_h(n) * m;

  double l = img.label.radians();
  if (p.h_mirror) l = kPi - l;
  if (p.v_mirror) l = -l;
  l += p.theta;

  LabeledImage out;
  out.image = warp_affine(img.image, m, background_level(img.image));
  out.label = wrap(l);
  out.id = img.id;
  return out;
}

LabeledImage augment(const LabeledImage& img, const AugmentConfig& cfg,
                     Rng& rng) {
  AugmentParams p;
  p.theta = rng.uniform(0.0, kTwoPi);
  p.shift_x_frac = rng.uniform(-cfg.shift_frac, cfg.shift_frac);
  p.shift_y_frac = rng.uniform(-cfg.shift_frac, cfg.shift_frac);
  p.scale = 1.0 + rng.uniform(-cfg.scale_delta, cfg.scale_delta);
  p.h_mirror = cfg.h_mirror && rng.uniform01() < 0.5;
  p.v_mirror = cfg.v_mirror && rng.uniform01() < 0.5;
  return apply_augment(img, p);
}

std::vector<FoldSplit> make_folds(const std::vector<std::string>& ids, int k,
                                  double train_frac, double val_frac,
                                  std::uint64_t seed) {
  if (ids.size() < 10) {
    throw ConfigError("make_folds: need at least 10 ids, got " +
                      std::to_string(ids.size()));
  }
  if (k <= 0) throw std::invalid_argument("make_folds: k must be positive");
  if (!(train_frac > 0.0) || !(val_frac > 0.0) ||
      train_frac + val_frac >= 1.0) {
    throw std::invalid_argument("make_folds: fractions must be positive and "
                                "leave room for the test split");
  }
  const std::size_t n = ids.size();
  const auto n_train = static_cast<std::size_t>(std::floor(train_frac * n));
  const auto n_val = static_cast<std::size_t>(std::floor(val_frac * n));
  std::vector<FoldSplit> folds;
  folds.reserve(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) {
    std::vector<std::string> order = ids;
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(f)));
    rng.shuffle(order);
    FoldSplit split;
    split.fold_index = f;
    split.train.assign(order.begin(), order.begin() + n_train);
    split.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
    split.test.assign(order.begin() + n_train + n_val, order.end());
    folds.push_back(std::move(split));
  }
  return folds;
}

namespace {

[[noreturn]] void csv_fail(const std::string& path, std::size_t offset,
                           const std::string& what) {
  throw ParseError(path + ": byte " + std::to_string(offset) + ": " + what);
}

void check_id(const std::string& id) {
  if (id.empty() || id.find('/') != std::string::npos ||
      id.find('\\') != std::string::npos) {
    throw std::invalid_argument("dataset id unusable as a file name: \"" + id +
                                "\"");
  }
}

}  // namespace

void save_dataset(const std::string& dir,
                  const std::vector<LabeledImage>& items) {
  for (const auto& item : items) check_id(item.id);
  std::filesystem::create_directories(dir);
  const std::string csv_path = dir + "/labels.csv";
  std::FILE* f = std::fopen(csv_path.c_str(), "wb");
  if (!f) throw std::runtime_error(csv_path + ": cannot open for writing");
  bool ok = std::fputs("id,angle_rad\n", f) >= 0;
  for (const auto& item : items) {
    char line[512];
    const int len = std::snprintf(line, sizeof line, "%s,%.17g\n",
                                  item.id.c_str(), item.label.radians());
    ok = ok && len > 0 && static_cast<std::size_t>(len) < sizeof line &&
         std::fwrite(line, 1, static_cast<std::size_t>(len), f) ==
             static_cast<std::size_t>(len);
  }
  if (std::fclose(f) != 0) ok = false;
  if (!ok) throw std::runtime_error(csv_path + ": write failed");
  for (const auto& item : items) {
    write_pgm(item.image, dir + "/" + item.id + ".pgm");
  }
}

std::vector<LabeledImage> load_dataset(const std::string& dir) {
  const std::string csv_path = dir + "/labels.csv";
  std::FILE* f = std::fopen(csv_path.c_str(), "rb");
  if (!f) throw ParseError(csv_path + ": cannot open");
  std::string text;
  char buf[65536];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, got);
  std::fclose(f);

  const std::string header = "id,angle_rad\n";
  if (text.compare(0, header.size(), header) != 0) {
    csv_fail(csv_path, 0, "expected header \"id,angle_rad\"");
  }

  std::vector<LabeledImage> items;
  std::size_t pos = header.size();
  while (pos < text.size()) {
    const std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) {
      csv_fail(csv_path, text.size(), "missing final newline");
    }
    const std::string line = text.substr(pos, eol - pos);
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos) {
      csv_fail(csv_path, pos, "row has no comma");
    }
    const std::string id = line.substr(0, comma);
    if (id.empty()) csv_fail(csv_path, pos, "empty id");
    const std::string num = line.substr(comma + 1);
    const char* start = num.c_str();
    char* end = nullptr;
    const double value = std::strtod(start, &end);
    if (end == start || *end != '\0') {
      csv_fail(csv_path, pos + comma + 1, "bad angle value \"" + num + "\"");
    }
    if (!std::isfinite(value)) {
      csv_fail(csv_path, pos + comma + 1, "non-finite angle");
    }
    Angle label(value);
    if (value < 0.0 || value >= kTwoPi) {
      std::fprintf(stderr,
                   "warning: %s: angle %.17g for id %s is outside [0, 2pi); "
                   "wrapped to %.17g\n",
                   csv_path.c_str(), value, id.c_str(), label.radians());
    }
    LabeledImage item;
    item.id = id;
    item.label = label;
    item.image = read_pgm(dir + "/" + id + ".pgm");
    items.push_back(std::move(item));
    pos = eol + 1;
  }
  return items;
}

}  // namespace migdir
