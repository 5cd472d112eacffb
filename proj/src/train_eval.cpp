#include "migdir/train_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"
#include "migdir/errors.hpp"
#include "migdir/optimizer.hpp"
#include "migdir/rng.hpp"

namespace migdir {

std::string to_string(Encoding e) {
  return e == Encoding::OneN ? "1N" : "2N";
}

Encoding encoding_from_string(const std::string& name) {
  if (name == "1N") return Encoding::OneN;
  if (name == "2N") return Encoding::TwoN;
  throw ConfigError("unknown encoding \"" + name + "\" (want 1N or 2N)");
}

void validate_run_config(const RunConfig& cfg) {
  const bool one = cfg.encoding == Encoding::OneN;
  const bool act_ok = one ? cfg.activation == ActivationKind::Cyclic
                          : (cfg.activation == ActivationKind::Identity ||
                             cfg.activation == ActivationKind::SigmoidLike);
  const bool loss_ok = loss_arity(cfg.loss) == (one ? 1 : 2);
  if (!act_ok || !loss_ok) {
    throw ConfigError("invalid combination " + to_string(cfg.encoding) + "/" +
                      to_string(cfg.activation) + "/" + to_string(cfg.loss) +
                      ": the angle head takes the cyclic activation with an "
                      "angle loss, the coordinate head identity or sigmoid "
                      "with a coordinate loss");
  }
  if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (cfg.batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (cfg.augment_multiplier <= 0) {
    throw ConfigError("augment_multiplier must be >= 1");
  }
}

namespace {

std::string scale_to_string(ModelScale s) {
  return s == ModelScale::Paper ? "paper" : "desk";
}

ModelScale scale_from_string(const std::string& name) {
  if (name == "paper") return ModelScale::Paper;
  if (name == "desk") return ModelScale::Desk;
  throw ConfigError("unknown scale \"" + name + "\" (want desk or paper)");
}

}  // namespace

RunConfig run_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("run config: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("run config: expected a JSON object");
  static const char* known[] = {"encoding",   "activation", "loss",
                                "epochs",     "batch_size", "seed",
                                "scale",      "augment_multiplier"};
  for (const auto& item : j.items()) {
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) {
          return item.key() == k;
        }) == std::end(known)) {
      throw ConfigError("unknown run config key \"" + item.key() + "\"");
    }
  }
  RunConfig cfg;
  try {
    if (j.contains("encoding")) {
      cfg.encoding = encoding_from_string(j["encoding"].get<std::string>());
    }
    if (j.contains("activation")) {
      cfg.activation =
          activation_from_string(j["activation"].get<std::string>());
    }
    if (j.contains("loss")) {
      cfg.loss = loss_from_string(j["loss"].get<std::string>());
    }
    if (j.contains("epochs")) cfg.epochs = j["epochs"].get<int>();
    if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<int>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("scale")) {
      cfg.scale = scale_from_string(j["scale"].get<std::string>());
    }
    if (j.contains("augment_multiplier")) {
      cfg.augment_multiplier = j["augment_multiplier"].get<int>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("run config: ") + e.what());
  }
  validate_run_config(cfg);
  return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["encoding"] = to_string(cfg.encoding);
  j["activation"] = to_string(cfg.activation);
  j["loss"] = to_string(cfg.loss);
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["seed"] = cfg.seed;
  j["scale"] = scale_to_string(cfg.scale);
  j["augment_multiplier"] = cfg.augment_multiplier;
  return j.dump(2);
}

double e_deg(std::span<const Angle> predictions,
             std::span<const Angle> targets) {
  if (predictions.empty() || predictions.size() != targets.size()) {
    throw std::invalid_argument("e_deg: need equal non-empty angle lists");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    sum += cyclic_distance(predictions[i], targets[i]);
  }
  return sum / static_cast<double>(predictions.size()) * 180.0 / kPi;
}

std::optional<Angle> decode_output(Encoding enc, std::span<const double> row) {
  if (enc == Encoding::OneN) {
    if (row.size() != 1) {
      throw std::invalid_argument("decode_output: 1N row must have 1 value");
    }
    return Angle(row[0]);
  }
  if (row.size() != 2) {
    throw std::invalid_argument("decode_output: 2N row must have 2 values");
  }
  const UnitDirection d{row[0], row[1]};
  if (std::hypot(d.x, d.y) <= 1e-9) return std::nullopt;
  return unit_to_angle(d.x, d.y);
}

Encoding model_encoding(const Model& m) {
  return m.head_arity == 1 ? Encoding::OneN : Encoding::TwoN;
}

std::vector<std::optional<Angle>> predict_batch(
    const Model& m, const std::vector<const Image*>& images, int batch_size) {
  if (batch_size <= 0) {
    throw std::invalid_argument("predict_batch: batch_size must be positive");
  }
  const Encoding enc = model_encoding(m);
  const int s = m.input_size;
  std::vector<std::optional<Angle>> out;
  out.reserve(images.size());
  for (std::size_t start = 0; start < images.size();
       start += static_cast<std::size_t>(batch_size)) {
    const int bn = static_cast<int>(
        std::min<std::size_t>(batch_size, images.size() - start));
    Tensor x({bn, s, s, 1});
    for (int i = 0; i < bn; ++i) {
      const Image& img = *images[start + i];
      if (img.size != s) {
        throw ConfigError("predict_batch: image size " +
                          std::to_string(img.size) + " does not match the " +
                          std::to_string(s) + "-pixel model input");
      }
      std::copy(img.pixels.begin(), img.pixels.end(),
                x.data.begin() + static_cast<std::size_t>(i) * s * s);
    }
    const Tensor y = forward(m, x, nullptr);
    for (int i = 0; i < bn; ++i) {
      out.push_back(decode_output(
          enc, std::span<const double>(
                   y.data.data() + static_cast<std::size_t>(i) * m.head_arity,
                   static_cast<std::size_t>(m.head_arity))));
    }
  }
  return out;
}

double eval_model(const Model& m,
                  const std::vector<const LabeledImage*>& items,
                  int batch_size) {
  if (items.empty()) {
    throw std::invalid_argument("eval_model: empty evaluation set");
  }
  std::vector<const Image*> images;
  std::vector<Angle> labels;
  images.reserve(items.size());
  labels.reserve(items.size());
  for (const LabeledImage* it : items) {
    images.push_back(&it->image);
    labels.push_back(it->label);
  }
  const auto raw = predict_batch(m, images, batch_size);
  std::vector<Angle> preds;
  preds.reserve(raw.size());
  for (const auto& p : raw) preds.push_back(p.value_or(Angle(0.0)));
  return e_deg(preds, labels);
}

namespace {

std::vector<const LabeledImage*> resolve_ids(
    const std::vector<LabeledImage>& data,
    const std::vector<std::string>& ids) {
  std::unordered_map<std::string, const LabeledImage*> byid;
  byid.reserve(data.size());
  for (const auto& item : data) {
    if (!byid.emplace(item.id, &item).second) {
      throw std::invalid_argument("dataset has duplicate id \"" + item.id +
                                  "\"");
    }
  }
  std::vector<const LabeledImage*> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const auto it = byid.find(id);
    if (it == byid.end()) {
      throw std::invalid_argument("fold references unknown id \"" + id + "\"");
    }
    out.push_back(it->second);
  }
  return out;
}

void fill_target(Encoding enc, Angle label, double* t) {
  if (enc == Encoding::OneN) {
    t[0] = label.radians();
  } else {
    t[0] = std::cos(label.radians());
    t[1] = std::sin(label.radians());
  }
}

}  // namespace

TrainOutcome train(const RunConfig& cfg, const std::vector<LabeledImage>& data,
                   const FoldSplit& fold) {
  validate_run_config(cfg);
  const auto train_items = resolve_ids(data, fold.train);
  const auto val_items = resolve_ids(data, fold.val);
  const auto test_items = resolve_ids(data, fold.test);
  if (train_items.empty() || val_items.empty() || test_items.empty()) {
    throw std::invalid_argument("train: every split must be non-empty");
  }
  const int s = train_items.front()->image.size;
  for (const auto& item : data) {
    if (item.image.size != s) {
      throw ConfigError("train: dataset images differ in size");
    }
  }

  const int arity = cfg.encoding == Encoding::OneN ? 1 : 2;
  TrainOutcome out;
  out.result.fold_index = fold.fold_index;
  out.model = probing_cnn(s, cfg.scale, arity, cfg.activation,
                          derive_seed(cfg.seed, 0xA11, fold.fold_index));
  Model& m = out.model;

  // Fixed training pool: the originals plus multiplier-1 seeded augmented
  // copies of each, generated up front so every epoch sees the same data.
  std::vector<LabeledImage> copies;
  copies.reserve(train_items.size() *
                 static_cast<std::size_t>(cfg.augment_multiplier - 1));
  Rng aug_rng(derive_seed(cfg.seed, 0xA06, fold.fold_index));
  const AugmentConfig aug_cfg{};
  for (int round = 1; round < cfg.augment_multiplier; ++round) {
    for (const LabeledImage* item : train_items) {
      copies.push_back(augment(*item, aug_cfg, aug_rng));
    }
  }
  std::vector<const LabeledImage*> pool = train_items;
  for (const auto& c : copies) pool.push_back(&c);

  Optimizer opt(AdamConfig{}, m);
  std::vector<LayerParams> best_params = m.params;
  double best_val = 0.0;
  bool have_best = false;

  for (int epoch = 1; epoch <= cfg.epochs && !out.result.failed; ++epoch) {
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng erng(derive_seed(cfg.seed, 0xE70, fold.fold_index,
                         static_cast<std::uint64_t>(epoch)));
    erng.shuffle(order);

    try {
      for (std::size_t start = 0; start < order.size();
           start += static_cast<std::size_t>(cfg.batch_size)) {
        const int bn = static_cast<int>(std::min<std::size_t>(
            cfg.batch_size, order.size() - start));
        Tensor x({bn, s, s, 1});
        std::vector<double> targets(static_cast<std::size_t>(bn) * arity);
        for (int i = 0; i < bn; ++i) {
          const LabeledImage& item = *pool[order[start + i]];
          std::copy(item.image.pixels.begin(), item.image.pixels.end(),
                    x.data.begin() + static_cast<std::size_t>(i) * s * s);
          fill_target(cfg.encoding, item.label,
                      &targets[static_cast<std::size_t>(i) * arity]);
        }

        ForwardTrace trace;
        const Tensor y = forward(m, x, &trace);
        Tensor dl({bn, arity});
        double batch_value = 0.0;
        for (int i = 0; i < bn; ++i) {
          const std::size_t off = static_cast<std::size_t>(i) * arity;
          const LossResult lr =
              loss(cfg.loss,
                   std::span<const double>(y.data.data() + off,
                                           static_cast<std::size_t>(arity)),
                   std::span<const double>(targets.data() + off,
                                           static_cast<std::size_t>(arity)));
          batch_value += lr.value;
          for (int k = 0; k < arity; ++k) {
            dl.data[off + k] = lr.grad[static_cast<std::size_t>(k)] / bn;
          }
        }
        if (!std::isfinite(batch_value)) {
          throw NumericError("non-finite training loss");
        }
        zero_gradients(m);
        backward(m, trace, dl);
        opt.step(m);
      }
    } catch (const NumericError&) {
      out.result.failed = true;
      out.result.failed_epoch = epoch;
      break;
    }

    const double val = eval_model(m, val_items, cfg.batch_size);
    if (!have_best || val < best_val) {
      have_best = true;
      best_val = val;
      best_params = m.params;
      out.result.best_epoch = epoch;
    }
  }

  m.params = best_params;
  out.result.best_val_e_deg =
      have_best ? best_val : eval_model(m, val_items, cfg.batch_size);
  out.result.test_e_deg = eval_model(m, test_items, cfg.batch_size);
  return out;
}

EvalReport summarize(const std::vector<double>& per_fold) {
  EvalReport r;
  r.per_fold = per_fold;
  if (per_fold.empty()) {
    r.mean = r.stddev = r.max_error_bound =
        std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  double sum = 0.0;
  for (double v : per_fold) sum += v;
  r.mean = sum / static_cast<double>(per_fold.size());
  if (per_fold.size() > 1) {
    double ss = 0.0;
    for (double v : per_fold) ss += (v - r.mean) * (v - r.mean);
    r.stddev = std::sqrt(ss / static_cast<double>(per_fold.size() - 1));
  }
  r.max_error_bound = r.mean + 3.0 * r.stddev;
  return r;
}

std::vector<SweepRow> sweep(const RunConfig& base,
                            const std::vector<LabeledImage>& data,
                            const std::vector<FoldSplit>& folds) {
  struct Combo {
    Encoding e;
    ActivationKind a;
    LossKind l;
  };
  // Published row order: the five angle-head losses, then the coordinate
  // head by activation and loss.
  static const Combo combos[] = {
      {Encoding::OneN, ActivationKind::Cyclic, LossKind::Linear},
      {Encoding::OneN, ActivationKind::Cyclic, LossKind::LinearSq},
      {Encoding::OneN, ActivationKind::Cyclic, LossKind::Cyclic},
      {Encoding::OneN, ActivationKind::Cyclic, LossKind::CyclicSq},
      {Encoding::OneN, ActivationKind::Cyclic, LossKind::Cos},
      {Encoding::TwoN, ActivationKind::Identity, LossKind::Dist},
      {Encoding::TwoN, ActivationKind::Identity, LossKind::DistSq},
      {Encoding::TwoN, ActivationKind::SigmoidLike, LossKind::Dist},
      {Encoding::TwoN, ActivationKind::SigmoidLike, LossKind::DistSq},
  };
  std::vector<SweepRow> rows;
  rows.reserve(std::size(combos));
  for (const Combo& c : combos) {
    SweepRow row;
    row.config = base;
    row.config.encoding = c.e;
    row.config.activation = c.a;
    row.config.loss = c.l;
    std::vector<double> ok_folds;
    for (const FoldSplit& fold : folds) {
      TrainOutcome outcome = train(row.config, data, fold);
      if (!outcome.result.failed) {
        ok_folds.push_back(outcome.result.test_e_deg);
      }
      row.folds.push_back(outcome.result);
    }
    row.report = summarize(ok_folds);
    rows.push_back(std::move(row));
  }
  const SweepRow* best = nullptr;
  for (auto& row : rows) {
    if (row.report.per_fold.size() != folds.size()) continue;  // had failures
    if (!best || row.report.mean < best->report.mean) best = &row;
  }
  for (auto& row : rows) row.best = (&row == best);
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "encoding,activation,loss,fold,e_deg\n";
  char buf[160];
  for (const auto& row : rows) {
    for (const auto& fr : row.folds) {
      if (fr.failed) {
        std::snprintf(buf, sizeof buf, "%s,%s,%s,%d,failed\n",
                      to_string(row.config.encoding).c_str(),
                      to_string(row.config.activation).c_str(),
                      to_string(row.config.loss).c_str(), fr.fold_index);
      } else {
        std::snprintf(buf, sizeof buf, "%s,%s,%s,%d,%.17g\n",
                      to_string(row.config.encoding).c_str(),
                      to_string(row.config.activation).c_str(),
                      to_string(row.config.loss).c_str(), fr.fold_index,
                      fr.test_e_deg);
      }
      out += buf;
    }
  }
  return out;
}

std::string sweep_json(const std::vector<SweepRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json j;
    j["encoding"] = to_string(row.config.encoding);
    j["activation"] = to_string(row.config.activation);
    j["loss"] = to_string(row.config.loss);
    j["per_fold"] = row.report.per_fold;
    j["mean"] = row.report.mean;
    j["stddev"] = row.report.stddev;
    j["max_error_bound"] = row.report.max_error_bound;
    j["best"] = row.best;
    int failed = 0;
    for (const auto& fr : row.folds) failed += fr.failed ? 1 : 0;
    j["failed_folds"] = failed;
    arr.push_back(std::move(j));
  }
  return arr.dump(2);
}

QuadrantBaseline equal_thirds(double accuracy) {
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
    throw std::invalid_argument("accuracy must be within [0, 1]");
  }
  const double rest = (1.0 - accuracy) / 3.0;
  return {accuracy, rest, rest, rest};
}

BaselineInaccuracy quadrant_inaccuracy(const QuadrantBaseline& b) {
  const double fractions[] = {b.accuracy, b.neighbor1, b.neighbor2,
                              b.opposite};
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) {
      throw std::invalid_argument(
          "quadrant fractions must be non-negative");
    }
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("quadrant fractions must sum to 1");
  }
  const double deg = 180.0 / kPi;
  BaselineInaccuracy r;
  r.avg_deg = (b.accuracy * kPi / 8.0 + (b.neighbor1 + b.neighbor2) * kPi / 2.0 +
               b.opposite * 7.0 * kPi / 8.0) *
              deg;
  r.max_deg = (b.accuracy * kPi / 4.0 +
               (b.neighbor1 + b.neighbor2) * 3.0 * kPi / 4.0 +
               b.opposite * kPi) *
              deg;
  return r;
}

}  // namespace migdir
