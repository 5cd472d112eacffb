#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"

#include "migdir/angle.hpp"
#include "migdir/dataset.hpp"
#include "migdir/errors.hpp"
#include "migdir/gradcheck.hpp"
#include "migdir/model.hpp"
#include "migdir/rng.hpp"
#include "migdir/tensor.hpp"
#include "migdir/train_eval.hpp"
#include "migdir/tta.hpp"

#include "json.hpp"

namespace {

using namespace migdir;

// The nine supported (encoding, activation, loss) combinations, in the
// reporting order shared with sweep output.
struct Combo {
  Encoding enc;
  ActivationKind act;
  LossKind loss;
};

const Combo kCombos[] = {
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

int g_jobs = 0;

void apply_jobs() {
#ifdef _OPENMP
  if (g_jobs > 0) omp_set_num_threads(g_jobs);
#endif
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (!in.good() && !in.eof()) throw ParseError(path + ": read failed");
  return ss.str();
}

void spill(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error(path + ": write failed");
}

Tensor image_tensor(const Image& img) {
  Tensor t({1, img.size, img.size, 1});
  t.data = img.pixels;
  return t;
}

std::vector<std::string> ids_of(const std::vector<LabeledImage>& items) {
  std::vector<std::string> ids;
  ids.reserve(items.size());
  for (const auto& it : items) ids.push_back(it.id);
  return ids;
}

ModelScale scale_from_string(const std::string& name) {
  if (name == "desk") return ModelScale::Desk;
  if (name == "paper") return ModelScale::Paper;
  throw ConfigError("unknown scale '" + name + "' (use desk or paper)");
}

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
  std::string out;
  int count = 100;
  int size = 64;
  std::uint64_t seed = 0;
};

void run_gen(const GenArgs& a) {
  apply_jobs();
  if (a.count < 1) throw ConfigError("--count must be at least 1");
  std::printf("seed=%llu\n", static_cast<unsigned long long>(a.seed));
  // Directions come from one master stream; each cell renders from its own
  // seed (base + index) so items are independent of generation order.
  Rng master(a.seed);
  std::vector<LabeledImage> items;
  items.reserve(static_cast<std::size_t>(a.count));
  for (int i = 0; i < a.count; ++i) {
    const Angle dir = wrap(master.uniform(0.0, kTwoPi));
    items.push_back(generate_cell(a.size, dir, a.seed + static_cast<std::uint64_t>(i)));
  }
  std::filesystem::create_directories(a.out);
  save_dataset(a.out, items);
  std::printf("wrote %d cells of size %d to %s\n", a.count, a.size, a.out.c_str());
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string data;
  std::string config;
  std::string out;
  int fold = 0;
  int kfolds = 4;
};

int run_train(const TrainArgs& a) {
  apply_jobs();
  RunConfig cfg;
  if (!a.config.empty()) cfg = run_config_from_json(slurp(a.config));
  validate_run_config(cfg);
  std::printf("seed=%llu\n", static_cast<unsigned long long>(cfg.seed));

  const auto data = load_dataset(a.data);
  const auto folds = make_folds(ids_of(data), a.kfolds, 0.4, 0.1, cfg.seed);
  if (a.fold < 0 || a.fold >= a.kfolds) {
    throw ConfigError("--fold must be in [0, " + std::to_string(a.kfolds - 1) + "]");
  }

  const TrainOutcome outcome = train(cfg, data, folds[static_cast<std::size_t>(a.fold)]);
  save_model(outcome.model, a.out);

  const FoldResult& r = outcome.result;
  std::printf("fold=%d of %d\n", a.fold, a.kfolds);
  std::printf("best_epoch=%d best_val_e_deg=%.17g test_e_deg=%.17g\n",
              r.best_epoch, r.best_val_e_deg, r.test_e_deg);
  std::printf("checkpoint=%s\n", a.out.c_str());
  if (r.failed) {
    std::fprintf(stderr, "error: training diverged at epoch %d; checkpoint holds the best earlier state\n",
                 r.failed_epoch);
    return 3;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// predict

struct PredictArgs {
  std::string model;
  std::string image;
};

void run_predict(const PredictArgs& a) {
  apply_jobs();
  const Model m = load_model(a.model);
  const Image img = read_pgm(a.image);
  const auto pred = predict_batch(m, {&img}, 1).front();
  if (!pred) {
    throw DegenerateDirection("head output has no direction for " + a.image);
  }
  std::printf("angle_rad=%.17g angle_deg=%.17g\n", pred->radians(), pred->degrees());
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string model;
  std::string data;
  int tta_n = 0;  // 0 = plain evaluation
  std::uint64_t seed = 0;
  int batch = 32;
  std::string csv;
  std::string json;
};

void run_eval(const EvalArgs& a) {
  apply_jobs();
  if (a.tta_n < 0) throw ConfigError("--tta must be positive");
  const Model m = load_model(a.model);
  const auto data = load_dataset(a.data);
  if (data.empty()) throw ConfigError(a.data + ": empty dataset");
  std::printf("seed=%llu\n", static_cast<unsigned long long>(a.seed));

  // Degenerate decodes fall back to angle 0, matching the library's
  // evaluation convention.
  std::vector<Angle> preds, truths;
  preds.reserve(data.size());
  truths.reserve(data.size());
  if (a.tta_n == 0) {
    std::vector<const Image*> images;
    images.reserve(data.size());
    for (const auto& it : data) images.push_back(&it.image);
    for (const auto& p : predict_batch(m, images, a.batch)) {
      preds.push_back(p.value_or(Angle(0.0)));
    }
  } else {
    const Predictor p = model_predictor(m);
    for (std::size_t i = 0; i < data.size(); ++i) {
      TtaConfig cfg;
      cfg.n = a.tta_n;
      cfg.seed = derive_seed(a.seed, static_cast<std::uint64_t>(a.tta_n), 0,
                             static_cast<std::uint64_t>(i));
      try {
        preds.push_back(tta_predict(p, data[i].image, cfg));
      } catch (const DegenerateDirection&) {
        preds.push_back(Angle(0.0));
      }
    }
  }
  for (const auto& it : data) truths.push_back(it.label);

  const double err = e_deg(preds, truths);
  if (a.tta_n > 0) std::printf("tta_n=%d\n", a.tta_n);
  std::printf("items=%zu e_deg=%.17g\n", data.size(), err);

  if (!a.csv.empty()) {
    std::string text = "id,angle_rad,pred_rad,err_deg\n";
    char line[256];
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double d = cyclic_distance(preds[i], truths[i]) * 180.0 / kPi;
      std::snprintf(line, sizeof line, "%s,%.17g,%.17g,%.17g\n",
                    data[i].id.c_str(), truths[i].radians(), preds[i].radians(), d);
      text += line;
    }
    spill(a.csv, text);
  }
  if (!a.json.empty()) {
    nlohmann::json j;
    j["items"] = data.size();
    j["e_deg"] = err;
    j["seed"] = a.seed;
    if (a.tta_n > 0) {
      j["tta_n"] = a.tta_n;
    } else {
      j["tta_n"] = nullptr;
    }
    spill(a.json, j.dump(2) + "\n");
  }
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
  std::string data;
  std::uint64_t seed = 0;
  int epochs = 12;
  int batch = 32;
  int multiplier = 2;
  std::string scale = "desk";
  int kfolds = 4;
  std::string csv;
  std::string json;
};

void run_sweep(const SweepArgs& a) {
  apply_jobs();
  RunConfig base;
  base.epochs = a.epochs;
  base.batch_size = a.batch;
  base.seed = a.seed;
  base.scale = scale_from_string(a.scale);
  base.augment_multiplier = a.multiplier;
  std::printf("seed=%llu\n", static_cast<unsigned long long>(a.seed));

  const auto data = load_dataset(a.data);
  const auto folds = make_folds(ids_of(data), a.kfolds, 0.4, 0.1, a.seed);
  const auto rows = sweep(base, data, folds);

  const std::string csv = sweep_csv(rows);
  if (a.csv.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    spill(a.csv, csv);
    for (const auto& row : rows) {
      int failed = 0;
      for (const auto& f : row.folds) failed += f.failed ? 1 : 0;
      std::printf("%s %s %s mean=%.4g stddev=%.4g failed_folds=%d%s\n",
                  to_string(row.config.encoding).c_str(),
                  to_string(row.config.activation).c_str(),
                  to_string(row.config.loss).c_str(), row.report.mean,
                  row.report.stddev, failed, row.best ? " best" : "");
    }
  }
  if (!a.json.empty()) spill(a.json, sweep_json(rows));

  for (const auto& row : rows) {
    if (row.best) {
      std::printf("best: %s %s %s mean=%.17g\n",
                  to_string(row.config.encoding).c_str(),
                  to_string(row.config.activation).c_str(),
                  to_string(row.config.loss).c_str(), row.report.mean);
      return;
    }
  }
  std::printf("best: none (every configuration had a failed fold)\n");
}

// ---------------------------------------------------------------------------
// baseline

struct BaselineArgs {
  double accuracy = 1.0;
  std::vector<double> neighbors;
  double opposite = 0.0;
  bool split_given = false;
};

void run_baseline(const BaselineArgs& a) {
  QuadrantBaseline b;
  if (a.split_given) {
    b.accuracy = a.accuracy;
    b.neighbor1 = a.neighbors[0];
    b.neighbor2 = a.neighbors[1];
    b.opposite = a.opposite;
  } else {
    b = equal_thirds(a.accuracy);
  }
  const BaselineInaccuracy r = quadrant_inaccuracy(b);
  std::printf("avg_deg=%.6f max_deg=%.6f\n", r.avg_deg, r.max_deg);
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckArgs {
  int size = 32;
  std::uint64_t seed = 0;
};

int run_gradcheck(const GradcheckArgs& a) {
  apply_jobs();
  std::printf("seed=%llu\n", static_cast<unsigned long long>(a.seed));
  Rng master(a.seed);
  bool all_pass = true;
  int index = 0;
  for (const Combo& c : kCombos) {
    const Angle dir = wrap(master.uniform(0.0, kTwoPi));
    const LabeledImage cell =
        generate_cell(a.size, dir, derive_seed(a.seed, 100, static_cast<std::uint64_t>(index)));
    const Tensor x = image_tensor(cell.image);
    const int arity = c.enc == Encoding::OneN ? 1 : 2;
    Model m = probing_cnn(a.size, ModelScale::Desk, arity, c.act,
                          derive_seed(a.seed, static_cast<std::uint64_t>(index)));
    std::vector<double> target;
    if (arity == 1) {
      target = {cell.label.radians()};
    } else {
      target = {std::cos(cell.label.radians()), std::sin(cell.label.radians())};
    }
    const GradcheckReport rep = gradcheck(m, c.loss, x, target);
    std::printf("%-2s %-8s %-9s %s max_rel_err=%.3g checked=%lld skipped=%lld\n",
                to_string(c.enc).c_str(), to_string(c.act).c_str(),
                to_string(c.loss).c_str(), rep.pass ? "PASS" : "FAIL",
                rep.max_rel_err, static_cast<long long>(rep.checked),
                static_cast<long long>(rep.skipped));
    all_pass = all_pass && rep.pass;
    ++index;
  }
  return all_pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Migration direction estimation by circular regression"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--jobs", g_jobs, "Cap worker threads (0 = library default)");

  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic cell dataset");
  gen->add_option("--out", gen_args.out, "Output directory")->required();
  gen->add_option("--count", gen_args.count, "Number of cells")->capture_default_str();
  gen->add_option("--size", gen_args.size, "Image size in pixels")->capture_default_str();
  gen->add_option("--seed", gen_args.seed, "Master seed")->capture_default_str();

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train one fold and save a checkpoint");
  train->add_option("--data", train_args.data, "Dataset directory")->required();
  train->add_option("--config", train_args.config, "Run config JSON file");
  train->add_option("--out", train_args.out, "Checkpoint path")->required();
  train->add_option("--fold", train_args.fold, "Fold index")->capture_default_str();
  train->add_option("--folds", train_args.kfolds, "Number of folds")->capture_default_str();

  PredictArgs predict_args;
  auto* predict = app.add_subcommand("predict", "Predict the direction of one image");
  predict->add_option("--model", predict_args.model, "Checkpoint path")->required();
  predict->add_option("--image", predict_args.image, "PGM image path")->required();

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  eval->add_option("--model", eval_args.model, "Checkpoint path")->required();
  eval->add_option("--data", eval_args.data, "Dataset directory")->required();
  eval->add_option("--tta", eval_args.tta_n, "Ensemble size for rotation averaging");
  eval->add_option("--seed", eval_args.seed, "Rotation draw seed")->capture_default_str();
  eval->add_option("--batch", eval_args.batch, "Batch size")->capture_default_str();
  eval->add_option("--csv", eval_args.csv, "Write per-image results here");
  eval->add_option("--json", eval_args.json, "Write the summary here");

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "Train all nine configurations across folds");
  sweep->add_option("--data", sweep_args.data, "Dataset directory")->required();
  sweep->add_option("--seed", sweep_args.seed, "Run seed")->capture_default_str();
  sweep->add_option("--epochs", sweep_args.epochs, "Epochs per run")->capture_default_str();
  sweep->add_option("--batch", sweep_args.batch, "Batch size")->capture_default_str();
  sweep->add_option("--multiplier", sweep_args.multiplier,
                    "Training pool size as a multiple of the split")->capture_default_str();
  sweep->add_option("--scale", sweep_args.scale, "Model scale: desk or paper")->capture_default_str();
  sweep->add_option("--folds", sweep_args.kfolds, "Number of folds")->capture_default_str();
  sweep->add_option("--csv", sweep_args.csv, "Write per-fold results here");
  sweep->add_option("--json", sweep_args.json, "Write per-config summaries here");

  BaselineArgs base_args;
  auto* baseline = app.add_subcommand(
      "baseline", "Angular inaccuracy bounds of a quadrant classifier");
  baseline->add_option("--accuracy", base_args.accuracy, "Fraction classified correctly")
      ->required();
  auto* nb = baseline->add_option("--neighbors", base_args.neighbors,
                                  "Error fractions for the two neighbor quadrants")
                 ->expected(2);
  auto* op = baseline->add_option("--opposite", base_args.opposite,
                                  "Error fraction for the opposite quadrant");
  nb->needs(op);
  op->needs(nb);

  GradcheckArgs grad_args;
  auto* grad = app.add_subcommand(
      "gradcheck", "Finite-difference check of every supported configuration");
  grad->add_option("--size", grad_args.size, "Input image size")->capture_default_str();
  grad->add_option("--seed", grad_args.seed, "Sample and init seed")->capture_default_str();

  try {
    app.parse(argc, argv);
    if (*gen) run_gen(gen_args);
    if (*train) return run_train(train_args);
    if (*predict) run_predict(predict_args);
    if (*eval) run_eval(eval_args);
    if (*sweep) run_sweep(sweep_args);
    if (*baseline) {
      base_args.split_given = nb->count() > 0;
      run_baseline(base_args);
    }
    if (*grad) return run_gradcheck(grad_args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const DegenerateDirection& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
