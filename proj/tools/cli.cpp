#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "statenet/augment.hpp"
#include "statenet/dataset.hpp"
#include "statenet/error.hpp"
#include "statenet/image_io.hpp"
#include "statenet/metrics.hpp"
#include "statenet/model.hpp"
#include "statenet/optim.hpp"
#include "statenet/shapes.hpp"
#include "statenet/trainer.hpp"

namespace statenet::cli {

namespace {

uint64_t env_seed_default() {
  const char* s = std::getenv("STATENET_SEED");
  if (!s || !*s) return 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (end == s || *end != '\0') {
    std::cerr << "warning: ignoring unparseable STATENET_SEED '" << s << "'\n";
    return 0;
  }
  return v;
}

// --- Shared flag bundles -------------------------------------------------

struct ModelFlags {
  int image_size = 150;
  int base_blocks = 4;
  std::string frozen_blocks = "all";
  float conv_dropout = 0.25f;
  float dense_dropout = 0.5f;
};

void add_model_flags(CLI::App* cmd, ModelFlags& mf) {
  cmd->add_option("--image-size", mf.image_size, "Square input edge length")
      ->capture_default_str();
  cmd->add_option("--base-blocks", mf.base_blocks, "Retained VGG19 base blocks (1-5)")
      ->capture_default_str();
  cmd->add_option("--frozen-blocks", mf.frozen_blocks,
                  "Base blocks excluded from updates: 'all', 'none' or a list like 1,2")
      ->capture_default_str();
  cmd->add_option("--conv-dropout", mf.conv_dropout,
                  "Dropout after each head conv group (0 disables)")
      ->capture_default_str();
  cmd->add_option("--dense-dropout", mf.dense_dropout,
                  "Dropout after the 512 dense layer (0 disables)")
      ->capture_default_str();
}

std::vector<int> parse_frozen(const std::string& s, int base_blocks) {
  if (s == "all") {
    std::vector<int> all(static_cast<size_t>(base_blocks));
    for (int b = 1; b <= base_blocks; ++b) all[static_cast<size_t>(b - 1)] = b;
    return all;
  }
  if (s == "none" || s.empty()) return {};
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stoi(tok));
    } catch (...) {
      throw ValueError("cannot parse --frozen-blocks entry '" + tok + "'");
    }
  }
  return out;
}

ModelSpec to_spec(const ModelFlags& mf, int class_count) {
  ModelSpec spec;
  spec.input = Shape4{1, mf.image_size, mf.image_size, 3};
  spec.base_blocks = mf.base_blocks;
  spec.frozen_blocks = parse_frozen(mf.frozen_blocks, mf.base_blocks);
  spec.class_count = class_count;
  spec.conv_dropout = mf.conv_dropout;
  spec.dense_dropout = mf.dense_dropout;
  return spec;
}

struct AugmentFlags {
  float rotation_range = 40.0f;
  float shear_range = 0.2f;
  float zoom_range = 0.2f;
  float height_shift = 0.2f;
  float width_shift = 0.2f;
  float rescale = 1.0f / 255.0f;
  bool no_flip = false;
  bool no_augment = false;
};

void add_augment_flags(CLI::App* cmd, AugmentFlags& af) {
  cmd->add_option("--rotation-range", af.rotation_range, "Rotation range, degrees")
      ->capture_default_str();
  cmd->add_option("--shear-range", af.shear_range, "Shear intensity, radians")
      ->capture_default_str();
  cmd->add_option("--zoom-range", af.zoom_range, "Zoom fraction around 1")
      ->capture_default_str();
  cmd->add_option("--height-shift", af.height_shift, "Vertical shift, fraction of height")
      ->capture_default_str();
  cmd->add_option("--width-shift", af.width_shift, "Horizontal shift, fraction of width")
      ->capture_default_str();
  cmd->add_option("--rescale", af.rescale, "Pixel scale factor applied after transforms")
      ->capture_default_str();
  cmd->add_flag("--no-flip", af.no_flip, "Disable horizontal flips");
  cmd->add_flag("--no-augment", af.no_augment,
                "Disable all geometric augmentation (rescale still applies)");
}

AugmentConfig to_augment(const AugmentFlags& af) {
  AugmentConfig cfg;
  cfg.rotation_range = af.rotation_range;
  cfg.shear_range = af.shear_range;
  cfg.zoom_range = af.zoom_range;
  cfg.height_shift_range = af.height_shift;
  cfg.width_shift_range = af.width_shift;
  cfg.rescale = af.rescale;
  cfg.horizontal_flip = !af.no_flip;
  if (af.no_augment) {
    cfg.rotation_range = 0;
    cfg.shear_range = 0;
    cfg.zoom_range = 0;
    cfg.height_shift_range = 0;
    cfg.width_shift_range = 0;
    cfg.horizontal_flip = false;
  }
  return cfg;
}

nlohmann::json augment_to_json(const AugmentConfig& a) {
  nlohmann::json j;
  j["rotation_range"] = a.rotation_range;
  j["shear_range"] = a.shear_range;
  j["zoom_range"] = a.zoom_range;
  j["height_shift_range"] = a.height_shift_range;
  j["width_shift_range"] = a.width_shift_range;
  j["horizontal_flip"] = a.horizontal_flip;
  j["rescale"] = a.rescale;
  return j;
}

std::array<double, 3> parse_fractions(const std::string& s) {
  std::array<double, 3> out{};
  std::stringstream ss(s);
  std::string tok;
  size_t i = 0;
  while (std::getline(ss, tok, ',')) {
    if (i >= 3) throw ValueError("--fractions needs exactly three values");
    try {
      out[i++] = std::stod(tok);
    } catch (...) {
      throw ValueError("cannot parse fraction '" + tok + "'");
    }
  }
  if (i != 3) throw ValueError("--fractions needs exactly three values");
  return out;
}

// --- Verb state ------------------------------------------------------------

struct SplitArgs {
  std::string data;
  std::string fractions = "0.682,0.148,0.170";
  std::string out;
  uint64_t seed = 0;
};

struct TrainArgs {
  std::string split_file;
  std::string events;
  std::string checkpoint;
  int checkpoint_every = 0;
  std::string optimizer = "adam";
  double lr = 0.001;
  double beta1 = 0.9, beta2 = 0.999, rho = 0.9, eps = 1e-8, momentum = 0.0;
  int epochs = 50;
  int batch_size = 32;
  uint64_t seed = 0;
  bool deterministic = false;
  int workers = 0;
  bool no_cache = false;
  bool augment_eval = false;
  std::string init;
  bool allow_partial = false;
  ModelFlags model;
  AugmentFlags augment;
};

struct EvalArgs {
  std::string split_file;
  std::string weights;
  std::string set = "test";
  int batch_size = 32;
  uint64_t seed = 0;
  int workers = 0;
  bool no_cache = false;
  bool augment_eval = false;
  bool allow_partial = false;
  ModelFlags model;
  AugmentFlags augment;
};

struct PredictArgs {
  std::string weights;
  std::string image;
  std::string split_file;
  std::string classes_csv;
  float rescale = 1.0f / 255.0f;
  uint64_t seed = 0;
  bool allow_partial = false;
  ModelFlags model;
};

struct PreviewArgs {
  std::string image;
  std::string out = "preview";
  int count = 8;
  int image_size = 0;  // 0 keeps the native size
  uint64_t seed = 0;
  AugmentFlags augment;
};

struct PlotArgs {
  std::vector<std::string> logs;
  std::string metric = "accuracy";
  std::string split = "val";
  double smooth_alpha = 0.5;
  std::string out;
};

struct ConfusionArgs : EvalArgs {
  std::string csv;
};

struct ExportArgs {
  std::string out;
  std::string weights;
  std::string split_file;
  int class_count = 11;
  uint64_t seed = 0;
  bool allow_partial = false;
  ModelFlags model;
};

// --- Handlers ----------------------------------------------------------

Model build_from_flags(const ModelFlags& mf, int class_count, uint64_t seed,
                       const std::string& weights, bool allow_partial) {
  Model model = build_model(to_spec(mf, class_count), seed);
  if (!weights.empty()) load_weights(model, weights, allow_partial);
  return model;
}

int do_split(const SplitArgs& a) {
  DatasetIndex index = scan(a.data);
  index = split_dataset(std::move(index), parse_fractions(a.fractions), a.seed);
  save_split(index, a.out);
  nlohmann::json j;
  j["classes"] = index.classes;
  j["samples"] = index.samples.size();
  j["train"] = index.count(Split::train);
  j["val"] = index.count(Split::val);
  j["test"] = index.count(Split::test);
  j["out"] = a.out;
  std::cout << j.dump() << "\n";
  return 0;
}

LoaderConfig loader_config_for(const ModelFlags& mf, const AugmentFlags& af,
                               int batch_size, uint64_t seed, int workers,
                               bool no_cache, bool augment_eval) {
  LoaderConfig lc;
  lc.image_h = mf.image_size;
  lc.image_w = mf.image_size;
  lc.batch_size = batch_size;
  lc.augment = to_augment(af);
  lc.augment_eval = augment_eval;
  lc.seed = seed;
  lc.workers = workers;
  lc.cache = !no_cache;
  return lc;
}

int do_train(const TrainArgs& a) {
  DatasetIndex index = load_split(a.split_file);
  Model model = build_from_flags(a.model, index.class_count(), a.seed, a.init,
                                 a.allow_partial);

  OptimizerConfig ocfg;
  ocfg.kind = parse_optimizer(a.optimizer);
  ocfg.lr = a.lr;
  ocfg.beta1 = a.beta1;
  ocfg.beta2 = a.beta2;
  ocfg.rho = a.rho;
  ocfg.eps = a.eps;
  ocfg.momentum = a.momentum;
  Optimizer opt(ocfg);

  BatchLoader loader(index, loader_config_for(a.model, a.augment, a.batch_size,
                                              a.seed, a.workers, a.no_cache,
                                              a.augment_eval));

  TrainConfig tcfg;
  tcfg.epochs = a.epochs;
  tcfg.batch_size = a.batch_size;
  tcfg.optimizer = ocfg;
  tcfg.seed = a.seed;
  tcfg.determinism = a.deterministic;
  tcfg.checkpoint_every = a.checkpoint_every;
  tcfg.event_log_path = a.events;
  tcfg.checkpoint_prefix = a.checkpoint;

  nlohmann::json header;
  header["config"] = {
      {"verb", "train"},
      {"split", a.split_file},
      {"optimizer", a.optimizer},
      {"lr", a.lr},
      {"epochs", a.epochs},
      {"batch_size", a.batch_size},
      {"image_size", a.model.image_size},
      {"base_blocks", a.model.base_blocks},
      {"frozen_blocks", parse_frozen(a.model.frozen_blocks, a.model.base_blocks)},
      {"conv_dropout", a.model.conv_dropout},
      {"dense_dropout", a.model.dense_dropout},
      {"seed", a.seed},
      {"deterministic", a.deterministic},
      {"augment", augment_to_json(to_augment(a.augment))},
      {"augment_eval", a.augment_eval},
      {"init", a.init},
      {"classes", index.classes},
  };
  tcfg.log_header = header.dump();

  const FitSummary summary = fit(model, opt, loader, tcfg);

  nlohmann::json j;
  j["best_val_accuracy"] = summary.best_val_accuracy;
  j["best_epoch"] = summary.best_epoch;
  j["epochs"] = a.epochs;
  if (!a.checkpoint.empty()) j["checkpoint"] = a.checkpoint + "-final";
  if (!a.events.empty()) j["events"] = a.events;
  std::cout << j.dump() << "\n";
  return 0;
}

int do_eval(const EvalArgs& a) {
  DatasetIndex index = load_split(a.split_file);
  Model model = build_from_flags(a.model, index.class_count(), a.seed, a.weights,
                                 a.allow_partial);
  BatchLoader loader(index, loader_config_for(a.model, a.augment, a.batch_size,
                                              a.seed, a.workers, a.no_cache,
                                              a.augment_eval));
  const Split split = parse_split(a.set);
  const TrainEvent e = evaluate(model, loader, split);
  nlohmann::json j;
  j["split"] = a.set;
  j["loss"] = e.loss;
  j["accuracy"] = e.accuracy;
  j["samples"] = index.count(split);
  std::cout << j.dump() << "\n";
  return 0;
}

int do_predict(const PredictArgs& a) {
  std::vector<std::string> classes;
  if (!a.split_file.empty()) {
    classes = load_split(a.split_file).classes;
  } else if (!a.classes_csv.empty()) {
    std::stringstream ss(a.classes_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) classes.push_back(tok);
  } else {
    throw ValueError("predict needs --split or --classes for class names");
  }
  Model model = build_from_flags(a.model, static_cast<int>(classes.size()), a.seed,
                                 a.weights, a.allow_partial);
  LoaderConfig lc;
  lc.image_h = a.model.image_size;
  lc.image_w = a.model.image_size;
  lc.augment = AugmentConfig::none();
  lc.augment.rescale = a.rescale;
  const auto ranked = predict(model, classes, a.image, lc);
  auto arr = nlohmann::json::array();
  for (const auto& [name, p] : ranked) {
    arr.push_back({{"class", name}, {"probability", p}});
  }
  std::cout << arr.dump() << "\n";
  return 0;
}

int do_preview(const PreviewArgs& a) {
  Tensor img = image_to_tensor(decode_image(a.image));
  if (a.image_size > 0) img = resize_bilinear(img, a.image_size, a.image_size);
  AugmentConfig cfg = to_augment(a.augment);
  cfg.rescale = 1.0f;  // previews stay in display range
  for (int i = 0; i < a.count; ++i) {
    Rng rng = Rng(a.seed).derive(0x70726576ULL, static_cast<uint64_t>(i));
    const Tensor aug = augment_image(img, cfg, rng, true);
    const std::string path = a.out + "_" + std::to_string(i) + ".ppm";
    write_image(path, tensor_to_image(aug));
    std::cout << path << "\n";
  }
  return 0;
}

int do_plot(const PlotArgs& a) {
  std::vector<Series> series;
  for (const auto& path : a.logs) {
    const auto events = read_event_log(path);
    const std::string run = std::filesystem::path(path).stem().string();
    series.push_back(series_from_events(events, run, a.metric, a.split));
  }
  plot(series, a.out, a.smooth_alpha);
  std::cout << a.out << "\n";
  return 0;
}

int do_confusion(const ConfusionArgs& a) {
  DatasetIndex index = load_split(a.split_file);
  Model model = build_from_flags(a.model, index.class_count(), a.seed, a.weights,
                                 a.allow_partial);
  BatchLoader loader(index, loader_config_for(a.model, a.augment, a.batch_size,
                                              a.seed, a.workers, a.no_cache,
                                              a.augment_eval));
  const Confusion c = confusion(model, loader, parse_split(a.set));
  std::cout << to_text(c);
  if (!a.csv.empty()) {
    std::ofstream f(a.csv, std::ios::binary);
    if (!f) throw IoError("cannot write " + a.csv);
    f << "true\\pred";
    for (const auto& n : c.classes) f << "," << n;
    f << "\n";
    for (size_t i = 0; i < c.classes.size(); ++i) {
      f << c.classes[i];
      for (size_t j = 0; j < c.classes.size(); ++j) f << "," << c.counts[i][j];
      f << "\n";
    }
  }
  return 0;
}

int do_export(const ExportArgs& a) {
  int class_count = a.class_count;
  if (!a.split_file.empty()) {
    class_count = load_split(a.split_file).class_count();
  }
  Model model = build_from_flags(a.model, class_count, a.seed, a.weights,
                                 a.allow_partial);
  save_weights(model, a.out);
  nlohmann::json j;
  j["out"] = a.out;
  j["manifest"] = a.out + ".manifest.json";
  j["blob"] = a.out + ".weights.bin";
  std::cout << j.dump() << "\n";
  return 0;
}

// --- Config file injection ---------------------------------------------

// Turns {"lr": 0.01, "no-flip": true} into command-line tokens. Inserted
// before the user's own flags, so explicit flags win (options take the
// last occurrence).
std::vector<std::string> config_tokens(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read config file " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValueError("malformed config file " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ValueError("config file " + path + " must be a JSON object");

  std::vector<std::string> tokens;
  for (const auto& [key, val] : j.items()) {
    if (val.is_boolean()) {
      if (val.get<bool>()) tokens.push_back("--" + key);
      continue;
    }
    std::string s;
    if (val.is_string()) {
      s = val.get<std::string>();
    } else if (val.is_array()) {
      for (const auto& e : val) {
        if (!s.empty()) s += ",";
        s += e.is_string() ? e.get<std::string>() : e.dump();
      }
    } else {
      s = val.dump();
    }
    tokens.push_back("--" + key + "=" + s);
  }
  return tokens;
}

}  // namespace

int run(int argc, const char* const* argv) {
  const uint64_t default_seed = env_seed_default();

  CLI::App app{"Cooking-state classifier: data prep, training, evaluation and plots"};
  app.require_subcommand(1);

  SplitArgs split_args;
  split_args.seed = default_seed;
  auto* c_split = app.add_subcommand("split", "Index a directory-per-class dataset and assign train/val/test");
  c_split->add_option("--data", split_args.data, "Dataset root: <root>/<class>/<images>")
      ->required();
  c_split->add_option("--fractions", split_args.fractions, "train,val,test fractions")
      ->capture_default_str();
  c_split->add_option("--seed", split_args.seed, "Shuffle seed")->capture_default_str();
  c_split->add_option("--out", split_args.out, "Split file to write")->required();

  TrainArgs train_args;
  train_args.seed = default_seed;
  auto* c_train = app.add_subcommand("train", "Train the modified VGG19 on a split");
  c_train->add_option("--split", train_args.split_file, "Split file from 'split'")
      ->required();
  c_train->add_option("--optimizer", train_args.optimizer,
                      "sgd, adagrad, rmsprop, adam, adamax or nadam")
      ->capture_default_str();
  c_train->add_option("--lr", train_args.lr, "Learning rate")->capture_default_str();
  c_train->add_option("--beta1", train_args.beta1, "Adam-family first-moment decay")
      ->capture_default_str();
  c_train->add_option("--beta2", train_args.beta2, "Adam-family second-moment decay")
      ->capture_default_str();
  c_train->add_option("--rho", train_args.rho, "RMSprop decay")->capture_default_str();
  c_train->add_option("--eps", train_args.eps, "Denominator epsilon")
      ->capture_default_str();
  c_train->add_option("--momentum", train_args.momentum, "SGD momentum")
      ->capture_default_str();
  c_train->add_option("--epochs", train_args.epochs, "Training epochs")
      ->capture_default_str();
  c_train->add_option("--batch-size", train_args.batch_size, "Batch size")
      ->capture_default_str();
  c_train->add_option("--seed", train_args.seed, "Master seed")->capture_default_str();
  c_train->add_flag("--deterministic", train_args.deterministic,
                    "Zero wall-clock fields so logs are byte-comparable");
  c_train->add_option("--workers", train_args.workers,
                      "Ingest worker threads (0 = library default)")
      ->capture_default_str();
  c_train->add_flag("--no-cache", train_args.no_cache,
                    "Do not keep decoded images in memory");
  c_train->add_flag("--augment-eval", train_args.augment_eval,
                    "Apply the affine pipeline to val/test too");
  c_train->add_option("--events", train_args.events, "Event log path (JSON Lines)");
  c_train->add_option("--checkpoint", train_args.checkpoint, "Checkpoint path prefix");
  c_train->add_option("--checkpoint-every", train_args.checkpoint_every,
                      "Checkpoint period in epochs (0 = final only)")
      ->capture_default_str();
  c_train->add_option("--init", train_args.init, "Weight prefix to load before training");
  c_train->add_flag("--allow-partial", train_args.allow_partial,
                    "Accept weight files missing some parameters");
  add_model_flags(c_train, train_args.model);
  add_augment_flags(c_train, train_args.augment);

  EvalArgs eval_args;
  eval_args.seed = default_seed;
  auto* c_eval = app.add_subcommand("eval", "Evaluate a checkpoint on a split");
  c_eval->add_option("--split", eval_args.split_file, "Split file")->required();
  c_eval->add_option("--weights", eval_args.weights, "Weight prefix to load")->required();
  c_eval->add_option("--set", eval_args.set, "train, val or test")->capture_default_str();
  c_eval->add_option("--batch-size", eval_args.batch_size, "Batch size")
      ->capture_default_str();
  c_eval->add_option("--seed", eval_args.seed, "Model build seed")->capture_default_str();
  c_eval->add_option("--workers", eval_args.workers, "Ingest worker threads")
      ->capture_default_str();
  c_eval->add_flag("--no-cache", eval_args.no_cache, "Do not cache decoded images");
  c_eval->add_flag("--augment-eval", eval_args.augment_eval,
                   "Apply the affine pipeline during evaluation");
  c_eval->add_flag("--allow-partial", eval_args.allow_partial,
                   "Accept weight files missing some parameters");
  add_model_flags(c_eval, eval_args.model);
  add_augment_flags(c_eval, eval_args.augment);

  PredictArgs predict_args;
  predict_args.seed = default_seed;
  auto* c_predict = app.add_subcommand("predict", "Classify one image");
  c_predict->add_option("--weights", predict_args.weights, "Weight prefix")->required();
  c_predict->add_option("--image", predict_args.image, "Image to classify")->required();
  c_predict->add_option("--split", predict_args.split_file,
                        "Split file supplying class names");
  c_predict->add_option("--classes", predict_args.classes_csv,
                        "Comma-separated class names (alternative to --split)");
  c_predict->add_option("--rescale", predict_args.rescale, "Pixel scale factor")
      ->capture_default_str();
  c_predict->add_option("--seed", predict_args.seed, "Model build seed")
      ->capture_default_str();
  c_predict->add_flag("--allow-partial", predict_args.allow_partial,
                      "Accept weight files missing some parameters");
  add_model_flags(c_predict, predict_args.model);

  PreviewArgs preview_args;
  preview_args.seed = default_seed;
  auto* c_preview =
      app.add_subcommand("augment-preview", "Write augmented copies of one image");
  c_preview->add_option("--image", preview_args.image, "Source image")->required();
  c_preview->add_option("--out", preview_args.out, "Output path prefix")
      ->capture_default_str();
  c_preview->add_option("--count", preview_args.count, "Number of samples")
      ->capture_default_str();
  c_preview->add_option("--image-size", preview_args.image_size,
                        "Resize edge length (0 keeps native size)")
      ->capture_default_str();
  c_preview->add_option("--seed", preview_args.seed, "Sampling seed")
      ->capture_default_str();
  add_augment_flags(c_preview, preview_args.augment);

  PlotArgs plot_args;
  auto* c_plot = app.add_subcommand("plot", "Render metric curves from event logs");
  c_plot->add_option("logs", plot_args.logs, "Event log files")->required()->expected(-1);
  c_plot->add_option("--metric", plot_args.metric, "loss or accuracy")
      ->capture_default_str();
  c_plot->add_option("--split", plot_args.split, "train or val series")
      ->capture_default_str();
  c_plot->add_option("--smooth", plot_args.smooth_alpha, "EMA smoothing alpha")
      ->capture_default_str();
  c_plot->add_option("--out", plot_args.out, "SVG output path")->required();

  ConfusionArgs conf_args;
  conf_args.seed = default_seed;
  auto* c_conf = app.add_subcommand("confusion", "Confusion matrix of a checkpoint");
  c_conf->add_option("--split", conf_args.split_file, "Split file")->required();
  c_conf->add_option("--weights", conf_args.weights, "Weight prefix")->required();
  c_conf->add_option("--set", conf_args.set, "train, val or test")->capture_default_str();
  c_conf->add_option("--batch-size", conf_args.batch_size, "Batch size")
      ->capture_default_str();
  c_conf->add_option("--seed", conf_args.seed, "Model build seed")->capture_default_str();
  c_conf->add_option("--workers", conf_args.workers, "Ingest worker threads")
      ->capture_default_str();
  c_conf->add_flag("--no-cache", conf_args.no_cache, "Do not cache decoded images");
  c_conf->add_flag("--augment-eval", conf_args.augment_eval,
                   "Apply the affine pipeline during evaluation");
  c_conf->add_flag("--allow-partial", conf_args.allow_partial,
                   "Accept weight files missing some parameters");
  c_conf->add_option("--csv", conf_args.csv, "Also write counts as CSV");
  add_model_flags(c_conf, conf_args.model);
  add_augment_flags(c_conf, conf_args.augment);

  ExportArgs export_args;
  export_args.seed = default_seed;
  auto* c_export = app.add_subcommand(
      "export-weights", "Write a weight container (fresh init or re-saved checkpoint)");
  c_export->add_option("--out", export_args.out, "Output weight prefix")->required();
  c_export->add_option("--weights", export_args.weights,
                       "Existing weight prefix to load first");
  c_export->add_option("--split", export_args.split_file,
                       "Split file supplying the class count");
  c_export->add_option("--class-count", export_args.class_count,
                       "Output classes when no --split is given")
      ->capture_default_str();
  c_export->add_option("--seed", export_args.seed, "Initialization seed")
      ->capture_default_str();
  c_export->add_flag("--allow-partial", export_args.allow_partial,
                     "Accept weight files missing some parameters");
  add_model_flags(c_export, export_args.model);

  // Every verb takes --config; its values are injected as tokens below.
  std::string config_path;
  for (auto* cmd : app.get_subcommands({})) {
    cmd->add_option("--config", config_path,
                    "JSON object of flag defaults (long names as keys); explicit flags win");
    for (auto* opt : cmd->get_options()) {
      if (opt->get_expected_min() >= 1 && opt->get_positional() == false &&
          opt->get_expected_max() == 1) {
        opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
      }
    }
  }

  // Assemble argv, splicing config-file tokens right after the verb so the
  // user's explicit flags override them.
  std::vector<std::string> tokens;
  for (int i = 0; i < argc; ++i) tokens.emplace_back(argv[i]);
  try {
    for (size_t i = 1; i + 1 <= tokens.size(); ++i) {
      std::string value;
      if (tokens[i] == "--config" && i + 1 < tokens.size()) {
        value = tokens[i + 1];
      } else if (tokens[i].rfind("--config=", 0) == 0) {
        value = tokens[i].substr(9);
      } else {
        continue;
      }
      const auto injected = config_tokens(value);
      tokens.insert(tokens.begin() + 2, injected.begin(), injected.end());
      break;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  std::vector<const char*> cargv;
  cargv.reserve(tokens.size());
  for (const auto& t : tokens) cargv.push_back(t.c_str());

  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::ParseError& e) {
    // exit() prints contextual help for help requests (code 0) and the
    // error message otherwise; fold every real parse failure to 2.
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (c_split->parsed()) return do_split(split_args);
    if (c_train->parsed()) return do_train(train_args);
    if (c_eval->parsed()) return do_eval(eval_args);
    if (c_predict->parsed()) return do_predict(predict_args);
    if (c_preview->parsed()) return do_preview(preview_args);
    if (c_plot->parsed()) return do_plot(plot_args);
    if (c_conf->parsed()) return do_confusion(conf_args);
    if (c_export->parsed()) return do_export(export_args);
    std::cerr << "error: no verb given; run with --help\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace statenet::cli
