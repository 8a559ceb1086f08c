#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "statenet/dataset.hpp"
#include "statenet/error.hpp"
#include "statenet/image_io.hpp"
#include "statenet/model.hpp"
#include "statenet/optim.hpp"
#include "statenet/trainer.hpp"

using namespace statenet;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
  fs::path p = fs::temp_directory_path() / (std::string("statenet_train_") + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Tiny but separable task: two classes of constant-color 16x16 images
// (red-ish vs blue-ish, a few shades each). 16 is the smallest input the
// one-block base plus three head pools accepts.
fs::path make_color_tree(const char* tag, int per_class) {
  fs::path root = temp_dir(tag);
  fs::create_directories(root / "blue");
  fs::create_directories(root / "red");
  for (int i = 0; i < per_class; ++i) {
    ImageU8 img;
    img.w = 16;
    img.h = 16;
    img.c = 3;
    img.data.resize(16 * 16 * 3);
    const uint8_t shade = static_cast<uint8_t>(150 + 20 * i);
    char name[32];
    std::snprintf(name, sizeof(name), "img_%02d.ppm", i);
    for (size_t j = 0; j < img.data.size(); j += 3) {
      img.data[j] = shade;
      img.data[j + 1] = 30;
      img.data[j + 2] = 20;
    }
    write_image((root / "red" / name).string(), img);
    for (size_t j = 0; j < img.data.size(); j += 3) {
      img.data[j] = 20;
      img.data[j + 1] = 30;
      img.data[j + 2] = shade;
    }
    write_image((root / "blue" / name).string(), img);
  }
  return root;
}

Model tiny_model(uint64_t seed, std::vector<int> frozen = {},
                 float conv_drop = 0.f, float dense_drop = 0.f) {
  ModelSpec spec;
  spec.input = Shape4{1, 16, 16, 3};
  spec.base_blocks = 1;
  spec.frozen_blocks = std::move(frozen);
  spec.class_count = 2;
  spec.conv_dropout = conv_drop;
  spec.dense_dropout = dense_drop;
  return build_model(spec, seed);
}

BatchLoader tiny_loader(const DatasetIndex& idx, uint64_t seed, int batch = 4) {
  LoaderConfig cfg;
  cfg.image_h = 16;
  cfg.image_w = 16;
  cfg.batch_size = batch;
  cfg.seed = seed;
  cfg.workers = 1;
  return BatchLoader(idx, cfg);
}

std::vector<float> all_weights(Model& m) {
  std::vector<float> out;
  for (auto& np : m.named_params())
    out.insert(out.end(), np.param->value.data.begin(), np.param->value.data.end());
  return out;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  return std::string(std::istreambuf_iterator<char>(f), {});
}

}  // namespace

TEST_CASE("event records round trip through JSON Lines") {
  TrainEvent e;
  e.epoch = 7;
  e.split = "val";
  e.loss = 1.25;
  e.accuracy = 0.4375;
  e.wall_ms = 12.5;
  e.lr = 0.001;
  TrainEvent back = event_from_jsonl(event_to_jsonl(e));
  CHECK(back.epoch == 7);
  CHECK(back.split == "val");
  CHECK(back.loss == 1.25);
  CHECK(back.accuracy == 0.4375);
  CHECK(back.wall_ms == 12.5);
  CHECK(back.lr == 0.001);
  CHECK_THROWS_AS(event_from_jsonl("not json"), ValueError);
}

TEST_CASE("fit logs exactly one train and one val event per epoch") {
  const fs::path root = make_color_tree("events", 4);
  DatasetIndex idx = split_dataset(scan(root.string()), {0.5, 0.5, 0.0}, 1);
  Model m = tiny_model(1);
  Optimizer opt(OptimizerConfig{});
  BatchLoader loader = tiny_loader(idx, 1);

  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.determinism = true;
  cfg.event_log_path = (root / "events.jsonl").string();
  FitSummary summary = fit(m, opt, loader, cfg);

  REQUIRE(summary.events.size() == 6);
  const std::vector<TrainEvent> logged = read_event_log(cfg.event_log_path);
  REQUIRE(logged.size() == 6);
  for (int epoch = 1; epoch <= 3; ++epoch) {
    const TrainEvent& tr = logged[static_cast<size_t>(2 * (epoch - 1))];
    const TrainEvent& ev = logged[static_cast<size_t>(2 * (epoch - 1) + 1)];
    CHECK(tr.epoch == epoch);
    CHECK(tr.split == "train");
    CHECK(ev.epoch == epoch);
    CHECK(ev.split == "val");
    CHECK(tr.wall_ms == 0.0);  // determinism zeroes timing
    CHECK(std::isfinite(tr.loss));
    CHECK(ev.accuracy >= 0.0);
    CHECK(ev.accuracy <= 1.0);
  }

  // Every line is a complete JSON object with the pinned keys.
  std::ifstream f(cfg.event_log_path);
  std::string line;
  int lines = 0;
  while (std::getline(f, line)) {
    nlohmann::json j = nlohmann::json::parse(line);
    for (const char* key : {"epoch", "split", "loss", "accuracy", "wall_ms", "lr"})
      CHECK(j.contains(key));
    ++lines;
  }
  CHECK(lines == 6);
  fs::remove_all(root);
}

TEST_CASE("a header line is preserved for readers but skipped by the parser") {
  const fs::path root = make_color_tree("header", 3);
  DatasetIndex idx = split_dataset(scan(root.string()), {0.5, 0.5, 0.0}, 1);
  Model m = tiny_model(2);
  Optimizer opt(OptimizerConfig{});
  BatchLoader loader = tiny_loader(idx, 2);

  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.determinism = true;
  cfg.event_log_path = (root / "hdr.jsonl").string();
  cfg.log_header = R"({"verb":"train","optimizer":"sgd"})";
  fit(m, opt, loader, cfg);

  std::ifstream f(cfg.event_log_path);
  std::string first;
  std::getline(f, first);
  CHECK(first == cfg.log_header);
  CHECK(read_event_log(cfg.event_log_path).size() == 4);
  fs::remove_all(root);
}

TEST_CASE("the same seed reproduces the run byte for byte") {
  const fs::path root = make_color_tree("repro", 4);
  DatasetIndex idx = split_dataset(scan(root.string()), {0.5, 0.5, 0.0}, 3);

  auto run = [&](const char* log_name) {
    Model m = tiny_model(9, {}, 0.25f, 0.5f);  // dropout active
    OptimizerConfig ocfg;
    ocfg.kind = OptKind::adam;
    Optimizer opt(ocfg);
    BatchLoader loader = tiny_loader(idx, 9);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.determinism = true;
    cfg.event_log_path = (root / log_name).string();
    fit(m, opt, loader, cfg);
    return all_weights(m);
  };

  const auto w1 = run("a.jsonl");
  const auto w2 = run("b.jsonl");
  CHECK(w1 == w2);
  CHECK(file_bytes(root / "a.jsonl") == file_bytes(root / "b.jsonl"));
  fs::remove_all(root);
}

TEST_CASE("zero learning rate trains without moving a single bit") {
  const fs::path root = make_color_tree("zerolr", 3);
  DatasetIndex idx = split_dataset(scan(root.string()), {0.5, 0.5, 0.0}, 1);
  Model m = tiny_model(4);
  const auto before = all_weights(m);

  OptimizerConfig ocfg;
  ocfg.kind = OptKind::adam;
  ocfg.lr = 0.0;
  Optimizer opt(ocfg);
  BatchLoader loader = tiny_loader(idx, 4);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.determinism = true;
  fit(m, opt, loader, cfg);

  CHECK(all_weights(m) == before);
  fs::remove_all(root);
}

TEST_CASE("frozen base parameters stay put while the head learns") {
  const fs::path root = make_color_tree("frozen", 3);
  DatasetIndex idx = split_dataset(scan(root.string()), {0.5, 0.5, 0.0}, 1);
  Model m = tiny_model(5, {1});

  std::vector<float> base_before, head_before;
  for (auto& np : m.named_params()) {
    auto& dst = np.block > 0 ? base_before : head_before;
    dst.insert(dst.end(), np.param->value.data.begin(), np.param->value.data.end());
  }

  Optimizer opt(OptimizerConfig{});
  BatchLoader loader = tiny_loader(idx, 5);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.determinism = true;
  fit(m, opt, loader, cfg);

  std::vector<float> base_after, head_after;
  for (auto& np : m.named_params()) {
    auto& dst = np.block > 0 ? base_after : head_after;
    dst.insert(dst.end(), np.param->value.data.begin(), np.param->value.data.end());
  }
  CHECK(base_before == base_after);
  CHECK(head_before != head_after);
  fs::remove_all(root);
}

TEST_CASE("evaluate is pure and repeatable") {
  const fs::path root = make_color_tree("purity", 4);
  DatasetIndex idx = split_dataset(scan(root.string()), {0.5, 0.25, 0.25}, 1);
  Model m = tiny_model(6, {}, 0.25f, 0.5f);  // dropout present but inactive in eval
  BatchLoader loader = tiny_loader(idx, 6);

  const auto before = all_weights(m);
  TrainEvent a = evaluate(m, loader, Split::val, false);
  TrainEvent b = evaluate(m, loader, Split::val, false);
  CHECK(all_weights(m) == before);
  CHECK(a.loss == b.loss);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.split == "val");
  CHECK(a.wall_ms == 0.0);

  // An untrained two-class model should sit near the ln(2) coin-flip loss.
  CHECK(a.loss > 0.3);
  CHECK(a.loss < 1.4);
  fs::remove_all(root);
}

TEST_CASE("adam memorizes a two-image dataset") {
  const fs::path root = make_color_tree("memorize", 1);
  DatasetIndex idx = split_dataset(scan(root.string()), {1.0, 0.0, 0.0}, 1);
  Model m = tiny_model(7);
  OptimizerConfig ocfg;
  ocfg.kind = OptKind::adam;
  Optimizer opt(ocfg);
  BatchLoader loader = tiny_loader(idx, 7, 2);

  std::vector<double> losses;
  for (int epoch = 1; epoch <= 60; ++epoch) {
    losses.push_back(train_epoch(m, opt, loader, epoch, false).loss);
  }

  int drops = 0;
  for (int i = 1; i <= 20; ++i) drops += losses[static_cast<size_t>(i)] <
                                         losses[static_cast<size_t>(i - 1)];
  CHECK(drops >= 16);  // early descent is allowed a few adaptive wobbles
  CHECK(losses.back() < 0.01);

  TrainEvent final_eval = evaluate(m, loader, Split::train, false);
  CHECK(final_eval.accuracy == 1.0);
  fs::remove_all(root);
}

TEST_CASE("non-finite loss aborts naming the batch") {
  const fs::path root = make_color_tree("abort", 2);
  DatasetIndex idx = split_dataset(scan(root.string()), {1.0, 0.0, 0.0}, 1);
  Model m = tiny_model(8);
  for (auto& np : m.named_params()) {
    if (np.layer_name == "head_dense2")
      np.param->value.data[0] = std::numeric_limits<float>::quiet_NaN();
  }
  Optimizer opt(OptimizerConfig{});
  BatchLoader loader = tiny_loader(idx, 8);

  try {
    train_epoch(m, opt, loader, 3, false);
    FAIL("expected TrainAbort");
  } catch (const TrainAbort& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch 3") != std::string::npos);
    CHECK(msg.find("batch 0") != std::string::npos);
  }
  fs::remove_all(root);
}

TEST_CASE("checkpoints appear on schedule plus a final one") {
  const fs::path root = make_color_tree("ckpt", 3);
  DatasetIndex idx = split_dataset(scan(root.string()), {0.5, 0.5, 0.0}, 1);
  Model m = tiny_model(10);
  Optimizer opt(OptimizerConfig{});
  BatchLoader loader = tiny_loader(idx, 10);

  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.determinism = true;
  cfg.checkpoint_every = 2;
  cfg.checkpoint_prefix = (root / "run").string();
  FitSummary summary = fit(m, opt, loader, cfg);

  for (const char* tag : {"-epoch2", "-epoch4", "-final"}) {
    CHECK(fs::exists(root / ("run" + std::string(tag) + ".manifest.json")));
    CHECK(fs::exists(root / ("run" + std::string(tag) + ".weights.bin")));
  }
  CHECK_FALSE(fs::exists(root / "run-epoch1.manifest.json"));
  CHECK_FALSE(fs::exists(root / "run-epoch3.manifest.json"));

  // -epoch4 and -final are snapshots of the same state.
  CHECK(file_bytes(root / "run-epoch4.weights.bin") ==
        file_bytes(root / "run-final.weights.bin"));

  // Best val is the earliest maximum over the val events.
  double best = -1;
  int best_epoch = 0;
  for (const auto& e : summary.events) {
    if (e.split == "val" && e.accuracy > best) {
      best = e.accuracy;
      best_epoch = e.epoch;
    }
  }
  CHECK(summary.best_val_accuracy == best);
  CHECK(summary.best_epoch == best_epoch);
  fs::remove_all(root);
}

TEST_CASE("predict ranks every class with descending probabilities") {
  const fs::path root = make_color_tree("predict", 2);
  DatasetIndex idx = split_dataset(scan(root.string()), {1.0, 0.0, 0.0}, 1);
  Model m = tiny_model(11);
  LoaderConfig lcfg;
  lcfg.image_h = 16;
  lcfg.image_w = 16;

  const std::string img = idx.samples.front().path;
  auto ranked = predict(m, idx.classes, img, lcfg);
  REQUIRE(ranked.size() == 2);
  CHECK(ranked[0].second >= ranked[1].second);
  CHECK(ranked[0].second + ranked[1].second == doctest::Approx(1.0).epsilon(1e-6));
  CHECK((ranked[0].first == "blue" || ranked[0].first == "red"));
  fs::remove_all(root);
}
