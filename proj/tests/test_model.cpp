#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "statenet/error.hpp"
#include "statenet/model.hpp"
#include "statenet/optim.hpp"
#include "statenet/rng.hpp"

using namespace statenet;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
  fs::path p = fs::temp_directory_path() / (std::string("statenet_model_") + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<float> all_weights(Model& m) {
  std::vector<float> out;
  for (auto& np : m.named_params()) {
    out.insert(out.end(), np.param->value.data.begin(), np.param->value.data.end());
  }
  return out;
}

}  // namespace

TEST_CASE("four-block base at 150x150 walks the documented shape chain") {
  Rng rng(1);
  Model base = build_vgg19_base(Shape4{1, 150, 150, 3}, 4, rng);
  Model model = assemble_modified_head(std::move(base), 11, rng);

  // Spatial extent per pool: 150 -> 75 -> 37 -> 18 -> 9 in the base,
  // then 9 -> 4 -> 2 -> 1 through the head.
  struct Want {
    const char* name;
    std::vector<int> shape;
  };
  const Want wants[] = {
      {"block1_pool", {75, 75, 64}},   {"block2_pool", {37, 37, 128}},
      {"block3_pool", {18, 18, 256}},  {"block4_pool", {9, 9, 512}},
      {"head_pool1", {4, 4, 32}},      {"head_pool2", {2, 2, 64}},
      {"head_pool3", {1, 1, 64}},      {"head_flatten", {64}},
      {"head_dense1", {512}},          {"head_dense2", {11}},
  };

  const auto chain = model.shape_chain();
  REQUIRE(chain.size() == model.layer_count());
  for (const auto& want : wants) {
    bool found = false;
    for (size_t i = 0; i < model.layer_count(); ++i) {
      if (model.entry(i).name == want.name) {
        CHECK(chain[i] == want.shape);
        found = true;
        break;
      }
    }
    CHECK_MESSAGE(found, want.name);
  }
  CHECK(model.output_shape() == std::vector<int>{11});
}

TEST_CASE("base block layer counts follow the VGG19 recipe") {
  Rng rng(2);
  Model base = build_vgg19_base(Shape4{1, 150, 150, 3}, 5, rng);
  // Per block: convs + as many relus + one pool.
  const int convs[] = {2, 2, 4, 4, 4};
  int conv_seen[6] = {0};
  int pool_seen[6] = {0};
  for (size_t i = 0; i < base.layer_count(); ++i) {
    const auto& e = base.entry(i);
    const std::string kind = e.layer->kind();
    if (kind == "conv2d") ++conv_seen[e.block];
    if (kind == "maxpool2d") ++pool_seen[e.block];
  }
  for (int b = 1; b <= 5; ++b) {
    CHECK(conv_seen[b] == convs[b - 1]);
    CHECK(pool_seen[b] == 1);
  }
  CHECK(base.base_block_count() == 5);
}

TEST_CASE("head refuses a base whose output is spatially too small") {
  Rng rng(3);
  // Five blocks at 64x64 leave a 2x2 map; the head needs >= 8.
  Model base = build_vgg19_base(Shape4{1, 64, 64, 3}, 5, rng);
  CHECK_THROWS_AS(assemble_modified_head(std::move(base), 11, rng), ShapeError);
}

TEST_CASE("model spec validation") {
  Rng rng(4);
  CHECK_THROWS_AS(build_vgg19_base(Shape4{1, 150, 150, 3}, 0, rng), ValueError);
  CHECK_THROWS_AS(build_vgg19_base(Shape4{1, 150, 150, 3}, 6, rng), ValueError);
  CHECK_THROWS_AS(build_vgg19_base(Shape4{1, 0, 150, 3}, 4, rng), ValueError);
  Model base = build_vgg19_base(Shape4{1, 150, 150, 3}, 1, rng);
  CHECK_THROWS_AS(assemble_modified_head(std::move(base), 1, rng), ValueError);
}

TEST_CASE("build_model is deterministic in the seed") {
  ModelSpec spec;
  spec.input = Shape4{1, 32, 32, 3};
  spec.base_blocks = 1;
  spec.frozen_blocks = {1};
  spec.class_count = 4;

  Model a = build_model(spec, 99);
  Model b = build_model(spec, 99);
  Model c = build_model(spec, 100);
  CHECK(all_weights(a) == all_weights(b));
  CHECK(all_weights(a) != all_weights(c));
}

TEST_CASE("freeze marks exactly the requested base blocks") {
  ModelSpec spec;
  spec.input = Shape4{1, 64, 32, 3};
  spec.base_blocks = 2;
  spec.frozen_blocks = {1};
  spec.class_count = 3;
  Model m = build_model(spec, 5);

  for (auto& np : m.named_params()) {
    if (np.block == 1) CHECK_FALSE(np.trainable);
    else CHECK(np.trainable);
  }

  freeze(m, {1, 2});
  for (auto& np : m.named_params()) {
    if (np.block >= 1) CHECK_FALSE(np.trainable);
    else CHECK(np.trainable);
  }

  freeze(m, {});
  for (auto& np : m.named_params()) CHECK(np.trainable);

  CHECK_THROWS_AS(freeze(m, {3}), ValueError);
  CHECK_THROWS_AS(freeze(m, {0}), ValueError);
}

TEST_CASE("optimizer steps skip frozen parameters") {
  ModelSpec spec;
  spec.input = Shape4{1, 32, 32, 3};
  spec.base_blocks = 1;
  spec.frozen_blocks = {1};
  spec.class_count = 3;
  Model m = build_model(spec, 17);

  std::vector<float> frozen_before;
  for (auto& np : m.named_params()) {
    if (!np.trainable)
      frozen_before.insert(frozen_before.end(), np.param->value.data.begin(),
                           np.param->value.data.end());
  }
  REQUIRE_FALSE(frozen_before.empty());

  Rng rng(18);
  Tensor x({1, 32, 32, 3});
  for (auto& v : x.data) v = rng.uniform(0.f, 1.f);

  OptimizerConfig cfg;
  cfg.kind = OptKind::adam;
  Optimizer opt(cfg);
  for (int step = 0; step < 3; ++step) {
    Tensor logits = m.forward(x, ForwardCtx{});
    SoftmaxXentResult res = softmax_xent(logits, {1});
    m.zero_grads();
    m.backward(res.dlogits);
    opt.apply_step(m);
  }

  std::vector<float> frozen_after;
  for (auto& np : m.named_params()) {
    if (!np.trainable)
      frozen_after.insert(frozen_after.end(), np.param->value.data.begin(),
                          np.param->value.data.end());
  }
  CHECK(frozen_before == frozen_after);
}

TEST_CASE("apply_step before backward is a state error") {
  ModelSpec spec;
  spec.input = Shape4{1, 32, 32, 3};
  spec.base_blocks = 1;
  spec.frozen_blocks = {};
  spec.class_count = 2;
  Model m = build_model(spec, 3);
  Optimizer opt(OptimizerConfig{});
  CHECK_THROWS_AS(opt.apply_step(m), StateError);
}

TEST_CASE("weights survive a save/load round trip bit for bit") {
  const fs::path dir = temp_dir("roundtrip");
  ModelSpec spec;
  spec.input = Shape4{1, 32, 32, 3};
  spec.base_blocks = 1;
  spec.frozen_blocks = {1};
  spec.class_count = 5;

  Model a = build_model(spec, 21);
  const std::string prefix = (dir / "ckpt").string();
  save_weights(a, prefix);

  Model b = build_model(spec, 22);  // different init, must be overwritten
  REQUIRE(all_weights(a) != all_weights(b));
  load_weights(b, prefix);
  CHECK(all_weights(a) == all_weights(b));

  // The manifest is valid JSON with the pinned header fields.
  std::ifstream mf(prefix + ".manifest.json");
  REQUIRE(mf.good());
  nlohmann::json j = nlohmann::json::parse(mf);
  CHECK(j.at("format_version").get<int>() == 1);
  CHECK(j.at("dtype").get<std::string>() == "f32");
  CHECK(j.at("endianness").get<std::string>() == "little");
  CHECK(j.at("entries").is_array());
  fs::remove_all(dir);
}

TEST_CASE("loading into a mismatched class count names both shapes") {
  const fs::path dir = temp_dir("mismatch");
  ModelSpec spec;
  spec.input = Shape4{1, 32, 32, 3};
  spec.base_blocks = 1;
  spec.frozen_blocks = {1};
  spec.class_count = 5;
  Model a = build_model(spec, 31);
  const std::string prefix = (dir / "ckpt").string();
  save_weights(a, prefix);

  spec.class_count = 7;
  Model b = build_model(spec, 31);
  try {
    load_weights(b, prefix);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("head_dense2") != std::string::npos);
    CHECK(msg.find("5") != std::string::npos);
    CHECK(msg.find("7") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("unknown layers in the container are rejected") {
  const fs::path dir = temp_dir("unknown");
  ModelSpec spec;
  spec.input = Shape4{1, 64, 64, 3};
  spec.base_blocks = 2;
  spec.frozen_blocks = {};
  spec.class_count = 3;
  Model two = build_model(spec, 41);
  const std::string prefix = (dir / "ckpt").string();
  save_weights(two, prefix);

  spec.base_blocks = 1;
  Model one = build_model(spec, 41);
  CHECK_THROWS_AS(load_weights(one, prefix), ValueError);
  CHECK_THROWS_AS(load_weights(one, prefix, true), ValueError);
  fs::remove_all(dir);
}

TEST_CASE("allow_partial keeps the initialization for missing entries") {
  // Donor: a bare two-block base, no head. Its entries are an exact
  // subset of the full model's, so partial loading fills the base and
  // leaves the head at its fresh initialization.
  const fs::path dir = temp_dir("partial");
  Rng donor_rng(51);
  Model base_only = build_vgg19_base(Shape4{1, 64, 64, 3}, 2, donor_rng);
  const std::string prefix = (dir / "ckpt").string();
  save_weights(base_only, prefix);

  ModelSpec spec;
  spec.input = Shape4{1, 64, 64, 3};
  spec.base_blocks = 2;
  spec.frozen_blocks = {};
  spec.class_count = 3;
  Model full = build_model(spec, 52);
  CHECK_THROWS_AS(load_weights(full, prefix), ValueError);

  std::vector<float> head_before;
  for (auto& np : full.named_params()) {
    if (np.block == 0)
      head_before.insert(head_before.end(), np.param->value.data.begin(),
                         np.param->value.data.end());
  }
  load_weights(full, prefix, true);

  // Base layers now match the donor; the head kept its init.
  auto donor_params = base_only.named_params();
  auto full_params = full.named_params();
  std::vector<float> head_after;
  for (auto& np : full_params) {
    if (np.block == 0)
      head_after.insert(head_after.end(), np.param->value.data.begin(),
                        np.param->value.data.end());
  }
  CHECK(head_before == head_after);
  size_t matched = 0;
  for (auto& dp : donor_params) {
    for (auto& fp : full_params) {
      if (dp.layer_name == fp.layer_name && dp.param->name == fp.param->name) {
        CHECK(dp.param->value.data == fp.param->value.data);
        ++matched;
      }
    }
  }
  CHECK(matched == donor_params.size());
  fs::remove_all(dir);
}

TEST_CASE("a truncated weight blob is reported as such") {
  const fs::path dir = temp_dir("trunc");
  ModelSpec spec;
  spec.input = Shape4{1, 32, 32, 3};
  spec.base_blocks = 1;
  spec.frozen_blocks = {};
  spec.class_count = 2;
  Model m = build_model(spec, 61);
  const std::string prefix = (dir / "ckpt").string();
  save_weights(m, prefix);

  const fs::path blob = dir / "ckpt.weights.bin";
  const auto full = fs::file_size(blob);
  fs::resize_file(blob, full - 16);
  CHECK_THROWS_AS(load_weights(m, prefix), IoError);
  fs::remove_all(dir);
}

TEST_CASE("forward rejects input that disagrees with the build geometry") {
  ModelSpec spec;
  spec.input = Shape4{1, 32, 32, 3};
  spec.base_blocks = 1;
  spec.frozen_blocks = {};
  spec.class_count = 2;
  Model m = build_model(spec, 71);
  Tensor bad({1, 16, 16, 3});
  CHECK_THROWS_AS(m.forward(bad, ForwardCtx{}), ShapeError);
}
