#include "statenet/model.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <utility>

#include <json.hpp>

namespace statenet {

void Model::append(std::string name, int block, std::unique_ptr<Layer> layer) {
  entries_.push_back(Entry{std::move(name), block, std::move(layer)});
}

Tensor Model::forward(const Tensor& x, const ForwardCtx& ctx) {
  const Shape4 s = Shape4::of(x);
  if (s.h != input_.h || s.w != input_.w || s.c != input_.c) {
    throw ShapeError("model: input " + Tensor::shape_str(x.shape) +
                     " does not match build geometry " + input_.str());
  }
  Tensor t = x;
  for (auto& e : entries_) t = e.layer->forward(t, ctx);
  return t;
}

Tensor Model::backward(const Tensor& dlogits) {
  Tensor g = dlogits;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    g = (*it).layer->backward(g);
  }
  grads_ready_ = true;
  return g;
}

void Model::zero_grads() {
  for (auto& e : entries_) e.layer->zero_grads();
  grads_ready_ = false;
}

std::vector<Model::NamedParam> Model::named_params() {
  std::vector<NamedParam> out;
  for (auto& e : entries_) {
    for (Param* p : e.layer->params()) {
      out.push_back(NamedParam{e.name, e.block, e.layer->trainable(), p});
    }
  }
  return out;
}

int Model::base_block_count() const {
  int mx = 0;
  for (const auto& e : entries_) mx = std::max(mx, e.block);
  return mx;
}

std::vector<int> Model::output_shape() const {
  std::vector<int> s{input_.h, input_.w, input_.c};
  for (const auto& e : entries_) s = e.layer->output_shape(s);
  return s;
}

std::vector<std::vector<int>> Model::shape_chain() const {
  std::vector<std::vector<int>> chain;
  std::vector<int> s{input_.h, input_.w, input_.c};
  for (const auto& e : entries_) {
    s = e.layer->output_shape(s);
    chain.push_back(s);
  }
  return chain;
}

// --- Builders ----------------------------------------------------------

Model build_vgg19_base(const Shape4& input, int base_blocks, Rng& rng) {
  if (!input.valid()) {
    throw ValueError("vgg19 base: invalid input geometry " + input.str());
  }
  if (base_blocks < 1 || base_blocks > 5) {
    throw ValueError("vgg19 base: base_blocks must be in [1,5], got " +
                     std::to_string(base_blocks));
  }
  static constexpr int kChannels[5] = {64, 128, 256, 512, 512};
  static constexpr int kConvs[5] = {2, 2, 4, 4, 4};

  Model m;
  m.set_input_shape(input);
  std::vector<int> shape{input.h, input.w, input.c};
  int in_c = input.c;
  for (int b = 1; b <= base_blocks; ++b) {
    const int out_c = kChannels[b - 1];
    for (int i = 1; i <= kConvs[b - 1]; ++i) {
      auto conv = std::make_unique<Conv2D>(in_c, out_c, 3);
      conv->init_params(rng);
      shape = conv->output_shape(shape);
      m.append("block" + std::to_string(b) + "_conv" + std::to_string(i), b,
               std::move(conv));
      auto relu = std::make_unique<ReLU>();
      shape = relu->output_shape(shape);
      m.append("block" + std::to_string(b) + "_relu" + std::to_string(i), b,
               std::move(relu));
      in_c = out_c;
    }
    auto pool = std::make_unique<MaxPool2D>();
    shape = pool->output_shape(shape);  // throws when spatial size would drop below 1
    m.append("block" + std::to_string(b) + "_pool", b, std::move(pool));
  }
  return m;
}

Model assemble_modified_head(Model base, int class_count, Rng& rng,
                             float conv_dropout, float dense_dropout) {
  if (class_count < 2) {
    throw ValueError("head: class_count must be at least 2, got " +
                     std::to_string(class_count));
  }
  std::vector<int> shape = base.output_shape();
  if (shape.size() != 3) {
    throw ShapeError("head: base must end with a spatial feature map, got " +
                     Tensor::shape_str(shape));
  }
  if (shape[0] < 8 || shape[1] < 8) {
    throw ShapeError("head: base output " + Tensor::shape_str(shape) +
                     " is too small; three pool stages need spatial extent >= 8");
  }

  Model m = std::move(base);
  static constexpr int kHeadChannels[3] = {32, 64, 64};
  int in_c = shape[2];
  int conv_idx = 1;
  for (int g = 0; g < 3; ++g) {
    const int out_c = kHeadChannels[g];
    for (int i = 0; i < 2; ++i) {
      auto conv = std::make_unique<Conv2D>(in_c, out_c, 3);
      conv->init_params(rng);
      shape = conv->output_shape(shape);
      m.append("head_conv" + std::to_string(conv_idx), 0, std::move(conv));
      auto relu = std::make_unique<ReLU>();
      shape = relu->output_shape(shape);
      m.append("head_relu" + std::to_string(conv_idx), 0, std::move(relu));
      in_c = out_c;
      ++conv_idx;
    }
    auto pool = std::make_unique<MaxPool2D>();
    shape = pool->output_shape(shape);
    m.append("head_pool" + std::to_string(g + 1), 0, std::move(pool));
    auto drop = std::make_unique<Dropout>(conv_dropout);
    shape = drop->output_shape(shape);
    m.append("head_drop" + std::to_string(g + 1), 0, std::move(drop));
  }

  auto flat = std::make_unique<Flatten>();
  shape = flat->output_shape(shape);
  m.append("head_flatten", 0, std::move(flat));

  auto dense1 = std::make_unique<Dense>(shape[0], 512);
  dense1->init_params(rng);
  shape = dense1->output_shape(shape);
  m.append("head_dense1", 0, std::move(dense1));
  auto relu = std::make_unique<ReLU>();
  shape = relu->output_shape(shape);
  m.append("head_relu7", 0, std::move(relu));

  auto drop = std::make_unique<Dropout>(dense_dropout);
  shape = drop->output_shape(shape);
  m.append("head_drop4", 0, std::move(drop));

  auto dense2 = std::make_unique<Dense>(shape[0], class_count);
  dense2->init_params(rng);
  shape = dense2->output_shape(shape);
  m.append("head_dense2", 0, std::move(dense2));

  m.set_class_count(class_count);
  return m;
}

void freeze(Model& model, const std::vector<int>& frozen_blocks) {
  const int blocks = model.base_block_count();
  for (int b : frozen_blocks) {
    if (b < 1 || b > blocks) {
      throw ValueError("freeze: unknown block index " + std::to_string(b) +
                       " (model has base blocks 1.." + std::to_string(blocks) + ")");
    }
  }
  for (size_t i = 0; i < model.layer_count(); ++i) {
    auto& e = model.entry(i);
    const bool frozen = e.block > 0 &&
                        std::find(frozen_blocks.begin(), frozen_blocks.end(), e.block) !=
                            frozen_blocks.end();
    e.layer->set_trainable(!frozen);
  }
}

Model build_model(const ModelSpec& spec, uint64_t seed) {
  Rng rng = Rng(seed).derive(0x6d6f64656cULL);  // "model" substream
  Model base = build_vgg19_base(spec.input, spec.base_blocks, rng);
  Model m = assemble_modified_head(std::move(base), spec.class_count, rng,
                                   spec.conv_dropout, spec.dense_dropout);
  freeze(m, spec.frozen_blocks);
  return m;
}

// --- Weight container ---------------------------------------------------

namespace {

constexpr int kFormatVersion = 1;

void append_f32_le(std::string& buf, const float* src, size_t n) {
  buf.reserve(buf.size() + n * 4);
  for (size_t i = 0; i < n; ++i) {
    uint32_t u;
    std::memcpy(&u, &src[i], 4);
    buf.push_back(static_cast<char>(u & 0xff));
    buf.push_back(static_cast<char>((u >> 8) & 0xff));
    buf.push_back(static_cast<char>((u >> 16) & 0xff));
    buf.push_back(static_cast<char>((u >> 24) & 0xff));
  }
}

void read_f32_le(const std::string& buf, size_t offset, float* dst, size_t n) {
  const auto* b = reinterpret_cast<const unsigned char*>(buf.data()) + offset;
  for (size_t i = 0; i < n; ++i) {
    const uint32_t u = static_cast<uint32_t>(b[4 * i]) |
                       (static_cast<uint32_t>(b[4 * i + 1]) << 8) |
                       (static_cast<uint32_t>(b[4 * i + 2]) << 16) |
                       (static_cast<uint32_t>(b[4 * i + 3]) << 24);
    std::memcpy(&dst[i], &u, 4);
  }
}

}  // namespace

void save_weights(Model& model, const std::string& prefix) {
  nlohmann::json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["dtype"] = "f32";
  manifest["endianness"] = "little";
  auto entries = nlohmann::json::array();

  std::string blob;
  for (const auto& np : model.named_params()) {
    const size_t offset = blob.size();
    const size_t length = np.param->value.size() * 4;
    nlohmann::json e;
    e["layer"] = np.layer_name;
    e["param"] = np.param->name;
    e["shape"] = np.param->value.shape;
    e["offset"] = offset;
    e["length"] = length;
    entries.push_back(std::move(e));
    append_f32_le(blob, np.param->value.ptr(), np.param->value.size());
  }
  manifest["entries"] = std::move(entries);

  {
    std::ofstream f(prefix + ".manifest.json", std::ios::binary);
    if (!f) throw IoError("cannot write " + prefix + ".manifest.json");
    f << manifest.dump(2) << "\n";
  }
  {
    std::ofstream f(prefix + ".weights.bin", std::ios::binary);
    if (!f) throw IoError("cannot write " + prefix + ".weights.bin");
    f.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  }
}

void load_weights(Model& model, const std::string& prefix, bool allow_partial) {
  nlohmann::json manifest;
  {
    std::ifstream f(prefix + ".manifest.json", std::ios::binary);
    if (!f) throw IoError("cannot read " + prefix + ".manifest.json");
    try {
      f >> manifest;
    } catch (const nlohmann::json::exception& e) {
      throw ValueError("malformed manifest " + prefix + ".manifest.json: " + e.what());
    }
  }
  if (!manifest.contains("format_version") ||
      manifest["format_version"].get<int>() != kFormatVersion) {
    throw ValueError("unsupported weight container format_version in " + prefix);
  }
  if (manifest.value("dtype", "") != "f32" || manifest.value("endianness", "") != "little") {
    throw ValueError("unsupported dtype/endianness in " + prefix);
  }

  std::string blob;
  {
    std::ifstream f(prefix + ".weights.bin", std::ios::binary);
    if (!f) throw IoError("cannot read " + prefix + ".weights.bin");
    blob.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
  }

  struct FileEntry {
    std::vector<int> shape;
    size_t offset = 0;
    size_t length = 0;
  };
  std::map<std::pair<std::string, std::string>, FileEntry> by_name;
  size_t expected_end = 0;
  for (const auto& e : manifest["entries"]) {
    FileEntry fe;
    fe.shape = e.at("shape").get<std::vector<int>>();
    fe.offset = e.at("offset").get<size_t>();
    fe.length = e.at("length").get<size_t>();
    if (fe.offset != expected_end) {
      throw ValueError("manifest offsets must be ascending and contiguous in " + prefix);
    }
    expected_end = fe.offset + fe.length;
    by_name[{e.at("layer").get<std::string>(), e.at("param").get<std::string>()}] = fe;
  }
  if (expected_end != blob.size()) {
    throw IoError("weight blob " + prefix + ".weights.bin is truncated: manifest expects " +
                  std::to_string(expected_end) + " bytes, file has " +
                  std::to_string(blob.size()));
  }

  auto params = model.named_params();
  std::map<std::pair<std::string, std::string>, Param*> model_params;
  for (auto& np : params) model_params[{np.layer_name, np.param->name}] = np.param;

  for (const auto& [key, fe] : by_name) {
    if (!model_params.count(key)) {
      throw ValueError("unknown layer name in weight file: " + key.first + "." + key.second);
    }
  }
  for (auto& np : params) {
    auto it = by_name.find({np.layer_name, np.param->name});
    if (it == by_name.end()) {
      if (allow_partial) continue;  // keep initialization
      throw ValueError("weight file is missing " + np.layer_name + "." + np.param->name +
                       " (pass allow_partial to keep the initialization)");
    }
    const FileEntry& fe = it->second;
    if (fe.shape != np.param->value.shape) {
      throw ShapeError("weight shape mismatch for " + np.layer_name + "." +
                       np.param->name + ": file has " + Tensor::shape_str(fe.shape) +
                       ", model expects " + Tensor::shape_str(np.param->value.shape));
    }
    if (fe.length != np.param->value.size() * 4) {
      throw ValueError("entry length disagrees with shape for " + np.layer_name + "." +
                       np.param->name);
    }
    read_f32_le(blob, fe.offset, np.param->value.ptr(), np.param->value.size());
  }
}

}  // namespace statenet
