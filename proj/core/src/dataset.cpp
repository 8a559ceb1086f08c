#include "statenet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "statenet/error.hpp"
#include "statenet/image_io.hpp"
#include "statenet/parallel.hpp"

namespace fs = std::filesystem;

namespace statenet {

namespace {

// Substream tags; arbitrary fixed constants.
constexpr uint64_t kSplitStream = 0x73706c6974;
constexpr uint64_t kOrderStream = 0x6f72646572;
constexpr uint64_t kAugmentStream = 0x6175676d;

bool magic_supported(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return false;
  unsigned char m[8] = {0};
  f.read(reinterpret_cast<char*>(m), 8);
  if (f.gcount() < 8) return false;
  if (m[0] == 'P' && (m[1] == '5' || m[1] == '6')) return true;
  static const unsigned char png[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (std::memcmp(m, png, 8) == 0) {
#ifdef STATENET_WITH_PNG
    return true;
#else
    return false;
#endif
  }
  if (m[0] == 0xff && m[1] == 0xd8) {
#ifdef STATENET_WITH_JPEG
    return true;
#else
    return false;
#endif
  }
  return false;
}

}  // namespace

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw ValueError("unknown split '" + name + "' (expected train, val or test)");
}

size_t DatasetIndex::count(Split s) const {
  size_t n = 0;
  for (const auto& smp : samples) n += smp.split == s;
  return n;
}

DatasetIndex scan(const std::string& root_dir) {
  if (!fs::is_directory(root_dir)) {
    throw IoError("dataset root is not a directory: " + root_dir);
  }
  std::vector<std::string> class_names;
  for (const auto& e : fs::directory_iterator(root_dir)) {
    if (e.is_directory()) class_names.push_back(e.path().filename().string());
  }
  std::sort(class_names.begin(), class_names.end());
  if (class_names.empty()) {
    throw ValueError("no class directories under " + root_dir);
  }

  DatasetIndex index;
  index.classes = class_names;
  for (size_t ci = 0; ci < class_names.size(); ++ci) {
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(fs::path(root_dir) / class_names[ci])) {
      if (!e.is_regular_file()) continue;
      const std::string p = e.path().string();
      if (magic_supported(p)) {
        files.push_back(p);
      } else {
        std::cerr << "warning: skipping " << p << ": not a decodable image\n";
      }
    }
    if (files.empty()) {
      std::cerr << "warning: class directory '" << class_names[ci] << "' has no images\n";
    }
    std::sort(files.begin(), files.end());
    for (auto& f : files) {
      index.samples.push_back(Sample{std::move(f), static_cast<int>(ci), Split::train});
    }
  }
  return index;
}

DatasetIndex split_dataset(DatasetIndex index,
                           const std::array<double, 3>& fractions, uint64_t seed) {
  double sum = 0;
  for (double f : fractions) {
    if (f < 0) throw ValueError("split fractions must be non-negative");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw ValueError("split fractions must sum to 1, got " + std::to_string(sum));
  }

  for (int ci = 0; ci < index.class_count(); ++ci) {
    std::vector<size_t> members;
    for (size_t i = 0; i < index.samples.size(); ++i) {
      if (index.samples[i].class_idx == ci) members.push_back(i);
    }
    Rng rng = Rng(seed).derive(kSplitStream, static_cast<uint64_t>(ci));
    rng.shuffle(members);
    const size_t n = members.size();
    const size_t n_train = static_cast<size_t>(std::floor(n * fractions[0]));
    const size_t n_val = static_cast<size_t>(std::floor(n * fractions[1]));
    for (size_t k = 0; k < n; ++k) {
      Split s = Split::test;
      if (k < n_train) {
        s = Split::train;
      } else if (k < n_train + n_val) {
        s = Split::val;
      }
      index.samples[members[k]].split = s;
    }
  }
  return index;
}

void save_split(const DatasetIndex& index, const std::string& path) {
  auto arr = nlohmann::json::array();
  for (const auto& s : index.samples) {
    nlohmann::json e;
    e["path"] = s.path;
    e["class"] = index.classes.at(static_cast<size_t>(s.class_idx));
    e["split"] = to_string(s.split);
    arr.push_back(std::move(e));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write split file " + path);
  f << arr.dump(2) << "\n";
}

DatasetIndex load_split(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read split file " + path);
  nlohmann::json arr;
  try {
    f >> arr;
  } catch (const nlohmann::json::exception& e) {
    throw ValueError("malformed split file " + path + ": " + e.what());
  }
  if (!arr.is_array() || arr.empty()) {
    throw ValueError("split file " + path + " must be a non-empty JSON array");
  }

  DatasetIndex index;
  std::vector<std::pair<std::string, std::pair<std::string, Split>>> rows;
  for (const auto& e : arr) {
    if (!e.contains("path") || !e.contains("class") || !e.contains("split")) {
      throw ValueError("split file " + path + ": every entry needs path, class, split");
    }
    rows.push_back({e["path"].get<std::string>(),
                    {e["class"].get<std::string>(),
                     parse_split(e["split"].get<std::string>())}});
    index.classes.push_back(e["class"].get<std::string>());
  }
  std::sort(index.classes.begin(), index.classes.end());
  index.classes.erase(std::unique(index.classes.begin(), index.classes.end()),
                      index.classes.end());
  for (auto& [p, rest] : rows) {
    const auto it = std::lower_bound(index.classes.begin(), index.classes.end(),
                                     rest.first);
    index.samples.push_back(Sample{
        std::move(p), static_cast<int>(it - index.classes.begin()), rest.second});
  }
  return index;
}

// --- Batching ------------------------------------------------------------

BatchLoader::BatchLoader(const DatasetIndex& index, LoaderConfig cfg)
    : index_(index), cfg_(cfg) {
  if (cfg_.batch_size < 1) throw ValueError("batch_size must be at least 1");
  if (cfg_.image_h < 1 || cfg_.image_w < 1) {
    throw ValueError("image size must be positive");
  }
  cfg_.augment.validate();
}

Tensor BatchLoader::raw_image(size_t sample_idx) {
  if (cfg_.cache) {
    std::lock_guard<std::mutex> lock(cache_mu_);
    auto it = cache_.find(sample_idx);
    if (it != cache_.end()) return it->second;
  }
  Tensor t = load_image(index_.samples.at(sample_idx).path, cfg_.image_h, cfg_.image_w);
  if (cfg_.cache) {
    std::lock_guard<std::mutex> lock(cache_mu_);
    cache_.emplace(sample_idx, t);
  }
  return t;
}

BatchStream BatchLoader::stream(Split split, int epoch, bool training) {
  std::vector<size_t> order;
  for (size_t i = 0; i < index_.samples.size(); ++i) {
    if (index_.samples[i].split == split) order.push_back(i);
  }
  if (order.empty()) {
    throw ValueError("split '" + to_string(split) + "' has no samples");
  }
  Rng rng = Rng(cfg_.seed).derive(kOrderStream, static_cast<uint64_t>(epoch),
                                  static_cast<uint64_t>(split));
  rng.shuffle(order);
  const bool augment = training || cfg_.augment_eval;
  return BatchStream(*this, std::move(order), epoch, augment);
}

BatchStream::BatchStream(BatchLoader& loader, std::vector<size_t> order, int epoch,
                         bool augment)
    : loader_(loader), order_(std::move(order)), epoch_(epoch), augment_(augment) {}

size_t BatchStream::batch_count() const {
  const size_t b = static_cast<size_t>(loader_.cfg_.batch_size);
  return (order_.size() + b - 1) / b;
}

bool BatchStream::next(Batch& out) {
  if (pos_ >= order_.size()) return false;
  const size_t n = std::min(static_cast<size_t>(loader_.cfg_.batch_size),
                            order_.size() - pos_);
  const int h = loader_.cfg_.image_h, w = loader_.cfg_.image_w;
  out.x = Tensor({static_cast<int>(n), h, w, 3});
  out.y.resize(n);

  const size_t base = pos_;
  parallel_for(0, n, [&](size_t i) {
    const size_t position = base + i;  // position within the epoch order
    const size_t sample_idx = order_[position];
    Tensor img = loader_.raw_image(sample_idx);
    Rng rng = Rng(loader_.cfg_.seed)
                  .derive(kAugmentStream, static_cast<uint64_t>(epoch_),
                          static_cast<uint64_t>(position));
    Tensor aug = augment_image(img, loader_.cfg_.augment, rng, augment_);
    std::memcpy(out.x.ptr() + i * aug.size(), aug.ptr(), aug.size() * sizeof(float));
    out.y[i] = loader_.index_.samples[sample_idx].class_idx;
  }, loader_.cfg_.workers);

  pos_ += n;
  return true;
}

}  // namespace statenet
