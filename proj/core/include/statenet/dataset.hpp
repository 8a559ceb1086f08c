#pragma once

#include <array>
#include <cstdint>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "statenet/augment.hpp"
#include "statenet/rng.hpp"
#include "statenet/tensor.hpp"

namespace statenet {

enum class Split { train, val, test };

std::string to_string(Split s);
Split parse_split(const std::string& name);

struct Sample {
  std::string path;
  int class_idx = 0;
  Split split = Split::train;
};

// Directory-per-class index. Class indices are positions in the
// lexicographically sorted class-name list; file order within a class is
// lexicographic too, so re-scanning the same tree is reproducible.
struct DatasetIndex {
  std::vector<std::string> classes;
  std::vector<Sample> samples;

  size_t count(Split s) const;
  int class_count() const { return static_cast<int>(classes.size()); }
};

// Walks <root>/<class>/<files>, keeping files whose magic bytes match a
// decoder compiled into this build. Skipped files and empty class
// directories warn on stderr. Zero class directories is an error.
DatasetIndex scan(const std::string& root_dir);

// Stratified split: per class, shuffle with a substream of `seed`, then
// cut at floor(n*f_train) and floor(n*f_val); the remainder is test.
// Fractions must be non-negative and sum to 1 within 1e-6.
DatasetIndex split_dataset(DatasetIndex index,
                           const std::array<double, 3>& fractions, uint64_t seed);

constexpr std::array<double, 3> kPaperFractions{0.682, 0.148, 0.170};

// Split file: JSON array of {path, class, split} with class as a name.
void save_split(const DatasetIndex& index, const std::string& path);
DatasetIndex load_split(const std::string& path);

struct Batch {
  Tensor x;            // n*h*w*3, already rescaled
  std::vector<int> y;  // class indices, length n

  int size() const { return static_cast<int>(y.size()); }
};

struct LoaderConfig {
  int image_h = 150;
  int image_w = 150;
  int batch_size = 32;
  AugmentConfig augment;
  bool augment_eval = false;  // run the affine pipeline on val/test too
  uint64_t seed = 0;
  int workers = 0;            // 0 = library thread default
  bool cache = true;          // keep decoded+resized images in memory
};

class BatchStream;

// Owns the decode cache and hands out per-epoch batch streams. Epoch order
// and per-image augmentation draw from substreams of (seed, epoch, position),
// so results do not depend on worker count.
class BatchLoader {
 public:
  BatchLoader(const DatasetIndex& index, LoaderConfig cfg);

  // One pass over a split. `epoch` selects the shuffle and augmentation
  // substreams; `training` enables the affine pipeline (or augment_eval).
  BatchStream stream(Split split, int epoch, bool training);

  const DatasetIndex& index() const { return index_; }
  const LoaderConfig& config() const { return cfg_; }

 private:
  friend class BatchStream;
  Tensor raw_image(size_t sample_idx);  // decoded + resized, values 0..255

  DatasetIndex index_;
  LoaderConfig cfg_;
  std::mutex cache_mu_;
  std::unordered_map<size_t, Tensor> cache_;
};

class BatchStream {
 public:
  // False when the epoch is exhausted; otherwise fills `out`.
  bool next(Batch& out);

  size_t sample_count() const { return order_.size(); }
  size_t batch_count() const;

 private:
  friend class BatchLoader;
  BatchStream(BatchLoader& loader, std::vector<size_t> order, int epoch, bool augment);

  BatchLoader& loader_;
  std::vector<size_t> order_;
  int epoch_;
  bool augment_;
  size_t pos_ = 0;
};

}  // namespace statenet
