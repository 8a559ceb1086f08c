#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "statenet/dataset.hpp"
#include "statenet/model.hpp"
#include "statenet/optim.hpp"

namespace statenet {

struct TrainConfig {
  int epochs = 50;
  int batch_size = 32;
  OptimizerConfig optimizer;
  uint64_t seed = 0;
  bool determinism = false;        // zero wall_ms so logs are byte-comparable
  int checkpoint_every = 0;        // 0 = final checkpoint only
  std::string event_log_path;      // empty = no log
  std::string checkpoint_prefix;   // empty = no checkpoints
  std::string log_header;          // optional first log line (effective config)
};

struct TrainEvent {
  int epoch = 0;
  std::string split;  // "train" or "val"
  double loss = 0;
  double accuracy = 0;
  double wall_ms = 0;
  double lr = 0;
};

// One event as a JSON Lines record (no trailing newline) and back.
std::string event_to_jsonl(const TrainEvent& e);
TrainEvent event_from_jsonl(const std::string& line);
std::vector<TrainEvent> read_event_log(const std::string& path);

// One pass over the train split: forward, loss, backward, step per batch.
// Loss and accuracy are batch-size-weighted epoch means computed in train
// mode (dropout active). Non-finite loss aborts with TrainAbort naming the
// batch. `timed` false zeroes wall_ms.
TrainEvent train_epoch(Model& model, Optimizer& opt, BatchLoader& loader, int epoch,
                       bool timed = true);

// Mean loss/accuracy over a split in inference mode. Touches no parameter
// and no optimizer slot.
TrainEvent evaluate(Model& model, BatchLoader& loader, Split split,
                    bool timed = true);

struct FitSummary {
  double best_val_accuracy = 0;
  int best_epoch = 0;  // first epoch attaining the best value
  std::vector<TrainEvent> events;
};

// The full protocol: per epoch train + val evaluation, both appended to the
// event log as they happen, checkpoints every checkpoint_every epochs and a
// -final one at the end.
FitSummary fit(Model& model, Optimizer& opt, BatchLoader& loader,
               const TrainConfig& cfg);

// Loads one image through the inference pipeline and returns every class
// with its probability, descending (ties keep class order).
std::vector<std::pair<std::string, double>> predict(Model& model,
                                                    const std::vector<std::string>& classes,
                                                    const std::string& image_path,
                                                    const LoaderConfig& loader_cfg);

}  // namespace statenet
