#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "statenet/dataset.hpp"
#include "statenet/model.hpp"
#include "statenet/trainer.hpp"

namespace statenet {

// One curve: a metric over epochs for one run and split.
struct Series {
  std::string run;
  std::string metric;  // "loss" or "accuracy"
  std::string split;   // "train", "val" or "test"
  std::vector<std::pair<int, double>> points;  // ascending epochs
};

// Extracts one curve from an event log.
Series series_from_events(const std::vector<TrainEvent>& events, const std::string& run,
                          const std::string& metric, const std::string& split);

// Exponential moving average, first value as the initial state:
// y'_0 = y_0, y'_t = alpha*y'_{t-1} + (1-alpha)*y_t. alpha in [0,1).
Series smooth(const Series& s, double alpha);

// Writes one SVG chart: every series drawn twice, raw at reduced opacity
// plus the alpha-smoothed overlay, with axes and a legend of run names.
// All series must share one metric.
void plot(const std::vector<Series>& series, const std::string& out_path,
          double alpha = 0.5);

struct Confusion {
  std::vector<std::string> classes;
  std::vector<std::vector<int64_t>> counts;  // [true class][predicted]
  std::vector<double> per_class_accuracy;
  double accuracy = 0;  // trace / total
  int64_t total = 0;
};

// Runs the model over a split in inference mode and tallies predictions.
Confusion confusion(Model& model, BatchLoader& loader, Split split);

// Fixed-width text rendering for terminal output.
std::string to_text(const Confusion& c);

}  // namespace statenet
