#include "statenet/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "statenet/error.hpp"
#include "statenet/image_io.hpp"

namespace statenet {

namespace {

constexpr uint64_t kDropoutStream = 0x64726f70;

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

size_t count_correct(const Tensor& probs, const std::vector<int>& y) {
  const std::vector<int> pred = argmax_rows(probs);
  size_t correct = 0;
  for (size_t i = 0; i < y.size(); ++i) correct += pred[i] == y[i];
  return correct;
}

}  // namespace

std::string event_to_jsonl(const TrainEvent& e) {
  nlohmann::json j;
  j["epoch"] = e.epoch;
  j["split"] = e.split;
  j["loss"] = e.loss;
  j["accuracy"] = e.accuracy;
  j["wall_ms"] = e.wall_ms;
  j["lr"] = e.lr;
  return j.dump();
}

TrainEvent event_from_jsonl(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& ex) {
    throw ValueError(std::string("malformed event line: ") + ex.what());
  }
  TrainEvent e;
  e.epoch = j.at("epoch").get<int>();
  e.split = j.at("split").get<std::string>();
  e.loss = j.at("loss").get<double>();
  e.accuracy = j.at("accuracy").get<double>();
  e.wall_ms = j.at("wall_ms").get<double>();
  e.lr = j.at("lr").get<double>();
  return e;
}

std::vector<TrainEvent> read_event_log(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read event log " + path);
  std::vector<TrainEvent> events;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    // The first line may be a config-echo header rather than an event.
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw ValueError("malformed line in " + path + ": " + ex.what());
    }
    if (!j.contains("epoch")) continue;
    events.push_back(event_from_jsonl(line));
  }
  return events;
}

TrainEvent train_epoch(Model& model, Optimizer& opt, BatchLoader& loader, int epoch,
                       bool timed) {
  const auto t0 = Clock::now();
  BatchStream stream = loader.stream(Split::train, epoch, true);
  const uint64_t seed = loader.config().seed;

  double loss_sum = 0;
  size_t correct = 0, total = 0;
  Batch batch;
  int batch_idx = 0;
  while (stream.next(batch)) {
    Rng drop_rng = Rng(seed).derive(kDropoutStream, static_cast<uint64_t>(epoch),
                                    static_cast<uint64_t>(batch_idx));
    ForwardCtx ctx{&drop_rng, true};
    const Tensor logits = model.forward(batch.x, ctx);
    SoftmaxXentResult res = softmax_xent(logits, batch.y);
    if (!std::isfinite(res.loss)) {
      throw TrainAbort("training aborted: non-finite loss at epoch " +
                       std::to_string(epoch) + ", batch " + std::to_string(batch_idx));
    }
    model.zero_grads();
    model.backward(res.dlogits);
    opt.apply_step(model);

    const size_t n = batch.y.size();
    loss_sum += res.loss * static_cast<double>(n);
    correct += count_correct(res.probs, batch.y);
    total += n;
    ++batch_idx;
  }

  TrainEvent e;
  e.epoch = epoch;
  e.split = "train";
  e.loss = loss_sum / static_cast<double>(total);
  e.accuracy = static_cast<double>(correct) / static_cast<double>(total);
  e.wall_ms = timed ? ms_since(t0) : 0.0;
  e.lr = opt.config().lr;
  return e;
}

TrainEvent evaluate(Model& model, BatchLoader& loader, Split split, bool timed) {
  const auto t0 = Clock::now();
  BatchStream stream = loader.stream(split, 0, false);
  ForwardCtx ctx{nullptr, false};

  double loss_sum = 0;
  size_t correct = 0, total = 0;
  Batch batch;
  while (stream.next(batch)) {
    const Tensor logits = model.forward(batch.x, ctx);
    const SoftmaxXentResult res = softmax_xent(logits, batch.y);
    const size_t n = batch.y.size();
    loss_sum += res.loss * static_cast<double>(n);
    correct += count_correct(res.probs, batch.y);
    total += n;
  }

  TrainEvent e;
  e.epoch = 0;
  e.split = to_string(split);
  e.loss = loss_sum / static_cast<double>(total);
  e.accuracy = static_cast<double>(correct) / static_cast<double>(total);
  e.wall_ms = timed ? ms_since(t0) : 0.0;
  e.lr = 0;
  return e;
}

FitSummary fit(Model& model, Optimizer& opt, BatchLoader& loader,
               const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw ValueError("fit: epochs must be at least 1");

  std::ofstream log;
  if (!cfg.event_log_path.empty()) {
    log.open(cfg.event_log_path, std::ios::binary);
    if (!log) throw IoError("cannot write event log " + cfg.event_log_path);
    if (!cfg.log_header.empty()) log << cfg.log_header << "\n";
  }
  auto emit = [&](const TrainEvent& e) {
    if (log.is_open()) {
      log << event_to_jsonl(e) << "\n";
      log.flush();
    }
  };

  FitSummary summary;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    TrainEvent tr = train_epoch(model, opt, loader, epoch, !cfg.determinism);
    tr.lr = opt.config().lr;
    emit(tr);
    summary.events.push_back(tr);

    TrainEvent ev = evaluate(model, loader, Split::val, !cfg.determinism);
    ev.epoch = epoch;
    ev.lr = opt.config().lr;
    emit(ev);
    summary.events.push_back(ev);

    if (ev.accuracy > summary.best_val_accuracy || summary.best_epoch == 0) {
      summary.best_val_accuracy = ev.accuracy;
      summary.best_epoch = epoch;
    }

    if (!cfg.checkpoint_prefix.empty() && cfg.checkpoint_every > 0 &&
        epoch % cfg.checkpoint_every == 0) {
      save_weights(model, cfg.checkpoint_prefix + "-epoch" + std::to_string(epoch));
    }
  }
  if (!cfg.checkpoint_prefix.empty()) {
    save_weights(model, cfg.checkpoint_prefix + "-final");
  }
  return summary;
}

std::vector<std::pair<std::string, double>> predict(Model& model,
                                                    const std::vector<std::string>& classes,
                                                    const std::string& image_path,
                                                    const LoaderConfig& loader_cfg) {
  Tensor img = load_image(image_path, loader_cfg.image_h, loader_cfg.image_w);
  Rng unused(0);
  img = augment_image(img, loader_cfg.augment, unused, false);

  Tensor x({1, img.dim(0), img.dim(1), img.dim(2)});
  std::copy(img.ptr(), img.ptr() + img.size(), x.ptr());
  ForwardCtx ctx{nullptr, false};
  const Tensor logits = model.forward(x, ctx);
  const Tensor probs = softmax_rows(logits);

  std::vector<std::pair<std::string, double>> out;
  for (int c = 0; c < probs.dim(1); ++c) {
    out.emplace_back(classes.at(static_cast<size_t>(c)), probs.ptr()[c]);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

}  // namespace statenet
