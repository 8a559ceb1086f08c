#include "statenet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "statenet/error.hpp"

namespace statenet {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
constexpr size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

void check_series(const Series& s) {
  if (s.points.empty()) throw ValueError("series '" + s.run + "' is empty");
  for (size_t i = 0; i < s.points.size(); ++i) {
    if (!std::isfinite(s.points[i].second)) {
      throw ValueError("series '" + s.run + "' has a non-finite value at epoch " +
                       std::to_string(s.points[i].first));
    }
    if (i > 0 && s.points[i].first <= s.points[i - 1].first) {
      throw ValueError("series '" + s.run + "' epochs must be strictly increasing");
    }
  }
}

}  // namespace

Series series_from_events(const std::vector<TrainEvent>& events, const std::string& run,
                          const std::string& metric, const std::string& split) {
  if (metric != "loss" && metric != "accuracy") {
    throw ValueError("unknown metric '" + metric + "' (expected loss or accuracy)");
  }
  Series s;
  s.run = run;
  s.metric = metric;
  s.split = split;
  for (const auto& e : events) {
    if (e.split != split) continue;
    s.points.emplace_back(e.epoch, metric == "loss" ? e.loss : e.accuracy);
  }
  if (s.points.empty()) {
    throw ValueError("no '" + split + "' events for metric '" + metric + "'");
  }
  return s;
}

Series smooth(const Series& s, double alpha) {
  if (alpha < 0 || alpha >= 1) {
    throw ValueError("smoothing alpha must be in [0,1), got " + std::to_string(alpha));
  }
  check_series(s);
  Series out = s;
  double state = s.points.front().second;
  for (size_t i = 1; i < s.points.size(); ++i) {
    state = alpha * state + (1 - alpha) * s.points[i].second;
    out.points[i].second = state;
  }
  return out;
}

void plot(const std::vector<Series>& series, const std::string& out_path,
          double alpha) {
  if (series.empty()) throw ValueError("plot: need at least one series");
  for (const auto& s : series) {
    check_series(s);
    if (s.metric != series.front().metric) {
      throw ValueError("plot: mixed metrics ('" + series.front().metric + "' vs '" +
                       s.metric + "'); plot one metric at a time");
    }
  }

  int e_min = series[0].points.front().first, e_max = e_min;
  double v_min = series[0].points.front().second, v_max = v_min;
  for (const auto& s : series) {
    for (const auto& [e, v] : s.points) {
      e_min = std::min(e_min, e);
      e_max = std::max(e_max, e);
      v_min = std::min(v_min, v);
      v_max = std::max(v_max, v);
    }
  }
  if (e_max == e_min) e_max = e_min + 1;
  if (v_max - v_min < 1e-12) {
    v_min -= 0.5;
    v_max += 0.5;
  } else {
    const double pad = (v_max - v_min) * 0.05;
    v_min -= pad;
    v_max += pad;
  }

  const double width = 860, height = 520;
  const double ml = 64, mr = 180, mt = 40, mb = 48;
  const double pw = width - ml - mr, ph = height - mt - mb;
  auto sx = [&](double e) { return ml + (e - e_min) / (e_max - e_min) * pw; };
  auto sy = [&](double v) { return mt + (1.0 - (v - v_min) / (v_max - v_min)) * ph; };

  // Legend labels are run names; the split disambiguates duplicates.
  auto label_of = [&](const Series& s) {
    int with_run = 0;
    for (const auto& t : series) with_run += t.run == s.run;
    return with_run > 1 ? s.run + " (" + s.split + ")" : s.run;
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " " << height
      << "\">\n";
  svg << "<rect width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << ml << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">"
      << xml_escape(series.front().metric) << " by epoch</text>\n";

  // Axes.
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw
      << "\" y2=\"" << mt + ph << "\" stroke=\"#444\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
      << mt + ph << "\" stroke=\"#444\"/>\n";
  const int ticks = 5;
  for (int i = 0; i <= ticks; ++i) {
    const double fe = e_min + (e_max - e_min) * i / static_cast<double>(ticks);
    const double x = sx(fe);
    svg << "<line x1=\"" << x << "\" y1=\"" << mt + ph << "\" x2=\"" << x << "\" y2=\""
        << mt + ph + 5 << "\" stroke=\"#444\"/>\n";
    svg << "<text x=\"" << x << "\" y=\"" << mt + ph + 20
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">"
        << fmt(std::round(fe)) << "</text>\n";
    const double fv = v_min + (v_max - v_min) * i / static_cast<double>(ticks);
    const double y = sy(fv);
    svg << "<line x1=\"" << ml - 5 << "\" y1=\"" << y << "\" x2=\"" << ml << "\" y2=\""
        << y << "\" stroke=\"#444\"/>\n";
    svg << "<text x=\"" << ml - 8 << "\" y=\"" << y + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">"
        << fmt(fv) << "</text>\n";
  }
  svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 10
      << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">epoch"
      << "</text>\n";

  auto polyline = [&](const Series& s, const char* color, double opacity,
                      double stroke_w) {
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-opacity=\""
        << opacity << "\" stroke-width=\"" << stroke_w << "\" points=\"";
    for (size_t i = 0; i < s.points.size(); ++i) {
      if (i) svg << " ";
      svg << fmt(sx(s.points[i].first)) << "," << fmt(sy(s.points[i].second));
    }
    svg << "\"/>\n";
  };

  for (size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % kPaletteSize];
    polyline(series[i], color, 0.3, 1.0);
    polyline(smooth(series[i], alpha), color, 1.0, 2.0);
  }

  for (size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % kPaletteSize];
    const double y = mt + 16 + 18 * static_cast<double>(i);
    svg << "<line x1=\"" << ml + pw + 12 << "\" y1=\"" << y << "\" x2=\""
        << ml + pw + 36 << "\" y2=\"" << y << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << ml + pw + 42 << "\" y=\"" << y + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << xml_escape(label_of(series[i])) << "</text>\n";
  }
  svg << "</svg>\n";

  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw IoError("cannot write plot " + out_path);
  f << svg.str();
}

Confusion confusion(Model& model, BatchLoader& loader, Split split) {
  const int k = loader.index().class_count();
  Confusion c;
  c.classes = loader.index().classes;
  c.counts.assign(static_cast<size_t>(k), std::vector<int64_t>(static_cast<size_t>(k), 0));

  BatchStream stream = loader.stream(split, 0, false);
  ForwardCtx ctx{nullptr, false};
  Batch batch;
  size_t correct = 0, total = 0;
  while (stream.next(batch)) {
    const Tensor logits = model.forward(batch.x, ctx);
    const std::vector<int> pred = argmax_rows(logits);
    for (size_t i = 0; i < batch.y.size(); ++i) {
      c.counts[static_cast<size_t>(batch.y[i])][static_cast<size_t>(pred[i])]++;
      correct += pred[i] == batch.y[i];
      ++total;
    }
  }
  c.total = static_cast<int64_t>(total);
  c.accuracy = static_cast<double>(correct) / static_cast<double>(total);
  c.per_class_accuracy.resize(static_cast<size_t>(k), 0.0);
  for (int i = 0; i < k; ++i) {
    int64_t row = 0;
    for (int j = 0; j < k; ++j) row += c.counts[i][j];
    if (row > 0) {
      c.per_class_accuracy[i] =
          static_cast<double>(c.counts[i][i]) / static_cast<double>(row);
    }
  }
  return c;
}

std::string to_text(const Confusion& c) {
  const size_t k = c.classes.size();
  size_t name_w = 5;
  for (const auto& n : c.classes) name_w = std::max(name_w, n.size());
  name_w = std::min<size_t>(name_w, 14);

  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(name_w) + 1) << "true\\pred";
  for (size_t j = 0; j < k; ++j) {
    os << std::right << std::setw(7) << c.classes[j].substr(0, 6);
  }
  os << std::right << std::setw(9) << "acc" << "\n";
  for (size_t i = 0; i < k; ++i) {
    os << std::left << std::setw(static_cast<int>(name_w) + 1)
       << c.classes[i].substr(0, name_w);
    for (size_t j = 0; j < k; ++j) {
      os << std::right << std::setw(7) << c.counts[i][j];
    }
    os << std::right << std::setw(9) << std::fixed << std::setprecision(3)
       << c.per_class_accuracy[i] << "\n";
    os.unsetf(std::ios::fixed);
  }
  os << "overall accuracy " << std::fixed << std::setprecision(6) << c.accuracy << " ("
     << c.total << " samples)\n";
  return os.str();
}

}  // namespace statenet
