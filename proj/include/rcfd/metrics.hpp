#pragma once

#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "rcfd/error.hpp"
#include "rcfd/grid.hpp"

namespace rcfd {

// Positive class = forged.
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + tn + fp + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const ConfusionCounts&) const = default;
};

inline constexpr double kDefaultSuccessThreshold = 2.0 / 3.0;

inline ConfusionCounts confusion(const UnitGrid& pred, const UnitGrid& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw InvalidInput("confusion: map is " + std::to_string(pred.rows()) + "x" + std::to_string(pred.cols()) +
                       " but ground truth is " + std::to_string(truth.rows()) + "x" +
                       std::to_string(truth.cols()));
  ConfusionCounts c;
  const auto& p = pred.cells();
  const auto& t = truth.cells();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] && t[i]) ++c.tp;
    else if (!p[i] && !t[i]) ++c.tn;
    else if (p[i]) ++c.fp;
    else ++c.fn;
  }
  return c;
}

inline double accuracy(const ConfusionCounts& c) {
  if (c.total() == 0) throw InvalidInput("accuracy: no units compared");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

// 0 when nothing was predicted forged.
inline double precision(const ConfusionCounts& c) {
  return c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

// 0 when nothing is forged.
inline double recall(const ConfusionCounts& c) {
  return c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

// Harmonic mean of precision and recall; 0 whenever tp = 0.
inline double f_measure(const ConfusionCounts& c) {
  if (c.tp == 0) return 0.0;
  const double p = precision(c);
  const double r = recall(c);
  return 2.0 * p * r / (p + r);
}

inline double avg_f(const std::vector<double>& f_values) {
  if (f_values.empty()) throw InvalidInput("avg_f: empty list");
  double s = 0.0;
  for (double v : f_values) s += v;
  return s / static_cast<double>(f_values.size());
}

// Fraction of images whose F-measure reaches th.
inline double success_rate(const std::vector<double>& f_values, double th = kDefaultSuccessThreshold) {
  if (f_values.empty()) throw InvalidInput("success_rate: empty list");
  if (!(th >= 0.0 && th <= 1.0)) throw InvalidInput("success_rate: threshold must be in [0, 1]");
  std::size_t hits = 0;
  for (double v : f_values) hits += v >= th;
  return static_cast<double>(hits) / static_cast<double>(f_values.size());
}

struct ImageScore {
  std::string id;
  ConfusionCounts counts;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
};

inline ImageScore score_image(std::string id, const UnitGrid& pred, const UnitGrid& truth) {
  ImageScore s;
  s.id = std::move(id);
  s.counts = confusion(pred, truth);
  s.accuracy = accuracy(s.counts);
  s.precision = precision(s.counts);
  s.recall = recall(s.counts);
  s.f_measure = f_measure(s.counts);
  return s;
}

struct MetricsReport {
  std::vector<ImageScore> per_image;
  double mean_accuracy = 0.0;
  double avg_f = 0.0;
  double success_rate = 0.0;
  double th = kDefaultSuccessThreshold;
};

inline MetricsReport make_report(std::vector<ImageScore> scores, double th = kDefaultSuccessThreshold) {
  if (scores.empty()) throw InvalidInput("make_report: no images scored");
  MetricsReport r;
  r.th = th;
  std::vector<double> f;
  std::vector<double> acc;
  for (const auto& s : scores) {
    f.push_back(s.f_measure);
    acc.push_back(s.accuracy);
  }
  r.avg_f = avg_f(f);
  r.mean_accuracy = avg_f(acc);
  r.success_rate = success_rate(f, th);
  r.per_image = std::move(scores);
  return r;
}

// id \t acc \t P \t R \t F per image, then summary rows.
inline std::string format_report(const MetricsReport& r) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(6);
  os << "#id\tacc\tprecision\trecall\tf_measure\n";
  for (const auto& s : r.per_image)
    os << s.id << '\t' << s.accuracy << '\t' << s.precision << '\t' << s.recall << '\t' << s.f_measure << '\n';
  os << "avg-f\t" << r.avg_f << '\n';
  os << "success-rate\t" << r.success_rate << '\n';
  os << "T_h\t" << r.th << '\n';
  return os.str();
}

}  // namespace rcfd
