#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rcfd/error.hpp"
#include "rcfd/features.hpp"
#include "rcfd/net.hpp"
#include "rcfd/random.hpp"

namespace rcfd {

struct TrainConfig {
  int q1 = 55;
  int q2 = 95;
  int epochs = 20;
  std::size_t batch_size = 128;
  double lr = 0.001;
  double dropout = 0.5;
  std::uint64_t seed = 0;
  double val_fraction = 0.1;
  int patience = 5;  // early stop after this many epochs without a validation gain
  Architecture arch;

  void validate() const {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw InvalidInput("lr must be > 0");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidInput("dropout must be in [0, 1)");
    if (batch_size < 1) throw InvalidInput("batch size must be >= 1");
    if (epochs < 0) throw InvalidInput("epochs must be >= 0");
    if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw InvalidInput("val fraction must be in [0, 1)");
    if (patience < 1) throw InvalidInput("patience must be >= 1");
    quant_table(q1);
    quant_table(q2);
    arch.validate();
  }
};

// Applies one `key=value` setting; returns false for an unknown key.
inline bool set_config_value(TrainConfig& c, const std::string& key, const std::string& value) {
  try {
    if (key == "q1") c.q1 = std::stoi(value);
    else if (key == "q2") c.q2 = std::stoi(value);
    else if (key == "epochs") c.epochs = std::stoi(value);
    else if (key == "batch" || key == "batch_size") c.batch_size = std::stoul(value);
    else if (key == "lr") c.lr = std::stod(value);
    else if (key == "dropout") c.dropout = std::stod(value);
    else if (key == "seed") c.seed = std::stoull(value);
    else if (key == "val" || key == "val_fraction") c.val_fraction = std::stod(value);
    else if (key == "patience") c.patience = std::stoi(value);
    else return false;
  } catch (const std::logic_error&) {
    throw InvalidInput("config: bad value for " + key + ": '" + value + "'");
  }
  return true;
}

// Flat key=value text; '#' starts a comment line.
inline TrainConfig parse_config(std::string_view text, TrainConfig base = {}) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidInput("config line " + std::to_string(lineno) + ": missing '='");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    if (!set_config_value(base, key, trim(line.substr(eq + 1))))
      throw InvalidInput("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  return base;
}

inline std::string format_config(const TrainConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "q1=" << c.q1 << "\nq2=" << c.q2 << "\nepochs=" << c.epochs << "\nbatch=" << c.batch_size
     << "\nlr=" << c.lr << "\ndropout=" << c.dropout << "\nseed=" << c.seed << "\nval=" << c.val_fraction
     << "\npatience=" << c.patience << "\n";
  return os.str();
}

struct Provenance {
  std::size_t image = 0;
  Anchor anchor;
};

// Rows x 133 features with 0 = single compressed, 1 = double compressed.
struct LabeledSet {
  std::vector<double> rows;
  std::vector<std::uint8_t> labels;
  std::vector<Provenance> provenance;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(rows).subspan(i * kFeatureLen, kFeatureLen);
  }
  void push_back(std::span<const double> r, std::uint8_t label, Provenance p) {
    rows.insert(rows.end(), r.begin(), r.end());
    labels.push_back(label);
    provenance.push_back(p);
  }
};

// Metadata-only count of what build_labeled_set would produce.
struct DatasetPlan {
  std::size_t single_rows = 0;
  std::size_t dual_rows = 0;
  std::size_t total() const noexcept { return single_rows + dual_rows; }
};

// dims are (height, width) per image.
inline DatasetPlan plan_dataset(std::span<const std::pair<std::size_t, std::size_t>> single,
                                std::span<const std::pair<std::size_t, std::size_t>> dual) {
  DatasetPlan p;
  for (auto [h, w] : single) p.single_rows += block_grid(h, w).count();
  for (auto [h, w] : dual) p.dual_rows += block_grid(h, w).count();
  return p;
}

// Concatenates F_SC (label 0) and F_DC (label 1) and Fisher-Yates shuffles the
// rows. single[i] and dual[i] are assumed to come from source image i.
inline LabeledSet build_labeled_set(const std::vector<FeatureMatrix>& single,
                                    const std::vector<FeatureMatrix>& dual, std::uint64_t seed) {
  if (single.empty() || dual.empty()) throw InvalidInput("build_labeled_set: both feature lists must be nonempty");
  LabeledSet merged;
  auto add = [&](const std::vector<FeatureMatrix>& list, std::uint8_t label) {
    for (std::size_t img = 0; img < list.size(); ++img) {
      const auto& f = list[img];
      for (std::size_t i = 0; i < f.rows; ++i)
        merged.push_back(f.row(i), label, {img, i < f.anchors.size() ? f.anchors[i] : Anchor{}});
    }
  };
  add(single, 0);
  add(dual, 1);

  std::vector<std::size_t> perm(merged.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  Rng rng(mix_seed(seed, 0x5f1));
  rng.shuffle(perm.begin(), perm.end());

  LabeledSet out;
  out.rows.reserve(merged.rows.size());
  out.labels.reserve(merged.size());
  out.provenance.reserve(merged.size());
  for (auto i : perm) out.push_back(merged.row(i), merged.labels[i], merged.provenance[i]);
  return out;
}

inline LabeledSet subset(const LabeledSet& s, std::span<const std::size_t> idx) {
  LabeledSet out;
  out.rows.reserve(idx.size() * kFeatureLen);
  for (auto i : idx) out.push_back(s.row(i), s.labels[i], s.provenance[i]);
  return out;
}

// Splits by source image: a seeded round(val_fraction * images) of the
// distinct image ids (at least one when val_fraction > 0 and there are >= 2
// images) go to validation, with every row they own.
inline std::pair<LabeledSet, LabeledSet> split_by_image(const LabeledSet& s, double val_fraction,
                                                        std::uint64_t seed) {
  std::set<std::size_t> ids;
  for (const auto& p : s.provenance) ids.insert(p.image);
  std::vector<std::size_t> order(ids.begin(), ids.end());
  Rng rng(mix_seed(seed, 0x5b1));
  rng.shuffle(order.begin(), order.end());
  std::size_t n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(order.size())));
  if (val_fraction > 0.0 && n_val == 0 && order.size() >= 2) n_val = 1;
  if (n_val >= order.size()) n_val = order.size() - 1;
  const std::set<std::size_t> val_ids(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> tr;
  std::vector<std::size_t> va;
  for (std::size_t i = 0; i < s.size(); ++i) (val_ids.contains(s.provenance[i].image) ? va : tr).push_back(i);
  return {subset(s, tr), subset(s, va)};
}

// Per-feature mean and population standard deviation, std floored at 1e-8.
inline NormStats fit_norm(const LabeledSet& s) {
  if (s.size() < 2) throw InvalidInput("fit_norm: need at least 2 rows, got " + std::to_string(s.size()));
  NormStats ns;
  ns.mean.assign(kFeatureLen, 0.0);
  ns.stddev.assign(kFeatureLen, 0.0);
  const double n = static_cast<double>(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto r = s.row(i);
    for (std::size_t k = 0; k < kFeatureLen; ++k) ns.mean[k] += r[k];
  }
  for (auto& m : ns.mean) m /= n;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto r = s.row(i);
    for (std::size_t k = 0; k < kFeatureLen; ++k) {
      const double d = r[k] - ns.mean[k];
      ns.stddev[k] += d * d;
    }
  }
  for (auto& v : ns.stddev) v = std::max(std::sqrt(v / n), NormStats::kStdFloor);
  return ns;
}

inline void normalize_in_place(LabeledSet& s, const NormStats& ns) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    std::span<double> r(s.rows.data() + i * kFeatureLen, kFeatureLen);
    ns.apply(r, r);
  }
}

namespace detail {

// Argmax class per row; rows are normalized with `ns` first when given.
inline std::vector<std::uint8_t> classify(const Network& net, std::span<const double> rows,
                                          const NormStats* ns, std::size_t chunk = 256) {
  const std::size_t L = net.arch.input_len;
  const std::size_t n = rows.size() / L;
  std::vector<std::uint8_t> out(n);
  Rng unused(0);
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t m = std::min(chunk, n - start);
    Mat x(m, L);
    for (std::size_t i = 0; i < m; ++i) {
      const auto src = rows.subspan((start + i) * L, L);
      std::span<double> dst(x.data() + i * L, L);
      if (ns) ns->apply(src, dst);
      else std::copy(src.begin(), src.end(), dst.begin());
    }
    const Activations act = forward_batch(net, x, false, unused);
    for (std::size_t i = 0; i < m; ++i) out[start + i] = act.probs(i, 1) > act.probs(i, 0) ? 1 : 0;
  }
  return out;
}

inline double accuracy_of(const std::vector<std::uint8_t>& pred, const std::vector<std::uint8_t>& labels) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == labels[i];
  return static_cast<double>(ok) / static_cast<double>(pred.size());
}

}  // namespace detail

// Class predictions for raw (unnormalized) rows, using the model's norm stats.
inline std::vector<std::uint8_t> classify_rows(const Network& net, std::span<const double> raw_rows) {
  if (!net.norm) throw InvalidModel("model carries no normalization statistics");
  return detail::classify(net, raw_rows, &*net.norm);
}

// Fraction of correctly classified rows of a raw (unnormalized) set.
inline double block_accuracy(const Network& net, const LabeledSet& s) {
  if (s.size() == 0) throw InvalidInput("block_accuracy: empty set");
  return detail::accuracy_of(classify_rows(net, s.rows), s.labels);
}

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = std::numeric_limits<double>::quiet_NaN();  // NaN without a validation split
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  bool early_stopped = false;

  // epoch \t mean-loss \t train-acc \t val-acc \t wall-seconds
  std::string format() const {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    for (const auto& e : epochs) {
      os.precision(6);
      os << e.epoch << '\t' << e.mean_loss << '\t' << e.train_acc << '\t';
      if (std::isnan(e.val_acc)) os << "nan";
      else os << e.val_acc;
      os.precision(3);
      os << '\t' << e.seconds << '\n';
    }
    return os.str();
  }
};

struct TrainResult {
  Network net;
  TrainLog log;
  NormStats norm;
  std::size_t train_rows = 0;
  std::size_t val_rows = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Mini-batch SGD over the image-level training split. Deterministic in
// (config, set): all randomness derives from config.seed.
inline TrainResult train(const TrainConfig& config, const LabeledSet& set, const EpochCallback& on_epoch = {}) {
  config.validate();
  if (set.size() == 0) throw InvalidInput("train: empty labeled set");
  auto [train_set, val_set] = split_by_image(set, config.val_fraction, config.seed);

  TrainResult result;
  result.norm = fit_norm(train_set);
  normalize_in_place(train_set, result.norm);
  normalize_in_place(val_set, result.norm);
  result.train_rows = train_set.size();
  result.val_rows = val_set.size();

  Network net = init_network(config.seed, config.arch, config.dropout);
  net.norm = result.norm;

  const std::size_t L = config.arch.input_len;
  const std::size_t n = train_set.size();
  std::vector<std::size_t> order(n);
  Activations act;
  Gradients g;
  double best_val = -1.0;
  int stale = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng shuffle_rng(mix_seed(config.seed, 0x10000 + static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order.begin(), order.end());
    Rng dropout_rng(mix_seed(config.seed, 0x20000 + static_cast<std::uint64_t>(epoch)));

    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size, ++batch_no) {
      const std::size_t m = std::min(config.batch_size, n - start);
      Mat x(m, L);
      std::vector<std::uint8_t> labels(m);
      for (std::size_t i = 0; i < m; ++i) {
        const auto r = train_set.row(order[start + i]);
        std::copy(r.begin(), r.end(), x.data() + i * L);
        labels[i] = train_set.labels[order[start + i]];
      }
      forward_batch_into(net, x, true, dropout_rng, act);
      const double batch_loss = mean_loss(act, labels);
      if (!std::isfinite(batch_loss))
        throw TrainingDiverged("training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                               ", batch " + std::to_string(batch_no));
      loss_sum += batch_loss * static_cast<double>(m);
      for (std::size_t i = 0; i < m; ++i) correct += (act.probs(i, 1) > act.probs(i, 0)) == (labels[i] == 1);
      backward_into(net, act, labels, g);
      try {
        sgd_step(net, g, config.lr);
      } catch (const TrainingDiverged&) {
        throw TrainingDiverged("training diverged: non-finite gradient at epoch " + std::to_string(epoch) +
                               ", batch " + std::to_string(batch_no));
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.mean_loss = loss_sum / static_cast<double>(n);
    rec.train_acc = static_cast<double>(correct) / static_cast<double>(n);
    if (val_set.size() > 0) {
      rec.val_acc = detail::accuracy_of(detail::classify(net, val_set.rows, nullptr), val_set.labels);
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (val_set.size() > 0) {
      if (rec.val_acc > best_val) {
        best_val = rec.val_acc;
        stale = 0;
      } else if (++stale >= config.patience) {
        result.log.early_stopped = true;
        break;
      }
    }
  }
  result.net = std::move(net);
  return result;
}

}  // namespace rcfd
