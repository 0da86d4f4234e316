#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rcfd/error.hpp"
#include "rcfd/image.hpp"
#include "rcfd/random.hpp"

namespace rcfd {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

// Layer sizes. The defaults are the full detector:
// 133 -> conv 131x100 -> pool 65x100 -> conv 63x100 -> pool 31x100 -> 1000 -> 2.
struct Architecture {
  std::size_t input_len = 133;
  std::size_t conv1_filters = 100;
  std::size_t conv2_filters = 100;
  std::size_t kernel = 3;
  std::size_t pool_kernel = 3;
  std::size_t pool_stride = 2;
  std::size_t dense_units = 1000;
  std::size_t classes = 2;

  std::size_t conv1_len() const { return input_len - kernel + 1; }
  std::size_t pool1_len() const { return (conv1_len() - pool_kernel) / pool_stride + 1; }
  std::size_t conv2_len() const { return pool1_len() - kernel + 1; }
  std::size_t pool2_len() const { return (conv2_len() - pool_kernel) / pool_stride + 1; }
  std::size_t flat_len() const { return pool2_len() * conv2_filters; }

  void validate() const {
    if (kernel == 0 || pool_kernel == 0 || pool_stride == 0 || conv1_filters == 0 ||
        conv2_filters == 0 || dense_units == 0 || classes < 2)
      throw InvalidInput("architecture: zero-sized layer");
    if (input_len < kernel || input_len - kernel + 1 < pool_kernel ||
        pool1_len() < kernel || conv2_len() < pool_kernel)
      throw InvalidInput("architecture: input too short for the layer chain");
  }

  bool operator==(const Architecture&) const = default;
};

// Per-feature z-score statistics carried inside the model.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;

  static constexpr double kStdFloor = 1e-8;

  void apply(std::span<const double> in, std::span<double> out) const {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = (in[i] - mean[i]) / stddev[i];
  }
  void invert(std::span<const double> in, std::span<double> out) const {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] * stddev[i] + mean[i];
  }

  bool operator==(const NormStats&) const = default;
};

// Trainable tensors. Also used for gradients (same shapes).
struct Parameters {
  Mat conv1_w;  // F1 x K (single input channel)
  Vec conv1_b;
  Mat conv2_w;  // F2 x (F1 * K), column c * K + k
  Vec conv2_b;
  Mat dense_w;  // D x (F2 * P2), column f * P2 + p
  Vec dense_b;
  Mat logit_w;  // C x D
  Vec logit_b;

  static Parameters zeros(const Architecture& a) {
    Parameters p;
    p.conv1_w = Mat::Zero(a.conv1_filters, a.kernel);
    p.conv1_b = Vec::Zero(a.conv1_filters);
    p.conv2_w = Mat::Zero(a.conv2_filters, a.conv1_filters * a.kernel);
    p.conv2_b = Vec::Zero(a.conv2_filters);
    p.dense_w = Mat::Zero(a.dense_units, a.flat_len());
    p.dense_b = Vec::Zero(a.dense_units);
    p.logit_w = Mat::Zero(a.classes, a.dense_units);
    p.logit_b = Vec::Zero(a.classes);
    return p;
  }

  // Visits (name, contiguous storage) for every tensor, in file order.
  template <typename Fn>
  void for_each(Fn&& fn) {
    fn("conv1.w", std::span<double>(conv1_w.data(), conv1_w.size()));
    fn("conv1.b", std::span<double>(conv1_b.data(), conv1_b.size()));
    fn("conv2.w", std::span<double>(conv2_w.data(), conv2_w.size()));
    fn("conv2.b", std::span<double>(conv2_b.data(), conv2_b.size()));
    fn("dense.w", std::span<double>(dense_w.data(), dense_w.size()));
    fn("dense.b", std::span<double>(dense_b.data(), dense_b.size()));
    fn("logits.w", std::span<double>(logit_w.data(), logit_w.size()));
    fn("logits.b", std::span<double>(logit_b.data(), logit_b.size()));
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    const_cast<Parameters*>(this)->for_each([&](const char* name, std::span<double> s) {
      fn(name, std::span<const double>(s));
    });
  }

  std::size_t count() const {
    std::size_t n = 0;
    for_each([&](const char*, std::span<const double> s) { n += s.size(); });
    return n;
  }

  bool all_finite() const {
    bool ok = true;
    for_each([&](const char*, std::span<const double> s) {
      for (double v : s) ok = ok && std::isfinite(v);
    });
    return ok;
  }

  bool operator==(const Parameters& o) const {
    return conv1_w == o.conv1_w && conv1_b == o.conv1_b && conv2_w == o.conv2_w &&
           conv2_b == o.conv2_b && dense_w == o.dense_w && dense_b == o.dense_b &&
           logit_w == o.logit_w && logit_b == o.logit_b;
  }
};

using Gradients = Parameters;

struct Network {
  Architecture arch;
  Parameters params;
  double dropout_rate = 0.5;
  std::uint64_t rng_seed = 0;
  std::optional<NormStats> norm;

  std::size_t parameter_count() const { return params.count(); }
  bool operator==(const Network&) const = default;
};

// Uniform weights in +-sqrt(6 / fan_in), zero biases.
inline Network init_network(std::uint64_t seed, const Architecture& arch = {}, double dropout_rate = 0.5) {
  arch.validate();
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw InvalidInput("dropout rate must be in [0, 1)");
  Network net;
  net.arch = arch;
  net.params = Parameters::zeros(arch);
  net.dropout_rate = dropout_rate;
  net.rng_seed = seed;
  Rng rng(seed);
  auto fill = [&](Mat& w, std::size_t fan_in) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-bound, bound);
  };
  fill(net.params.conv1_w, arch.kernel);
  fill(net.params.conv2_w, arch.conv1_filters * arch.kernel);
  fill(net.params.dense_w, arch.flat_len());
  fill(net.params.logit_w, arch.dense_units);
  return net;
}

// Everything backward needs from a forward pass over a batch of B inputs.
struct Activations {
  std::size_t batch = 0;
  bool training = false;
  Mat input;                              // B x L0
  Mat conv1;                              // B x (F1 * L1), post-ReLU, [f][t]
  Mat pool1;                              // B x (F1 * P1), [f][p]
  std::vector<std::uint32_t> pool1_arg;   // per pool1 element: column in conv1
  Mat cols2;                              // (B * L2) x (F1 * K) unfolded pool1
  Mat conv2;                              // (B * L2) x F2, post-ReLU
  Mat pool2;                              // B x (F2 * P2), [f][p]
  std::vector<std::uint32_t> pool2_arg;   // per pool2 element: t within the sample's L2 rows
  Mat dense;                              // B x D, post-ReLU, before dropout
  Mat dropout_mask;                       // B x D of {0, 1/keep}; empty at inference
  Mat logits;                             // B x C
  Mat probs;                              // B x C
};

namespace detail {

inline void check_input(const Architecture& a, const Mat& input) {
  if (static_cast<std::size_t>(input.cols()) != a.input_len)
    throw InvalidInput("forward: expected input length " + std::to_string(a.input_len) + ", got " +
                       std::to_string(input.cols()));
  if (!input.allFinite()) throw InvalidInput("forward: non-finite input");
}

// Max over [start, start + kernel) of src(row, base + t); first maximum wins.
inline std::uint32_t argmax_window(const double* src, std::size_t start, std::size_t kernel) {
  std::size_t best = start;
  for (std::size_t t = start + 1; t < start + kernel; ++t)
    if (src[t] > src[best]) best = t;
  return static_cast<std::uint32_t>(best);
}

}  // namespace detail

// Forward pass over the rows of `input`; `act` buffers are reused when the
// shapes already match.
inline void forward_batch_into(const Network& net, const Mat& input, bool training, Rng& rng, Activations& act) {
  const Architecture& a = net.arch;
  const Parameters& w = net.params;
  detail::check_input(a, input);
  const std::size_t B = static_cast<std::size_t>(input.rows());
  const std::size_t L0 = a.input_len, K = a.kernel, F1 = a.conv1_filters, F2 = a.conv2_filters;
  const std::size_t L1 = a.conv1_len(), P1 = a.pool1_len(), L2 = a.conv2_len(), P2 = a.pool2_len();
  const std::size_t PK = a.pool_kernel, PS = a.pool_stride;

  act.batch = B;
  act.training = training;
  act.input = input;

  act.conv1.resize(B, F1 * L1);
  for (std::size_t b = 0; b < B; ++b) {
    const double* x = input.data() + b * L0;
    double* out = act.conv1.data() + b * F1 * L1;
    for (std::size_t f = 0; f < F1; ++f) {
      const double bias = w.conv1_b[f];
      for (std::size_t t = 0; t < L1; ++t) {
        double s = bias;
        for (std::size_t k = 0; k < K; ++k) s += w.conv1_w(f, k) * x[t + k];
        out[f * L1 + t] = s > 0.0 ? s : 0.0;
      }
    }
  }

  act.pool1.resize(B, F1 * P1);
  act.pool1_arg.resize(B * F1 * P1);
  for (std::size_t b = 0; b < B; ++b) {
    const double* src = act.conv1.data() + b * F1 * L1;
    for (std::size_t f = 0; f < F1; ++f)
      for (std::size_t p = 0; p < P1; ++p) {
        const auto arg = detail::argmax_window(src + f * L1, p * PS, PK);
        act.pool1_arg[(b * F1 + f) * P1 + p] = static_cast<std::uint32_t>(f * L1 + arg);
        act.pool1(b, f * P1 + p) = src[f * L1 + arg];
      }
  }

  act.cols2.resize(B * L2, F1 * K);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < L2; ++t) {
      double* row = act.cols2.data() + (b * L2 + t) * F1 * K;
      const double* src = act.pool1.data() + b * F1 * P1;
      for (std::size_t c = 0; c < F1; ++c)
        for (std::size_t k = 0; k < K; ++k) row[c * K + k] = src[c * P1 + t + k];
    }
  act.conv2.noalias() = act.cols2 * w.conv2_w.transpose();
  act.conv2.rowwise() += w.conv2_b.transpose();
  act.conv2 = act.conv2.cwiseMax(0.0);

  act.pool2.resize(B, F2 * P2);
  act.pool2_arg.resize(B * F2 * P2);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t f = 0; f < F2; ++f)
      for (std::size_t p = 0; p < P2; ++p) {
        std::size_t best = p * PS;
        for (std::size_t t = best + 1; t < p * PS + PK; ++t)
          if (act.conv2(b * L2 + t, f) > act.conv2(b * L2 + best, f)) best = t;
        act.pool2_arg[(b * F2 + f) * P2 + p] = static_cast<std::uint32_t>(best);
        act.pool2(b, f * P2 + p) = act.conv2(b * L2 + best, f);
      }

  act.dense.noalias() = act.pool2 * w.dense_w.transpose();
  act.dense.rowwise() += w.dense_b.transpose();
  act.dense = act.dense.cwiseMax(0.0);

  if (training && net.dropout_rate > 0.0) {
    const double keep = 1.0 - net.dropout_rate;
    act.dropout_mask.resize(B, a.dense_units);
    for (Eigen::Index i = 0; i < act.dropout_mask.size(); ++i)
      act.dropout_mask.data()[i] = rng.uniform() < keep ? 1.0 / keep : 0.0;
    act.logits.noalias() = act.dense.cwiseProduct(act.dropout_mask) * w.logit_w.transpose();
  } else {
    act.dropout_mask.resize(0, 0);
    act.logits.noalias() = act.dense * w.logit_w.transpose();
  }
  act.logits.rowwise() += w.logit_b.transpose();

  act.probs.resize(B, a.classes);
  for (std::size_t b = 0; b < B; ++b) {
    const double m = act.logits.row(b).maxCoeff();
    double z = 0.0;
    for (std::size_t c = 0; c < a.classes; ++c) z += (act.probs(b, c) = std::exp(act.logits(b, c) - m));
    act.probs.row(b) /= z;
  }
}

inline Activations forward_batch(const Network& net, const Mat& input, bool training, Rng& rng) {
  Activations act;
  forward_batch_into(net, input, training, rng, act);
  return act;
}

inline Activations forward(const Network& net, std::span<const double> input, bool training, Rng& rng) {
  Mat x(1, static_cast<Eigen::Index>(input.size()));
  std::copy(input.begin(), input.end(), x.data());
  return forward_batch(net, x, training, rng);
}

// Inference-only convenience: class probabilities for one input.
inline std::vector<double> predict_probs(const Network& net, std::span<const double> input) {
  Rng unused(0);
  const Activations act = forward(net, input, false, unused);
  return {act.probs.data(), act.probs.data() + act.probs.size()};
}

inline constexpr double kProbFloor = 1e-12;

// Cross-entropy -log(max(p[label], 1e-12)).
inline double loss(std::span<const double> probs, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size())
    throw InvalidInput("loss: label must be 0 or 1, got " + std::to_string(label));
  return -std::log(std::max(probs[static_cast<std::size_t>(label)], kProbFloor));
}

inline double mean_loss(const Activations& act, std::span<const std::uint8_t> labels) {
  double s = 0.0;
  for (std::size_t b = 0; b < act.batch; ++b)
    s += loss(std::span<const double>(act.probs.data() + b * act.probs.cols(), act.probs.cols()), labels[b]);
  return s / static_cast<double>(act.batch);
}

// Exact gradients of the batch-mean cross-entropy, written into `g` (buffers
// reused when shapes match).
inline void backward_into(const Network& net, const Activations& act, std::span<const std::uint8_t> labels,
                          Gradients& g) {
  const Architecture& a = net.arch;
  const Parameters& w = net.params;
  const std::size_t B = act.batch;
  const std::size_t L0 = a.input_len, K = a.kernel, F1 = a.conv1_filters, F2 = a.conv2_filters;
  const std::size_t L1 = a.conv1_len(), P1 = a.pool1_len(), L2 = a.conv2_len(), P2 = a.pool2_len();
  if (labels.size() != B || static_cast<std::size_t>(act.probs.rows()) != B ||
      static_cast<std::size_t>(act.dense.cols()) != a.dense_units ||
      static_cast<std::size_t>(act.conv1.cols()) != F1 * L1 ||
      static_cast<std::size_t>(act.pool2.cols()) != F2 * P2)
    throw InternalError("backward: activations do not match the network/labels");
  for (auto lab : labels)
    if (lab >= a.classes) throw InvalidInput("backward: label out of range");

  const double inv_b = 1.0 / static_cast<double>(B);

  Mat dlogits = act.probs;
  for (std::size_t b = 0; b < B; ++b) dlogits(b, labels[b]) -= 1.0;
  dlogits *= inv_b;

  const bool dropped = act.dropout_mask.size() != 0;
  if (dropped) {
    g.logit_w.noalias() = dlogits.transpose() * act.dense.cwiseProduct(act.dropout_mask);
  } else {
    g.logit_w.noalias() = dlogits.transpose() * act.dense;
  }
  g.logit_b = dlogits.colwise().sum().transpose();

  Mat dh = dlogits * w.logit_w;
  if (dropped) dh.array() *= act.dropout_mask.array();
  dh = (act.dense.array() > 0.0).select(dh, 0.0);
  g.dense_w.noalias() = dh.transpose() * act.pool2;
  g.dense_b = dh.colwise().sum().transpose();

  const Mat dpool2 = dh * w.dense_w;
  Mat dconv2 = Mat::Zero(B * L2, F2);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t f = 0; f < F2; ++f)
      for (std::size_t p = 0; p < P2; ++p)
        dconv2(b * L2 + act.pool2_arg[(b * F2 + f) * P2 + p], f) += dpool2(b, f * P2 + p);
  dconv2 = (act.conv2.array() > 0.0).select(dconv2, 0.0);
  g.conv2_w.noalias() = dconv2.transpose() * act.cols2;
  g.conv2_b = dconv2.colwise().sum().transpose();

  const Mat dcols2 = dconv2 * w.conv2_w;
  Mat dpool1 = Mat::Zero(B, F1 * P1);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < L2; ++t) {
      const double* row = dcols2.data() + (b * L2 + t) * F1 * K;
      for (std::size_t c = 0; c < F1; ++c)
        for (std::size_t k = 0; k < K; ++k) dpool1(b, c * P1 + t + k) += row[c * K + k];
    }

  Mat dconv1 = Mat::Zero(B, F1 * L1);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < F1 * P1; ++i) dconv1(b, act.pool1_arg[b * F1 * P1 + i]) += dpool1(b, i);
  dconv1 = (act.conv1.array() > 0.0).select(dconv1, 0.0);

  g.conv1_w.setZero(F1, K);
  g.conv1_b.setZero(F1);
  for (std::size_t b = 0; b < B; ++b) {
    const double* x = act.input.data() + b * L0;
    for (std::size_t f = 0; f < F1; ++f)
      for (std::size_t t = 0; t < L1; ++t) {
        const double d = dconv1(b, f * L1 + t);
        if (d == 0.0) continue;
        g.conv1_b[f] += d;
        for (std::size_t k = 0; k < K; ++k) g.conv1_w(f, k) += d * x[t + k];
      }
  }
}

inline Gradients backward(const Network& net, const Activations& act, std::span<const std::uint8_t> labels) {
  Gradients g;
  backward_into(net, act, labels, g);
  return g;
}

inline Gradients backward(const Network& net, const Activations& act, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= net.arch.classes)
    throw InvalidInput("backward: label must be 0 or 1, got " + std::to_string(label));
  const std::uint8_t lab = static_cast<std::uint8_t>(label);
  return backward(net, act, std::span<const std::uint8_t>(&lab, 1));
}

// Plain SGD: p <- p - lr * g. Rejects non-finite gradients without touching the net.
inline void sgd_step(Network& net, const Gradients& grads, double lr) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw InvalidInput("sgd_step: learning rate must be >= 0");
  if (!grads.all_finite()) throw TrainingDiverged("sgd_step: non-finite gradient");
  std::vector<std::span<const double>> gs;
  grads.for_each([&](const char*, std::span<const double> s) { gs.push_back(s); });
  std::size_t i = 0;
  net.params.for_each([&](const char* name, std::span<double> p) {
    const auto g = gs[i++];
    if (g.size() != p.size()) throw InternalError(std::string("sgd_step: shape mismatch in ") + name);
    for (std::size_t k = 0; k < p.size(); ++k) p[k] -= lr * g[k];
  });
}

// ---------------------------------------------------------------------------
// Model file (all integers little-endian):
//   "RCFD-NET" | u16 version
//   f64 dropout | u64 seed | u32 input_len | u32 pool_kernel | u32 pool_stride
//   8 x tensor: u8 tag | u8 rank | u32 dims[rank] | f64 values (row-major)
//   u8 has_norm | [u32 n | f64 mean[n] | f64 std[n]]

inline constexpr std::string_view kModelMagic = "RCFD-NET";
inline constexpr unsigned kModelVersion = 1;

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void uint(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v), 8); }
  void raw(std::string_view s) { out_.append(s); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view in) : in_(in) {}

  std::uint64_t uint(int bytes, const char* what) {
    need(static_cast<std::size_t>(bytes), what);
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }
  std::uint8_t u8(const char* what) { return static_cast<std::uint8_t>(uint(1, what)); }
  double f64(const char* what) { return std::bit_cast<double>(uint(8, what)); }
  std::string_view raw(std::size_t n, const char* what) {
    need(n, what);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n, const char* what) {
    if (in_.size() - pos_ < n)
      throw Truncated(std::string("model file truncated while reading ") + what + " at byte " +
                      std::to_string(pos_));
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_model(const Network& net) {
  const Architecture& a = net.arch;
  detail::ByteWriter w;
  w.raw(kModelMagic);
  w.uint(kModelVersion, 2);
  w.f64(net.dropout_rate);
  w.uint(net.rng_seed, 8);
  w.uint(a.input_len, 4);
  w.uint(a.pool_kernel, 4);
  w.uint(a.pool_stride, 4);
  const std::vector<std::vector<std::size_t>> shapes = {
      {a.conv1_filters, 1, a.kernel}, {a.conv1_filters},
      {a.conv2_filters, a.conv1_filters, a.kernel}, {a.conv2_filters},
      {a.dense_units, a.flat_len()}, {a.dense_units},
      {a.classes, a.dense_units}, {a.classes}};
  std::uint8_t tag = 1;
  net.params.for_each([&](const char*, std::span<const double> s) {
    const auto& shape = shapes[tag - 1];
    w.u8(tag++);
    w.u8(static_cast<std::uint8_t>(shape.size()));
    for (auto d : shape) w.uint(d, 4);
    for (double v : s) w.f64(v);
  });
  w.u8(net.norm ? 1 : 0);
  if (net.norm) {
    w.uint(net.norm->mean.size(), 4);
    for (double v : net.norm->mean) w.f64(v);
    for (double v : net.norm->stddev) w.f64(v);
  }
  return w.take();
}

inline Network decode_model(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (bytes.size() < kModelMagic.size() || bytes.substr(0, kModelMagic.size()) != kModelMagic)
    throw BadMagic("not a model file: expected magic RCFD-NET");
  r.raw(kModelMagic.size(), "magic");
  const auto version = static_cast<unsigned>(r.uint(2, "version"));
  if (version != kModelVersion) throw VersionMismatch(version, kModelVersion);

  Network net;
  net.dropout_rate = r.f64("dropout rate");
  net.rng_seed = r.uint(8, "seed");
  Architecture a;
  a.input_len = r.uint(4, "input length");
  a.pool_kernel = r.uint(4, "pool kernel");
  a.pool_stride = r.uint(4, "pool stride");

  std::vector<std::vector<std::size_t>> shapes;
  std::vector<std::vector<double>> tensors;
  for (std::uint8_t expect = 1; expect <= 8; ++expect) {
    const auto tag = r.u8("layer tag");
    if (tag != expect)
      throw FormatError("model file: expected layer tag " + std::to_string(expect) + ", found " +
                        std::to_string(tag));
    const auto rank = r.u8("rank");
    std::vector<std::size_t> shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = r.uint(4, "shape");
      n *= d;
    }
    if (n > (bytes.size() / 8) + 1) throw Truncated("model file: tensor larger than the file");
    std::vector<double> t(n);
    for (auto& v : t) v = r.f64("parameters");
    shapes.push_back(std::move(shape));
    tensors.push_back(std::move(t));
  }
  auto bad = [] { return FormatError("model file: inconsistent layer shapes"); };
  if (shapes[0].size() != 3 || shapes[2].size() != 3 || shapes[4].size() != 2 || shapes[6].size() != 2)
    throw bad();
  a.conv1_filters = shapes[0][0];
  a.kernel = shapes[0][2];
  a.conv2_filters = shapes[2][0];
  a.dense_units = shapes[4][0];
  a.classes = shapes[6][0];
  try {
    a.validate();
  } catch (const InvalidInput&) {
    throw bad();
  }
  if (shapes[0][1] != 1 || shapes[2][1] != a.conv1_filters || shapes[2][2] != a.kernel ||
      shapes[4][1] != a.flat_len() || shapes[6][1] != a.dense_units)
    throw bad();
  net.arch = a;
  net.params = Parameters::zeros(a);
  std::size_t i = 0;
  bool sizes_ok = true;
  net.params.for_each([&](const char*, std::span<double> s) {
    const auto& t = tensors[i++];
    if (t.size() != s.size()) {
      sizes_ok = false;
      return;
    }
    std::copy(t.begin(), t.end(), s.begin());
  });
  if (!sizes_ok) throw bad();

  const auto has_norm = r.u8("norm flag");
  if (has_norm > 1) throw FormatError("model file: bad norm flag");
  if (has_norm) {
    const std::size_t n = r.uint(4, "norm length");
    if (n != a.input_len) throw FormatError("model file: norm length does not match input length");
    NormStats ns;
    ns.mean.resize(n);
    ns.stddev.resize(n);
    for (auto& v : ns.mean) v = r.f64("norm mean");
    for (auto& v : ns.stddev) v = r.f64("norm std");
    net.norm = std::move(ns);
  }
  if (!r.done()) throw FormatError("model file: trailing bytes after norm block");
  return net;
}

inline void save_model(const Network& net, const std::filesystem::path& path) {
  write_file(path, encode_model(net));
}

inline Network load_model(const std::filesystem::path& path) { return decode_model(read_file(path)); }

}  // namespace rcfd
