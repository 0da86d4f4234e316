#include <gtest/gtest.h>

#include "rcfd/metrics.hpp"

using namespace rcfd;

namespace {

ConfusionCounts counts(std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn) {
  ConfusionCounts c;
  c.tp = tp;
  c.tn = tn;
  c.fp = fp;
  c.fn = fn;
  return c;
}

}  // namespace

TEST(Metrics, Basic) {
  const auto c = counts(50, 30, 10, 10);
  EXPECT_DOUBLE_EQ(accuracy(c), 0.8);
  EXPECT_NEAR(precision(c), 50.0 / 60.0, 1e-15);
  EXPECT_NEAR(recall(c), 50.0 / 60.0, 1e-15);
  EXPECT_NEAR(f_measure(c), 5.0 / 6.0, 1e-12);
}

TEST(Metrics, ZeroDenominators) {
  const auto none = counts(0, 10, 0, 0);
  EXPECT_EQ(precision(none), 0.0);
  EXPECT_EQ(recall(none), 0.0);
  EXPECT_EQ(f_measure(none), 0.0);
  EXPECT_EQ(f_measure(counts(0, 5, 3, 2)), 0.0);
  EXPECT_THROW(accuracy(counts(0, 0, 0, 0)), InvalidInput);
}

TEST(Metrics, SuccessRateAndAverage) {
  EXPECT_NEAR(success_rate({0.7, 0.5, 0.9}, 2.0 / 3.0), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(success_rate({0.7, 0.5, 0.9}), 2.0 / 3.0, 1e-12);
  EXPECT_EQ(kDefaultSuccessThreshold, 2.0 / 3.0);
  EXPECT_EQ(success_rate({2.0 / 3.0}), 1.0);
  EXPECT_NEAR(avg_f({0.7, 0.5, 0.9}), 0.7, 1e-15);
  EXPECT_THROW(avg_f({}), InvalidInput);
  EXPECT_THROW(success_rate({}), InvalidInput);
  EXPECT_THROW(success_rate({0.5}, 1.5), InvalidInput);
}

TEST(Metrics, ConfusionOnFullSizeMap) {
  // 48x64 units; truth is a 15x20 block, prediction is shifted to overlap 250.
  UnitGrid truth(48, 64), pred(48, 64);
  for (std::size_t r = 10; r < 25; ++r)
    for (std::size_t c = 10; c < 30; ++c) truth.set(r, c, true);
  for (std::size_t r = 10; r < 25; ++r)
    for (std::size_t c = 10; c < 30; ++c) {
      const std::size_t k = (r - 10) * 20 + (c - 10);
      if (k < 250) pred.set(r, c, true);
    }
  for (std::size_t c = 0; c < 40; ++c) pred.set(40, c, true);
  const ConfusionCounts cc = confusion(pred, truth);
  EXPECT_EQ(cc.tp, 250u);
  EXPECT_EQ(cc.fn, 50u);
  EXPECT_EQ(cc.fp, 40u);
  EXPECT_EQ(cc.tn, 48u * 64u - 340u);
  EXPECT_EQ(cc.tn, 2732u);
  const ImageScore s = score_image("x", pred, truth);
  EXPECT_NEAR(s.precision, 250.0 / 290.0, 1e-15);
  EXPECT_NEAR(s.recall, 250.0 / 300.0, 1e-15);
  EXPECT_NEAR(s.f_measure, 500.0 / 590.0, 1e-12);
  EXPECT_THROW(confusion(UnitGrid(48, 63), truth), InvalidInput);
}

TEST(Metrics, Report) {
  UnitGrid t(2, 2), p(2, 2);
  t.set(0, 0, true);
  p.set(0, 0, true);
  std::vector<ImageScore> scores{score_image("a", p, t), score_image("b", UnitGrid(2, 2), t)};
  const MetricsReport r = make_report(scores);
  EXPECT_DOUBLE_EQ(r.avg_f, 0.5);
  EXPECT_DOUBLE_EQ(r.success_rate, 0.5);
  EXPECT_DOUBLE_EQ(r.mean_accuracy, 0.875);
  const std::string text = format_report(r);
  EXPECT_NE(text.find("a\t1.000000"), std::string::npos);
  EXPECT_NE(text.find("success-rate\t0.500000"), std::string::npos);
  EXPECT_THROW(make_report({}), InvalidInput);
}
