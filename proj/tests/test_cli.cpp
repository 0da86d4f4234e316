#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "rcfd/cli.hpp"

namespace fs = std::filesystem;
using namespace rcfd;

namespace {

int run(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  args.insert(args.begin(), "rcfd");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("rcfd_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string p(const std::string& rel) const { return (dir / rel).string(); }
  fs::path dir;
};

}  // namespace

TEST_F(CliTest, UsageErrors) {
  std::string err;
  EXPECT_EQ(run({}, nullptr, &err), cli::kExitUsage);
  EXPECT_EQ(run({"bogus"}), cli::kExitUsage);
  EXPECT_EQ(run({"synth"}), cli::kExitUsage);
  EXPECT_EQ(run({"features", "--in", "x", "--out", "y", "--label", "3"}), cli::kExitUsage);
  EXPECT_EQ(run({"evaluate", "--out", p("r.tsv")}), cli::kExitUsage);
  std::string out;
  EXPECT_EQ(run({"--version"}, &out), cli::kExitOk);
  EXPECT_EQ(out, std::string(kVersion) + "\n");
  EXPECT_EQ(run({"--help"}, &out), cli::kExitOk);
  EXPECT_NE(out.find("localize"), std::string::npos);
}

TEST_F(CliTest, RuntimeErrorsExitOne) {
  std::string err;
  EXPECT_EQ(run({"features", "--in", p("missing"), "--out", p("f")}, nullptr, &err), cli::kExitFailure);
  EXPECT_EQ(run({"localize", "--model", p("none.bin"), "--image", p("none.pgm"), "--out", p("m.pgm")}, nullptr, &err),
            cli::kExitFailure);
  EXPECT_NE(err.find("none.bin"), std::string::npos);
  EXPECT_EQ(run({"synth", "--out", p("s"), "--n", "1", "--q1", "0", "--synthetic", "1"}), cli::kExitFailure);
}

TEST_F(CliTest, EndToEndIsDeterministic) {
  ASSERT_EQ(run({"synth", "--out", p("s"), "--synthetic", "6", "--width", "64", "--height", "48", "--train", "4",
                 "--n", "2", "--q1", "85", "--q2", "55", "--seed", "3"}),
            0);
  EXPECT_TRUE(fs::exists(p("s/sc/img_0003.pgm")));
  EXPECT_TRUE(fs::exists(p("s/dc/img_0003.pgm")));
  EXPECT_TRUE(fs::exists(p("s/corpus.tsv")));
  EXPECT_TRUE(fs::exists(p("s/manifest.txt")));
  const auto records = read_corpus_manifest(p("s/corpus.tsv"));
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].q1, 85);

  ASSERT_EQ(run({"features", "--in", p("s/sc"), "--out", p("f/sc"), "--label", "0"}), 0);
  ASSERT_EQ(run({"features", "--in", p("s/dc"), "--out", p("f/dc"), "--label", "1"}), 0);
  const FeatureMatrix f = read_features(p("f/sc/img_0000.feat"));
  EXPECT_EQ(f.rows, block_grid(48, 64).count());
  EXPECT_EQ(f.labels->front(), 0);

  write_file(p("train.cfg"), "epochs=1\nbatch=16\nlr=0.5\n");
  const std::vector<std::string> train_args{"train", "--sc", p("f/sc"), "--dc", p("f/dc"), "--config", p("train.cfg"),
                                            "--lr", "0.001", "--seed", "9"};
  auto with_out = [&](std::vector<std::string> a, const std::string& out) {
    a.push_back("--out");
    a.push_back(out);
    return a;
  };
  ASSERT_EQ(run(with_out(train_args, p("m1.bin"))), 0);
  ASSERT_EQ(run(with_out(train_args, p("m2.bin"))), 0);
  EXPECT_EQ(read_file(p("m1.bin")), read_file(p("m2.bin")));
  const auto manifest = cli::parse_key_values(read_file(p("m1.bin.manifest.txt")));
  EXPECT_EQ(manifest.at("config.lr"), "0.001");
  EXPECT_EQ(manifest.at("config.epochs"), "1");
  EXPECT_EQ(manifest.at("seed"), "9");
  EXPECT_TRUE(fs::exists(p("m1.bin.log.tsv")));

  const std::string image = p("s/forged/forged_0000.pgm");
  ASSERT_EQ(run({"localize", "--model", p("m1.bin"), "--image", image, "--out", p("map1.pgm"), "--overlay",
                 p("ov.pgm")}),
            0);
  ASSERT_EQ(run({"localize", "--model", p("m2.bin"), "--image", image, "--out", p("map2.pgm")}), 0);
  EXPECT_EQ(read_file(p("map1.pgm")), read_file(p("map2.pgm")));
  const GrayImage map = read_pnm(p("map1.pgm"));
  EXPECT_EQ(map.width(), 8u);
  EXPECT_EQ(map.height(), 6u);
  EXPECT_EQ(read_pnm(p("ov.pgm")).width(), 64u);

  ASSERT_EQ(run({"evaluate", "--model", p("m1.bin"), "--corpus", p("s/corpus.tsv"), "--out", p("eval.tsv")}), 0);
  const cli::RunSummary s = cli::parse_summary(read_file(p("eval.tsv.summary.txt")));
  EXPECT_EQ(s.images, 2u);
  EXPECT_EQ(s.q2 - s.q1, -30);
}

TEST_F(CliTest, GridReportAveragesByDelta) {
  cli::RunSummary a;
  a.q1 = 55;
  a.q2 = 65;
  a.fraction = 0.1;
  a.images = 10;
  a.avg_f = 0.4;
  a.success_rate = 0.2;
  cli::RunSummary b = a;
  b.q1 = 85;
  b.q2 = 95;
  b.avg_f = 0.8;
  b.success_rate = 0.6;
  cli::RunSummary c = a;
  c.q1 = 95;
  c.q2 = 55;
  c.avg_f = 0.9;
  fs::create_directories(p("sums"));
  write_file(p("sums/summary_a.txt"), cli::format_summary(a));
  write_file(p("sums/summary_b.txt"), cli::format_summary(b));
  write_file(p("summary_c.txt"), cli::format_summary(c));
  ASSERT_EQ(run({"gridreport", p("sums"), p("summary_c.txt"), "--out", p("grid.tsv")}), 0);
  const std::string text = read_file(p("grid.tsv"));
  EXPECT_NE(text.find("10\t0.10\t2\t0.000000\t0.600000\t0.400000"), std::string::npos) << text;
  EXPECT_NE(text.find("-40\t0.10\t1\t0.000000\t0.900000"), std::string::npos) << text;
  EXPECT_EQ(run({"gridreport", p("empty_dir_missing"), "--out", p("g2.tsv")}), cli::kExitFailure);
}
