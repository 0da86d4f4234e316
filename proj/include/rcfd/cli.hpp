#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rcfd/codec.hpp"
#include "rcfd/error.hpp"
#include "rcfd/features.hpp"
#include "rcfd/image.hpp"
#include "rcfd/localize.hpp"
#include "rcfd/metrics.hpp"
#include "rcfd/net.hpp"
#include "rcfd/parallel.hpp"
#include "rcfd/pipeline.hpp"
#include "rcfd/tamper.hpp"
#include "rcfd/version.hpp"

namespace rcfd::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// ---------------------------------------------------------------------------
// Run manifest: one key=value file per run, written next to the outputs.
// Everything except wall_seconds is a function of the flags and inputs.

class RunManifest {
 public:
  explicit RunManifest(std::string subcommand) : subcommand_(std::move(subcommand)) {}

  template <typename T>
  void set(const std::string& key, const T& value) {
    std::ostringstream os;
    os.precision(17);
    os << value;
    entries_.emplace_back(key, os.str());
  }

  std::string format(double wall_seconds) const {
    std::ostringstream os;
    os << "subcommand=" << subcommand_ << "\n";
    os << "version=" << kVersion << "\n";
    for (const auto& [k, v] : entries_) os << k << "=" << v << "\n";
    os << std::fixed << std::setprecision(3) << "wall_seconds=" << wall_seconds << "\n";
    return os.str();
  }

  void write(const fs::path& path, double wall_seconds) const { write_file(path, format(wall_seconds)); }

 private:
  std::string subcommand_;
  std::vector<std::pair<std::string, std::string>> entries_;
};

inline fs::path manifest_for_file(const fs::path& output) {
  return fs::path(output.string() + ".manifest.txt");
}

// Runs fn, prefixing any library error with the file it concerns.
template <typename Fn>
auto at_file(const fs::path& path, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    const std::string what = e.what();
    if (what.find(path.string()) != std::string::npos) throw;
    throw Error(path.string() + ": " + what);
  }
}

inline std::vector<fs::path> list_files(const fs::path& dir, std::initializer_list<std::string_view> exts) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension().string();
    if (std::find(exts.begin(), exts.end(), ext) != exts.end()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::string numbered(const std::string& prefix, std::size_t i, const std::string& ext) {
  std::ostringstream os;
  os << prefix << std::setw(4) << std::setfill('0') << i << ext;
  return os.str();
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Key=value summaries and the per-(QF2 - QF1) aggregation.

inline std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

struct RunSummary {
  int q1 = 0;
  int q2 = 0;
  double fraction = 0.0;
  std::size_t images = 0;
  double mean_accuracy = 0.0;
  double avg_f = 0.0;
  double success_rate = 0.0;
  double th = kDefaultSuccessThreshold;
};

inline std::string format_summary(const RunSummary& s) {
  std::ostringstream os;
  os.precision(17);
  os << "q1=" << s.q1 << "\nq2=" << s.q2 << "\nfraction=" << s.fraction << "\nimages=" << s.images
     << "\nmean_accuracy=" << s.mean_accuracy << "\navg_f=" << s.avg_f << "\nsuccess_rate=" << s.success_rate
     << "\nth=" << s.th << "\n";
  return os.str();
}

inline RunSummary parse_summary(std::string_view text) {
  const auto kv = parse_key_values(text);
  auto get = [&](const char* key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw InvalidInput(std::string("summary: missing key ") + key);
    return it->second;
  };
  RunSummary s;
  try {
    s.q1 = std::stoi(get("q1"));
    s.q2 = std::stoi(get("q2"));
    s.fraction = std::stod(get("fraction"));
    s.images = std::stoul(get("images"));
    s.mean_accuracy = std::stod(get("mean_accuracy"));
    s.avg_f = std::stod(get("avg_f"));
    s.success_rate = std::stod(get("success_rate"));
    s.th = std::stod(get("th"));
  } catch (const std::logic_error&) {
    throw InvalidInput("summary: malformed number");
  }
  return s;
}

struct GridRow {
  int delta = 0;  // QF2 - QF1
  double fraction = 0.0;
  std::size_t runs = 0;
  double mean_accuracy = 0.0;
  double avg_f = 0.0;
  double success_rate = 0.0;
};

// Averages runs sharing (QF2 - QF1, fraction); rows sorted by fraction then delta.
inline std::vector<GridRow> aggregate_by_delta(const std::vector<RunSummary>& runs) {
  std::map<std::pair<long long, int>, GridRow> groups;
  for (const auto& r : runs) {
    const auto key = std::make_pair(std::llround(r.fraction * 1e6), r.q2 - r.q1);
    auto& g = groups[key];
    g.delta = r.q2 - r.q1;
    g.fraction = r.fraction;
    ++g.runs;
    g.mean_accuracy += r.mean_accuracy;
    g.avg_f += r.avg_f;
    g.success_rate += r.success_rate;
  }
  std::vector<GridRow> out;
  for (auto& [k, g] : groups) {
    const double n = static_cast<double>(g.runs);
    g.mean_accuracy /= n;
    g.avg_f /= n;
    g.success_rate /= n;
    out.push_back(g);
  }
  return out;
}

inline std::string format_grid(const std::vector<GridRow>& rows) {
  std::ostringstream os;
  os << "#q2_minus_q1\tfraction\truns\taccuracy\tf_measure\tsuccess_rate\n";
  os << std::fixed;
  for (const auto& r : rows)
    os << r.delta << '\t' << std::setprecision(2) << r.fraction << '\t' << r.runs << '\t' << std::setprecision(6)
       << r.mean_accuracy << '\t' << r.avg_f << '\t' << r.success_rate << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Subcommand implementations

struct SynthOptions {
  fs::path out;
  fs::path source;
  std::size_t synthetic = 0;
  std::size_t width = 512;
  std::size_t height = 384;
  int q1 = 55;
  int q2 = 95;
  double fraction = 0.30;
  std::size_t n = 20;
  std::size_t train = 0;
  std::uint64_t seed = 0;
};

// Source images: from a directory, or generated textures.
inline std::vector<std::pair<std::string, GrayImage>> load_sources(const fs::path& source_dir, std::size_t count,
                                                                   std::size_t width, std::size_t height,
                                                                   std::uint64_t seed, const fs::path& write_dir) {
  std::vector<std::pair<std::string, GrayImage>> out;
  if (!source_dir.empty()) {
    const auto files = list_files(source_dir, {".pgm", ".ppm"});
    if (files.size() < count)
      throw InvalidInput(source_dir.string() + ": need " + std::to_string(count) + " images, found " +
                         std::to_string(files.size()));
    for (std::size_t i = 0; i < count; ++i)
      out.emplace_back(files[i].string(), at_file(files[i], [&] { return read_pnm(files[i]); }));
    return out;
  }
  if (!write_dir.empty()) fs::create_directories(write_dir);
  out.resize(count);
  parallel_for(count, [&](std::size_t i) {
    GrayImage img = synthetic_texture(width, height, mix_seed(seed, 0x50000 + i));
    std::string name = "synthetic:" + std::to_string(i);
    if (!write_dir.empty()) {
      const fs::path p = write_dir / numbered("src_", i, ".pgm");
      write_pgm(p, img);
      name = p.string();
    }
    out[i] = {std::move(name), std::move(img)};
  });
  return out;
}

inline void run_synth(const SynthOptions& o, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  quant_table(o.q1);
  quant_table(o.q2);
  const std::size_t total = o.train + o.n;
  if (total == 0) throw InvalidInput("synth: nothing to do (--n and --train are both 0)");
  if (!o.source.empty() && o.synthetic > 0) throw InvalidInput("synth: --source and --synthetic are exclusive");
  if (o.source.empty() && o.synthetic > 0 && o.synthetic < total)
    throw InvalidInput("synth: --synthetic " + std::to_string(o.synthetic) + " is fewer than --train + --n = " +
                       std::to_string(total));
  fs::create_directories(o.out);
  const auto sources = load_sources(o.source, total, o.width, o.height, o.seed,
                                    o.source.empty() ? o.out / "sources" : fs::path());

  if (o.train > 0) {
    fs::create_directories(o.out / "sc");
    fs::create_directories(o.out / "dc");
    parallel_for(o.train, [&](std::size_t i) {
      const GrayImage single = compress(sources[i].second, o.q1);
      write_pgm(o.out / "sc" / numbered("img_", i, ".pgm"), single);
      write_pgm(o.out / "dc" / numbered("img_", i, ".pgm"), compress(single, o.q2));
    });
  }

  std::vector<CorpusRecord> records(o.n);
  if (o.n > 0) {
    fs::create_directories(o.out / "forged");
    fs::create_directories(o.out / "masks");
    parallel_for(o.n, [&](std::size_t k) {
      const auto& [name, img] = sources[o.train + k];
      const std::uint64_t seed = mix_seed(o.seed, 0x60000 + k);
      const ForgedImage f = at_file(name, [&] { return make_forged(img, o.q1, o.q2, o.fraction, seed); });
      CorpusRecord r;
      r.id = numbered("forged_", k, "");
      r.source = name;
      r.q1 = o.q1;
      r.q2 = o.q2;
      r.fraction = o.fraction;
      r.seed = seed;
      r.rect = f.rect;
      r.forged = "forged/" + r.id + ".pgm";
      r.mask = "masks/" + numbered("mask_", k, ".pgm");
      write_pgm(o.out / r.forged, f.image);
      write_pgm(o.out / r.mask, grid_to_image(f.mask));
      records[k] = std::move(r);
    });
    write_corpus_manifest(o.out / "corpus.tsv", records);
  }

  RunManifest m("synth");
  m.set("q1", o.q1);
  m.set("q2", o.q2);
  m.set("fraction", o.fraction);
  m.set("n", o.n);
  m.set("train", o.train);
  m.set("seed", o.seed);
  m.set("input.source", o.source.empty() ? std::string("synthetic") : o.source.string());
  if (o.source.empty()) {
    m.set("synthetic.width", o.width);
    m.set("synthetic.height", o.height);
  }
  m.set("output.dir", o.out.string());
  m.write(o.out / "manifest.txt", seconds_since(t0));
  log << "synth: " << o.train << " training pairs, " << o.n << " forged images -> " << o.out.string() << "\n";
}

struct FeaturesOptions {
  fs::path in;
  fs::path out;
  int label = -1;
};

inline void run_features(const FeaturesOptions& o, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto files = list_files(o.in, {".pgm", ".ppm"});
  if (files.empty()) throw InvalidInput(o.in.string() + ": no .pgm/.ppm images");
  fs::create_directories(o.out);
  std::size_t rows = 0;
  for (const auto& file : files) {
    at_file(file, [&] {
      FeatureMatrix f = image_features(read_pnm(file));
      if (o.label >= 0) f.labels.emplace(f.rows, static_cast<std::uint8_t>(o.label));
      write_features(o.out / (file.stem().string() + ".feat"), f);
      rows += f.rows;
    });
  }
  RunManifest m("features");
  m.set("label", o.label < 0 ? std::string("none") : std::to_string(o.label));
  m.set("images", files.size());
  m.set("rows", rows);
  m.set("input.dir", o.in.string());
  m.set("output.dir", o.out.string());
  m.write(o.out / "manifest.txt", seconds_since(t0));
  log << "features: " << files.size() << " images, " << rows << " rows -> " << o.out.string() << "\n";
}

// Reads paired feature files (matched by file stem) into per-class lists.
inline std::pair<std::vector<FeatureMatrix>, std::vector<FeatureMatrix>> load_feature_pairs(const fs::path& sc_dir,
                                                                                              const fs::path& dc_dir) {
  const auto sc = list_files(sc_dir, {".feat"});
  if (sc.empty()) throw InvalidInput(sc_dir.string() + ": no .feat files");
  std::vector<FeatureMatrix> single;
  std::vector<FeatureMatrix> dual;
  for (const auto& s : sc) {
    const fs::path d = dc_dir / s.filename();
    if (!fs::exists(d)) throw InvalidInput(d.string() + ": missing double-compressed counterpart of " + s.string());
    single.push_back(at_file(s, [&] { return read_features(s); }));
    dual.push_back(at_file(d, [&] { return read_features(d); }));
  }
  if (list_files(dc_dir, {".feat"}).size() != sc.size())
    throw InvalidInput(dc_dir.string() + ": file set differs from " + sc_dir.string());
  return {std::move(single), std::move(dual)};
}

struct TrainOptions {
  fs::path sc;
  fs::path dc;
  fs::path out;
  fs::path log_path;
  TrainConfig config;
};

inline void run_train(const TrainOptions& o, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  o.config.validate();
  auto [single, dual] = load_feature_pairs(o.sc, o.dc);
  const LabeledSet set = build_labeled_set(single, dual, o.config.seed);
  single.clear();
  dual.clear();
  log << "train: " << set.size() << " rows\n";
  const TrainResult r = train(o.config, set, [&](const EpochRecord& e) {
    log << "epoch " << e.epoch << " loss " << e.mean_loss << " train-acc " << e.train_acc << " val-acc "
        << e.val_acc << "\n";
  });
  const fs::path log_path = o.log_path.empty() ? fs::path(o.out.string() + ".log.tsv") : o.log_path;
  if (o.out.has_parent_path()) fs::create_directories(o.out.parent_path());
  save_model(r.net, o.out);
  write_file(log_path, r.log.format());

  RunManifest m("train");
  std::istringstream cfg(format_config(o.config));
  for (std::string line; std::getline(cfg, line);) {
    const auto eq = line.find('=');
    m.set("config." + line.substr(0, eq), line.substr(eq + 1));
  }
  m.set("seed", o.config.seed);
  m.set("rows.train", r.train_rows);
  m.set("rows.val", r.val_rows);
  m.set("epochs.run", r.log.epochs.size());
  m.set("input.sc", o.sc.string());
  m.set("input.dc", o.dc.string());
  m.set("output.model", o.out.string());
  m.set("output.log", log_path.string());
  m.write(manifest_for_file(o.out), seconds_since(t0));
}

struct LocalizeOptions {
  fs::path model;
  fs::path image;
  fs::path out;
  fs::path overlay;
  double tau = kDefaultVerdictTau;
};

inline void run_localize(const LocalizeOptions& o, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const Network net = at_file(o.model, [&] { return load_model(o.model); });
  const GrayImage img = at_file(o.image, [&] { return read_pnm(o.image); });
  const UnitMap map = at_file(o.model, [&] { return predict_map(net, img); });
  write_pgm(o.out, grid_to_image(map.units));
  if (!o.overlay.empty()) write_pgm(o.overlay, overlay_image(img, map.units));
  const Verdict v = image_verdict(map, o.tau);
  RunManifest m("localize");
  m.set("tau", o.tau);
  m.set("verdict", to_string(v));
  m.set("units.forged", map.units.count());
  m.set("units.total", map.units.size());
  m.set("input.model", o.model.string());
  m.set("input.image", o.image.string());
  m.set("output.map", o.out.string());
  if (!o.overlay.empty()) m.set("output.overlay", o.overlay.string());
  m.write(manifest_for_file(o.out), seconds_since(t0));
  log << o.image.string() << "\t" << to_string(v) << "\t" << map.units.count() << "/" << map.units.size() << "\n";
}

// Scores every record of a corpus manifest; paths are relative to its directory.
inline MetricsReport evaluate_corpus(const Network& net, const fs::path& corpus, double th) {
  const auto records = read_corpus_manifest(corpus);
  if (records.empty()) throw InvalidInput(corpus.string() + ": no records");
  const fs::path base = corpus.parent_path();
  std::vector<ImageScore> scores;
  for (const auto& r : records) {
    const fs::path img_path = base / r.forged;
    const fs::path mask_path = base / r.mask;
    const GrayImage img = at_file(img_path, [&] { return read_pnm(img_path); });
    const UnitGrid truth = at_file(mask_path, [&] { return image_to_grid(read_pnm(mask_path)); });
    const UnitMap pred = predict_map(net, img);
    scores.push_back(at_file(mask_path, [&] { return score_image(r.id, pred.units, truth); }));
  }
  return make_report(std::move(scores), th);
}

struct EvaluateOptions {
  fs::path model;
  fs::path corpus;
  fs::path out;
  fs::path summary;
  double th = kDefaultSuccessThreshold;
  // grid sweep
  bool grid = false;
  fs::path models_dir;
  std::vector<int> q1_list = {55, 65, 75, 85, 95};
  std::vector<int> q2_list = {55, 65, 75, 85, 95};
  SynthOptions synth;
};

inline RunSummary summarize(const MetricsReport& r, int q1, int q2, double fraction) {
  RunSummary s;
  s.q1 = q1;
  s.q2 = q2;
  s.fraction = fraction;
  s.images = r.per_image.size();
  s.mean_accuracy = r.mean_accuracy;
  s.avg_f = r.avg_f;
  s.success_rate = r.success_rate;
  s.th = r.th;
  return s;
}

inline void run_evaluate(const EvaluateOptions& o, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  RunManifest m("evaluate");
  m.set("th", o.th);
  if (!o.grid) {
    const Network net = at_file(o.model, [&] { return load_model(o.model); });
    const MetricsReport report = evaluate_corpus(net, o.corpus, o.th);
    const auto records = read_corpus_manifest(o.corpus);
    const RunSummary s = summarize(report, records.front().q1, records.front().q2, records.front().fraction);
    const fs::path summary = o.summary.empty() ? fs::path(o.out.string() + ".summary.txt") : o.summary;
    write_file(o.out, format_report(report));
    write_file(summary, format_summary(s));
    m.set("images", report.per_image.size());
    m.set("avg_f", report.avg_f);
    m.set("success_rate", report.success_rate);
    m.set("input.model", o.model.string());
    m.set("input.corpus", o.corpus.string());
    m.set("output.report", o.out.string());
    m.set("output.summary", summary.string());
    m.write(manifest_for_file(o.out), seconds_since(t0));
    log << "evaluate: " << report.per_image.size() << " images, avg-F " << report.avg_f << ", success rate "
        << report.success_rate << "\n";
    return;
  }

  // Sweep: for every (q1, q2) with a model_<q1>_<q2>.bin, forge test images and score them.
  fs::create_directories(o.out);
  std::size_t pairs = 0;
  for (int q1 : o.q1_list)
    for (int q2 : o.q2_list) {
      const fs::path model = o.models_dir / ("model_" + std::to_string(q1) + "_" + std::to_string(q2) + ".bin");
      if (!fs::exists(model)) continue;
      SynthOptions so = o.synth;
      so.q1 = q1;
      so.q2 = q2;
      so.train = 0;
      so.out = o.out / ("corpus_" + std::to_string(q1) + "_" + std::to_string(q2));
      std::ostringstream quiet;
      run_synth(so, quiet);
      const Network net = at_file(model, [&] { return load_model(model); });
      const MetricsReport report = evaluate_corpus(net, so.out / "corpus.tsv", o.th);
      const std::string tag = std::to_string(q1) + "_" + std::to_string(q2);
      write_file(o.out / ("report_" + tag + ".tsv"), format_report(report));
      write_file(o.out / ("summary_" + tag + ".txt"), format_summary(summarize(report, q1, q2, so.fraction)));
      m.set("pair." + tag + ".avg_f", report.avg_f);
      log << "evaluate: QF " << q1 << " -> " << q2 << " avg-F " << report.avg_f << " success rate "
          << report.success_rate << "\n";
      ++pairs;
    }
  if (pairs == 0) throw InvalidInput(o.models_dir.string() + ": no model_<q1>_<q2>.bin files for the requested grid");
  m.set("pairs", pairs);
  m.set("fraction", o.synth.fraction);
  m.set("n", o.synth.n);
  m.set("seed", o.synth.seed);
  m.set("input.models", o.models_dir.string());
  m.set("output.dir", o.out.string());
  m.write(o.out / "manifest.txt", seconds_since(t0));
}

struct GridReportOptions {
  std::vector<fs::path> inputs;
  fs::path out;
};

inline void run_gridreport(const GridReportOptions& o, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<fs::path> files;
  for (const auto& in : o.inputs) {
    if (fs::is_directory(in)) {
      for (const auto& f : list_files(in, {".txt"}))
        if (f.filename().string().starts_with("summary")) files.push_back(f);
    } else {
      files.push_back(in);
    }
  }
  if (files.empty()) throw InvalidInput("gridreport: no summary files");
  std::vector<RunSummary> runs;
  for (const auto& f : files) runs.push_back(at_file(f, [&] { return parse_summary(read_file(f)); }));
  const auto rows = aggregate_by_delta(runs);
  write_file(o.out, format_grid(rows));
  RunManifest m("gridreport");
  m.set("runs", runs.size());
  m.set("rows", rows.size());
  for (std::size_t i = 0; i < files.size(); ++i) m.set("input." + std::to_string(i), files[i].string());
  m.set("output.report", o.out.string());
  m.write(manifest_for_file(o.out), seconds_since(t0));
  log << "gridreport: " << runs.size() << " runs -> " << rows.size() << " rows\n";
}

// ---------------------------------------------------------------------------
// Entry point

inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"rcfd: re-compression JPEG forgery detection and localization", "rcfd"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string(kVersion));

  SynthOptions synth;
  auto* s = app.add_subcommand("synth", "Build SC/DC training corpora and forged test images");
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--source", synth.source, "Directory of source .pgm/.ppm images");
  s->add_option("--synthetic", synth.synthetic, "Generate this many synthetic textures instead of --source");
  s->add_option("--width", synth.width, "Synthetic image width")->capture_default_str();
  s->add_option("--height", synth.height, "Synthetic image height")->capture_default_str();
  s->add_option("--q1", synth.q1, "First quality factor")->capture_default_str();
  s->add_option("--q2", synth.q2, "Second quality factor")->capture_default_str();
  s->add_option("--fraction", synth.fraction, "Forged area fraction")->capture_default_str();
  s->add_option("--n", synth.n, "Number of forged test images")->capture_default_str();
  s->add_option("--train", synth.train, "Number of SC/DC training pairs")->capture_default_str();
  s->add_option("--seed", synth.seed, "Seed")->capture_default_str();

  FeaturesOptions feat;
  auto* f = app.add_subcommand("features", "Extract block features for every image of a directory");
  f->add_option("--in", feat.in, "Image directory")->required();
  f->add_option("--out", feat.out, "Feature directory")->required();
  f->add_option("--label", feat.label, "Label stored with every row (0 = single, 1 = double)")
      ->check(CLI::IsMember({0, 1}));

  TrainOptions tr;
  fs::path config_file;
  auto* t = app.add_subcommand("train", "Train the detector on paired SC/DC feature directories");
  t->add_option("--sc", tr.sc, "Single-compressed feature directory")->required();
  t->add_option("--dc", tr.dc, "Double-compressed feature directory")->required();
  t->add_option("--out", tr.out, "Model file")->required();
  t->add_option("--log", tr.log_path, "Training log (default <out>.log.tsv)");
  t->add_option("--config", config_file, "key=value config file; flags override it");
  TrainConfig flags;
  auto* o_q1 = t->add_option("--q1", flags.q1);
  auto* o_q2 = t->add_option("--q2", flags.q2);
  auto* o_ep = t->add_option("--epochs", flags.epochs);
  auto* o_bs = t->add_option("--batch", flags.batch_size);
  auto* o_lr = t->add_option("--lr", flags.lr);
  auto* o_dr = t->add_option("--dropout", flags.dropout);
  auto* o_sd = t->add_option("--seed", flags.seed);
  auto* o_va = t->add_option("--val", flags.val_fraction);
  auto* o_pa = t->add_option("--patience", flags.patience);

  LocalizeOptions loc;
  auto* l = app.add_subcommand("localize", "Predict the 8x8-unit forgery map of one image");
  l->add_option("--model", loc.model)->required();
  l->add_option("--image", loc.image)->required();
  l->add_option("--out", loc.out, "Unit map PGM")->required();
  l->add_option("--overlay", loc.overlay, "Full-resolution overlay PGM");
  l->add_option("--tau", loc.tau, "Forged-unit fraction for an image-level 'forged' verdict")->capture_default_str();

  EvaluateOptions ev;
  auto* e = app.add_subcommand("evaluate", "Score a model against forged images and masks");
  e->add_option("--model", ev.model, "Model file");
  e->add_option("--corpus", ev.corpus, "corpus.tsv written by synth");
  e->add_option("--out", ev.out, "Report TSV (directory with --grid)")->required();
  e->add_option("--summary", ev.summary, "key=value summary (default <out>.summary.txt)");
  e->add_option("--th", ev.th, "F-measure threshold for success rate")->capture_default_str();
  e->add_flag("--grid", ev.grid, "Sweep the QF1 x QF2 grid using model_<q1>_<q2>.bin files");
  e->add_option("--models", ev.models_dir, "Directory of per-pair models (with --grid)");
  e->add_option("--q1-list", ev.q1_list)->delimiter(',');
  e->add_option("--q2-list", ev.q2_list)->delimiter(',');
  e->add_option("--source", ev.synth.source);
  e->add_option("--synthetic", ev.synth.synthetic);
  e->add_option("--width", ev.synth.width);
  e->add_option("--height", ev.synth.height);
  e->add_option("--fraction", ev.synth.fraction);
  e->add_option("--n", ev.synth.n);
  e->add_option("--seed", ev.synth.seed);

  GridReportOptions gr;
  auto* g = app.add_subcommand("gridreport", "Average evaluation summaries per QF2 - QF1");
  g->add_option("inputs", gr.inputs, "Summary files or directories")->required();
  g->add_option("--out", gr.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& ex) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::Success&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << "usage error: " << ex.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*s) {
      run_synth(synth, out);
    } else if (*f) {
      run_features(feat, out);
    } else if (*t) {
      TrainConfig cfg;
      if (!config_file.empty()) cfg = at_file(config_file, [&] { return parse_config(read_file(config_file)); });
      if (o_q1->count()) cfg.q1 = flags.q1;
      if (o_q2->count()) cfg.q2 = flags.q2;
      if (o_ep->count()) cfg.epochs = flags.epochs;
      if (o_bs->count()) cfg.batch_size = flags.batch_size;
      if (o_lr->count()) cfg.lr = flags.lr;
      if (o_dr->count()) cfg.dropout = flags.dropout;
      if (o_sd->count()) cfg.seed = flags.seed;
      if (o_va->count()) cfg.val_fraction = flags.val_fraction;
      if (o_pa->count()) cfg.patience = flags.patience;
      tr.config = cfg;
      run_train(tr, out);
    } else if (*l) {
      run_localize(loc, out);
    } else if (*e) {
      if (ev.grid) {
        if (ev.models_dir.empty()) {
          err << "usage error: --grid requires --models\n";
          return kExitUsage;
        }
      } else if (ev.model.empty() || ev.corpus.empty()) {
        err << "usage error: evaluate requires --model and --corpus (or --grid --models)\n";
        return kExitUsage;
      }
      run_evaluate(ev, out);
    } else if (*g) {
      run_gridreport(gr, out);
    }
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace rcfd::cli
