#include "cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mbfuse/mbfuse.h"

namespace mbfuse::cli {
namespace {

struct Failure {
  mbf_status status;
  std::string message;
};

void check(mbf_status s) {
  if (s != MBF_OK) throw Failure{s, mbf_last_error()};
}

[[noreturn]] void fail(mbf_status s, std::string message) { throw Failure{s, std::move(message)}; }

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const noexcept { Free(p); }
};

using Detections = std::unique_ptr<mbf_detections, Deleter<mbf_detections, mbf_detections_free>>;
using Config = std::unique_ptr<mbf_config, Deleter<mbf_config, mbf_config_free>>;
using GroundTruth = std::unique_ptr<mbf_ground_truth, Deleter<mbf_ground_truth, mbf_ground_truth_free>>;
using Fused = std::unique_ptr<mbf_fused, Deleter<mbf_fused, mbf_fused_free>>;
using Localizations =
    std::unique_ptr<mbf_localizations, Deleter<mbf_localizations, mbf_localizations_free>>;
using Grid = std::unique_ptr<mbf_grid, Deleter<mbf_grid, mbf_grid_free>>;
using Scenario = std::unique_ptr<mbf_scenario, Deleter<mbf_scenario, mbf_scenario_free>>;

template <class H, class F, class... Args>
H make(F&& producer, Args&&... args) {
  typename H::pointer raw = nullptr;
  check(producer(std::forward<Args>(args)..., &raw));
  return H(raw);
}

std::string exact(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string sig9(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

double parse_number(const std::string& text, const char* what) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto res = std::from_chars(first, last, v);
  if (text.empty() || res.ec != std::errc{} || res.ptr != last) {
    fail(MBF_ERR_INVALID_ARGUMENT, std::string("bad ") + what + " '" + text + "'");
  }
  return v;
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = text.find(',', start);
    out.push_back(parse_number(text.substr(start, comma - start), what));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string digest(const std::string& path) {
  std::uint64_t d = 0;
  check(mbf_file_digest(path.c_str(), &d));
  return hex(d);
}

unsigned default_threads() {
  if (const char* env = std::getenv("MBFUSE_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v <= 1024) return static_cast<unsigned>(v);
  }
  return 1;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(MBF_ERR_IO, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(MBF_ERR_IO, "cannot open '" + tmp + "' for writing");
    out << text;
    if (!out.flush()) fail(MBF_ERR_IO, "write error on '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(MBF_ERR_IO, "cannot move manifest into '" + path + "'");
}

std::map<std::string, std::string> parse_manifest(const std::string& path) {
  std::map<std::string, std::string> kv;
  std::istringstream in(read_text(path));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(MBF_ERR_PARSE, path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

const std::string& manifest_value(const std::map<std::string, std::string>& kv,
                                  const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) fail(MBF_ERR_PARSE, "manifest is missing '" + key + "'");
  return it->second;
}

// ---- fuse -------------------------------------------------------------

struct FuseArgs {
  std::vector<std::string> inputs;
  std::string output;
  std::string strategy;
  double iou_thresh = 0.2;
  double score_thresh = 0.01;
  std::string weights;
  std::string decay = "gaussian";
  double sigma = 0.5;
  std::string final_thresh = "0";
  bool no_wbf_rescale = false;
  std::string gt;
  std::string tol;
  bool assign_model_ids = false;
  std::string localizations;
  std::string manifest;
  std::string from_manifest;
  unsigned threads = 1;
};

struct FuseOutcome {
  std::string manifest_text;
  std::size_t fused_count = 0;
  double threshold = 0.0;
};

FuseOutcome run_fuse(const FuseArgs& a) {
  if (a.inputs.empty()) fail(MBF_ERR_INVALID_ARGUMENT, "at least one --input is required");

  auto dets = make<Detections>(mbf_detections_create);
  for (std::size_t i = 0; i < a.inputs.size(); ++i) {
    auto part = make<Detections>(mbf_detections_read_csv, a.inputs[i].c_str());
    if (a.assign_model_ids) check(mbf_detections_set_model(part.get(), static_cast<int32_t>(i)));
    check(mbf_detections_append(dets.get(), part.get()));
  }

  std::size_t models = mbf_detections_model_count(dets.get());
  if (a.assign_model_ids) models = a.inputs.size();

  std::vector<double> weights;
  if (!a.weights.empty()) {
    weights = parse_list(a.weights, "weight");
    if (weights.size() != models) {
      fail(MBF_ERR_CONFIG, "got " + std::to_string(weights.size()) + " weights for " +
                               std::to_string(models) + " models");
    }
  } else {
    weights.assign(std::max<std::size_t>(models, 1), 1.0);
  }

  auto cfg = make<Config>(mbf_config_create, weights.size());
  mbf_strategy strategy{};
  check(mbf_parse_strategy(a.strategy.c_str(), &strategy));
  check(mbf_config_set_strategy(cfg.get(), strategy));
  mbf_decay decay{};
  check(mbf_parse_decay(a.decay.c_str(), &decay));
  check(mbf_config_set_decay(cfg.get(), decay));
  check(mbf_config_set_iou_thresh(cfg.get(), a.iou_thresh));
  check(mbf_config_set_score_thresh(cfg.get(), a.score_thresh));
  check(mbf_config_set_sigma(cfg.get(), a.sigma));
  check(mbf_config_set_weights(cfg.get(), weights.data(), weights.size()));
  check(mbf_config_set_wbf_rescale(cfg.get(), a.no_wbf_rescale ? 0 : 1));

  GroundTruth gt;
  double tol = 0.0;
  if (a.final_thresh == "auto-f1") {
    if (a.gt.empty() || a.tol.empty()) {
      fail(MBF_ERR_CONFIG, "--final-thresh auto-f1 needs --gt and --tol");
    }
    check(mbf_config_set_final_thresh_auto(cfg.get()));
    gt = make<GroundTruth>(mbf_ground_truth_read_csv, a.gt.c_str());
    tol = parse_number(a.tol, "tolerance");
  } else {
    check(mbf_config_set_final_thresh(cfg.get(), parse_number(a.final_thresh, "final threshold")));
  }

  auto fused = make<Fused>(mbf_fuse, dets.get(), cfg.get(), gt.get(), tol, a.threads);
  check(mbf_fused_write_csv(fused.get(), a.output.c_str()));
  if (!a.localizations.empty()) {
    auto locs = make<Localizations>(mbf_localizations_from_fused, fused.get(), 0.0);
    check(mbf_localizations_write_csv(locs.get(), a.localizations.c_str()));
  }

  size_t needed = 0;
  check(mbf_config_describe(cfg.get(), nullptr, 0, &needed));
  std::string described(needed, '\0');
  check(mbf_config_describe(cfg.get(), described.data(), described.size(), &needed));
  described.resize(needed - 1);

  std::ostringstream m;
  m << "# mbfuse run manifest\n";
  m << "tool=mbfuse\n";
  m << "version=" << mbf_version() << '\n';
  m << "command=fuse\n";
  m << described;
  m << "assign_model_ids=" << (a.assign_model_ids ? 1 : 0) << '\n';
  m << "input.count=" << a.inputs.size() << '\n';
  for (std::size_t i = 0; i < a.inputs.size(); ++i) {
    m << "input." << i << '=' << a.inputs[i] << '\n';
    m << "input." << i << ".fnv1a64=" << digest(a.inputs[i]) << '\n';
  }
  if (gt) {
    m << "gt=" << a.gt << '\n';
    m << "gt.fnv1a64=" << digest(a.gt) << '\n';
    m << "tol=" << exact(tol) << '\n';
  }
  m << "chosen_final_thresh=" << exact(mbf_fused_final_threshold(fused.get())) << '\n';
  m << "output=" << a.output << '\n';
  m << "output.fnv1a64=" << digest(a.output) << '\n';
  if (!a.localizations.empty()) {
    m << "localizations=" << a.localizations << '\n';
    m << "localizations.fnv1a64=" << digest(a.localizations) << '\n';
  }

  return {m.str(), mbf_fused_size(fused.get()), mbf_fused_final_threshold(fused.get())};
}

FuseArgs args_from_manifest(const std::string& path, unsigned threads) {
  const auto kv = parse_manifest(path);
  if (manifest_value(kv, "command") != "fuse") fail(MBF_ERR_PARSE, "manifest is not a fuse run");

  FuseArgs a;
  a.threads = threads;
  a.strategy = manifest_value(kv, "strategy");
  a.iou_thresh = parse_number(manifest_value(kv, "iou_thresh"), "iou_thresh");
  a.score_thresh = parse_number(manifest_value(kv, "score_thresh"), "score_thresh");
  a.weights = manifest_value(kv, "weights");
  a.decay = manifest_value(kv, "decay");
  a.sigma = parse_number(manifest_value(kv, "sigma"), "sigma");
  a.final_thresh = manifest_value(kv, "final_thresh");
  a.no_wbf_rescale = manifest_value(kv, "wbf_count_rescale") == "0";
  a.assign_model_ids = manifest_value(kv, "assign_model_ids") == "1";
  a.output = manifest_value(kv, "output");
  if (kv.count("localizations")) a.localizations = kv.at("localizations");
  if (kv.count("gt")) {
    a.gt = kv.at("gt");
    a.tol = manifest_value(kv, "tol");
    if (digest(a.gt) != manifest_value(kv, "gt.fnv1a64")) {
      fail(MBF_ERR_DATA, "ground truth '" + a.gt + "' changed since the manifest was written");
    }
  }
  const auto n = static_cast<std::size_t>(parse_number(manifest_value(kv, "input.count"), "input.count"));
  for (std::size_t i = 0; i < n; ++i) {
    const std::string key = "input." + std::to_string(i);
    a.inputs.push_back(manifest_value(kv, key));
    if (digest(a.inputs.back()) != manifest_value(kv, key + ".fnv1a64")) {
      fail(MBF_ERR_DATA, "input '" + a.inputs.back() + "' changed since the manifest was written");
    }
  }
  a.manifest = path;
  return a;
}

int cmd_fuse(FuseArgs a, std::ostream& out) {
  if (!a.from_manifest.empty()) {
    const std::string recorded = read_text(a.from_manifest);
    a = args_from_manifest(a.from_manifest, a.threads);
    const FuseOutcome o = run_fuse(a);
    if (o.manifest_text != recorded) {
      fail(MBF_ERR_DATA, "replay of '" + a.from_manifest + "' did not reproduce the recorded outputs");
    }
    out << "reproduced " << a.output << " (" << o.fused_count << " detections)\n";
    return kExitOk;
  }

  if (a.output.empty()) fail(MBF_ERR_INVALID_ARGUMENT, "--output is required");
  if (a.strategy.empty()) fail(MBF_ERR_INVALID_ARGUMENT, "--strategy is required");
  const FuseOutcome o = run_fuse(a);
  const std::string manifest = a.manifest.empty() ? a.output + ".manifest" : a.manifest;
  write_text_atomic(manifest, o.manifest_text);
  out << "fused=" << o.fused_count << " final_thresh=" << exact(o.threshold)
      << " output=" << a.output << " manifest=" << manifest << '\n';
  return kExitOk;
}

// ---- eval / sweep ------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> preds;
  std::vector<std::string> labels;
  std::string gt;
  double tol = 0.0;
  double final_thresh = 0.0;
  std::string csv;
};

std::string stem(const std::string& path) { return std::filesystem::path(path).stem().string(); }

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  if (!a.labels.empty() && a.labels.size() != a.preds.size()) {
    fail(MBF_ERR_INVALID_ARGUMENT, "give one --label per --pred");
  }
  auto gt = make<GroundTruth>(mbf_ground_truth_read_csv, a.gt.c_str());

  std::ostringstream table;
  std::ostringstream csv;
  csv << "strategy,precision_pct,recall_pct,rmse,tp,fp,fn\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-16s %14s %11s %12s %8s %8s %8s\n", "strategy",
                "precision_pct", "recall_pct", "rmse", "tp", "fp", "fn");
  table << line;

  for (std::size_t i = 0; i < a.preds.size(); ++i) {
    const std::string label = a.labels.empty() ? stem(a.preds[i]) : a.labels[i];
    auto all = make<Localizations>(mbf_localizations_read_csv, a.preds[i].c_str());
    auto kept = make<Localizations>(mbf_localizations_filter, all.get(), a.final_thresh);
    mbf_eval_report r{};
    check(mbf_evaluate(kept.get(), gt.get(), a.tol, &r));

    const std::string p = fixed(100.0 * r.precision, 2);
    const std::string rc = fixed(100.0 * r.recall, 2);
    std::snprintf(line, sizeof(line), "%-16s %14s %11s %12s %8llu %8llu %8llu\n", label.c_str(),
                  p.c_str(), rc.c_str(), sig9(r.rmse).c_str(),
                  static_cast<unsigned long long>(r.true_positives),
                  static_cast<unsigned long long>(r.false_positives),
                  static_cast<unsigned long long>(r.false_negatives));
    table << line;
    csv << label << ',' << p << ',' << rc << ',' << sig9(r.rmse) << ',' << r.true_positives << ','
        << r.false_positives << ',' << r.false_negatives << '\n';
  }

  out << table.str();
  if (!a.csv.empty()) write_text_atomic(a.csv, csv.str());
  return kExitOk;
}

struct SweepArgs {
  std::string pred;
  std::string gt;
  double tol = 0.0;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  auto gt = make<GroundTruth>(mbf_ground_truth_read_csv, a.gt.c_str());
  auto preds = make<Localizations>(mbf_localizations_read_csv, a.pred.c_str());
  double threshold = 0.0;
  double f1 = 0.0;
  check(mbf_sweep(preds.get(), gt.get(), a.tol, &threshold, &f1));
  out << "threshold=" << exact(threshold) << '\n' << "f1=" << sig9(f1) << '\n';

  auto kept = make<Localizations>(mbf_localizations_filter, preds.get(), threshold);
  if (mbf_localizations_size(kept.get()) > 0) {
    mbf_eval_report r{};
    check(mbf_evaluate(kept.get(), gt.get(), a.tol, &r));
    out << "precision_pct=" << fixed(100.0 * r.precision, 2) << '\n'
        << "recall_pct=" << fixed(100.0 * r.recall, 2) << '\n'
        << "rmse=" << sig9(r.rmse) << '\n';
  }
  return kExitOk;
}

// ---- render -----------------------------------------------------------

struct RenderArgs {
  std::string input;
  std::string origin;
  std::string dims;
  std::optional<double> cell;
  std::optional<double> pixel_size;
  double upscale = 8.0;
  std::string mode = "linear";
  std::string pgm;
  std::string counts;
  double final_thresh = 0.0;
  unsigned threads = 1;
};

int cmd_render(const RenderArgs& a, std::ostream& out) {
  if (a.cell.has_value() == a.pixel_size.has_value()) {
    fail(MBF_ERR_INVALID_ARGUMENT, "give exactly one of --cell or --pixel-size");
  }
  if (a.pgm.empty() && a.counts.empty()) {
    fail(MBF_ERR_INVALID_ARGUMENT, "nothing to write: give --pgm and/or --counts");
  }
  const double cell = a.cell ? *a.cell : *a.pixel_size / a.upscale;
  const auto origin = parse_list(a.origin, "origin");
  const auto dims = parse_list(a.dims, "dims");
  if (origin.size() != 2) fail(MBF_ERR_INVALID_ARGUMENT, "--origin needs x0,y0");
  if (dims.size() != 2 || dims[0] < 1 || dims[1] < 1 || dims[0] > 1e6 || dims[1] > 1e6 ||
      dims[0] != static_cast<double>(static_cast<uint32_t>(dims[0])) ||
      dims[1] != static_cast<double>(static_cast<uint32_t>(dims[1]))) {
    fail(MBF_ERR_INVALID_ARGUMENT, "--dims needs two positive integers W,H");
  }
  mbf_render_mode mode = MBF_RENDER_LINEAR;
  if (a.mode == "log") mode = MBF_RENDER_LOG;
  else if (a.mode != "linear") fail(MBF_ERR_INVALID_ARGUMENT, "--mode must be linear or log");

  auto all = make<Localizations>(mbf_localizations_read_csv, a.input.c_str());
  auto locs = make<Localizations>(mbf_localizations_filter, all.get(), a.final_thresh);
  auto grid = make<Grid>(mbf_grid_create, origin[0], origin[1], cell,
                         static_cast<uint32_t>(dims[0]), static_cast<uint32_t>(dims[1]));
  uint64_t outside = 0;
  check(mbf_grid_accumulate(grid.get(), locs.get(), a.threads, &outside));
  if (!a.pgm.empty()) check(mbf_grid_write_pgm(grid.get(), mode, a.pgm.c_str()));
  if (!a.counts.empty()) check(mbf_grid_write_counts_csv(grid.get(), a.counts.c_str()));

  out << "localizations=" << mbf_localizations_size(locs.get())
      << " accumulated=" << mbf_grid_total(grid.get()) << " out_of_bounds=" << outside << '\n';
  return kExitOk;
}

// ---- simulate ---------------------------------------------------------

struct SimulateArgs {
  std::string scenario;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  auto sc = make<Scenario>(mbf_scenario_load, a.scenario.c_str());
  if (a.seed) check(mbf_scenario_set_seed(sc.get(), *a.seed));

  const std::size_t n = mbf_scenario_detector_count(sc.get());
  mbf_ground_truth* gt_raw = nullptr;
  std::vector<mbf_detections*> raw(n, nullptr);
  check(mbf_simulate(sc.get(), &gt_raw, raw.data()));
  GroundTruth gt(gt_raw);
  std::vector<Detections> dets;
  for (auto* d : raw) dets.emplace_back(d);

  std::error_code ec;
  std::filesystem::create_directories(a.out_dir, ec);
  if (ec) fail(MBF_ERR_IO, "cannot create directory '" + a.out_dir + "'");
  const std::filesystem::path dir(a.out_dir);

  std::ostringstream m;
  m << "# mbfuse run manifest\n"
    << "tool=mbfuse\n"
    << "version=" << mbf_version() << '\n'
    << "command=simulate\n"
    << "scenario=" << a.scenario << '\n'
    << "scenario.fnv1a64=" << digest(a.scenario) << '\n'
    << "seed=" << mbf_scenario_seed(sc.get()) << '\n';

  const std::string gt_path = (dir / "gt.csv").string();
  check(mbf_ground_truth_write_csv(gt.get(), gt_path.c_str()));
  m << "gt=" << gt_path << '\n' << "gt.fnv1a64=" << digest(gt_path) << '\n';

  std::size_t total = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::string path = (dir / ("detector_" + std::to_string(k) + ".csv")).string();
    check(mbf_detections_write_csv(dets[k].get(), path.c_str()));
    total += mbf_detections_size(dets[k].get());
    m << "detector." << k << '=' << path << '\n'
      << "detector." << k << ".fnv1a64=" << digest(path) << '\n';
  }
  write_text_atomic((dir / "simulate.manifest").string(), m.str());

  out << "frames=" << mbf_ground_truth_frame_count(gt.get())
      << " gt_points=" << mbf_ground_truth_point_count(gt.get()) << " detectors=" << n
      << " detections=" << total << " seed=" << mbf_scenario_seed(sc.get()) << '\n';
  return kExitOk;
}

int exit_code(mbf_status s) {
  switch (s) {
    case MBF_OK: return kExitOk;
    case MBF_ERR_INVALID_ARGUMENT: return kExitInvalidArgument;
    case MBF_ERR_PARSE: return kExitParse;
    case MBF_ERR_CONFIG: return kExitConfig;
    case MBF_ERR_IO: return kExitIo;
    case MBF_ERR_DATA: return kExitData;
    case MBF_ERR_INTERNAL: return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ensemble fusion of microbubble detections"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mbf_version()));

  const unsigned threads = default_threads();

  FuseArgs fa;
  fa.threads = threads;
  auto* fuse = app.add_subcommand("fuse", "Fuse per-model detection CSVs into one detection list");
  fuse->add_option("-i,--input", fa.inputs, "Detection CSV (repeatable)");
  fuse->add_option("-o,--output", fa.output, "Fused detection CSV to write");
  fuse->add_option("--strategy", fa.strategy, "nms | soft-nms | nmsw | wbf");
  fuse->add_option("--iou-thresh", fa.iou_thresh, "Clustering IoU threshold")->capture_default_str();
  fuse->add_option("--score-thresh", fa.score_thresh, "Pre-clustering score cut")->capture_default_str();
  fuse->add_option("--weights", fa.weights, "Per-model weights w0,w1,... (default all 1)");
  fuse->add_option("--decay", fa.decay, "Soft-NMS decay: linear | gaussian")->capture_default_str();
  fuse->add_option("--sigma", fa.sigma, "Gaussian decay width")->capture_default_str();
  fuse->add_option("--final-thresh", fa.final_thresh, "Final score cut, or auto-f1")->capture_default_str();
  fuse->add_flag("--no-wbf-rescale", fa.no_wbf_rescale, "Disable WBF min(T,N)/N confidence rescale");
  fuse->add_option("--gt", fa.gt, "Ground-truth CSV (for --final-thresh auto-f1)");
  fuse->add_option("--tol", fa.tol, "Match radius (for --final-thresh auto-f1)");
  fuse->add_flag("--assign-model-ids", fa.assign_model_ids,
                 "Use the position of each --input as its model id");
  fuse->add_option("--localizations", fa.localizations, "Also write box centers to this CSV");
  fuse->add_option("--manifest", fa.manifest, "Manifest path (default <output>.manifest)");
  fuse->add_option("--from-manifest", fa.from_manifest, "Re-run a recorded fuse and verify its outputs");
  fuse->add_option("--threads", fa.threads, "Worker threads (env MBFUSE_THREADS)");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Precision, recall and RMSE against ground truth");
  eval->add_option("--pred", ea.preds, "Prediction CSV: fused, detection or localization schema")->required();
  eval->add_option("--label", ea.labels, "Row label per --pred (default file stem)");
  eval->add_option("--gt", ea.gt, "Ground-truth CSV")->required();
  eval->add_option("--tol", ea.tol, "Match radius")->required();
  eval->add_option("--final-thresh", ea.final_thresh, "Drop predictions scoring below this")->capture_default_str();
  eval->add_option("--csv", ea.csv, "Also write the table as CSV");

  SweepArgs sa;
  auto* sweep = app.add_subcommand("sweep", "Pick the F1-maximizing final threshold");
  sweep->add_option("--pred", sa.pred, "Prediction CSV")->required();
  sweep->add_option("--gt", sa.gt, "Ground-truth CSV")->required();
  sweep->add_option("--tol", sa.tol, "Match radius")->required();

  RenderArgs ra;
  ra.threads = threads;
  double cell = 0.0;
  double pixel_size = 0.0;
  auto* render = app.add_subcommand("render", "Accumulate localizations into a super-resolution map");
  render->add_option("--input", ra.input, "Prediction CSV")->required();
  render->add_option("--origin", ra.origin, "Grid origin x0,y0")->required();
  render->add_option("--dims", ra.dims, "Grid size in cells W,H")->required();
  auto* cell_opt = render->add_option("--cell", cell, "Cell size in length units");
  auto* pixel_opt = render->add_option("--pixel-size", pixel_size, "Native pixel size; cell = pixel / upscale");
  render->add_option("--upscale", ra.upscale, "Upscale factor used with --pixel-size")->capture_default_str();
  render->add_option("--mode", ra.mode, "linear | log")->capture_default_str();
  render->add_option("--pgm", ra.pgm, "PGM (P5) image to write");
  render->add_option("--counts", ra.counts, "Counts CSV to write");
  render->add_option("--final-thresh", ra.final_thresh, "Drop localizations scoring below this")->capture_default_str();
  render->add_option("--threads", ra.threads, "Worker threads (env MBFUSE_THREADS)");

  SimulateArgs ma;
  std::uint64_t seed = 0;
  auto* simulate = app.add_subcommand("simulate", "Generate ground truth and synthetic detector outputs");
  simulate->add_option("--scenario", ma.scenario, "Scenario file")->required();
  simulate->add_option("--out-dir", ma.out_dir, "Output directory")->required();
  auto* seed_opt = simulate->add_option("--seed", seed, "Override the scenario seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << mbf_version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error[usage]: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*fuse) return cmd_fuse(fa, out);
    if (*eval) return cmd_eval(ea, out);
    if (*sweep) return cmd_sweep(sa, out);
    if (*render) {
      if (*cell_opt) ra.cell = cell;
      if (*pixel_opt) ra.pixel_size = pixel_size;
      return cmd_render(ra, out);
    }
    if (*simulate) {
      if (*seed_opt) ma.seed = seed;
      return cmd_simulate(ma, out);
    }
  } catch (const Failure& f) {
    err << "error[" << mbf_status_name(f.status) << "]: " << f.message << '\n';
    return exit_code(f.status);
  } catch (const std::exception& e) {
    err << "error[internal]: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace mbfuse::cli
