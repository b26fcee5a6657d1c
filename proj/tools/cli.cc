#include "cli.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <CLI11.hpp>

#include "semlabel/autolabel.h"
#include "semlabel/dataset_io.h"
#include "semlabel/error.h"
#include "semlabel/eval_metrics.h"
#include "semlabel/file_util.h"
#include "semlabel/leg_detect.h"
#include "semlabel/line_extract.h"
#include "semlabel/loss_math.h"
#include "semlabel/map_label.h"
#include "semlabel/parallel.h"
#include "semlabel/sim.h"
#include "semlabel/split.h"

namespace semlabel::cli {
namespace {

namespace fs = std::filesystem;

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot create " + path);
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw Error("write failed: " + path);
}

// --- rasterize-map -------------------------------------------------------

struct RasterizeOpts {
  std::string map, labels, out;
};

void run_rasterize(const RasterizeOpts& o, std::ostream& out) {
  const OccupancyGridMap grid = load_occupancy_map_file(o.map);
  const auto polygons = parse_labelme(read_file_text(o.labels), grid);
  const SemanticGridMap sem = rasterize_labels(polygons, grid);
  write_file(o.out, serialize_semantic_map(sem));
  std::size_t labeled = 0;
  for (std::size_t k = 0; k < sem.labels.size(); ++k) {
    labeled += sem.grid.cells[k] == CellState::kOccupied && sem.labels[k] != ClassLabel::kOther;
  }
  out << "map " << grid.width << "x" << grid.height << " @ " << grid.resolution << " m, "
      << polygons.size() << " polygons, " << labeled << " labeled occupied cells\n";
}

// --- autolabel -----------------------------------------------------------

struct AutolabelOpts {
  std::string semmap, in, out, report;
  bool no_icp = false;
  std::optional<double> assoc_radius;
  int threads = 0;
};

void run_autolabel(const AutolabelOpts& o, std::ostream& out) {
  const LabelingMap map(deserialize_semantic_map(read_file_bytes(o.semmap)));
  AutoLabelParams params;
  params.use_icp = !o.no_icp;
  params.transfer.assoc_radius = o.assoc_radius;

  std::ifstream in = open_in(o.in);
  DatasetReader reader(in);
  const SensorSpec spec = reader.sensor();
  std::ofstream dst = open_out(o.out);
  DatasetWriter writer(dst, spec);

  std::unordered_map<std::size_t, DatasetRecord> pending;
  const SequenceReport report = label_sequence(
      [&](std::size_t index, ScanInput& item) {
        DatasetRecord r;
        if (!reader.next(r)) return false;
        item.scan = r.scan();
        item.init = r.init_pose;
        pending.emplace(index, std::move(r));
        return true;
      },
      [&](std::size_t index, LabeledScan&& labeled) {
        auto node = pending.extract(index);
        DatasetRecord& r = node.mapped();
        r.labels = std::move(labeled.labels);
        r.flagged = labeled.flagged;
        r.refined_pose = labeled.pose_refined;
        if (std::isfinite(labeled.alignment_rms)) {
          r.alignment_rms = labeled.alignment_rms;
        } else {
          r.alignment_rms.reset();
        }
        writer.write(r);
      },
      spec, map, params, o.threads > 0 ? o.threads : worker_count());
  finish(dst, o.out);

  if (!o.report.empty()) write_file(o.report, report_to_csv(report));
  out << "labeled " << report.n_scans << " scans, flagged " << report.n_flagged
      << ", mean alignment rms " << report.mean_rms << " m\n";
}

// --- extract-lines / detect-legs ------------------------------------------

struct BaselineOpts {
  std::string in, out;
  LineExtractParams lines;
  LegDetectParams legs;
};

template <typename Labeler>
void run_baseline(const BaselineOpts& o, std::ostream& out, Labeler labeler, const char* what) {
  std::ifstream in = open_in(o.in);
  DatasetReader reader(in);
  std::ofstream dst = open_out(o.out);
  DatasetRecord r;
  std::size_t n = 0, marked = 0;
  while (reader.next(r)) {
    const std::vector<ClassLabel> labels = labeler(r.scan(), reader.sensor());
    marked += std::count_if(labels.begin(), labels.end(), [](ClassLabel c) { return c != ClassLabel::kOther; });
    dst << prediction_to_json({r.scene_id, r.frame, {labels}}) << '\n';
    ++n;
  }
  finish(dst, o.out);
  out << what << ": " << n << " scans, " << marked << " beams marked\n";
}

// --- eval -----------------------------------------------------------------

struct EvalOpts {
  std::string pred, truth, classes, csv, method = "prediction";
  bool merge_linear = false;
};

ClassMask parse_class_mask(const std::string& text) {
  ClassMask mask;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    if (item.empty()) continue;
    std::optional<ClassLabel> cls = class_from_name(item);
    if (!cls) {
      try {
        std::size_t used = 0;
        const int id = std::stoi(item, &used);
        if (used == item.size()) cls = class_from_index(id);
      } catch (const std::exception&) {
      }
    }
    if (!cls) throw CLI::ValidationError("--classes", "unknown class \"" + item + "\"");
    mask.set(class_index(*cls));
  }
  if (mask.none()) throw CLI::ValidationError("--classes", "empty class list");
  return mask;
}

void run_eval(const EvalOpts& o, ClassMask mask, std::ostream& out) {
  const Dataset truth = read_dataset_file(o.truth);
  const std::vector<PredictionRecord> preds = read_predictions(read_file_text(o.pred));
  std::map<std::pair<std::string, std::int64_t>, std::size_t> index;
  for (std::size_t k = 0; k < truth.records.size(); ++k) {
    const DatasetRecord& r = truth.records[k];
    if (!r.labels) throw RecordError("truth record has no labels", k);
    if (!index.emplace(std::make_pair(r.scene_id, r.frame), k).second) {
      throw RecordError("duplicate truth record " + r.scene_id + "/" + std::to_string(r.frame), k);
    }
  }
  if (preds.empty()) throw Error("no predictions in " + o.pred);
  if (preds.size() != truth.records.size()) {
    throw Error(std::to_string(preds.size()) + " predictions for " + std::to_string(truth.records.size()) +
                " truth records");
  }
  const std::size_t n_samples = preds.front().samples.size();
  std::vector<ConfusionMatrix> cms(n_samples);
  std::vector<bool> seen(truth.records.size(), false);
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const PredictionRecord& p = preds[k];
    auto it = index.find({p.scene_id, p.frame});
    if (it == index.end()) {
      throw RecordError("no truth for prediction " + p.scene_id + "/" + std::to_string(p.frame), k);
    }
    if (seen[it->second]) throw RecordError("duplicate prediction", k);
    seen[it->second] = true;
    if (p.samples.size() != n_samples) throw RecordError("sample count differs from the first record", k);
    const std::vector<ClassLabel>& t = *truth.records[it->second].labels;
    for (std::size_t s = 0; s < n_samples; ++s) {
      if (p.samples[s].size() != t.size()) throw RecordError("prediction length differs from truth", k);
      for (std::size_t b = 0; b < t.size(); ++b) {
        ClassLabel tc = t[b], pc = p.samples[s][b];
        if (o.merge_linear) {
          tc = merge_linear(tc);
          pc = merge_linear(pc);
        }
        cms[s].add(tc, pc);
      }
    }
  }
  const EvalSummary summary = summarize_samples(cms, mask, o.merge_linear);
  out << format_eval_table(summary, o.method);
  if (!o.csv.empty()) write_file(o.csv, format_eval_csv(summary, o.method));
}

// --- simulate / gen-scene ---------------------------------------------------

struct SimulateOpts {
  std::string scene, out, semmap_out, map_out;
  int threads = 0;
};

void run_simulate(const SimulateOpts& o, std::ostream& out) {
  const SimulationConfig cfg = parse_simulation_config(read_file_text(o.scene));
  Dataset ds;
  ds.sensor = cfg.sensor;
  ds.records = simulate_sequence(cfg, o.threads > 0 ? o.threads : worker_count());
  write_dataset_file(o.out, ds);
  if (!o.semmap_out.empty() || !o.map_out.empty()) {
    const SemanticGridMap sem = rasterize_scene(cfg.scene, cfg.map_resolution);
    if (!o.semmap_out.empty()) write_file(o.semmap_out, serialize_semantic_map(sem));
    if (!o.map_out.empty()) {
      const fs::path yaml(o.map_out);
      fs::path pgm = yaml;
      pgm.replace_extension(".pgm");
      MapMetadata meta;
      meta.image = pgm.filename().string();
      meta.resolution = sem.grid.resolution;
      meta.origin = sem.grid.origin;
      write_file(pgm.string(), write_pgm(occupancy_to_pgm(sem.grid)));
      write_file(yaml.string(), write_map_yaml(meta));
    }
  }
  out << "simulated " << ds.records.size() << " frames of scene " << cfg.scene_id << "\n";
}

struct GenSceneOpts {
  std::string out, scene_id = "room";
  std::uint64_t seed = 0;
  int frames = 100;
  double sigma_xy = 0.05;
  double sigma_theta_deg = 2.0;
  double range_sigma = 0.01;
};

void run_gen_scene(const GenSceneOpts& o, std::ostream& out) {
  Xoshiro256 rng(o.seed);
  SimulationConfig cfg;
  cfg.scene = random_room(rng);
  cfg.trajectory = random_free_poses(cfg.scene, o.frames, rng);
  cfg.noise.range_sigma = o.range_sigma;
  cfg.pose_noise = {o.sigma_xy, deg_to_rad(o.sigma_theta_deg)};
  cfg.seed = o.seed;
  cfg.scene_id = o.scene_id;
  write_file(o.out, simulation_config_to_json(cfg));
  out << "scene with " << cfg.scene.objects.size() << " objects, " << cfg.trajectory.size() << " poses\n";
}

// --- stats ----------------------------------------------------------------

struct StatsOpts {
  std::string in, csv;
};

void run_stats(const StatsOpts& o, std::ostream& out) {
  std::ifstream in = open_in(o.in);
  DatasetReader reader(in);
  std::vector<std::vector<ClassLabel>> labels;
  DatasetRecord r;
  while (reader.next(r)) {
    if (!r.labels) throw ParseError("line " + std::to_string(reader.line_number()) + ": record has no labels",
                                    reader.line_number(), true);
    labels.push_back(std::move(*r.labels));
  }
  const ClassFrequencies f = class_frequencies(labels);
  std::ostringstream csv;
  csv.precision(17);
  csv << "class,count,percent\n";
  char buf[96];
  out << "scans: " << labels.size() << ", points: " << f.total << '\n';
  for (ClassLabel c : kAllClasses) {
    const int k = class_index(c);
    std::snprintf(buf, sizeof buf, "%-9s %12llu %7.2f%%\n", std::string(class_name(c)).c_str(),
                  static_cast<unsigned long long>(f.counts[k]), f.percent[k]);
    out << buf;
    csv << class_name(c) << ',' << f.counts[k] << ',' << f.percent[k] << '\n';
  }
  if (!o.csv.empty()) write_file(o.csv, csv.str());
}

// --- split ----------------------------------------------------------------

struct SplitOpts {
  std::string in, out;
  SplitSpec spec;
};

void run_split(const SplitOpts& o, std::ostream& out, std::ostream& err) {
  std::vector<fs::path> files;
  const fs::path in(o.in);
  fs::path out_dir = o.out.empty() ? (fs::is_directory(in) ? in : in.parent_path()) : fs::path(o.out);
  if (fs::is_directory(in)) {
    for (const auto& entry : fs::directory_iterator(in)) {
      const auto name = entry.path().filename().string();
      if (entry.path().extension() != ".jsonl") continue;
      if (name == "train.jsonl" || name == "val.jsonl" || name == "test.jsonl") continue;
      files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(in);
  }
  if (files.empty()) throw Error("no .jsonl files in " + o.in);
  std::optional<SensorSpec> sensor;
  std::vector<DatasetRecord> all;
  for (const auto& path : files) {
    Dataset ds = read_dataset_file(path.string());
    if (sensor && !(*sensor == ds.sensor)) throw Error(path.string() + ": sensor differs from " + files[0].string());
    sensor = ds.sensor;
    for (auto& r : ds.records) all.push_back(std::move(r));
  }
  const std::vector<SceneRecords> scenes = group_by_scene(std::move(all));
  const SplitResult res = split_dataset(scenes, o.spec);
  for (const auto& w : res.warnings) err << "warning: " << w << '\n';
  if (!out_dir.empty()) fs::create_directories(out_dir);
  write_dataset_file((out_dir / "train.jsonl").string(), {*sensor, res.train});
  write_dataset_file((out_dir / "val.jsonl").string(), {*sensor, res.val});
  write_dataset_file((out_dir / "test.jsonl").string(), {*sensor, res.test});
  out << "scenes " << scenes.size() << ": train " << res.train.size() << ", val " << res.val.size()
      << ", test " << res.test.size() << '\n';
}

// --- norm-stats / loss ------------------------------------------------------

struct NormOpts {
  std::string in, out;
};

void run_norm_stats(const NormOpts& o, std::ostream& out) {
  const Dataset ds = read_dataset_file(o.in);
  std::vector<LidarScan> scans;
  scans.reserve(ds.records.size());
  for (const auto& r : ds.records) scans.push_back(r.scan());
  const std::string text = normalization_stats_to_json(compute_normalization_stats(scans, ds.sensor));
  if (o.out.empty()) {
    out << text;
  } else {
    write_file(o.out, text);
  }
}

struct LossOpts {
  std::string batch, out;
};

void run_loss(const LossOpts& o, std::ostream& out) {
  const LossBatch b = parse_loss_batch(read_file_text(o.batch));
  const HybridLoss loss = hybrid_loss(b.field, b.truth, b.weights, b.mu, b.logvar, b.betas);
  const std::string text = hybrid_loss_to_json(loss);
  if (o.out.empty()) {
    out << text;
  } else {
    write_file(o.out, text);
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semantic labeling toolkit for 2D lidar scans", "semlabel"};
  app.require_subcommand(1);

  RasterizeOpts ras;
  auto* c_ras = app.add_subcommand("rasterize-map", "Rasterize LabelMe polygons onto an occupancy map");
  c_ras->add_option("--map", ras.map, "map_server YAML file")->required()->check(CLI::ExistingFile);
  c_ras->add_option("--labels", ras.labels, "LabelMe JSON")->required()->check(CLI::ExistingFile);
  c_ras->add_option("--out", ras.out, "semantic map output")->required();

  AutolabelOpts al;
  double assoc = -1.0;
  auto* c_al = app.add_subcommand("autolabel", "Label scans against a semantic map");
  c_al->add_option("--semmap", al.semmap, "semantic map from rasterize-map or simulate")->required()->check(CLI::ExistingFile);
  c_al->add_option("--in", al.in, "input scans (JSON-Lines)")->required()->check(CLI::ExistingFile);
  c_al->add_option("--out", al.out, "labeled output")->required();
  c_al->add_flag("--no-icp", al.no_icp, "label at the initial pose");
  c_al->add_option("--report", al.report, "per-class CSV report");
  c_al->add_option("--assoc-radius", assoc, "label association radius in metres (default 1.5 x resolution)")
      ->check(CLI::NonNegativeNumber);
  c_al->add_option("--threads", al.threads, "worker threads (0: SEMLABEL_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);

  BaselineOpts lines;
  auto* c_lines = app.add_subcommand("extract-lines", "Line-feature baseline: inliers labeled Wall");
  c_lines->add_option("--in", lines.in)->required()->check(CLI::ExistingFile);
  c_lines->add_option("--out", lines.out, "prediction output")->required();
  c_lines->add_option("--split-threshold", lines.lines.split_threshold)->check(CLI::PositiveNumber);
  c_lines->add_option("--min-length", lines.lines.min_length)->check(CLI::PositiveNumber);

  BaselineOpts legs;
  auto* c_legs = app.add_subcommand("detect-legs", "Leg-pattern baseline: detections labeled Person");
  c_legs->add_option("--in", legs.in)->required()->check(CLI::ExistingFile);
  c_legs->add_option("--out", legs.out, "prediction output")->required();

  EvalOpts ev;
  auto* c_ev = app.add_subcommand("eval", "CA / IoU of predictions against labeled scans");
  c_ev->add_option("--pred", ev.pred, "prediction file")->required()->check(CLI::ExistingFile);
  c_ev->add_option("--truth", ev.truth, "labeled scans")->required()->check(CLI::ExistingFile);
  c_ev->add_flag("--merge-linear", ev.merge_linear, "fold Door and Elevator into Wall");
  c_ev->add_option("--classes", ev.classes, "comma-separated classes to report");
  c_ev->add_option("--csv", ev.csv, "CSV output");
  c_ev->add_option("--method", ev.method, "row label");

  SimulateOpts sim;
  auto* c_sim = app.add_subcommand("simulate", "Raycast a scene description into scans");
  c_sim->add_option("--scene", sim.scene, "scene JSON")->required()->check(CLI::ExistingFile);
  c_sim->add_option("--out", sim.out, "scan output")->required();
  c_sim->add_option("--semmap-out", sim.semmap_out, "ground-truth semantic map");
  c_sim->add_option("--map-out", sim.map_out, "ground-truth map_server YAML (PGM written alongside)");
  c_sim->add_option("--threads", sim.threads)->check(CLI::NonNegativeNumber);

  GenSceneOpts gen;
  auto* c_gen = app.add_subcommand("gen-scene", "Write a random room scene description");
  c_gen->add_option("--out", gen.out)->required();
  c_gen->add_option("--seed", gen.seed);
  c_gen->add_option("--frames", gen.frames)->check(CLI::PositiveNumber);
  c_gen->add_option("--scene-id", gen.scene_id);
  c_gen->add_option("--pose-sigma-xy", gen.sigma_xy)->check(CLI::NonNegativeNumber);
  c_gen->add_option("--pose-sigma-theta-deg", gen.sigma_theta_deg)->check(CLI::NonNegativeNumber);
  c_gen->add_option("--range-sigma", gen.range_sigma)->check(CLI::NonNegativeNumber);

  StatsOpts st;
  auto* c_st = app.add_subcommand("stats", "Per-class point percentages");
  c_st->add_option("--in", st.in)->required()->check(CLI::ExistingFile);
  c_st->add_option("--csv", st.csv);

  SplitOpts sp;
  auto* c_sp = app.add_subcommand("split", "Per-scene train/val/test split");
  c_sp->add_option("--in", sp.in, "dataset directory or file")->required()->check(CLI::ExistingPath);
  c_sp->add_option("--seed", sp.spec.seed)->required();
  c_sp->add_option("--out", sp.out, "output directory (default: next to the input)");
  c_sp->add_option("--train", sp.spec.train)->check(CLI::Range(0.0, 1.0));
  c_sp->add_option("--val", sp.spec.val)->check(CLI::Range(0.0, 1.0));
  c_sp->add_option("--test", sp.spec.test)->check(CLI::Range(0.0, 1.0));

  NormOpts ns;
  auto* c_ns = app.add_subcommand("norm-stats", "Input normalization constants for a trainer");
  c_ns->add_option("--in", ns.in)->required()->check(CLI::ExistingFile);
  c_ns->add_option("--out", ns.out);

  LossOpts lo;
  auto* c_lo = app.add_subcommand("loss", "Reference hybrid loss of an exported batch");
  c_lo->add_option("--batch", lo.batch)->required()->check(CLI::ExistingFile);
  c_lo->add_option("--out", lo.out);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  ClassMask mask = all_classes_mask();
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (assoc >= 0.0) al.assoc_radius = assoc;
    if (c_sp->parsed()) sp.spec.validate();
    if (c_ev->parsed()) {
      if (!ev.classes.empty()) {
        mask = parse_class_mask(ev.classes);
      } else if (ev.merge_linear) {
        mask.reset(class_index(ClassLabel::kDoor));
        mask.reset(class_index(ClassLabel::kElevator));
      }
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (c_ras->parsed()) run_rasterize(ras, out);
    if (c_al->parsed()) run_autolabel(al, out);
    if (c_lines->parsed()) {
      run_baseline(lines, out, [&](const LidarScan& scan, const SensorSpec& spec) {
        std::vector<ClassLabel> labels(spec.n_beams, ClassLabel::kOther);
        for (const LineSegment& s : extract_lines(scan, spec, lines.lines)) {
          for (int b : s.inlier_beams) labels[b] = ClassLabel::kWall;
        }
        return labels;
      }, "extract-lines");
    }
    if (c_legs->parsed()) {
      run_baseline(legs, out, [&](const LidarScan& scan, const SensorSpec& spec) {
        const std::vector<bool> mask_legs = detect_person_points(scan, spec, legs.legs);
        std::vector<ClassLabel> labels(spec.n_beams, ClassLabel::kOther);
        for (int b = 0; b < spec.n_beams; ++b) {
          if (mask_legs[b]) labels[b] = ClassLabel::kPerson;
        }
        return labels;
      }, "detect-legs");
    }
    if (c_ev->parsed()) run_eval(ev, mask, out);
    if (c_sim->parsed()) run_simulate(sim, out);
    if (c_gen->parsed()) run_gen_scene(gen, out);
    if (c_st->parsed()) run_stats(st, out);
    if (c_sp->parsed()) run_split(sp, out, err);
    if (c_ns->parsed()) run_norm_stats(ns, out);
    if (c_lo->parsed()) run_loss(lo, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace semlabel::cli
