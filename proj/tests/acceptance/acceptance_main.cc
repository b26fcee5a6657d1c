// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "cli.h"
#include "semlabel/autolabel.h"
#include "semlabel/dataset_io.h"
#include "semlabel/eval_metrics.h"
#include "semlabel/file_util.h"
#include "semlabel/line_extract.h"
#include "semlabel/loss_math.h"
#include "semlabel/prng.h"
#include "semlabel/sim.h"
#include "semlabel/split.h"
#include "test_support.h"

namespace semlabel {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  const char* name;
  double time_limit_s;  // <= 0: no limit
  std::function<Outcome()> check;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

// --- metric fidelity --------------------------------------------------------

Outcome metric_fidelity() {
  Xoshiro256 rng(1001);
  const int cases = 200, n = 1000;
  int mismatches = 0;
  for (int t = 0; t < cases; ++t) {
    // Skewed class distributions, so some classes are rare or absent.
    const int active = 1 + static_cast<int>(rng.bounded(kNumClasses));
    std::vector<ClassLabel> truth(n), pred(n);
    for (int i = 0; i < n; ++i) {
      truth[i] = class_from_index(static_cast<int>(rng.bounded(active)));
      pred[i] = rng.uniform() < 0.6 ? truth[i] : class_from_index(static_cast<int>(rng.bounded(kNumClasses)));
    }
    const ConfusionMatrix cm = confusion_matrix(pred, truth);
    for (ClassLabel c : kAllClasses) {
      std::uint64_t agree = 0, inter = 0, uni = 0;
      for (int i = 0; i < n; ++i) {
        const bool in_t = truth[i] == c, in_p = pred[i] == c;
        agree += in_t == in_p;
        inter += in_t && in_p;
        uni += in_t || in_p;
      }
      if (class_accuracy(cm, c) != static_cast<double>(agree) / static_cast<double>(n)) ++mismatches;
      const auto v = iou(cm, c);
      if (uni == 0) {
        if (v) ++mismatches;
      } else if (!v || *v != static_cast<double>(inter) / static_cast<double>(uni)) {
        ++mismatches;
      }
    }
  }
  return {mismatches == 0, std::to_string(cases) + " cases x 1000 points, " + std::to_string(mismatches) +
                               " mismatches"};
}

// --- ICP recovery ----------------------------------------------------------

Outcome icp_recovery() {
  const int rooms = 20;
  const double map_res = 0.01;
  int recovered = 0;
  double worst_t = 0, worst_r = 0;
  for (int k = 0; k < rooms; ++k) {
    Xoshiro256 rng(derive_stream(2002, k));
    const Scene room = random_room(rng);
    const Pose2D truth = random_free_poses(room, 1, rng)[0];
    const SensorSpec spec;
    const LidarScan scan = raycast_scan(scene_at(room, 0.0), truth, spec, SensorNoise{0.0, 0.0}, rng).scan;
    const Pose2D init{truth.x + 0.1 * (2 * rng.uniform() - 1), truth.y + 0.1 * (2 * rng.uniform() - 1),
                      truth.theta + deg_to_rad(5.0) * (2 * rng.uniform() - 1)};
    const LabelingMap map(rasterize_scene(room, map_res));
    const LabeledScan l = auto_label_scan(scan, spec, init, map, AutoLabelParams{});
    const double et = (l.pose_refined.translation() - truth.translation()).norm();
    const double er = std::abs(rad_to_deg(normalize_angle(l.pose_refined.theta - truth.theta)));
    worst_t = std::max(worst_t, et);
    worst_r = std::max(worst_r, er);
    recovered += et < 0.01 && er < 0.2;
  }
  return {recovered >= 19, std::to_string(recovered) + "/20 within 0.01 m and 0.2 deg on a 0.01 m map" +
                               fmt(", worst %.4f m", worst_t) + fmt(" / %.3f deg", worst_r)};
}

// --- end-to-end auto-labeling through the CLI ------------------------------

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "semlabel");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code != 0) std::fprintf(stderr, "%s", err.str().c_str());
  return code;
}

Outcome end_to_end() {
  testing::TempDir dir;
  const int scenes = 5, frames = 100;
  testing::LabelScore with_icp, without_icp;
  for (int s = 0; s < scenes; ++s) {
    const std::string id = std::to_string(s);
    const auto f = [&](const char* name) { return dir.file(id + name); };
    if (cli({"gen-scene", "--out", f("scene.json"), "--seed", std::to_string(3003 + s), "--frames",
             std::to_string(frames), "--scene-id", "room" + id, "--range-sigma", "0.01", "--pose-sigma-xy",
             "0.05", "--pose-sigma-theta-deg", "2"}) != 0 ||
        cli({"simulate", "--scene", f("scene.json"), "--out", f("sim.jsonl"), "--semmap-out", f(".semmap")}) != 0 ||
        cli({"autolabel", "--semmap", f(".semmap"), "--in", f("sim.jsonl"), "--out", f("icp.jsonl")}) != 0 ||
        cli({"autolabel", "--semmap", f(".semmap"), "--in", f("sim.jsonl"), "--out", f("raw.jsonl"),
             "--no-icp"}) != 0) {
      return {false, "CLI pipeline failed on scene " + id};
    }
    const SimulationConfig cfg = parse_simulation_config(read_file_text(f("scene.json")));
    std::array<bool, kNumClasses> present{};
    int people = 0;
    for (const auto& o : cfg.scene.objects) {
      if (o.dynamic()) {
        ++people;
      } else {
        present[class_index(o.cls)] = true;
      }
    }
    if (people < 2) return {false, "scene " + id + " has fewer than 2 moving people"};
    if (std::count(present.begin(), present.end(), true) < 5) return {false, "scene " + id + " has <5 static classes"};

    const Dataset truth = read_dataset_file(f("sim.jsonl"));
    const Dataset a = read_dataset_file(f("icp.jsonl"));
    const Dataset b = read_dataset_file(f("raw.jsonl"));
    for (std::size_t k = 0; k < truth.records.size(); ++k) {
      testing::score_labels(with_icp, truth.records[k].ranges, truth.sensor, *truth.records[k].labels,
                            *a.records[k].labels);
      testing::score_labels(without_icp, truth.records[k].ranges, truth.sensor, *truth.records[k].labels,
                            *b.records[k].labels);
    }
  }
  const double st = with_icp.static_accuracy(), pe = with_icp.person_accuracy();
  const double st_raw = without_icp.static_accuracy();
  const bool pass = st >= 0.99 && pe >= 0.90 && st_raw < st;
  return {pass, std::to_string(scenes * frames) + " frames: static " + fmt("%.2f%%", 100 * st) + ", person " +
                    fmt("%.2f%%", 100 * pe) + fmt(", --no-icp static %.2f%%", 100 * st_raw) + " (" +
                    std::to_string(with_icp.person_total) + " person beams)"};
}

// --- line fit ----------------------------------------------------------------

Outcome line_fit() {
  Xoshiro256 rng(4004);
  double worst_collinear = 0, worst_invariance = 0;
  for (int t = 0; t < 200; ++t) {
    const double a = rng.uniform() * 2 * kPi;
    const Vec2 n(std::cos(a), std::sin(a)), d(-n.y(), n.x());
    const double c = rng.uniform() * 10 - 5;
    std::vector<Vec2> pts;
    std::vector<double> w;
    for (int k = 0; k < 20; ++k) {
      pts.push_back(c * n + (rng.uniform() * 8 - 4) * d);
      w.push_back(0.5 + rng.uniform());
    }
    worst_collinear = std::max(worst_collinear, weighted_line_fit(pts, w).rms_residual);

    std::vector<Vec2> noisy;
    for (int k = 0; k < 30; ++k) noisy.push_back(c * n + (rng.uniform() * 6 - 3) * d + 0.02 * rng.gaussian() * n);
    const Pose2D g{rng.uniform() * 20 - 10, rng.uniform() * 20 - 10, rng.uniform() * 6 - 3};
    const std::vector<Vec2> moved = transform_points(noisy, g);
    const std::vector<double> ones(noisy.size(), 1.0);
    const LineFit f0 = weighted_line_fit(noisy, ones);
    const LineFit f1 = weighted_line_fit(moved, ones);
    worst_invariance = std::max(worst_invariance, std::abs(f0.rms_residual - f1.rms_residual));
    for (std::size_t k = 0; k < noisy.size(); ++k) {
      worst_invariance = std::max(
          worst_invariance, std::abs(point_line_distance(f0, noisy[k]) - point_line_distance(f1, moved[k])));
    }
  }
  const double sigma = 0.01;
  const int n = 100;
  int within = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Xoshiro256 r(seed);
    std::vector<Vec2> pts;
    for (int k = 0; k < n; ++k) pts.emplace_back(-5.0 + 10.0 * k / (n - 1), 1.0 + sigma * r.gaussian());
    const LineFit f = weighted_line_fit(pts, std::vector<double>(n, 1.0));
    const double offset = f.normal.y() < 0 ? -f.offset : f.offset;
    within += std::abs(offset - 1.0) <= 3 * sigma / std::sqrt(n);
  }
  const bool pass = worst_collinear <= 1e-12 && worst_invariance <= 1e-9 && within == 100;
  return {pass, fmt("collinear residual %.1e", worst_collinear) + fmt(", invariance %.1e", worst_invariance) +
                    ", noisy line " + std::to_string(within) + "/100 within 3 sigma/sqrt(N)"};
}

// --- Lovasz ------------------------------------------------------------------

std::vector<double> random_simplex(Xoshiro256& rng, int n, int c) {
  std::vector<double> p;
  for (int i = 0; i < n; ++i) {
    std::vector<double> row(c);
    double s = 0;
    for (double& v : row) s += (v = 0.05 + rng.uniform());
    for (double v : row) p.push_back(v / s);
  }
  return p;
}

Outcome lovasz() {
  Xoshiro256 rng(5005);
  double worst_jaccard = 0, worst_perm = 0, worst_grad = 0;
  for (int t = 0; t < 2000; ++t) {
    const int n = 1 + static_cast<int>(rng.bounded(20));
    const int c = 1 + static_cast<int>(rng.bounded(4));
    std::vector<int> y(n), yhat(n);
    for (int i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng.bounded(c));
      yhat[i] = static_cast<int>(rng.bounded(c));
    }
    const auto per_class = lovasz_class_losses(ProbField::one_hot(c, yhat), y);
    for (int k = 0; k < c; ++k) {
      std::size_t inter = 0, uni = 0, gt = 0;
      for (int i = 0; i < n; ++i) {
        inter += y[i] == k && yhat[i] == k;
        uni += y[i] == k || yhat[i] == k;
        gt += y[i] == k;
      }
      if (gt == 0) continue;
      worst_jaccard = std::max(worst_jaccard, std::abs(per_class[k] - (1.0 - double(inter) / double(uni))));
    }
  }
  for (int t = 0; t < 200; ++t) {
    const int n = 2 + static_cast<int>(rng.bounded(30)), c = 2 + static_cast<int>(rng.bounded(3));
    std::vector<int> y(n);
    for (int& v : y) v = static_cast<int>(rng.bounded(c));
    const auto p = random_simplex(rng, n, c);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> y2;
    std::vector<double> p2;
    for (int i : perm) {
      y2.push_back(y[i]);
      for (int k = 0; k < c; ++k) p2.push_back(p[i * c + k]);
    }
    worst_perm = std::max(worst_perm, std::abs(lovasz_softmax(ProbField(c, p), y) - lovasz_softmax(ProbField(c, p2), y2)));
  }
  int grads = 0;
  while (grads < 50) {
    const int n = 2 + static_cast<int>(rng.bounded(10)), c = 2 + static_cast<int>(rng.bounded(3));
    std::vector<int> y(n);
    for (int& v : y) v = static_cast<int>(rng.bounded(c));
    const auto p = random_simplex(rng, n, c);
    const ProbField f(c, p);
    // Away from ties: sorted errors per class at least 1e-4 apart.
    bool ties = false;
    for (int k = 0; k < c && !ties; ++k) {
      std::vector<double> e;
      for (int i = 0; i < n; ++i) e.push_back(y[i] == k ? 1 - f.prob(i, k) : f.prob(i, k));
      std::sort(e.begin(), e.end());
      for (std::size_t i = 1; i < e.size(); ++i) ties = ties || e[i] - e[i - 1] < 1e-4;
    }
    if (ties) continue;
    ++grads;
    const auto g = lovasz_softmax_grad(f, y);
    const double h = 1e-7;
    for (std::size_t k = 0; k < p.size(); ++k) {
      auto up = p, down = p;
      up[k] += h;
      down[k] -= h;
      const double num = (lovasz_softmax(ProbField(c, up), y) - lovasz_softmax(ProbField(c, down), y)) / (2 * h);
      worst_grad = std::max(worst_grad, std::abs(num - g[k]) / std::max({std::abs(num), std::abs(g[k]), 1e-3}));
    }
  }
  const bool pass = worst_jaccard <= 1e-9 && worst_perm <= 1e-12 && worst_grad <= 1e-4;
  return {pass, fmt("set-Jaccard error %.1e", worst_jaccard) + fmt(", permutation %.1e", worst_perm) +
                    fmt(", gradient rel. error %.1e", worst_grad)};
}

// --- median-frequency weights ----------------------------------------------

Outcome median_weights() {
  const std::vector<std::uint64_t> two = {90, 10};
  const ClassWeights w = median_frequency_weights(two);
  const double e0 = std::abs(w.w[0] - 5.0 / 9.0), e1 = std::abs(w.w[1] - 5.0);
  const std::vector<std::uint64_t> equal(10, 777);
  double e_equal = 0;
  for (double v : median_frequency_weights(equal).w) e_equal = std::max(e_equal, std::abs(v - 1.0));
  const bool pass = e0 <= 1e-12 && e1 <= 1e-12 && e_equal <= 1e-12;
  return {pass, fmt("(90,10) -> (%.15f, ", w.w[0]) + fmt("%.15f)", w.w[1]) + fmt(", equal-count error %.1e", e_equal)};
}

// --- format determinism ---------------------------------------------------------

Outcome format_determinism() {
  SensorSpec spec;
  spec.n_beams = 9;
  spec.angular_resolution = 0.125;
  spec.fov = 1.0;
  Xoshiro256 rng(6006);
  Dataset ds{spec, {}};
  for (int k = 0; k < 1000; ++k) {
    DatasetRecord r;
    r.scene_id = "scene" + std::to_string(rng.bounded(7));
    r.frame = k;
    r.timestamp = k / 20.0;
    for (int b = 0; b < spec.n_beams; ++b) {
      r.ranges.push_back(rng.uniform() * 60);
      r.intensities.push_back(std::ldexp(rng.uniform(), static_cast<int>(rng.bounded(40)) - 20));
    }
    r.init_pose = {rng.gaussian(), rng.gaussian(), rng.gaussian()};
    if (k % 2) {
      r.true_pose = Pose2D{rng.gaussian(), rng.gaussian(), rng.gaussian()};
      std::vector<ClassLabel> labels;
      for (int b = 0; b < spec.n_beams; ++b) labels.push_back(class_from_index(static_cast<int>(rng.bounded(10))));
      r.labels = labels;
      r.flagged = k % 3 == 0;
      r.refined_pose = *r.true_pose;
      r.alignment_rms = rng.uniform();
    }
    ds.records.push_back(r);
  }
  const std::string text = write_dataset(ds);
  const Dataset back = read_dataset(text);
  const bool round_trip = write_dataset(back) == text && back.records == ds.records;

  SplitSpec sspec;
  sspec.seed = 17;
  const auto scenes = group_by_scene(ds.records);
  const SplitResult s1 = split_dataset(scenes, sspec), s2 = split_dataset(scenes, sspec);
  const bool reproducible = s1.train == s2.train && s1.val == s2.val && s1.test == s2.test;

  const bool vectors =
      scene_permutation(10, 0, "lobby") == std::vector<std::size_t>{6, 0, 4, 2, 3, 7, 8, 1, 5, 9} &&
      scene_permutation(12, 7, "corridor_a") == std::vector<std::size_t>{3, 10, 4, 5, 2, 0, 9, 6, 1, 8, 11, 7} &&
      SplitMix64(0).next() == 0xe220a8397b1dcdafULL && fnv1a64("foobar") == 0x85944171f73967e8ULL;

  std::vector<DatasetRecord> ten(10);
  for (int k = 0; k < 10; ++k) {
    ten[k].scene_id = "ten";
    ten[k].frame = k;
  }
  const std::vector<SceneRecords> one_scene = {{"ten", ten}};
  const SplitResult r = split_dataset(one_scene, SplitSpec{});
  const bool sizes = r.train.size() == 7 && r.val.size() == 1 && r.test.size() == 2;

  const auto yn = [](bool b) { return b ? "yes" : "no"; };
  return {round_trip && reproducible && vectors && sizes,
          std::string("1000-record round trip byte-identical: ") + yn(round_trip) + ", split reproducible: " +
              yn(reproducible) + ", PRNG vectors: " + yn(vectors) + ", 10 frames -> " + std::to_string(r.train.size()) +
              "/" + std::to_string(r.val.size()) + "/" + std::to_string(r.test.size())};
}

// --- optional real-dataset check --------------------------------------------

Outcome real_dataset_frequencies() {
  const char* path = std::getenv("SEMLABEL_DATASET");
  std::vector<std::vector<ClassLabel>> labels;
  for (const auto& r : read_dataset_file(path).records) {
    if (r.labels) labels.push_back(*r.labels);
  }
  const ClassFrequencies f = class_frequencies(labels);
  const double wall = f.percent[class_index(ClassLabel::kWall)];
  const double person = f.percent[class_index(ClassLabel::kPerson)];
  return {std::abs(wall - 47.4) <= 0.5 && std::abs(person - 4.5) <= 0.5,
          fmt("Wall %.2f%%", wall) + fmt(", Person %.2f%%", person)};
}

}  // namespace
}  // namespace semlabel

int main() {
  using namespace semlabel;
  const std::vector<Criterion> criteria = {
      {"metric-formula-fidelity", 5.0, metric_fidelity},
      {"icp-recovery", 30.0, icp_recovery},
      {"end-to-end-autolabel", 120.0, end_to_end},
      {"line-fit-correctness", 0.0, line_fit},
      {"lovasz-softmax-oracle", 0.0, lovasz},
      {"median-frequency-weights", 0.0, median_weights},
      {"format-determinism", 0.0, format_determinism},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = fmt("%.2f s", secs);
    if (c.time_limit_s > 0) {
      timing += fmt(" (limit %.0f s)", c.time_limit_s);
      if (secs >= c.time_limit_s) {
        o.pass = false;
        timing += " over budget";
      }
    }
    failed += !o.pass;
    std::printf("%s %s: %s [%s]\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), timing.c_str());
    std::fflush(stdout);
  }
  if (std::getenv("SEMLABEL_DATASET")) {
    Outcome o;
    try {
      o = real_dataset_frequencies();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s dataset-class-frequencies: %s\n", o.pass ? "PASS" : "FAIL", o.detail.c_str());
  } else {
    std::printf("SKIP dataset-class-frequencies: set SEMLABEL_DATASET to a converted dataset file\n");
  }
  return failed == 0 ? 0 : 1;
}
