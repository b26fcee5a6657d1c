#include "semlabel/line_extract.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "semlabel/error.h"

namespace semlabel {

void LineExtractParams::validate() const {
  if (!(jump_abs > 0.0) || !(jump_rel > 0.0) || !(split_threshold > 0.0) ||
      min_points < 2 || !(min_length > 0.0) || !(sigma0 > 0.0) || !(noise_slope > 0.0) ||
      !(merge_max_angle > 0.0)) {
    throw InvalidArgument("line extraction parameters must be positive (min_points >= 2)");
  }
}

std::vector<BeamRange> segment_scan(const LidarScan& scan, const SensorSpec& spec,
                                    const LineExtractParams& params) {
  check_dimensions(scan, spec);
  std::vector<BeamRange> out;
  auto close_run = [&](int begin, int end) {
    if (end - begin >= params.min_points) out.push_back({begin, end});
  };
  int begin = -1;
  for (int i = 0; i < spec.n_beams; ++i) {
    const double r = scan.ranges[i];
    if (!is_return(r, spec)) {
      if (begin >= 0) close_run(begin, i);
      begin = -1;
      continue;
    }
    if (begin >= 0) {
      const double prev = scan.ranges[i - 1];
      const double limit = std::max(params.jump_abs, params.jump_rel * std::min(r, prev));
      if (std::abs(r - prev) > limit) {
        close_run(begin, i);
        begin = i;
      }
    } else {
      begin = i;
    }
  }
  if (begin >= 0) close_run(begin, spec.n_beams);
  return out;
}

LineFit weighted_line_fit(std::span<const Vec2> points, std::span<const double> weights) {
  if (points.size() != weights.size()) {
    throw InvalidArgument("line fit: points and weights differ in length");
  }
  if (points.size() < 2) throw DegenerateInput("line fit needs at least 2 points");
  double wsum = 0.0;
  Vec2 centroid = Vec2::Zero();
  double scale = 1.0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (!(weights[k] > 0.0)) throw InvalidArgument("line fit weights must be positive");
    wsum += weights[k];
    centroid += weights[k] * points[k];
    scale = std::max(scale, points[k].cwiseAbs().maxCoeff());
  }
  centroid /= wsum;

  double sxx = 0.0, sxy = 0.0, syy = 0.0, spread = 0.0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const Vec2 q = points[k] - centroid;
    sxx += weights[k] * q.x() * q.x();
    sxy += weights[k] * q.x() * q.y();
    syy += weights[k] * q.y() * q.y();
    spread = std::max(spread, q.norm());
  }
  if (spread <= 1e-12 * scale) throw DegenerateInput("line fit: all points coincide");

  // Major axis of the scatter ellipse; the normal is perpendicular to it.
  const double phi = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  LineFit fit;
  fit.normal = Vec2(-std::sin(phi), std::cos(phi));
  fit.offset = fit.normal.dot(centroid);
  const double eps = 1e-12 * scale;
  const bool flip = fit.offset < -eps ||
                    (std::abs(fit.offset) <= eps &&
                     (fit.normal.y() < -1e-15 ||
                      (std::abs(fit.normal.y()) <= 1e-15 && fit.normal.x() < 0.0)));
  if (flip) {
    fit.normal = -fit.normal;
    fit.offset = -fit.offset;
  }
  if (std::abs(fit.offset) <= eps) fit.offset = std::abs(fit.offset);

  double sq = 0.0;
  for (const Vec2& p : points) {
    const double r = fit.normal.dot(p) - fit.offset;
    sq += r * r;
  }
  fit.rms_residual = std::sqrt(sq / static_cast<double>(points.size()));
  return fit;
}

double point_line_distance(const LineFit& line, const Vec2& p) {
  return std::abs(line.normal.dot(p) - line.offset);
}

namespace {

struct ClusterPoint {
  Vec2 p;
  double weight;
  int beam;
};

struct Leaf {
  std::vector<int> members;  // indices into the cluster point list, ascending
  LineFit fit;
  double max_residual = 0.0;
};

double chord_distance(const Vec2& a, const Vec2& b, const Vec2& p) {
  const Vec2 ab = b - a;
  const double len = ab.norm();
  if (len < 1e-12) return (p - a).norm();
  return std::abs(ab.x() * (p.y() - a.y()) - ab.y() * (p.x() - a.x())) / len;
}

// Index (into `members`) of the largest strictly interior value, or nullopt
// when fewer than three members. Ties resolve to the index closest to the
// middle so the choice is symmetric under reversal.
template <typename Fn>
std::optional<std::size_t> argmax_interior(const std::vector<int>& members, Fn&& value,
                                           double* best_value) {
  if (members.size() < 3) return std::nullopt;
  std::size_t best = 1;
  double best_v = -1.0;
  const double mid = (static_cast<double>(members.size()) - 1.0) / 2.0;
  for (std::size_t k = 1; k + 1 < members.size(); ++k) {
    const double v = value(members[k]);
    if (v > best_v ||
        (v == best_v && std::abs(static_cast<double>(k) - mid) <
                            std::abs(static_cast<double>(best) - mid))) {
      best_v = v;
      best = k;
    }
  }
  *best_value = best_v;
  return best;
}

class SplitMerge {
 public:
  SplitMerge(std::vector<ClusterPoint> pts, const LineExtractParams& params)
      : pts_(std::move(pts)), params_(params) {}

  std::vector<Leaf> run() {
    std::vector<int> all(pts_.size());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = static_cast<int>(k);
    split(std::move(all));
    merge();
    return std::move(leaves_);
  }

 private:
  std::optional<Leaf> fit(std::vector<int> members) const {
    std::vector<Vec2> p;
    std::vector<double> w;
    p.reserve(members.size());
    w.reserve(members.size());
    for (int m : members) {
      p.push_back(pts_[m].p);
      w.push_back(pts_[m].weight);
    }
    Leaf leaf;
    try {
      leaf.fit = weighted_line_fit(p, w);
    } catch (const DegenerateInput&) {
      return std::nullopt;
    }
    for (const Vec2& q : p) {
      leaf.max_residual = std::max(leaf.max_residual, point_line_distance(leaf.fit, q));
    }
    leaf.members = std::move(members);
    return leaf;
  }

  // Splits at `pivot`; the pivot point itself joins neither side.
  void split_at(const std::vector<int>& members, std::size_t pivot) {
    split(std::vector<int>(members.begin(), members.begin() + pivot));
    split(std::vector<int>(members.begin() + pivot + 1, members.end()));
  }

  void split(std::vector<int> members) {
    if (static_cast<int>(members.size()) < params_.min_points) return;
    const Vec2& a = pts_[members.front()].p;
    const Vec2& b = pts_[members.back()].p;
    double worst = 0.0;
    const auto pivot = argmax_interior(
        members, [&](int m) { return chord_distance(a, b, pts_[m].p); }, &worst);
    if (pivot && worst > params_.split_threshold) {
      split_at(members, *pivot);
      return;
    }
    auto leaf = fit(members);
    if (!leaf) return;
    if (leaf->max_residual > params_.split_threshold) {
      const LineFit line = leaf->fit;
      const auto p2 = argmax_interior(
          members, [&](int m) { return point_line_distance(line, pts_[m].p); }, &worst);
      if (p2) split_at(members, *p2);
      return;
    }
    leaves_.push_back(std::move(*leaf));
  }

  std::optional<Leaf> try_merge(const Leaf& a, const Leaf& b) const {
    const double cos_angle = std::abs(a.fit.normal.dot(b.fit.normal));
    if (cos_angle < std::cos(params_.merge_max_angle)) return std::nullopt;
    std::vector<int> members = a.members;
    members.insert(members.end(), b.members.begin(), b.members.end());
    auto merged = fit(std::move(members));
    if (!merged || !(merged->fit.rms_residual < params_.split_threshold) ||
        merged->max_residual > params_.split_threshold) {
      return std::nullopt;
    }
    return merged;
  }

  // Repeatedly merges the adjacent pair with the lowest merged rms.
  void merge() {
    while (leaves_.size() >= 2) {
      std::optional<Leaf> best;
      std::size_t best_k = 0;
      for (std::size_t k = 0; k + 1 < leaves_.size(); ++k) {
        auto merged = try_merge(leaves_[k], leaves_[k + 1]);
        if (merged && (!best || merged->fit.rms_residual < best->fit.rms_residual)) {
          best = std::move(merged);
          best_k = k;
        }
      }
      if (!best) break;
      leaves_[best_k] = std::move(*best);
      leaves_.erase(leaves_.begin() + static_cast<std::ptrdiff_t>(best_k) + 1);
    }
  }

  std::vector<ClusterPoint> pts_;
  const LineExtractParams& params_;
  std::vector<Leaf> leaves_;
};

Vec2 project_onto(const LineFit& line, const Vec2& p) {
  return p - (line.normal.dot(p) - line.offset) * line.normal;
}

}  // namespace

std::vector<LineSegment> extract_lines(const LidarScan& scan, const SensorSpec& spec,
                                       const LineExtractParams& params) {
  params.validate();
  std::vector<LineSegment> out;
  for (const BeamRange& run : segment_scan(scan, spec, params)) {
    std::vector<ClusterPoint> pts;
    pts.reserve(run.size());
    for (int i = run.begin; i < run.end; ++i) {
      const double r = scan.ranges[i];
      const double a = beam_angle(i, spec);
      const double sigma = params.sigma0 + params.noise_slope * r;
      pts.push_back({Vec2(r * std::cos(a), r * std::sin(a)), 1.0 / (sigma * sigma), i});
    }
    SplitMerge sm(pts, params);
    for (const Leaf& leaf : sm.run()) {
      LineSegment seg;
      seg.normal = leaf.fit.normal;
      seg.offset = leaf.fit.offset;
      seg.rms_residual = leaf.fit.rms_residual;
      seg.endpoints = {project_onto(leaf.fit, pts[leaf.members.front()].p),
                       project_onto(leaf.fit, pts[leaf.members.back()].p)};
      if (seg.length() < params.min_length) continue;
      seg.inlier_beams.reserve(leaf.members.size());
      for (int m : leaf.members) seg.inlier_beams.push_back(pts[m].beam);
      out.push_back(std::move(seg));
    }
  }
  return out;
}

std::vector<Vec2> line_inlier_points(const LidarScan& scan, const SensorSpec& spec,
                                     std::span<const LineSegment> segments) {
  std::vector<int> beams;
  for (const LineSegment& seg : segments) {
    beams.insert(beams.end(), seg.inlier_beams.begin(), seg.inlier_beams.end());
  }
  std::sort(beams.begin(), beams.end());
  std::vector<Vec2> out;
  out.reserve(beams.size());
  for (int i : beams) {
    const double r = scan.ranges[i];
    const double a = beam_angle(i, spec);
    out.emplace_back(r * std::cos(a), r * std::sin(a));
  }
  return out;
}

}  // namespace semlabel
