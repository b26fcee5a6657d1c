#include "semlabel/scan_align.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semlabel/error.h"

namespace semlabel {

KdTree2::KdTree2(std::span<const Vec2> points) : points_(points.begin(), points.end()) {
  if (points_.size() > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max())) {
    throw InvalidArgument("k-d tree: too many points");
  }
  std::vector<std::int32_t> order(points_.size());
  std::iota(order.begin(), order.end(), 0);
  nodes_.reserve(points_.size());
  root_ = build(order, 0, order.size());
}

std::int32_t KdTree2::build(std::vector<std::int32_t>& order, std::size_t lo, std::size_t hi) {
  if (lo >= hi) return -1;
  double min_x = points_[order[lo]].x(), max_x = min_x;
  double min_y = points_[order[lo]].y(), max_y = min_y;
  for (std::size_t k = lo; k < hi; ++k) {
    const Vec2& p = points_[order[k]];
    min_x = std::min(min_x, p.x());
    max_x = std::max(max_x, p.x());
    min_y = std::min(min_y, p.y());
    max_y = std::max(max_y, p.y());
  }
  const int axis = (max_x - min_x) >= (max_y - min_y) ? 0 : 1;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::nth_element(order.begin() + lo, order.begin() + mid, order.begin() + hi,
                   [&](std::int32_t a, std::int32_t b) {
                     const double va = points_[a][axis], vb = points_[b][axis];
                     return va < vb || (va == vb && a < b);
                   });
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({points_[order[mid]][axis], order[mid], -1, -1,
                    static_cast<std::uint8_t>(axis)});
  const std::int32_t left = build(order, lo, mid);
  const std::int32_t right = build(order, mid + 1, hi);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree2::search(std::int32_t node, const Vec2& q, Hit& best) const {
  if (node < 0) return;
  const Node& n = nodes_[node];
  const double d = (points_[n.point] - q).squaredNorm();
  if (d < best.dist_sq || (d == best.dist_sq && (best.index < 0 || n.point < best.index))) {
    best.dist_sq = d;
    best.index = n.point;
  }
  const double diff = q[n.axis] - n.split;
  search(diff < 0.0 ? n.left : n.right, q, best);
  if (diff * diff <= best.dist_sq) search(diff < 0.0 ? n.right : n.left, q, best);
}

KdTree2::Hit KdTree2::nearest(const Vec2& q, double max_dist_sq) const {
  Hit best;
  best.dist_sq = max_dist_sq;
  search(root_, q, best);
  if (best.index < 0) best.dist_sq = std::numeric_limits<double>::infinity();
  return best;
}

MapPoints map_to_points(const OccupancyGridMap& map) {
  map.validate();
  MapPoints out;
  for (int j = 0; j < map.height; ++j) {
    for (int i = 0; i < map.width; ++i) {
      if (map.at(i, j) == CellState::kOccupied) {
        out.points.push_back(map.cell_center(i, j));
        out.cells.push_back({i, j});
      }
    }
  }
  if (out.points.empty()) throw DegenerateInput("map has no occupied cells to align against");
  out.index = KdTree2(out.points);
  return out;
}

MapPoints map_surface_points(const OccupancyGridMap& map) {
  map.validate();
  MapPoints out;
  auto free_at = [&](int i, int j) { return map.contains(i, j) && map.at(i, j) == CellState::kFree; };
  for (int j = 0; j < map.height; ++j) {
    for (int i = 0; i < map.width; ++i) {
      if (map.at(i, j) != CellState::kOccupied) continue;
      if (free_at(i - 1, j) || free_at(i + 1, j) || free_at(i, j - 1) || free_at(i, j + 1)) {
        out.points.push_back(map.cell_center(i, j));
        out.cells.push_back({i, j});
      }
    }
  }
  if (out.points.empty()) return map_to_points(map);
  out.index = KdTree2(out.points);
  return out;
}

MapPoints make_map_points(std::vector<Vec2> points) {
  if (points.empty()) throw DegenerateInput("empty map point set");
  MapPoints out;
  out.points = std::move(points);
  out.index = KdTree2(out.points);
  return out;
}

Pose2D best_rigid_transform(std::span<const Vec2> sources, std::span<const Vec2> targets) {
  if (sources.size() != targets.size()) {
    throw InvalidArgument("rigid transform: source/target size mismatch");
  }
  if (sources.size() < 2) throw InvalidArgument("rigid transform needs at least 2 pairs");
  const double n = static_cast<double>(sources.size());
  Vec2 cs = Vec2::Zero(), ct = Vec2::Zero();
  for (std::size_t k = 0; k < sources.size(); ++k) {
    cs += sources[k];
    ct += targets[k];
  }
  cs /= n;
  ct /= n;
  double dot = 0.0, cross = 0.0, spread = 0.0, scale = 1.0;
  for (std::size_t k = 0; k < sources.size(); ++k) {
    const Vec2 s = sources[k] - cs;
    const Vec2 t = targets[k] - ct;
    dot += s.dot(t);
    cross += s.x() * t.y() - s.y() * t.x();
    spread = std::max(spread, s.norm());
    scale = std::max(scale, sources[k].cwiseAbs().maxCoeff());
  }
  if (spread <= 1e-12 * scale) throw DegenerateInput("rigid transform: sources coincide");
  const double theta = std::atan2(cross, dot);
  const double c = std::cos(theta), s = std::sin(theta);
  const Vec2 rotated(c * cs.x() - s * cs.y(), s * cs.x() + c * cs.y());
  const Vec2 t = ct - rotated;
  return {t.x(), t.y(), theta};
}

void IcpParams::validate() const {
  if (!(max_correspondence_dist > 0.0) || !(trim_fraction >= 0.0 && trim_fraction < 1.0) ||
      max_iterations < 0 || !(translation_tol > 0.0) || !(rotation_tol > 0.0)) {
    throw InvalidArgument("invalid ICP parameters");
  }
}

namespace {

struct Matches {
  std::vector<Vec2> sources;  // world frame
  std::vector<Vec2> targets;
  double rms = 0.0;
};

Matches match(std::span<const Vec2> source, const Pose2D& pose, const MapPoints& map,
              const IcpParams& params) {
  const double max_sq = params.max_correspondence_dist * params.max_correspondence_dist;
  struct Pair {
    double dist_sq;
    std::size_t src;
    int tgt;
  };
  std::vector<Pair> pairs;
  pairs.reserve(source.size());
  for (std::size_t k = 0; k < source.size(); ++k) {
    const Vec2 w = apply(pose, source[k]);
    const auto hit = map.index.nearest(w, max_sq);
    if (hit.index >= 0) pairs.push_back({hit.dist_sq, k, hit.index});
  }
  const auto drop = static_cast<std::size_t>(
      std::floor(params.trim_fraction * static_cast<double>(pairs.size())));
  const std::size_t keep = pairs.size() - drop;
  if (drop > 0) {
    std::nth_element(pairs.begin(), pairs.begin() + keep, pairs.end(),
                     [](const Pair& a, const Pair& b) {
                       return a.dist_sq < b.dist_sq || (a.dist_sq == b.dist_sq && a.src < b.src);
                     });
    pairs.resize(keep);
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.src < b.src; });
  }
  Matches m;
  m.sources.reserve(pairs.size());
  m.targets.reserve(pairs.size());
  double sum = 0.0;
  for (const Pair& p : pairs) {
    m.sources.push_back(apply(pose, source[p.src]));
    m.targets.push_back(map.points[p.tgt]);
    sum += p.dist_sq;
  }
  m.rms = pairs.empty() ? 0.0 : std::sqrt(sum / static_cast<double>(pairs.size()));
  return m;
}

double rms_after(const Matches& m, const Pose2D& delta) {
  double sum = 0.0;
  for (std::size_t k = 0; k < m.sources.size(); ++k) {
    sum += (apply(delta, m.sources[k]) - m.targets[k]).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(m.sources.size()));
}

}  // namespace

IcpResult icp_refine(std::span<const Vec2> source, const Pose2D& init, const MapPoints& map,
                     const IcpParams& params) {
  params.validate();
  if (source.empty()) throw InvalidArgument("ICP source point set is empty");
  if (map.index.empty()) throw DegenerateInput("ICP map point set is empty");

  IcpResult result;
  result.pose = init;
  auto lost = [&] {
    result.pose = init;
    result.converged = false;
    result.lost_correspondences = true;
    result.rms = std::numeric_limits<double>::infinity();
    result.n_correspondences = 0;
    return result;
  };

  // Extrapolation works in (x, y, theta * radius) so angular and linear
  // motion share a metric.
  double radius = 0.0;
  {
    Vec2 c = Vec2::Zero();
    for (const Vec2& p : source) c += p;
    c /= static_cast<double>(source.size());
    for (const Vec2& p : source) radius += (p - c).squaredNorm();
    radius = std::max(1e-3, std::sqrt(radius / static_cast<double>(source.size())));
  }
  auto to_q = [&](const Pose2D& p) { return Eigen::Vector3d(p.x, p.y, p.theta * radius); };
  auto from_q = [&](const Eigen::Vector3d& q) { return Pose2D{q.x(), q.y(), normalize_angle(q.z() / radius)}; };
  std::vector<Eigen::Vector3d> hist_q;
  std::vector<double> hist_d;

  Pose2D pose = init;
  for (int it = 1; it <= params.max_iterations; ++it) {
    const Matches m = match(source, pose, map, params);
    if (m.sources.size() < 2) return lost();
    Pose2D delta;
    try {
      delta = best_rigid_transform(m.sources, m.targets);
    } catch (const DegenerateInput&) {
      return lost();
    }
    const double after = rms_after(m, delta);
    result.trace.push_back({m.rms, after, static_cast<int>(m.sources.size())});
    pose = compose(delta, pose);
    result.iterations = it;
    if (std::hypot(delta.x, delta.y) < params.translation_tol &&
        std::abs(delta.theta) < params.rotation_tol) {
      result.converged = true;
      break;
    }
    if (!params.accelerate) continue;

    if (!hist_q.empty()) {
      // Keep the angle continuous so theta differences are plain steps.
      Eigen::Vector3d q = to_q(pose);
      q.z() = hist_q.back().z() + normalize_angle((q.z() - hist_q.back().z()) / radius) * radius;
      hist_q.push_back(q);
    } else {
      hist_q.push_back(to_q(pose));
    }
    hist_d.push_back(after * after);
    if (hist_q.size() < 3) continue;
    const std::size_t k = hist_q.size() - 1;
    const Eigen::Vector3d d1 = hist_q[k] - hist_q[k - 1];
    const Eigen::Vector3d d0 = hist_q[k - 1] - hist_q[k - 2];
    const double n1 = d1.norm(), n0 = d0.norm();
    if (n1 <= 0.0 || n0 <= 0.0) continue;
    const double cos_limit = std::cos(deg_to_rad(10.0));
    if (d1.dot(d0) / (n1 * n0) < cos_limit) {
      hist_q.erase(hist_q.begin(), hist_q.end() - 1);
      hist_d.erase(hist_d.begin(), hist_d.end() - 1);
      continue;
    }
    // Error as a function of arc position v along the update direction, with
    // the current pose at v = 0.
    const double v1 = -n1, v2 = -n1 - n0;
    const double e0 = hist_d[k], e1 = hist_d[k - 1], e2 = hist_d[k - 2];
    const double vmax = 25.0 * n1;
    const double slope = (e0 - e1) / (0.0 - v1);
    const double lin = slope < 0.0 ? -e0 / slope : -1.0;
    // Parabola through the three samples.
    const double a = ((e0 - e1) / (0.0 - v1) - (e1 - e2) / (v1 - v2)) / (0.0 - v2);
    const double b = (e0 - e1) / (0.0 - v1) - a * (0.0 + v1);
    const double par = a > 0.0 ? -b / (2.0 * a) : -1.0;
    double v = 0.0;
    if (par > 0.0 && lin > 0.0 && par < lin && par < vmax) {
      v = par;
    } else if (lin > 0.0 && lin < vmax) {
      v = lin;
    } else if (lin >= vmax || par >= vmax) {
      v = vmax;
    }
    hist_q.clear();
    hist_d.clear();
    if (!(v > 0.0)) continue;
    const Pose2D jumped = from_q(to_q(pose) + v * d1 / n1);
    const Matches check = match(source, jumped, map, params);
    const Matches here = match(source, pose, map, params);
    if (check.sources.size() >= 2 && check.sources.size() >= here.sources.size() && check.rms < here.rms) {
      pose = jumped;
    }
  }

  result.pose = pose;
  const Matches final_matches = match(source, pose, map, params);
  result.n_correspondences = static_cast<int>(final_matches.sources.size());
  if (result.n_correspondences == 0) {
    if (params.max_iterations > 0) return lost();
    result.rms = std::numeric_limits<double>::infinity();
  } else {
    result.rms = final_matches.rms;
  }
  return result;
}

}  // namespace semlabel
