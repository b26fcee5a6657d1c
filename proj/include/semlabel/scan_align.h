#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "semlabel/map_label.h"
#include "semlabel/scan_model.h"

namespace semlabel {

// Static 2-d tree for exact nearest-neighbour queries.
class KdTree2 {
 public:
  KdTree2() = default;
  explicit KdTree2(std::span<const Vec2> points);

  struct Hit {
    int index = -1;
    double dist_sq = std::numeric_limits<double>::infinity();
  };

  // Nearest point with squared distance <= max_dist_sq; index -1 if none.
  // Equal distances resolve to the smaller point index.
  Hit nearest(const Vec2& q,
              double max_dist_sq = std::numeric_limits<double>::infinity()) const;

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

 private:
  struct Node {
    double split = 0.0;
    std::int32_t point = -1;  // index into points_
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint8_t axis = 0;
  };

  std::int32_t build(std::vector<std::int32_t>& order, std::size_t lo, std::size_t hi);
  void search(std::int32_t node, const Vec2& q, Hit& best) const;

  std::vector<Vec2> points_;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
};

// Occupied-cell centres plus a nearest-neighbour index over them.
struct MapPoints {
  std::vector<Vec2> points;
  std::vector<CellIndex> cells;  // parallel to points; empty for raw point sets
  KdTree2 index;
};

// Throws DegenerateInput when the map has no occupied cell.
MapPoints map_to_points(const OccupancyGridMap& map);
// Occupied cells with a Free 4-neighbour, i.e. the surfaces a scan can
// see. Solid interiors would otherwise let ICP sink points into thick walls
// at zero cost. Falls back to map_to_points when no cell qualifies.
MapPoints map_surface_points(const OccupancyGridMap& map);
// Index over an arbitrary non-empty point set.
MapPoints make_map_points(std::vector<Vec2> points);

// Closed-form least-squares rigid transform taking sources onto targets.
// Throws InvalidArgument for fewer than 2 pairs or mismatched sizes and
// DegenerateInput if every source coincides.
Pose2D best_rigid_transform(std::span<const Vec2> sources, std::span<const Vec2> targets);

struct IcpParams {
  double max_correspondence_dist = 0.5;
  double trim_fraction = 0.1;
  int max_iterations = 50;
  double translation_tol = 1e-4;
  double rotation_tol = 1e-4;
  // Line/parabola extrapolation along consistent update directions
  // (Besl-McKay); taken only when it lowers the trimmed error.
  bool accelerate = true;

  void validate() const;
};

// Objective on one iteration's trimmed correspondence set, before and after
// the least-squares step.
struct IcpStep {
  double rms_before = 0.0;
  double rms_after = 0.0;
  int n_correspondences = 0;
};

struct IcpResult {
  Pose2D pose;
  double rms = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  int n_correspondences = 0;
  bool lost_correspondences = false;  // ran out of matches; pose == init
  std::vector<IcpStep> trace;
};

// Trimmed point-to-point ICP of sensor-frame `source` against the map.
// Throws InvalidArgument when source is empty.
IcpResult icp_refine(std::span<const Vec2> source, const Pose2D& init,
                     const MapPoints& map, const IcpParams& params);

}  // namespace semlabel
