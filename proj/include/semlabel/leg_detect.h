#pragma once

#include <vector>

#include "semlabel/line_extract.h"
#include "semlabel/scan_model.h"

namespace semlabel {

struct ScanCluster {
  BeamRange beams;
  double width = 0.0;  // distance between first and last endpoint
  Vec2 centroid = Vec2::Zero();
};

struct LegDetectParams {
  double jump_abs = 0.1;
  double jump_rel = 0.05;
  double leg_width_min = 0.05;
  double leg_width_max = 0.25;
  double pair_distance = 0.5;        // max centroid distance of two legs
  double merged_width_max = 0.45;    // legs-together band is (leg_width_max, this]
};

// Jump-distance clusters with at least 3 beams.
std::vector<ScanCluster> cluster_scan(const LidarScan& scan, const SensorSpec& spec,
                                      const LegDetectParams& params);

// Per-beam mask of points on clusters classified as legs: a leg-width
// cluster with another leg-width cluster nearby, or one cluster as wide as
// two legs side by side.
std::vector<bool> detect_person_points(const LidarScan& scan, const SensorSpec& spec,
                                       const LegDetectParams& params);

}  // namespace semlabel
