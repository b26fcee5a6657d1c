#include "semlabel/leg_detect.h"

#include <cmath>

namespace semlabel {

std::vector<ScanCluster> cluster_scan(const LidarScan& scan, const SensorSpec& spec,
                                      const LegDetectParams& params) {
  LineExtractParams jump;
  jump.jump_abs = params.jump_abs;
  jump.jump_rel = params.jump_rel;
  jump.min_points = 3;
  std::vector<ScanCluster> out;
  for (const BeamRange& run : segment_scan(scan, spec, jump)) {
    ScanCluster c;
    c.beams = run;
    Vec2 first, last;
    for (int i = run.begin; i < run.end; ++i) {
      const double a = beam_angle(i, spec);
      const Vec2 p(scan.ranges[i] * std::cos(a), scan.ranges[i] * std::sin(a));
      if (i == run.begin) first = p;
      last = p;
      c.centroid += p;
    }
    c.centroid /= static_cast<double>(run.size());
    c.width = (last - first).norm();
    out.push_back(c);
  }
  return out;
}

std::vector<bool> detect_person_points(const LidarScan& scan, const SensorSpec& spec,
                                       const LegDetectParams& params) {
  const std::vector<ScanCluster> clusters = cluster_scan(scan, spec, params);
  auto leg_width = [&](const ScanCluster& c) {
    return c.width >= params.leg_width_min && c.width <= params.leg_width_max;
  };
  std::vector<bool> mask(static_cast<std::size_t>(spec.n_beams), false);
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    const ScanCluster& c = clusters[k];
    bool person = false;
    if (leg_width(c)) {
      for (std::size_t m = 0; m < clusters.size() && !person; ++m) {
        person = m != k && leg_width(clusters[m]) &&
                 (clusters[m].centroid - c.centroid).norm() <= params.pair_distance;
      }
    } else {
      person = c.width > params.leg_width_max && c.width <= params.merged_width_max;
    }
    if (person) {
      for (int i = c.beams.begin; i < c.beams.end; ++i) mask[i] = true;
    }
  }
  return mask;
}

}  // namespace semlabel
