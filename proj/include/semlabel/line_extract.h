#pragma once

#include <array>
#include <span>
#include <vector>

#include "semlabel/scan_model.h"

namespace semlabel {

struct LineExtractParams {
  double jump_abs = 0.1;         // m
  double jump_rel = 0.05;        // fraction of the nearer range
  double split_threshold = 0.05; // m
  int min_points = 8;
  double min_length = 0.3;       // m
  double sigma0 = 0.01;          // range noise floor, m
  double noise_slope = 0.001;    // range noise growth per metre
  double merge_max_angle = deg_to_rad(10.0);

  // Throws InvalidArgument unless every field is positive.
  void validate() const;
};

// Half-open run of consecutive beams [begin, end).
struct BeamRange {
  int begin = 0;
  int end = 0;
  int size() const { return end - begin; }
  bool operator==(const BeamRange&) const = default;
};

// Splits the scan into runs of returning beams whose consecutive ranges
// differ by at most max(jump_abs, jump_rel * min(r_a, r_b)). Runs shorter
// than min_points are dropped.
std::vector<BeamRange> segment_scan(const LidarScan& scan, const SensorSpec& spec,
                                    const LineExtractParams& params);

// Line n.p = d with unit n and d >= 0. Lines through the origin take the
// normal with positive y, or (1, 0) for the vertical line.
struct LineFit {
  Vec2 normal = Vec2::UnitY();
  double offset = 0.0;
  double rms_residual = 0.0;  // unweighted
};

// Weighted total least squares. Throws DegenerateInput when all points
// coincide, InvalidArgument on size mismatch or non-positive weights.
LineFit weighted_line_fit(std::span<const Vec2> points, std::span<const double> weights);

double point_line_distance(const LineFit& line, const Vec2& p);

struct LineSegment {
  Vec2 normal;
  double offset = 0.0;
  std::array<Vec2, 2> endpoints;
  std::vector<int> inlier_beams;  // ascending
  double rms_residual = 0.0;

  double length() const { return (endpoints[1] - endpoints[0]).norm(); }
};

// Split-and-merge over each run from segment_scan. Returned segments have
// disjoint inlier sets and every inlier within split_threshold of its line.
std::vector<LineSegment> extract_lines(const LidarScan& scan, const SensorSpec& spec,
                                       const LineExtractParams& params);

// Sensor-frame endpoints of every inlier beam, ordered by beam index.
std::vector<Vec2> line_inlier_points(const LidarScan& scan, const SensorSpec& spec,
                                     std::span<const LineSegment> segments);

}  // namespace semlabel
