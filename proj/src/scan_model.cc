#include "semlabel/scan_model.h"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <json.hpp>

#include "semlabel/error.h"

namespace semlabel {

namespace {

constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "Other", "Chair", "Door", "Elevator", "Person",
    "Pillar", "Sofa", "Table", "TrashBin", "Wall"};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

void SensorSpec::validate() const {
  if (n_beams < 2) throw InvalidArgument("sensor needs at least 2 beams");
  if (!(angular_resolution > 0.0) || !(range_max > 0.0) || !(rate > 0.0)) {
    throw InvalidArgument("sensor resolution, range_max and rate must be positive");
  }
  if (std::abs(fov - (n_beams - 1) * angular_resolution) > 1e-9) {
    throw InvalidArgument("sensor fov must equal (n_beams - 1) * angular_resolution");
  }
}

bool is_return(double range, const SensorSpec& spec) {
  return std::isfinite(range) && range >= 0.0 && range <= spec.range_max;
}

LidarScan sanitize_scan(LidarScan scan, const SensorSpec& spec) {
  for (double& r : scan.ranges) {
    if (!is_return(r, spec)) r = spec.no_return();
  }
  for (double& v : scan.intensities) {
    if (!std::isfinite(v) || v < 0.0) v = 0.0;
  }
  return scan;
}

void check_dimensions(const LidarScan& scan, const SensorSpec& spec) {
  const auto n = static_cast<std::size_t>(spec.n_beams);
  if (scan.ranges.size() != n || scan.intensities.size() != n) {
    throw InvalidArgument("scan has " + std::to_string(scan.ranges.size()) +
                          " ranges and " +
                          std::to_string(scan.intensities.size()) +
                          " intensities, sensor expects " + std::to_string(n));
  }
}

double normalize_angle(double angle) {
  double a = std::remainder(angle, 2.0 * kPi);  // [-pi, pi]
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

Pose2D compose(const Pose2D& a, const Pose2D& b) {
  const double c = std::cos(a.theta);
  const double s = std::sin(a.theta);
  return {a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y,
          normalize_angle(a.theta + b.theta)};
}

Pose2D inverse(const Pose2D& pose) {
  const double c = std::cos(pose.theta);
  const double s = std::sin(pose.theta);
  return {-(c * pose.x + s * pose.y), s * pose.x - c * pose.y,
          normalize_angle(-pose.theta)};
}

Vec2 apply(const Pose2D& pose, const Vec2& p) {
  const double c = std::cos(pose.theta);
  const double s = std::sin(pose.theta);
  return {c * p.x() - s * p.y() + pose.x, s * p.x() + c * p.y() + pose.y};
}

ClassLabel class_from_index(int id) {
  if (id < 0 || id >= kNumClasses) {
    throw InvalidArgument("class id out of range: " + std::to_string(id));
  }
  return static_cast<ClassLabel>(id);
}

std::string_view class_name(ClassLabel c) { return kClassNames[class_index(c)]; }

std::optional<ClassLabel> class_from_name(std::string_view name) {
  for (int i = 0; i < kNumClasses; ++i) {
    if (iequals(name, kClassNames[i])) return static_cast<ClassLabel>(i);
  }
  return std::nullopt;
}

double beam_angle(int i, const SensorSpec& spec) {
  if (i < 0 || i >= spec.n_beams) {
    throw InvalidArgument("beam index " + std::to_string(i) + " out of range");
  }
  return -spec.fov / 2.0 + i * spec.angular_resolution;
}

std::vector<BeamPoint> polar_to_cartesian(const LidarScan& scan,
                                          const SensorSpec& spec) {
  check_dimensions(scan, spec);
  std::vector<BeamPoint> out;
  out.reserve(scan.size());
  for (int i = 0; i < spec.n_beams; ++i) {
    const double r = scan.ranges[i];
    if (!is_return(r, spec)) continue;
    const double a = beam_angle(i, spec);
    out.push_back({Vec2(r * std::cos(a), r * std::sin(a)), i});
  }
  return out;
}

std::vector<Vec2> transform_points(std::span<const Vec2> points,
                                   const Pose2D& pose) {
  std::vector<Vec2> out;
  out.reserve(points.size());
  for (const Vec2& p : points) out.push_back(apply(pose, p));
  return out;
}

NormalizedScan normalize_scan(const LidarScan& scan, const SensorSpec& spec,
                              const NormalizationStats& stats) {
  if (!(stats.range_scale > 0.0) || !(stats.intensity_p99 > 0.0)) {
    throw InvalidArgument("normalization stats must be strictly positive");
  }
  check_dimensions(scan, spec);
  NormalizedScan out;
  out.n_beams = spec.n_beams;
  out.values.resize(2 * static_cast<std::size_t>(spec.n_beams));
  for (int i = 0; i < spec.n_beams; ++i) {
    const double r = scan.ranges[i];
    double nr = 1.0;
    if (is_return(r, spec)) {
      nr = std::clamp(r, 0.0, stats.range_scale) / stats.range_scale;
    }
    double v = scan.intensities[i];
    if (!std::isfinite(v)) v = 0.0;
    const double ni = std::clamp(v, 0.0, stats.intensity_p99) / stats.intensity_p99;
    out.values[i] = static_cast<float>(nr);
    out.values[spec.n_beams + i] = static_cast<float>(ni);
  }
  return out;
}

NormalizationStats compute_normalization_stats(std::span<const LidarScan> scans,
                                               const SensorSpec& spec) {
  std::vector<double> values;
  for (const LidarScan& scan : scans) {
    check_dimensions(scan, spec);
    for (int i = 0; i < spec.n_beams; ++i) {
      if (is_return(scan.ranges[i], spec) && std::isfinite(scan.intensities[i])) {
        values.push_back(std::max(0.0, scan.intensities[i]));
      }
    }
  }
  NormalizationStats stats;
  stats.range_scale = spec.range_max;
  if (!values.empty()) {
    // Nearest-rank percentile: ceil(0.99 n) - 1.
    const auto n = values.size();
    auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(n)));
    rank = std::clamp<std::size_t>(rank, 1, n) - 1;
    std::nth_element(values.begin(), values.begin() + rank, values.end());
    if (values[rank] > 0.0) stats.intensity_p99 = values[rank];
  }
  return stats;
}

std::string normalization_stats_to_json(const NormalizationStats& stats) {
  nlohmann::ordered_json j;
  j["range_scale"] = stats.range_scale;
  j["intensity_p99"] = stats.intensity_p99;
  return j.dump() + "\n";
}

NormalizationStats normalization_stats_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("normalization stats: ") + e.what(), e.byte);
  }
  NormalizationStats stats;
  try {
    stats.range_scale = j.at("range_scale").get<double>();
    stats.intensity_p99 = j.at("intensity_p99").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("normalization stats: ") + e.what(), 0);
  }
  if (!(stats.range_scale > 0.0) || !(stats.intensity_p99 > 0.0)) {
    throw InvalidArgument("normalization stats must be strictly positive");
  }
  return stats;
}

}  // namespace semlabel
