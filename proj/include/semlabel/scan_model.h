#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace semlabel {

using Vec2 = Eigen::Vector2d;

inline constexpr double kPi = 3.14159265358979323846;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Planar lidar characteristics. Defaults describe a 1081-beam, 270 degree
// scanner with 0.25 degree spacing, 60 m range and 20 Hz sweep rate.
struct SensorSpec {
  int n_beams = 1081;
  double fov = deg_to_rad(270.0);
  double angular_resolution = deg_to_rad(0.25);
  double range_max = 60.0;
  double rate = 20.0;

  // Throws InvalidArgument unless fov == (n_beams - 1) * angular_resolution.
  void validate() const;

  // Range value stored for beams without a return.
  double no_return() const { return range_max + 1.0; }

  bool operator==(const SensorSpec&) const = default;
};

// One sweep. Beam i has angle beam_angle(i, spec) in the sensor frame.
struct LidarScan {
  std::vector<double> ranges;
  std::vector<double> intensities;
  double timestamp = 0.0;

  std::size_t size() const { return ranges.size(); }
  bool operator==(const LidarScan&) const = default;
};

// True when `range` is a finite return inside [0, range_max].
bool is_return(double range, const SensorSpec& spec);

// Maps non-finite or out-of-range values to the no-return sentinel and
// clamps negative intensities to zero.
LidarScan sanitize_scan(LidarScan scan, const SensorSpec& spec);

// Throws InvalidArgument if the scan arrays do not have n_beams entries.
void check_dimensions(const LidarScan& scan, const SensorSpec& spec);

struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec2 translation() const { return {x, y}; }
  bool operator==(const Pose2D&) const = default;
};

// Wraps an angle into (-pi, pi].
double normalize_angle(double angle);

// a * b: apply b first, then a.
Pose2D compose(const Pose2D& a, const Pose2D& b);
Pose2D inverse(const Pose2D& pose);
Vec2 apply(const Pose2D& pose, const Vec2& p);

enum class ClassLabel : std::uint8_t {
  kOther = 0,
  kChair = 1,
  kDoor = 2,
  kElevator = 3,
  kPerson = 4,
  kPillar = 5,
  kSofa = 6,
  kTable = 7,
  kTrashBin = 8,
  kWall = 9,
};

inline constexpr int kNumClasses = 10;

inline constexpr std::array<ClassLabel, kNumClasses> kAllClasses = {
    ClassLabel::kOther,  ClassLabel::kChair, ClassLabel::kDoor,
    ClassLabel::kElevator, ClassLabel::kPerson, ClassLabel::kPillar,
    ClassLabel::kSofa,   ClassLabel::kTable, ClassLabel::kTrashBin,
    ClassLabel::kWall};

constexpr int class_index(ClassLabel c) { return static_cast<int>(c); }

// Throws InvalidArgument for ids outside 0..9.
ClassLabel class_from_index(int id);

std::string_view class_name(ClassLabel c);

// Case-insensitive lookup of a class name ("wall", "TrashBin", ...).
std::optional<ClassLabel> class_from_name(std::string_view name);

// Person is the only class that moves.
constexpr bool is_dynamic(ClassLabel c) { return c == ClassLabel::kPerson; }

struct NormalizationStats {
  double range_scale = 60.0;
  double intensity_p99 = 1.0;
};

// Throws InvalidArgument if i is outside [0, n_beams).
double beam_angle(int i, const SensorSpec& spec);

struct BeamPoint {
  Vec2 point;
  int beam = 0;
};

// Sensor-frame endpoints of every beam with a return, in beam order.
std::vector<BeamPoint> polar_to_cartesian(const LidarScan& scan,
                                          const SensorSpec& spec);

std::vector<Vec2> transform_points(std::span<const Vec2> points,
                                   const Pose2D& pose);

// Row-major 2 x n_beams array: row 0 normalized range, row 1 normalized
// intensity, every entry in [0, 1].
struct NormalizedScan {
  int n_beams = 0;
  std::vector<float> values;

  float range(int i) const { return values[i]; }
  float intensity(int i) const { return values[n_beams + i]; }
};

NormalizedScan normalize_scan(const LidarScan& scan, const SensorSpec& spec,
                              const NormalizationStats& stats);

// range_scale = spec.range_max; intensity_p99 = 99th percentile (nearest
// rank) of intensities over returning beams, or 1.0 if there are none or it
// is zero.
NormalizationStats compute_normalization_stats(std::span<const LidarScan> scans,
                                               const SensorSpec& spec);

std::string normalization_stats_to_json(const NormalizationStats& stats);
NormalizationStats normalization_stats_from_json(std::string_view text);

}  // namespace semlabel
