#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "semlabel/dataset_io.h"
#include "semlabel/map_label.h"
#include "semlabel/prng.h"
#include "semlabel/scan_model.h"

namespace semlabel {

// Reflectance model: intensity = intensity_base * cos(phi)^angle_exponent /
// (1 + range_decay * r), phi being the incidence angle.
struct Material {
  double intensity_base = 1000.0;
  double angle_exponent = 1.0;
  double range_decay = 0.05;

  bool operator==(const Material&) const = default;
};

// Per-class defaults (drywall walls, metallic elevator doors, fabric sofas...).
Material default_material(ClassLabel cls);

struct RectShape {
  Vec2 min;
  Vec2 max;
};

struct DiscShape {
  Vec2 center;
  double radius = 0.0;
};

// Rectangle of the given thickness centred on the segment a-b.
struct WallShape {
  Vec2 a;
  Vec2 b;
  double thickness = 0.1;
};

using Shape = std::variant<RectShape, DiscShape, WallShape>;

// Back-and-forth motion between `from` and `to` at `speed` m/s. The disc
// centre is at `from` at time 0.
struct LinearPath {
  Vec2 from;
  Vec2 to;
  double speed = 1.0;

  Vec2 position(double t) const;
};

struct SceneObject {
  Shape shape;
  ClassLabel cls = ClassLabel::kWall;
  Material material;
  std::optional<LinearPath> path;  // set for moving people only

  bool dynamic() const { return path.has_value(); }
  double area() const;
};

struct Scene {
  std::vector<SceneObject> objects;
  Vec2 bounds_min{0.0, 0.0};
  Vec2 bounds_max{10.0, 10.0};
  // Area a mapper could have seen. When set, uncovered cells whose centre is
  // outside it rasterize as Unknown instead of Free (space behind walls).
  std::optional<RectShape> observed;

  // Throws InvalidArgument on non-positive dimensions, a dynamic object that
  // is not a Person disc, or a static object outside the bounds.
  void validate() const;
};

// Copy of the scene with moving discs placed at time t.
Scene scene_at(const Scene& scene, double t);

// Euclidean distance from p to the object's area (0 inside).
double distance_to_object(const SceneObject& obj, const Vec2& p);

struct SensorNoise {
  double range_sigma = 0.01;
  double intensity_sigma_rel = 0.02;  // fraction of the hit material's base
};

struct PoseNoise {
  double sigma_xy = 0.0;
  double sigma_theta = 0.0;
};

struct BeamHit {
  int object = -1;  // index into scene.objects, -1 for no return
  double distance = 0.0;
  double incidence = 0.0;  // radians from the surface normal
};

struct RaycastResult {
  LidarScan scan;
  std::vector<ClassLabel> labels;
  std::vector<BeamHit> hits;
};

// Nearest exact ray intersection per beam. Objects containing the sensor are
// ignored. Noise draws come from `rng` in beam order, two per beam.
RaycastResult raycast_scan(const Scene& scene, const Pose2D& pose, const SensorSpec& spec,
                           const SensorNoise& noise, Xoshiro256& rng);
RaycastResult raycast_scan(const Scene& scene, const Pose2D& pose, const SensorSpec& spec,
                           const SensorNoise& noise, std::uint64_t seed);

// Ground-truth map over the scene bounds. A cell is Occupied when it shares
// positive area with a static object and takes the class of the smallest such
// object (ties: smallest class id); all other cells are Free with label Other,
// or Unknown outside scene.observed. Person objects are never mapped.
SemanticGridMap rasterize_scene(const Scene& scene, double resolution);

struct SimulationConfig {
  Scene scene;
  std::vector<Pose2D> trajectory;
  SensorSpec sensor;
  SensorNoise noise;
  PoseNoise pose_noise;
  std::uint64_t seed = 0;
  std::string scene_id = "sim";
  double map_resolution = 0.05;
};

// Frame k is observed at time k / sensor.rate from trajectory[k]; its noise
// stream is derive_stream(seed, k). The init pose is the true pose plus
// Gaussian noise drawn before the beam noise.
std::vector<DatasetRecord> simulate_sequence(const SimulationConfig& config, int threads = 1);

// JSON scene description with "schema_version": 1; see docs/formats.md.
SimulationConfig parse_simulation_config(std::string_view json_text);
std::string simulation_config_to_json(const SimulationConfig& config);

struct RoomOptions {
  double min_size = 6.0;
  double max_size = 12.0;
  double wall_thickness = 0.15;
  int n_furniture = 6;
  int n_people = 2;
  double person_radius = 0.2;
  double clearance = 0.4;  // between furniture, walls and person paths
};

// Closed rectangular room with one Door, one Elevator, Pillar/Table/Sofa/
// Chair/TrashBin furniture and moving people. Interior spans
// [0, w] x [0, h] and is the observed region.
Scene random_room(Xoshiro256& rng, const RoomOptions& options = {});

// Poses at least `clearance` from every object and person path, headings
// uniform.
std::vector<Pose2D> random_free_poses(const Scene& scene, int n, Xoshiro256& rng,
                                      double clearance = 0.5);

}  // namespace semlabel
