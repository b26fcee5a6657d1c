#include "semlabel/sim.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "semlabel/error.h"
#include "semlabel/parallel.h"

namespace semlabel {

Material default_material(ClassLabel cls) {
  switch (cls) {
    case ClassLabel::kWall: return {2000.0, 1.0, 0.08};
    case ClassLabel::kDoor: return {2600.0, 2.0, 0.05};
    case ClassLabel::kElevator: return {4000.0, 8.0, 0.02};
    case ClassLabel::kPillar: return {1800.0, 1.0, 0.08};
    case ClassLabel::kTable: return {1500.0, 1.5, 0.06};
    case ClassLabel::kSofa: return {800.0, 0.5, 0.10};
    case ClassLabel::kChair: return {1200.0, 1.5, 0.06};
    case ClassLabel::kTrashBin: return {3000.0, 4.0, 0.03};
    case ClassLabel::kPerson: return {1000.0, 0.5, 0.10};
    case ClassLabel::kOther: break;
  }
  return {1500.0, 1.0, 0.05};
}

Vec2 LinearPath::position(double t) const {
  const Vec2 d = to - from;
  const double len = d.norm();
  if (len <= 0.0 || speed <= 0.0) return from;
  double s = std::fmod(std::abs(speed * t), 2.0 * len);
  if (s > len) s = 2.0 * len - s;
  return from + d * (s / len);
}

namespace {

using Polygon = std::array<Vec2, 4>;

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Counter-clockwise corners.
Polygon rect_polygon(const RectShape& r) {
  return {Vec2(r.min.x(), r.min.y()), Vec2(r.max.x(), r.min.y()), Vec2(r.max.x(), r.max.y()),
          Vec2(r.min.x(), r.max.y())};
}

Polygon wall_polygon(const WallShape& w) {
  const Vec2 dir = (w.b - w.a).normalized();
  const Vec2 off = Vec2(-dir.y(), dir.x()) * (0.5 * w.thickness);
  return {w.a - off, w.b - off, w.b + off, w.a + off};
}

std::optional<Polygon> polygon_of(const Shape& shape) {
  if (auto r = std::get_if<RectShape>(&shape)) return rect_polygon(*r);
  if (auto w = std::get_if<WallShape>(&shape)) return wall_polygon(*w);
  return std::nullopt;
}

bool strictly_inside(const Polygon& poly, const Vec2& p) {
  for (std::size_t k = 0; k < poly.size(); ++k) {
    if (cross(poly[(k + 1) % poly.size()] - poly[k], p - poly[k]) <= 0.0) return false;
  }
  return true;
}

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

struct Aabb {
  Vec2 min;
  Vec2 max;
};

Aabb bounds_of(const Shape& shape) {
  if (auto d = std::get_if<DiscShape>(&shape)) {
    const Vec2 r(d->radius, d->radius);
    return {d->center - r, d->center + r};
  }
  const Polygon poly = *polygon_of(shape);
  Aabb b{poly[0], poly[0]};
  for (const Vec2& v : poly) {
    b.min = b.min.cwiseMin(v);
    b.max = b.max.cwiseMax(v);
  }
  return b;
}

struct RayHit {
  double t = std::numeric_limits<double>::infinity();
  Vec2 normal{0.0, 0.0};
};

std::optional<RayHit> intersect(const Shape& shape, const Vec2& o, const Vec2& d) {
  if (auto disc = std::get_if<DiscShape>(&shape)) {
    const Vec2 oc = o - disc->center;
    const double b = oc.dot(d);
    const double c = oc.squaredNorm() - disc->radius * disc->radius;
    if (c <= 0.0) return std::nullopt;
    const double disc2 = b * b - c;
    if (disc2 < 0.0) return std::nullopt;
    const double t = -b - std::sqrt(disc2);
    if (!(t > 0.0)) return std::nullopt;
    return RayHit{t, (o + t * d - disc->center) / disc->radius};
  }
  const Polygon poly = *polygon_of(shape);
  if (strictly_inside(poly, o)) return std::nullopt;
  std::optional<RayHit> best;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Vec2& a = poly[k];
    const Vec2 e = poly[(k + 1) % poly.size()] - a;
    const Vec2 n = Vec2(e.y(), -e.x()).normalized();
    if (d.dot(n) >= 0.0) continue;  // only surfaces facing the sensor
    const double denom = cross(d, e);
    if (denom == 0.0) continue;
    const Vec2 ao = a - o;
    const double t = cross(ao, e) / denom;
    const double u = cross(ao, d) / denom;
    if (t > 0.0 && u >= 0.0 && u <= 1.0 && (!best || t < best->t)) best = RayHit{t, n};
  }
  return best;
}

// Area of the convex polygon clipped to an axis-aligned box.
double clipped_area(const Polygon& poly, const Vec2& lo, const Vec2& hi) {
  std::vector<Vec2> pts(poly.begin(), poly.end());
  auto clip = [&](auto inside, auto cut) {
    std::vector<Vec2> out;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const Vec2& a = pts[k];
      const Vec2& b = pts[(k + 1) % pts.size()];
      const bool ia = inside(a), ib = inside(b);
      if (ia) out.push_back(a);
      if (ia != ib) out.push_back(cut(a, b));
    }
    pts = std::move(out);
  };
  for (int axis = 0; axis < 2; ++axis) {
    for (int side = 0; side < 2; ++side) {
      if (pts.empty()) return 0.0;
      const double bound = side == 0 ? lo[axis] : hi[axis];
      auto inside = [&](const Vec2& p) { return side == 0 ? p[axis] >= bound : p[axis] <= bound; };
      auto cut = [&](const Vec2& a, const Vec2& b) {
        const double s = (bound - a[axis]) / (b[axis] - a[axis]);
        return Vec2(a + s * (b - a));
      };
      clip(inside, cut);
    }
  }
  double area = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k) area += cross(pts[k], pts[(k + 1) % pts.size()]);
  return 0.5 * std::abs(area);
}

bool overlaps_cell(const Shape& shape, const Vec2& lo, const Vec2& hi, double res) {
  const double eps = 1e-9 * res;
  if (auto r = std::get_if<RectShape>(&shape)) {
    const double ox = std::min(hi.x(), r->max.x()) - std::max(lo.x(), r->min.x());
    const double oy = std::min(hi.y(), r->max.y()) - std::max(lo.y(), r->min.y());
    return ox > eps && oy > eps;
  }
  if (auto d = std::get_if<DiscShape>(&shape)) {
    const Vec2 closest = d->center.cwiseMax(lo).cwiseMin(hi);
    return (closest - d->center).norm() < d->radius - eps;
  }
  return clipped_area(*polygon_of(shape), lo, hi) > eps * res;
}

}  // namespace

double SceneObject::area() const {
  if (auto r = std::get_if<RectShape>(&shape)) {
    return (r->max.x() - r->min.x()) * (r->max.y() - r->min.y());
  }
  if (auto d = std::get_if<DiscShape>(&shape)) return kPi * d->radius * d->radius;
  const auto& w = std::get<WallShape>(shape);
  return (w.b - w.a).norm() * w.thickness;
}

double distance_to_object(const SceneObject& obj, const Vec2& p) {
  if (auto d = std::get_if<DiscShape>(&obj.shape)) {
    return std::max(0.0, (p - d->center).norm() - d->radius);
  }
  const Polygon poly = *polygon_of(obj.shape);
  if (strictly_inside(poly, p)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < poly.size(); ++k) {
    best = std::min(best, segment_distance(p, poly[k], poly[(k + 1) % poly.size()]));
  }
  return best;
}

void Scene::validate() const {
  if (!(bounds_max.x() > bounds_min.x() && bounds_max.y() > bounds_min.y())) {
    throw InvalidArgument("scene bounds must have positive extent");
  }
  if (observed && !(observed->max.x() > observed->min.x() && observed->max.y() > observed->min.y())) {
    throw InvalidArgument("observed region must have positive extent");
  }
  for (std::size_t k = 0; k < objects.size(); ++k) {
    const SceneObject& obj = objects[k];
    const std::string tag = "scene object " + std::to_string(k);
    if (auto r = std::get_if<RectShape>(&obj.shape)) {
      if (!(r->max.x() > r->min.x() && r->max.y() > r->min.y())) {
        throw InvalidArgument(tag + ": rectangle needs positive size");
      }
    } else if (auto d = std::get_if<DiscShape>(&obj.shape)) {
      if (!(d->radius > 0.0)) throw InvalidArgument(tag + ": disc needs a positive radius");
    } else {
      const auto& w = std::get<WallShape>(obj.shape);
      if (!((w.b - w.a).norm() > 0.0) || !(w.thickness > 0.0)) {
        throw InvalidArgument(tag + ": wall needs positive length and thickness");
      }
    }
    if (!(obj.material.intensity_base >= 0.0 && obj.material.angle_exponent >= 0.0 &&
          obj.material.range_decay >= 0.0)) {
      throw InvalidArgument(tag + ": material parameters must be non-negative");
    }
    if (obj.dynamic()) {
      if (obj.cls != ClassLabel::kPerson || !std::holds_alternative<DiscShape>(obj.shape)) {
        throw InvalidArgument(tag + ": only Person discs can move");
      }
      if (obj.path->speed < 0.0) throw InvalidArgument(tag + ": negative path speed");
      continue;
    }
    const Aabb b = bounds_of(obj.shape);
    const double tol = 1e-9;
    if (b.min.x() < bounds_min.x() - tol || b.min.y() < bounds_min.y() - tol ||
        b.max.x() > bounds_max.x() + tol || b.max.y() > bounds_max.y() + tol) {
      throw InvalidArgument(tag + ": static object extends outside the scene bounds");
    }
  }
}

Scene scene_at(const Scene& scene, double t) {
  Scene out = scene;
  for (SceneObject& obj : out.objects) {
    if (obj.dynamic()) std::get<DiscShape>(obj.shape).center = obj.path->position(t);
  }
  return out;
}

RaycastResult raycast_scan(const Scene& scene, const Pose2D& pose, const SensorSpec& spec,
                           const SensorNoise& noise, Xoshiro256& rng) {
  spec.validate();
  if (noise.range_sigma < 0.0 || noise.intensity_sigma_rel < 0.0) {
    throw InvalidArgument("noise sigmas must be non-negative");
  }
  RaycastResult out;
  const auto n = static_cast<std::size_t>(spec.n_beams);
  out.scan.ranges.assign(n, spec.no_return());
  out.scan.intensities.assign(n, 0.0);
  out.labels.assign(n, ClassLabel::kOther);
  out.hits.assign(n, BeamHit{});
  std::vector<double> areas(scene.objects.size());
  for (std::size_t k = 0; k < areas.size(); ++k) areas[k] = scene.objects[k].area();

  const Vec2 origin = pose.translation();
  for (int i = 0; i < spec.n_beams; ++i) {
    const double angle = pose.theta + beam_angle(i, spec);
    const Vec2 dir(std::cos(angle), std::sin(angle));
    int best = -1;
    RayHit hit;
    for (std::size_t k = 0; k < scene.objects.size(); ++k) {
      const auto h = intersect(scene.objects[k].shape, origin, dir);
      if (!h) continue;
      // Coplanar faces (a door set flush into a wall) go to the smaller object.
      const bool tie = best >= 0 && std::abs(h->t - hit.t) <= 1e-9;
      if (best < 0 || (h->t < hit.t && !tie) || (tie && areas[k] < areas[best])) {
        best = static_cast<int>(k);
        hit = *h;
      }
    }
    const double g_range = rng.gaussian();
    const double g_intensity = rng.gaussian();
    if (best < 0 || hit.t > spec.range_max) continue;
    const SceneObject& obj = scene.objects[best];
    const double cos_phi = std::min(1.0, std::abs(dir.dot(hit.normal)));
    BeamHit& bh = out.hits[i];
    bh.object = best;
    bh.distance = hit.t;
    bh.incidence = std::acos(cos_phi);
    const Material& m = obj.material;
    const double clean = m.intensity_base * std::pow(cos_phi, m.angle_exponent) / (1.0 + m.range_decay * hit.t);
    out.scan.ranges[i] = std::clamp(hit.t + noise.range_sigma * g_range, 0.0, spec.range_max);
    out.scan.intensities[i] =
        std::max(0.0, clean + noise.intensity_sigma_rel * m.intensity_base * g_intensity);
    out.labels[i] = obj.cls;
  }
  return out;
}

RaycastResult raycast_scan(const Scene& scene, const Pose2D& pose, const SensorSpec& spec,
                           const SensorNoise& noise, std::uint64_t seed) {
  Xoshiro256 rng(seed);
  return raycast_scan(scene, pose, spec, noise, rng);
}

SemanticGridMap rasterize_scene(const Scene& scene, double resolution) {
  if (!(resolution > 0.0)) throw InvalidArgument("resolution must be positive");
  scene.validate();
  const Vec2 extent = scene.bounds_max - scene.bounds_min;
  const int width = static_cast<int>(std::ceil(extent.x() / resolution - 1e-9));
  const int height = static_cast<int>(std::ceil(extent.y() / resolution - 1e-9));
  SemanticGridMap map;
  map.grid = OccupancyGridMap(width, height, resolution,
                              Pose2D{scene.bounds_min.x(), scene.bounds_min.y(), 0.0}, CellState::kFree);
  map.labels.assign(map.grid.size(), ClassLabel::kOther);
  if (scene.observed) {
    for (int j = 0; j < height; ++j) {
      for (int i = 0; i < width; ++i) {
        const Vec2 c = map.grid.cell_center(i, j);
        const RectShape& r = *scene.observed;
        if (c.x() < r.min.x() || c.x() > r.max.x() || c.y() < r.min.y() || c.y() > r.max.y()) {
          map.grid.at(i, j) = CellState::kUnknown;
        }
      }
    }
  }

  std::vector<std::size_t> order;
  for (std::size_t k = 0; k < scene.objects.size(); ++k) {
    const SceneObject& obj = scene.objects[k];
    if (!obj.dynamic() && obj.cls != ClassLabel::kPerson) order.push_back(k);
  }
  // Paint largest first so the smallest object (then smallest id) wins.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double aa = scene.objects[a].area(), ab = scene.objects[b].area();
    if (aa != ab) return aa > ab;
    return class_index(scene.objects[a].cls) > class_index(scene.objects[b].cls);
  });
  for (std::size_t k : order) {
    const SceneObject& obj = scene.objects[k];
    const Aabb b = bounds_of(obj.shape);
    const int i0 = std::max(0, static_cast<int>(std::floor((b.min.x() - scene.bounds_min.x()) / resolution)) - 1);
    const int j0 = std::max(0, static_cast<int>(std::floor((b.min.y() - scene.bounds_min.y()) / resolution)) - 1);
    const int i1 = std::min(width - 1, static_cast<int>(std::floor((b.max.x() - scene.bounds_min.x()) / resolution)) + 1);
    const int j1 = std::min(height - 1, static_cast<int>(std::floor((b.max.y() - scene.bounds_min.y()) / resolution)) + 1);
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) {
        const Vec2 lo = scene.bounds_min + Vec2(i * resolution, j * resolution);
        const Vec2 hi = lo + Vec2(resolution, resolution);
        if (!overlaps_cell(obj.shape, lo, hi, resolution)) continue;
        map.grid.at(i, j) = CellState::kOccupied;
        map.labels[map.grid.index(i, j)] = obj.cls;
      }
    }
  }
  return map;
}

std::vector<DatasetRecord> simulate_sequence(const SimulationConfig& config, int threads) {
  config.scene.validate();
  config.sensor.validate();
  if (config.pose_noise.sigma_xy < 0.0 || config.pose_noise.sigma_theta < 0.0) {
    throw InvalidArgument("pose noise sigmas must be non-negative");
  }
  std::vector<DatasetRecord> out(config.trajectory.size());
  parallel_for(out.size(), threads, [&](std::size_t k) {
    Xoshiro256 rng = derive_stream(config.seed, k);
    const Pose2D truth = config.trajectory[k];
    const double t = static_cast<double>(k) / config.sensor.rate;
    Pose2D init = truth;
    init.x += config.pose_noise.sigma_xy * rng.gaussian();
    init.y += config.pose_noise.sigma_xy * rng.gaussian();
    init.theta = normalize_angle(init.theta + config.pose_noise.sigma_theta * rng.gaussian());
    RaycastResult ray = raycast_scan(scene_at(config.scene, t), truth, config.sensor, config.noise, rng);
    DatasetRecord& r = out[k];
    r.scene_id = config.scene_id;
    r.frame = static_cast<std::int64_t>(k);
    r.timestamp = t;
    r.ranges = std::move(ray.scan.ranges);
    r.intensities = std::move(ray.scan.intensities);
    r.init_pose = init;
    r.true_pose = truth;
    r.labels = std::move(ray.labels);
  });
  return out;
}

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

Vec2 vec_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidArgument("expected a [x, y] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

ordered_json vec_to(const Vec2& v) { return ordered_json::array({v.x(), v.y()}); }

ClassLabel class_from(const json& j) {
  if (j.is_number_integer()) return class_from_index(j.get<int>());
  const auto name = j.get<std::string>();
  const auto cls = class_from_name(name);
  if (!cls) throw InvalidArgument("unknown class \"" + name + "\"");
  return *cls;
}

}  // namespace

SimulationConfig parse_simulation_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scene file: ") + e.what(), e.byte);
  }
  SimulationConfig cfg;
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != 1) throw UnsupportedFormat("scene file: unsupported schema_version " + std::to_string(version));
    cfg.scene_id = j.value("scene_id", cfg.scene_id);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.map_resolution = j.value("map_resolution", cfg.map_resolution);
    cfg.scene.bounds_min = vec_from(j.at("bounds").at("min"));
    cfg.scene.bounds_max = vec_from(j.at("bounds").at("max"));
    if (j.contains("observed")) {
      cfg.scene.observed = RectShape{vec_from(j["observed"].at("min")), vec_from(j["observed"].at("max"))};
    }
    if (j.contains("sensor")) {
      const json& s = j["sensor"];
      cfg.sensor.n_beams = s.value("n_beams", cfg.sensor.n_beams);
      cfg.sensor.fov = s.value("fov", cfg.sensor.fov);
      cfg.sensor.angular_resolution = s.value("angular_resolution", cfg.sensor.angular_resolution);
      cfg.sensor.range_max = s.value("range_max", cfg.sensor.range_max);
      cfg.sensor.rate = s.value("rate", cfg.sensor.rate);
    }
    if (j.contains("noise")) {
      cfg.noise.range_sigma = j["noise"].value("range_sigma", cfg.noise.range_sigma);
      cfg.noise.intensity_sigma_rel = j["noise"].value("intensity_sigma_rel", cfg.noise.intensity_sigma_rel);
    }
    if (j.contains("pose_noise")) {
      cfg.pose_noise.sigma_xy = j["pose_noise"].value("sigma_xy", 0.0);
      cfg.pose_noise.sigma_theta = j["pose_noise"].value("sigma_theta", 0.0);
    }
    for (const json& o : j.at("objects")) {
      SceneObject obj;
      obj.cls = class_from(o.at("class"));
      const auto shape = o.at("shape").get<std::string>();
      if (shape == "rect") {
        obj.shape = RectShape{vec_from(o.at("min")), vec_from(o.at("max"))};
      } else if (shape == "disc") {
        obj.shape = DiscShape{vec_from(o.at("center")), o.at("radius").get<double>()};
      } else if (shape == "wall") {
        obj.shape = WallShape{vec_from(o.at("a")), vec_from(o.at("b")), o.at("thickness").get<double>()};
      } else {
        throw InvalidArgument("unknown shape \"" + shape + "\"");
      }
      obj.material = default_material(obj.cls);
      if (o.contains("material")) {
        const json& m = o["material"];
        obj.material.intensity_base = m.value("intensity_base", obj.material.intensity_base);
        obj.material.angle_exponent = m.value("angle_exponent", obj.material.angle_exponent);
        obj.material.range_decay = m.value("range_decay", obj.material.range_decay);
      }
      if (o.contains("path")) {
        const json& p = o["path"];
        obj.path = LinearPath{vec_from(p.at("from")), vec_from(p.at("to")), p.value("speed", 1.0)};
      }
      cfg.scene.objects.push_back(std::move(obj));
    }
    for (const json& p : j.value("trajectory", json::array())) {
      cfg.trajectory.push_back({p.at("x").get<double>(), p.at("y").get<double>(), p.value("theta", 0.0)});
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("scene file: ") + e.what(), 0);
  }
  cfg.scene.validate();
  cfg.sensor.validate();
  return cfg;
}

std::string simulation_config_to_json(const SimulationConfig& cfg) {
  ordered_json j;
  j["schema_version"] = 1;
  j["scene_id"] = cfg.scene_id;
  j["seed"] = cfg.seed;
  j["map_resolution"] = cfg.map_resolution;
  j["bounds"] = {{"min", vec_to(cfg.scene.bounds_min)}, {"max", vec_to(cfg.scene.bounds_max)}};
  if (cfg.scene.observed) {
    j["observed"] = {{"min", vec_to(cfg.scene.observed->min)}, {"max", vec_to(cfg.scene.observed->max)}};
  }
  j["sensor"] = {{"n_beams", cfg.sensor.n_beams},
                 {"fov", cfg.sensor.fov},
                 {"angular_resolution", cfg.sensor.angular_resolution},
                 {"range_max", cfg.sensor.range_max},
                 {"rate", cfg.sensor.rate}};
  j["noise"] = {{"range_sigma", cfg.noise.range_sigma}, {"intensity_sigma_rel", cfg.noise.intensity_sigma_rel}};
  j["pose_noise"] = {{"sigma_xy", cfg.pose_noise.sigma_xy}, {"sigma_theta", cfg.pose_noise.sigma_theta}};
  ordered_json objects = ordered_json::array();
  for (const SceneObject& obj : cfg.scene.objects) {
    ordered_json o;
    if (auto r = std::get_if<RectShape>(&obj.shape)) {
      o["shape"] = "rect";
      o["min"] = vec_to(r->min);
      o["max"] = vec_to(r->max);
    } else if (auto d = std::get_if<DiscShape>(&obj.shape)) {
      o["shape"] = "disc";
      o["center"] = vec_to(d->center);
      o["radius"] = d->radius;
    } else {
      const auto& w = std::get<WallShape>(obj.shape);
      o["shape"] = "wall";
      o["a"] = vec_to(w.a);
      o["b"] = vec_to(w.b);
      o["thickness"] = w.thickness;
    }
    o["class"] = std::string(class_name(obj.cls));
    o["material"] = {{"intensity_base", obj.material.intensity_base},
                     {"angle_exponent", obj.material.angle_exponent},
                     {"range_decay", obj.material.range_decay}};
    if (obj.path) {
      o["path"] = {{"from", vec_to(obj.path->from)}, {"to", vec_to(obj.path->to)}, {"speed", obj.path->speed}};
    }
    objects.push_back(std::move(o));
  }
  j["objects"] = std::move(objects);
  ordered_json traj = ordered_json::array();
  for (const Pose2D& p : cfg.trajectory) traj.push_back({{"x", p.x}, {"y", p.y}, {"theta", p.theta}});
  j["trajectory"] = std::move(traj);
  return j.dump(2) + "\n";
}

namespace {

double uniform(Xoshiro256& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

double aabb_gap(const Aabb& a, const Aabb& b) {
  const double dx = std::max({0.0, b.min.x() - a.max.x(), a.min.x() - b.max.x()});
  const double dy = std::max({0.0, b.min.y() - a.max.y(), a.min.y() - b.max.y()});
  return std::hypot(dx, dy);
}

}  // namespace

Scene random_room(Xoshiro256& rng, const RoomOptions& opt) {
  const double w = uniform(rng, opt.min_size, opt.max_size);
  const double h = uniform(rng, opt.min_size, opt.max_size);
  const double t = opt.wall_thickness;
  Scene scene;
  scene.bounds_min = Vec2(-t - 0.1, -t - 0.1);
  scene.bounds_max = Vec2(w + t + 0.1, h + t + 0.1);
  scene.observed = RectShape{{0.0, 0.0}, {w, h}};
  auto add_rect = [&](ClassLabel cls, Vec2 lo, Vec2 hi) {
    scene.objects.push_back({RectShape{lo, hi}, cls, default_material(cls), std::nullopt});
  };
  add_rect(ClassLabel::kWall, {-t, -t}, {w + t, 0.0});
  add_rect(ClassLabel::kWall, {-t, h}, {w + t, h + t});
  add_rect(ClassLabel::kWall, {-t, 0.0}, {0.0, h});
  add_rect(ClassLabel::kWall, {w, 0.0}, {w + t, h});

  // Door in the bottom or top wall, elevator in the left or right wall, both
  // flush with the wall face.
  const double door_w = 0.9;
  const double dx = uniform(rng, 0.5, w - 0.5 - door_w);
  if (rng.bounded(2) == 0) {
    add_rect(ClassLabel::kDoor, {dx, -0.8 * t}, {dx + door_w, 0.0});
  } else {
    add_rect(ClassLabel::kDoor, {dx, h}, {dx + door_w, h + 0.8 * t});
  }
  const double elev_w = 1.2;
  const double ey = uniform(rng, 0.5, h - 0.5 - elev_w);
  if (rng.bounded(2) == 0) {
    add_rect(ClassLabel::kElevator, {-0.8 * t, ey}, {0.0, ey + elev_w});
  } else {
    add_rect(ClassLabel::kElevator, {w, ey}, {w + 0.8 * t, ey + elev_w});
  }

  const std::array<ClassLabel, 5> furniture = {ClassLabel::kPillar, ClassLabel::kTable, ClassLabel::kSofa,
                                               ClassLabel::kChair, ClassLabel::kTrashBin};
  std::vector<Aabb> placed;
  for (int f = 0; f < opt.n_furniture; ++f) {
    const ClassLabel cls = furniture[f % furniture.size()];
    for (int attempt = 0; attempt < 200; ++attempt) {
      Shape shape;
      Vec2 half;
      bool disc = false;
      switch (cls) {
        case ClassLabel::kPillar: disc = rng.bounded(2) == 0; half = {0.2, 0.2}; break;
        case ClassLabel::kTable: half = {0.6, 0.35}; break;
        case ClassLabel::kSofa: half = {0.9, 0.4}; break;
        case ClassLabel::kChair: half = {0.225, 0.225}; break;
        default: disc = true; half = {0.15, 0.15}; break;
      }
      if (!disc && rng.bounded(2) == 0) std::swap(half.x(), half.y());
      const double margin = opt.clearance;
      if (w - 2 * (margin + half.x()) <= 0 || h - 2 * (margin + half.y()) <= 0) break;
      const Vec2 c(uniform(rng, margin + half.x(), w - margin - half.x()),
                   uniform(rng, margin + half.y(), h - margin - half.y()));
      const Aabb box{c - half, c + half};
      bool clear = true;
      for (const Aabb& other : placed) clear = clear && aabb_gap(box, other) >= opt.clearance;
      if (!clear) continue;
      if (disc) {
        shape = DiscShape{c, half.x()};
      } else {
        shape = RectShape{box.min, box.max};
      }
      scene.objects.push_back({shape, cls, default_material(cls), std::nullopt});
      placed.push_back(box);
      break;
    }
  }

  const std::size_t n_static = scene.objects.size();
  const double r = opt.person_radius;
  for (int p = 0; p < opt.n_people; ++p) {
    for (int attempt = 0; attempt < 500; ++attempt) {
      const Vec2 from(uniform(rng, r + opt.clearance, w - r - opt.clearance),
                      uniform(rng, r + opt.clearance, h - r - opt.clearance));
      const Vec2 to(uniform(rng, r + opt.clearance, w - r - opt.clearance),
                    uniform(rng, r + opt.clearance, h - r - opt.clearance));
      const double len = (to - from).norm();
      if (len < 1.5 || len > 4.0) continue;
      bool clear = true;
      const int steps = static_cast<int>(std::ceil(len / 0.05));
      for (int s = 0; s <= steps && clear; ++s) {
        const Vec2 q = from + (to - from) * (static_cast<double>(s) / steps);
        for (std::size_t k = 0; k < n_static && clear; ++k) {
          clear = distance_to_object(scene.objects[k], q) >= r + opt.clearance;
        }
      }
      if (!clear) continue;
      const double speed = uniform(rng, 0.5, 1.2);
      scene.objects.push_back({DiscShape{from, r}, ClassLabel::kPerson, default_material(ClassLabel::kPerson),
                               LinearPath{from, to, speed}});
      break;
    }
  }
  return scene;
}

std::vector<Pose2D> random_free_poses(const Scene& scene, int n, Xoshiro256& rng, double clearance) {
  std::vector<Pose2D> out;
  out.reserve(static_cast<std::size_t>(std::max(0, n)));
  int attempts = 0;
  while (static_cast<int>(out.size()) < n) {
    if (++attempts > 10000 * std::max(1, n)) throw DegenerateInput("no free space for sensor poses");
    const Vec2 p(uniform(rng, scene.bounds_min.x(), scene.bounds_max.x()),
                 uniform(rng, scene.bounds_min.y(), scene.bounds_max.y()));
    bool clear = true;
    for (const SceneObject& obj : scene.objects) {
      double d;
      if (obj.path) {
        d = segment_distance(p, obj.path->from, obj.path->to) - std::get<DiscShape>(obj.shape).radius;
      } else {
        d = distance_to_object(obj, p);
      }
      if (d < clearance) {
        clear = false;
        break;
      }
    }
    if (!clear) continue;
    out.push_back({p.x(), p.y(), normalize_angle(uniform(rng, -kPi, kPi))});
  }
  return out;
}

}  // namespace semlabel
