#include "semlabel/map_label.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <numeric>
#include <sstream>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "semlabel/error.h"
#include "semlabel/file_util.h"

namespace semlabel {

OccupancyGridMap::OccupancyGridMap(int w, int h, double res, Pose2D org,
                                   CellState fill)
    : width(w), height(h), resolution(res), origin(org) {
  if (w < 0 || h < 0) throw InvalidArgument("negative map dimensions");
  cells.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill);
}

void OccupancyGridMap::validate() const {
  if (width < 0 || height < 0) throw InvalidArgument("negative map dimensions");
  if (!(resolution > 0.0)) throw InvalidArgument("map resolution must be positive");
  if (cells.size() != static_cast<std::size_t>(width) * height) {
    throw InvalidArgument("map cell count does not match width * height");
  }
}

Vec2 OccupancyGridMap::cell_center(int i, int j) const {
  return apply(origin, Vec2((i + 0.5) * resolution, (j + 0.5) * resolution));
}

std::optional<CellIndex> OccupancyGridMap::world_to_cell(const Vec2& p) const {
  Vec2 local = p - origin.translation();
  if (origin.theta != 0.0) {
    const double c = std::cos(origin.theta);
    const double s = std::sin(origin.theta);
    local = Vec2(c * local.x() + s * local.y(), -s * local.x() + c * local.y());
  }
  const double fi = std::floor(local.x() / resolution);
  const double fj = std::floor(local.y() / resolution);
  if (!(fi >= 0.0 && fj >= 0.0 && fi < width && fj < height)) return std::nullopt;
  return CellIndex{static_cast<int>(fi), static_cast<int>(fj)};
}

// ---------------------------------------------------------------------------
// PGM

namespace {

bool is_space(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

class PgmHeaderReader {
 public:
  PgmHeaderReader(std::span<const std::uint8_t> bytes, std::size_t pos)
      : bytes_(bytes), pos_(pos) {}

  std::size_t pos() const { return pos_; }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  long read_uint(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    long value = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000'000L) throw ParseError(std::string("PGM ") + what + " too large", start);
      ++pos_;
    }
    if (pos_ == start) throw ParseError(std::string("PGM: expected ") + what, start);
    return value;
  }

  void expect_single_space() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) {
      throw ParseError("PGM: expected whitespace after maxval", pos_);
    }
    ++pos_;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

PgmImage read_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') throw ParseError("PGM: missing magic", 0);
  if (bytes[1] == '2') throw UnsupportedFormat("PGM: ASCII P2 images are not supported");
  if (bytes[1] != '5') throw ParseError("PGM: expected P5 magic", 1);
  PgmHeaderReader reader(bytes, 2);
  const long width = reader.read_uint("width");
  const long height = reader.read_uint("height");
  reader.skip_space_and_comments();
  const std::size_t maxval_pos = reader.pos();
  const long maxval = reader.read_uint("maxval");
  if (maxval > 255) {
    throw UnsupportedFormat("PGM: only 8-bit images are supported (maxval " +
                            std::to_string(maxval) + ")");
  }
  if (maxval == 0) throw ParseError("PGM: maxval must be positive", maxval_pos);
  reader.expect_single_space();
  const std::size_t data = reader.pos();
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - data < n) {
    throw ParseError("PGM: truncated pixel data (need " + std::to_string(n) +
                         " bytes)",
                     bytes.size());
  }
  PgmImage image;
  image.width = static_cast<int>(width);
  image.height = static_cast<int>(height);
  image.pixels.assign(bytes.begin() + data, bytes.begin() + data + n);
  if (maxval != 255) {
    for (auto& p : image.pixels) {
      p = static_cast<std::uint8_t>(std::lround(255.0 * std::min<long>(p, maxval) / maxval));
    }
  }
  return image;
}

std::vector<std::uint8_t> write_pgm(const PgmImage& image) {
  const std::string header = "P5\n" + std::to_string(image.width) + " " +
                             std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

// ---------------------------------------------------------------------------
// YAML metadata

MapMetadata parse_map_yaml(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ParseError("map YAML: " + e.msg, static_cast<std::size_t>(std::max(0, e.mark.pos)));
  }
  if (!root.IsMap()) throw ParseError("map YAML: top level must be a mapping", 0);
  auto require = [&](const char* key) {
    YAML::Node node = root[key];
    if (!node) {
      throw ParseError(std::string("map YAML: missing key '") + key + "'",
                       static_cast<std::size_t>(std::max(0, root.Mark().pos)));
    }
    return node;
  };
  MapMetadata meta;
  try {
    meta.image = require("image").as<std::string>();
    meta.resolution = require("resolution").as<double>();
    YAML::Node origin = require("origin");
    if (!origin.IsSequence() || origin.size() != 3) {
      throw ParseError("map YAML: origin must be [x, y, theta]",
                       static_cast<std::size_t>(std::max(0, origin.Mark().pos)));
    }
    meta.origin = {origin[0].as<double>(), origin[1].as<double>(),
                   normalize_angle(origin[2].as<double>())};
    if (YAML::Node n = root["negate"]) meta.negate = n.as<int>() != 0;
    meta.occupied_thresh = require("occupied_thresh").as<double>();
    meta.free_thresh = require("free_thresh").as<double>();
  } catch (const YAML::Exception& e) {
    throw ParseError("map YAML: " + e.msg, static_cast<std::size_t>(std::max(0, e.mark.pos)));
  }
  if (!(meta.resolution > 0.0)) throw InvalidArgument("map YAML: resolution must be positive");
  return meta;
}

std::string write_map_yaml(const MapMetadata& meta) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "image" << YAML::Value << meta.image;
  out << YAML::Key << "resolution" << YAML::Value << meta.resolution;
  out << YAML::Key << "origin" << YAML::Value << YAML::Flow << YAML::BeginSeq
      << meta.origin.x << meta.origin.y << meta.origin.theta << YAML::EndSeq;
  out << YAML::Key << "negate" << YAML::Value << (meta.negate ? 1 : 0);
  out << YAML::Key << "occupied_thresh" << YAML::Value << meta.occupied_thresh;
  out << YAML::Key << "free_thresh" << YAML::Value << meta.free_thresh;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

OccupancyGridMap load_occupancy_map(std::span<const std::uint8_t> pgm_bytes,
                                    const MapMetadata& meta) {
  const PgmImage image = read_pgm(pgm_bytes);
  OccupancyGridMap map(image.width, image.height, meta.resolution, meta.origin);
  for (int row = 0; row < image.height; ++row) {
    const int j = image.height - 1 - row;
    for (int i = 0; i < image.width; ++i) {
      const double p = image.pixels[static_cast<std::size_t>(row) * image.width + i];
      const double occ = meta.negate ? p / 255.0 : (255.0 - p) / 255.0;
      CellState state = CellState::kUnknown;
      if (occ > meta.occupied_thresh) {
        state = CellState::kOccupied;
      } else if (occ < meta.free_thresh) {
        state = CellState::kFree;
      }
      map.at(i, j) = state;
    }
  }
  return map;
}

OccupancyGridMap load_occupancy_map_file(const std::string& yaml_path) {
  const MapMetadata meta = parse_map_yaml(read_file_text(yaml_path));
  std::filesystem::path image(meta.image);
  if (image.is_relative()) image = std::filesystem::path(yaml_path).parent_path() / image;
  return load_occupancy_map(read_file_bytes(image.string()), meta);
}

PgmImage occupancy_to_pgm(const OccupancyGridMap& map) {
  PgmImage image;
  image.width = map.width;
  image.height = map.height;
  image.pixels.resize(map.size());
  for (int j = 0; j < map.height; ++j) {
    const int row = map.height - 1 - j;
    for (int i = 0; i < map.width; ++i) {
      std::uint8_t px = 205;
      if (map.at(i, j) == CellState::kOccupied) px = 0;
      if (map.at(i, j) == CellState::kFree) px = 254;
      image.pixels[static_cast<std::size_t>(row) * map.width + i] = px;
    }
  }
  return image;
}

// ---------------------------------------------------------------------------
// Polygons

double polygon_area(std::span<const Vec2> v) {
  double twice = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const Vec2& a = v[k];
    const Vec2& b = v[(k + 1) % v.size()];
    twice += a.x() * b.y() - b.x() * a.y();
  }
  return std::abs(twice) / 2.0;
}

namespace {

bool on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const Vec2 ap = p - a;
  const double cross = ab.x() * ap.y() - ab.y() * ap.x();
  const double scale = std::max({1.0, ab.squaredNorm(), ap.squaredNorm()});
  if (std::abs(cross) > 1e-12 * scale) return false;
  const double dot = ap.dot(ab);
  return dot >= -1e-12 * scale && dot <= ab.squaredNorm() * (1.0 + 1e-12) + 1e-12 * scale;
}

}  // namespace

bool point_in_polygon(const Vec2& p, std::span<const Vec2> v) {
  const std::size_t n = v.size();
  if (n < 3) return false;
  bool inside = false;
  for (std::size_t k = 0, prev = n - 1; k < n; prev = k++) {
    const Vec2& a = v[prev];
    const Vec2& b = v[k];
    if (on_segment(p, a, b)) return true;
    if ((b.y() > p.y()) != (a.y() > p.y())) {
      const double x_cross = b.x() + (p.y() - b.y()) * (a.x() - b.x()) / (a.y() - b.y());
      if (p.x() < x_cross) inside = !inside;
    }
  }
  return inside;
}

void SemanticGridMap::validate() const {
  grid.validate();
  if (labels.size() != grid.size()) {
    throw InvalidArgument("semantic map label count does not match grid");
  }
  for (ClassLabel c : labels) {
    if (class_index(c) < 0 || class_index(c) >= kNumClasses) {
      throw InvalidArgument("semantic map holds an invalid class id");
    }
    if (c == ClassLabel::kPerson) {
      throw InvalidArgument("semantic map cells cannot carry the Person label");
    }
  }
}

SemanticGridMap rasterize_labels(std::span<const AnnotationPolygon> polygons,
                                 const OccupancyGridMap& grid) {
  grid.validate();
  struct Prepared {
    ClassLabel cls;
    double area;
    std::vector<Vec2> local;  // map frame, in cell units
  };
  const Pose2D to_map = inverse(grid.origin);
  std::vector<Prepared> prepared;
  prepared.reserve(polygons.size());
  for (const AnnotationPolygon& poly : polygons) {
    if (poly.cls == ClassLabel::kPerson) {
      throw InvalidArgument("annotation polygons cannot use the Person class");
    }
    if (poly.vertices.size() < 3) {
      throw InvalidArgument("annotation polygon needs at least 3 vertices");
    }
    const double area = polygon_area(poly.vertices);
    if (!(area > 0.0)) throw InvalidArgument("annotation polygon has zero area");
    Prepared p{poly.cls, area, {}};
    for (const Vec2& w : poly.vertices) p.local.push_back(apply(to_map, w) / grid.resolution);
    prepared.push_back(std::move(p));
  }
  // Paint largest first so the smallest (then lowest class id) ends up on top.
  std::sort(prepared.begin(), prepared.end(), [](const Prepared& a, const Prepared& b) {
    if (a.area != b.area) return a.area > b.area;
    return class_index(a.cls) > class_index(b.cls);
  });

  SemanticGridMap out{grid, std::vector<ClassLabel>(grid.size(), ClassLabel::kOther)};
  for (const Prepared& p : prepared) {
    double min_x = p.local[0].x(), max_x = min_x, min_y = p.local[0].y(), max_y = min_y;
    for (const Vec2& v : p.local) {
      min_x = std::min(min_x, v.x());
      max_x = std::max(max_x, v.x());
      min_y = std::min(min_y, v.y());
      max_y = std::max(max_y, v.y());
    }
    const int i0 = std::max(0, static_cast<int>(std::floor(min_x - 0.5)));
    const int i1 = std::min(grid.width - 1, static_cast<int>(std::ceil(max_x - 0.5)));
    const int j0 = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
    const int j1 = std::min(grid.height - 1, static_cast<int>(std::ceil(max_y - 0.5)));
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) {
        if (point_in_polygon(Vec2(i + 0.5, j + 0.5), p.local)) {
          out.labels[grid.index(i, j)] = p.cls;
        }
      }
    }
  }
  return out;
}

std::optional<LabelQuery> query_label(const SemanticGridMap& map, const Vec2& p) {
  const auto cell = map.grid.world_to_cell(p);
  if (!cell) return std::nullopt;
  return LabelQuery{*cell, map.grid.at(cell->i, cell->j), map.label(cell->i, cell->j)};
}

// ---------------------------------------------------------------------------
// LabelMe

std::vector<AnnotationPolygon> parse_labelme(std::string_view json_text,
                                             const OccupancyGridMap& grid) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("LabelMe JSON: ") + e.what(), e.byte);
  }
  const nlohmann::json* shapes = &root;
  if (root.is_object()) {
    if (!root.contains("shapes")) throw ParseError("LabelMe JSON: missing 'shapes'", 0);
    shapes = &root["shapes"];
  }
  if (!shapes->is_array()) throw ParseError("LabelMe JSON: shapes must be an array", 0);

  std::vector<AnnotationPolygon> out;
  std::vector<std::string> unknown;
  for (std::size_t k = 0; k < shapes->size(); ++k) {
    const nlohmann::json& shape = (*shapes)[k];
    if (!shape.is_object() || !shape.contains("label") || !shape.contains("points")) {
      throw ParseError("LabelMe JSON: shape " + std::to_string(k) +
                           " needs 'label' and 'points'", 0);
    }
    const std::string label = shape["label"].get<std::string>();
    const auto cls = class_from_name(label);
    if (!cls) {
      if (std::find(unknown.begin(), unknown.end(), label) == unknown.end()) {
        unknown.push_back(label);
      }
      continue;
    }
    std::vector<Vec2> pixels;
    for (const auto& pt : shape["points"]) {
      if (!pt.is_array() || pt.size() != 2) {
        throw ParseError("LabelMe JSON: shape " + std::to_string(k) +
                             " has a malformed point", 0);
      }
      pixels.emplace_back(pt[0].get<double>(), pt[1].get<double>());
    }
    const std::string type = shape.value("shape_type", std::string("polygon"));
    if (type == "rectangle") {
      if (pixels.size() != 2) {
        throw ParseError("LabelMe JSON: rectangle shape " + std::to_string(k) +
                             " needs 2 points", 0);
      }
      const Vec2 a = pixels[0];
      const Vec2 b = pixels[1];
      pixels = {a, Vec2(b.x(), a.y()), b, Vec2(a.x(), b.y())};
    } else if (type != "polygon") {
      throw ParseError("LabelMe JSON: unsupported shape_type '" + type + "'", 0);
    }
    AnnotationPolygon poly;
    poly.cls = *cls;
    for (const Vec2& px : pixels) {
      const Vec2 local(px.x() * grid.resolution, (grid.height - px.y()) * grid.resolution);
      poly.vertices.push_back(apply(grid.origin, local));
    }
    out.push_back(std::move(poly));
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& u : unknown) list += (list.empty() ? "'" : ", '") + u + "'";
    throw InvalidArgument("LabelMe JSON: unknown class label(s) " + list);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Binary semantic map

namespace {

constexpr char kSemMapMagic[8] = {'S', 'E', 'M', 'M', 'A', 'P', '0', '1'};
constexpr std::uint32_t kSemMapVersion = 1;
constexpr std::size_t kSemMapHeader = 8 + 4 + 4 + 4 + 8 * 4;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

template <typename T>
T get_le(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  if (bytes.size() - pos < sizeof(T)) throw ParseError("semantic map: truncated header", pos);
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, bytes.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  pos += sizeof(T);
  T value;
  std::memcpy(&value, raw, sizeof(T));
  return value;
}

}  // namespace

std::vector<std::uint8_t> serialize_semantic_map(const SemanticGridMap& map) {
  map.validate();
  std::vector<std::uint8_t> out(kSemMapMagic, kSemMapMagic + 8);
  out.reserve(kSemMapHeader + 2 * map.grid.size());
  put_le<std::uint32_t>(out, kSemMapVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(map.grid.width));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(map.grid.height));
  put_le<double>(out, map.grid.resolution);
  put_le<double>(out, map.grid.origin.x);
  put_le<double>(out, map.grid.origin.y);
  put_le<double>(out, map.grid.origin.theta);
  for (CellState s : map.grid.cells) out.push_back(static_cast<std::uint8_t>(s));
  for (ClassLabel c : map.labels) out.push_back(static_cast<std::uint8_t>(c));
  return out;
}

SemanticGridMap deserialize_semantic_map(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kSemMapMagic, 8) != 0) {
    throw ParseError("semantic map: bad magic", 0);
  }
  std::size_t pos = 8;
  const auto version = get_le<std::uint32_t>(bytes, pos);
  if (version != kSemMapVersion) {
    throw UnsupportedFormat("semantic map: unsupported version " + std::to_string(version));
  }
  const auto width = get_le<std::uint32_t>(bytes, pos);
  const auto height = get_le<std::uint32_t>(bytes, pos);
  const double resolution = get_le<double>(bytes, pos);
  Pose2D origin;
  origin.x = get_le<double>(bytes, pos);
  origin.y = get_le<double>(bytes, pos);
  origin.theta = get_le<double>(bytes, pos);
  if (width > 1u << 20 || height > 1u << 20) throw ParseError("semantic map: absurd dimensions", 12);
  if (!(resolution > 0.0)) throw ParseError("semantic map: resolution must be positive", 20);
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (bytes.size() - pos != 2 * n) {
    throw ParseError("semantic map: payload size mismatch", std::min(bytes.size(), pos + 2 * n));
  }
  SemanticGridMap map;
  map.grid = OccupancyGridMap(static_cast<int>(width), static_cast<int>(height), resolution, origin);
  map.labels.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint8_t s = bytes[pos + k];
    if (s > 2) throw ParseError("semantic map: invalid cell state", pos + k);
    map.grid.cells[k] = static_cast<CellState>(s);
  }
  pos += n;
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint8_t c = bytes[pos + k];
    if (c >= kNumClasses || c == class_index(ClassLabel::kPerson)) {
      throw ParseError("semantic map: invalid cell label", pos + k);
    }
    map.labels[k] = static_cast<ClassLabel>(c);
  }
  return map;
}

}  // namespace semlabel
