#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semlabel/scan_model.h"

namespace semlabel {

enum class CellState : std::uint8_t { kFree = 0, kOccupied = 1, kUnknown = 2 };

struct CellIndex {
  int i = 0;  // column, +x
  int j = 0;  // row, +y (row 0 is the bottom of the map)
  bool operator==(const CellIndex&) const = default;
};

// Raster map. Cell (i, j) covers [i, i+1) x [j, j+1) * resolution in the map
// frame, whose world pose is `origin`.
struct OccupancyGridMap {
  int width = 0;
  int height = 0;
  double resolution = 0.05;
  Pose2D origin;
  std::vector<CellState> cells;  // row-major, index j * width + i

  OccupancyGridMap() = default;
  OccupancyGridMap(int width, int height, double resolution, Pose2D origin,
                   CellState fill = CellState::kUnknown);

  // Throws InvalidArgument on inconsistent dimensions or resolution <= 0.
  void validate() const;

  std::size_t size() const { return cells.size(); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * width + i;
  }
  bool contains(int i, int j) const {
    return i >= 0 && j >= 0 && i < width && j < height;
  }
  CellState at(int i, int j) const { return cells[index(i, j)]; }
  CellState& at(int i, int j) { return cells[index(i, j)]; }

  Vec2 cell_center(int i, int j) const;
  // Floor convention; nullopt outside the grid.
  std::optional<CellIndex> world_to_cell(const Vec2& p) const;

  bool operator==(const OccupancyGridMap&) const = default;
};

// Fields of a map_server style YAML file.
struct MapMetadata {
  std::string image;
  double resolution = 0.05;
  Pose2D origin;
  bool negate = false;
  double occupied_thresh = 0.65;
  double free_thresh = 0.196;
};

// 8-bit greyscale raster; row 0 is the top of the image.
struct PgmImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  bool operator==(const PgmImage&) const = default;
};

// Binary P5 with maxval <= 255. Header comments are accepted.
PgmImage read_pgm(std::span<const std::uint8_t> bytes);
// Canonical "P5\n<w> <h>\n255\n" header followed by the pixels.
std::vector<std::uint8_t> write_pgm(const PgmImage& image);

MapMetadata parse_map_yaml(std::string_view text);
std::string write_map_yaml(const MapMetadata& meta);

OccupancyGridMap load_occupancy_map(std::span<const std::uint8_t> pgm_bytes,
                                    const MapMetadata& meta);
// Reads the YAML file and the image it names (relative to the YAML file).
OccupancyGridMap load_occupancy_map_file(const std::string& yaml_path);

// Pixels use 0 occupied, 254 free, 205 unknown; these reload to the same
// states under the default thresholds.
PgmImage occupancy_to_pgm(const OccupancyGridMap& map);

struct AnnotationPolygon {
  ClassLabel cls = ClassLabel::kOther;
  std::vector<Vec2> vertices;  // world frame
};

double polygon_area(std::span<const Vec2> vertices);

// Even-odd rule; points on an edge or vertex count as inside.
bool point_in_polygon(const Vec2& p, std::span<const Vec2> vertices);

struct SemanticGridMap {
  OccupancyGridMap grid;
  std::vector<ClassLabel> labels;  // same indexing as grid.cells

  // Throws InvalidArgument on size mismatch or any Person label.
  void validate() const;

  ClassLabel label(int i, int j) const { return labels[grid.index(i, j)]; }
  bool operator==(const SemanticGridMap&) const = default;
};

// Each cell whose center lies inside at least one polygon receives the class
// of the smallest-area containing polygon (ties: smallest class id); other
// cells are Other. Throws InvalidArgument for Person or degenerate polygons.
SemanticGridMap rasterize_labels(std::span<const AnnotationPolygon> polygons,
                                 const OccupancyGridMap& grid);

struct LabelQuery {
  CellIndex cell;
  CellState state = CellState::kUnknown;
  ClassLabel label = ClassLabel::kOther;
};

// nullopt means the point is outside the grid.
std::optional<LabelQuery> query_label(const SemanticGridMap& map, const Vec2& p);

// LabelMe JSON ("shapes": [{"label", "points", "shape_type"}], or a bare
// array of such objects). Pixel coordinates are relative to the map image
// of `grid` and are converted to world coordinates.
std::vector<AnnotationPolygon> parse_labelme(std::string_view json_text,
                                             const OccupancyGridMap& grid);

// Little-endian binary container, see docs/formats.md.
std::vector<std::uint8_t> serialize_semantic_map(const SemanticGridMap& map);
SemanticGridMap deserialize_semantic_map(std::span<const std::uint8_t> bytes);

}  // namespace semlabel
