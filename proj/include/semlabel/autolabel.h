#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "semlabel/line_extract.h"
#include "semlabel/map_label.h"
#include "semlabel/scan_align.h"
#include "semlabel/scan_model.h"

namespace semlabel {

struct LabelTransferParams {
  // Search radius for the nearest occupied cell; unset means 1.5 x the map
  // resolution.
  std::optional<double> assoc_radius;

  double radius_for(const OccupancyGridMap& grid) const;
};

// A semantic map with two indexes: every occupied cell for label transfer,
// and the surface cells ICP aligns against. Immutable after construction.
class LabelingMap {
 public:
  explicit LabelingMap(SemanticGridMap map);

  const SemanticGridMap& semantic() const { return map_; }
  const OccupancyGridMap& grid() const { return map_.grid; }
  const MapPoints& occupied() const { return occupied_; }
  const MapPoints& surface() const { return surface_; }

 private:
  SemanticGridMap map_;
  MapPoints occupied_;
  MapPoints surface_;
};

// Label of the nearest occupied cell within the association radius; else
// Person in free space; else Other.
ClassLabel label_point(const LabelingMap& map, const Vec2& p, const LabelTransferParams& params);

struct AutoLabelParams {
  LineExtractParams lines;
  IcpParams icp;
  LabelTransferParams transfer;
  bool use_icp = true;
  // Scans with alignment rms above this multiple of the map resolution are
  // flagged.
  double rms_gate = 2.0;
};

struct LabeledScan {
  LidarScan scan;
  std::vector<ClassLabel> labels;
  Pose2D pose_refined;
  double alignment_rms = 0.0;
  bool flagged = false;
  bool converged = false;
  int icp_iterations = 0;
};

LabeledScan auto_label_scan(const LidarScan& scan, const SensorSpec& spec, const Pose2D& init,
                            const LabelingMap& map, const AutoLabelParams& params);

struct ScanInput {
  LidarScan scan;
  Pose2D init;
};

struct SequenceReport {
  std::array<std::uint64_t, kNumClasses> class_counts{};
  std::uint64_t n_scans = 0;
  std::uint64_t n_flagged = 0;
  double mean_rms = 0.0;  // over scans with finite alignment rms
  std::vector<std::size_t> flagged_indices;

  std::uint64_t total_points() const;
  double percent(ClassLabel c) const;
};

// Fills `out` with record `index` and returns true, or returns false at end of
// stream. Exceptions are rethrown as RecordError carrying the index.
using ScanSource = std::function<bool(std::size_t index, ScanInput& out)>;
using LabeledSink = std::function<void(std::size_t index, LabeledScan&& labeled)>;

// Labels a stream in batches on `threads` workers; the sink sees scans in
// input order.
SequenceReport label_sequence(const ScanSource& source, const LabeledSink& sink,
                              const SensorSpec& spec, const LabelingMap& map,
                              const AutoLabelParams& params, int threads = 1);

std::vector<LabeledScan> label_sequence(std::span<const ScanInput> inputs, const SensorSpec& spec,
                                        const LabelingMap& map, const AutoLabelParams& params,
                                        SequenceReport* report = nullptr, int threads = 1);

// "class,count,percent" rows followed by scans/flagged/mean_rms rows.
std::string report_to_csv(const SequenceReport& report);

}  // namespace semlabel
