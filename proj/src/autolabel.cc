#include "semlabel/autolabel.h"

#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

#include "semlabel/error.h"
#include "semlabel/parallel.h"

namespace semlabel {

double LabelTransferParams::radius_for(const OccupancyGridMap& grid) const {
  const double r = assoc_radius.value_or(1.5 * grid.resolution);
  if (!(r >= 0.0)) throw InvalidArgument("assoc_radius must be non-negative");
  return r;
}

LabelingMap::LabelingMap(SemanticGridMap map) : map_(std::move(map)) {
  map_.validate();
  occupied_ = map_to_points(map_.grid);
  surface_ = map_surface_points(map_.grid);
}

ClassLabel label_point(const LabelingMap& map, const Vec2& p, const LabelTransferParams& params) {
  const double radius = params.radius_for(map.grid());
  const auto hit = map.occupied().index.nearest(p, radius * radius);
  if (hit.index >= 0) {
    const CellIndex& c = map.occupied().cells[hit.index];
    return map.semantic().label(c.i, c.j);
  }
  const auto q = query_label(map.semantic(), p);
  if (q && q->state == CellState::kFree) return ClassLabel::kPerson;
  return ClassLabel::kOther;
}

LabeledScan auto_label_scan(const LidarScan& scan, const SensorSpec& spec, const Pose2D& init,
                            const LabelingMap& map, const AutoLabelParams& params) {
  check_dimensions(scan, spec);
  LabeledScan out;
  out.scan = scan;
  out.pose_refined = init;

  const double gate = params.rms_gate * map.grid().resolution;
  const std::vector<LineSegment> lines = extract_lines(scan, spec, params.lines);
  const std::vector<Vec2> source = line_inlier_points(scan, spec, lines);
  if (source.empty()) {
    out.alignment_rms = std::numeric_limits<double>::infinity();
    out.flagged = true;
  } else {
    IcpParams icp = params.icp;
    if (!params.use_icp) icp.max_iterations = 0;
    const IcpResult r = icp_refine(source, init, map.surface(), icp);
    out.pose_refined = r.pose;
    out.alignment_rms = r.rms;
    out.converged = r.converged;
    out.icp_iterations = r.iterations;
    // Without ICP there is no convergence to report; only the rms gate applies.
    const bool not_converged = params.use_icp && !r.converged;
    out.flagged = not_converged || !(r.rms <= gate);
  }

  out.labels.assign(static_cast<std::size_t>(spec.n_beams), ClassLabel::kOther);
  for (const BeamPoint& bp : polar_to_cartesian(scan, spec)) {
    out.labels[bp.beam] = label_point(map, apply(out.pose_refined, bp.point), params.transfer);
  }
  return out;
}

std::uint64_t SequenceReport::total_points() const {
  std::uint64_t total = 0;
  for (auto c : class_counts) total += c;
  return total;
}

double SequenceReport::percent(ClassLabel c) const {
  const auto total = total_points();
  if (total == 0) return 0.0;
  return 100.0 * static_cast<double>(class_counts[class_index(c)]) / static_cast<double>(total);
}

SequenceReport label_sequence(const ScanSource& source, const LabeledSink& sink,
                              const SensorSpec& spec, const LabelingMap& map,
                              const AutoLabelParams& params, int threads) {
  SequenceReport report;
  double rms_sum = 0.0;
  std::uint64_t rms_count = 0;
  const std::size_t batch_size = 32 * static_cast<std::size_t>(std::max(1, threads));

  std::size_t next_index = 0;
  bool done = false;
  std::vector<ScanInput> batch;
  std::vector<LabeledScan> results;
  while (!done) {
    batch.clear();
    const std::size_t first = next_index;
    while (batch.size() < batch_size) {
      ScanInput item;
      bool more = false;
      try {
        more = source(next_index, item);
        if (more) check_dimensions(item.scan, spec);
      } catch (const RecordError&) {
        throw;
      } catch (const std::exception& e) {
        throw RecordError(e.what(), next_index);
      }
      if (!more) {
        done = true;
        break;
      }
      batch.push_back(std::move(item));
      ++next_index;
    }
    results.assign(batch.size(), LabeledScan{});
    parallel_for(batch.size(), threads, [&](std::size_t k) {
      try {
        results[k] = auto_label_scan(batch[k].scan, spec, batch[k].init, map, params);
      } catch (const std::exception& e) {
        throw RecordError(e.what(), first + k);
      }
    });
    for (std::size_t k = 0; k < results.size(); ++k) {
      LabeledScan& r = results[k];
      ++report.n_scans;
      for (ClassLabel c : r.labels) ++report.class_counts[class_index(c)];
      if (r.flagged) {
        ++report.n_flagged;
        report.flagged_indices.push_back(first + k);
      }
      if (std::isfinite(r.alignment_rms)) {
        rms_sum += r.alignment_rms;
        ++rms_count;
      }
      sink(first + k, std::move(r));
    }
  }
  report.mean_rms = rms_count > 0 ? rms_sum / static_cast<double>(rms_count) : 0.0;
  return report;
}

std::vector<LabeledScan> label_sequence(std::span<const ScanInput> inputs, const SensorSpec& spec,
                                        const LabelingMap& map, const AutoLabelParams& params,
                                        SequenceReport* report, int threads) {
  std::vector<LabeledScan> out;
  out.reserve(inputs.size());
  const SequenceReport r = label_sequence(
      [&](std::size_t index, ScanInput& item) {
        if (index >= inputs.size()) return false;
        item = inputs[index];
        return true;
      },
      [&](std::size_t, LabeledScan&& labeled) { out.push_back(std::move(labeled)); }, spec, map,
      params, threads);
  if (report) *report = r;
  return out;
}

std::string report_to_csv(const SequenceReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "class,count,percent\n";
  for (ClassLabel c : kAllClasses) {
    out << class_name(c) << ',' << report.class_counts[class_index(c)] << ','
        << report.percent(c) << '\n';
  }
  out << "scans," << report.n_scans << ",\n";
  out << "flagged," << report.n_flagged << ",\n";
  out << "mean_rms," << report.mean_rms << ",\n";
  return out.str();
}

}  // namespace semlabel
