#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "semlabel/scan_model.h"

namespace semlabel {

inline constexpr int kDatasetSchemaVersion = 1;

// One scan with its localization estimate and, once labeled, per-beam
// classes. Arrays have the header's n_beams entries.
struct DatasetRecord {
  std::string scene_id;
  std::int64_t frame = 0;
  double timestamp = 0.0;
  std::vector<double> ranges;
  std::vector<double> intensities;
  Pose2D init_pose;
  std::optional<Pose2D> true_pose;
  std::optional<std::vector<ClassLabel>> labels;
  std::optional<bool> flagged;
  std::optional<Pose2D> refined_pose;
  std::optional<double> alignment_rms;

  LidarScan scan() const { return {ranges, intensities, timestamp}; }
  bool operator==(const DatasetRecord&) const = default;
};

// Shortest decimal string that parses back to the same double. -0 is
// written as 0; non-finite values throw InvalidArgument.
std::string format_double(double v);

std::string dataset_header_to_json(const SensorSpec& spec);
// Throws ParseError (line 1) on an unknown schema version or bad sensor.
SensorSpec dataset_header_from_json(std::string_view line);

// Canonical single-line JSON, no trailing newline.
std::string record_to_json(const DatasetRecord& record);
// Throws ParseError carrying `line_number` on malformed or mis-sized records.
DatasetRecord record_from_json(std::string_view line, const SensorSpec& spec,
                               std::size_t line_number);

// Sequential reader over a dataset stream. The header is read on
// construction; blank lines are skipped.
class DatasetReader {
 public:
  explicit DatasetReader(std::istream& in);

  const SensorSpec& sensor() const { return sensor_; }
  bool next(DatasetRecord& record);
  std::size_t line_number() const { return line_; }

 private:
  std::istream& in_;
  SensorSpec sensor_;
  std::size_t line_ = 0;
  std::string buffer_;
};

class DatasetWriter {
 public:
  DatasetWriter(std::ostream& out, const SensorSpec& spec);
  void write(const DatasetRecord& record);

 private:
  std::ostream& out_;
  SensorSpec sensor_;
};

struct Dataset {
  SensorSpec sensor;
  std::vector<DatasetRecord> records;
};

Dataset read_dataset(std::string_view text);
Dataset read_dataset_file(const std::string& path);
std::string write_dataset(const Dataset& dataset);
void write_dataset_file(const std::string& path, const Dataset& dataset);

// Per-beam predictions. One sample for deterministic predictors, S for
// stochastic ones.
struct PredictionRecord {
  std::string scene_id;
  std::int64_t frame = 0;
  std::vector<std::vector<ClassLabel>> samples;

  bool operator==(const PredictionRecord&) const = default;
};

// A single sample is written as "labels", several as "samples".
std::string prediction_to_json(const PredictionRecord& record);
PredictionRecord prediction_from_json(std::string_view line, std::size_t line_number);

// Headerless JSON-Lines; a leading dataset header line is accepted and
// skipped.
std::vector<PredictionRecord> read_predictions(std::string_view text);
std::string write_predictions(const std::vector<PredictionRecord>& records);

}  // namespace semlabel
