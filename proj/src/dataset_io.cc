#include "semlabel/dataset_io.h"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "semlabel/error.h"
#include "semlabel/file_util.h"

namespace semlabel {

using nlohmann::json;

std::string format_double(double v) {
  if (!std::isfinite(v)) throw InvalidArgument("cannot write a non-finite number");
  if (v == 0.0) return "0";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

void append_string(std::string& out, const std::string& s) { out += json(s).dump(); }

void append_doubles(std::string& out, const std::vector<double>& values) {
  out += '[';
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) out += ',';
    out += format_double(values[k]);
  }
  out += ']';
}

void append_labels(std::string& out, const std::vector<ClassLabel>& labels) {
  out += '[';
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (k) out += ',';
    out += std::to_string(class_index(labels[k]));
  }
  out += ']';
}

void append_pose(std::string& out, const Pose2D& p) {
  out += "{\"x\":" + format_double(p.x) + ",\"y\":" + format_double(p.y) +
         ",\"theta\":" + format_double(p.theta) + "}";
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw ParseError("line " + std::to_string(line) + ": " + what, line, true);
}

json parse_line(std::string_view text, std::size_t line) {
  try {
    json j = json::parse(text);
    if (!j.is_object()) fail(line, "expected a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    fail(line, e.what());
  }
}

void check_keys(const json& j, const std::set<std::string>& allowed, std::size_t line) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) fail(line, "unexpected key \"" + key + "\"");
  }
}

const json& require(const json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) fail(line, std::string("missing key \"") + key + "\"");
  return *it;
}

double number(const json& v, const char* what, std::size_t line) {
  if (!v.is_number()) fail(line, std::string(what) + " must be a number");
  return v.get<double>();
}

std::int64_t integer(const json& v, const char* what, std::size_t line) {
  if (!v.is_number_integer()) fail(line, std::string(what) + " must be an integer");
  return v.get<std::int64_t>();
}

std::vector<double> numbers(const json& v, const char* what, int expected, std::size_t line) {
  if (!v.is_array()) fail(line, std::string(what) + " must be an array");
  if (expected >= 0 && static_cast<int>(v.size()) != expected) {
    fail(line, std::string(what) + " has " + std::to_string(v.size()) + " entries, expected " +
                   std::to_string(expected));
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(number(x, what, line));
  return out;
}

std::vector<ClassLabel> labels(const json& v, const char* what, int expected, std::size_t line) {
  if (!v.is_array()) fail(line, std::string(what) + " must be an array");
  if (expected >= 0 && static_cast<int>(v.size()) != expected) {
    fail(line, std::string(what) + " has " + std::to_string(v.size()) + " entries, expected " +
                   std::to_string(expected));
  }
  std::vector<ClassLabel> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    const auto id = integer(x, what, line);
    if (id < 0 || id >= kNumClasses) fail(line, "class id " + std::to_string(id) + " out of range");
    out.push_back(static_cast<ClassLabel>(id));
  }
  return out;
}

Pose2D pose(const json& v, const char* what, std::size_t line) {
  if (!v.is_object()) fail(line, std::string(what) + " must be an object");
  check_keys(v, {"x", "y", "theta"}, line);
  return {number(require(v, "x", line), "x", line), number(require(v, "y", line), "y", line),
          number(require(v, "theta", line), "theta", line)};
}

bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t\r") == std::string_view::npos;
}

}  // namespace

std::string dataset_header_to_json(const SensorSpec& spec) {
  spec.validate();
  return "{\"schema_version\":" + std::to_string(kDatasetSchemaVersion) +
         ",\"sensor\":{\"n_beams\":" + std::to_string(spec.n_beams) +
         ",\"fov\":" + format_double(spec.fov) +
         ",\"angular_resolution\":" + format_double(spec.angular_resolution) +
         ",\"range_max\":" + format_double(spec.range_max) + ",\"rate\":" + format_double(spec.rate) +
         "}}";
}

SensorSpec dataset_header_from_json(std::string_view line) {
  const json j = parse_line(line, 1);
  check_keys(j, {"schema_version", "sensor"}, 1);
  const auto version = integer(require(j, "schema_version", 1), "schema_version", 1);
  if (version != kDatasetSchemaVersion) fail(1, "unsupported schema_version " + std::to_string(version));
  const json& s = require(j, "sensor", 1);
  if (!s.is_object()) fail(1, "sensor must be an object");
  check_keys(s, {"n_beams", "fov", "angular_resolution", "range_max", "rate"}, 1);
  SensorSpec spec;
  spec.n_beams = static_cast<int>(integer(require(s, "n_beams", 1), "n_beams", 1));
  spec.fov = number(require(s, "fov", 1), "fov", 1);
  spec.angular_resolution = number(require(s, "angular_resolution", 1), "angular_resolution", 1);
  spec.range_max = number(require(s, "range_max", 1), "range_max", 1);
  spec.rate = number(require(s, "rate", 1), "rate", 1);
  try {
    spec.validate();
  } catch (const InvalidArgument& e) {
    fail(1, e.what());
  }
  return spec;
}

std::string record_to_json(const DatasetRecord& r) {
  std::string out;
  out.reserve(24 * (r.ranges.size() + r.intensities.size()) + 256);
  out += "{\"scene_id\":";
  append_string(out, r.scene_id);
  out += ",\"frame\":" + std::to_string(r.frame);
  out += ",\"timestamp\":" + format_double(r.timestamp);
  out += ",\"ranges\":";
  append_doubles(out, r.ranges);
  out += ",\"intensities\":";
  append_doubles(out, r.intensities);
  out += ",\"init_pose\":";
  append_pose(out, r.init_pose);
  if (r.true_pose) {
    out += ",\"true_pose\":";
    append_pose(out, *r.true_pose);
  }
  if (r.labels) {
    out += ",\"labels\":";
    append_labels(out, *r.labels);
  }
  if (r.flagged) out += std::string(",\"flagged\":") + (*r.flagged ? "true" : "false");
  if (r.refined_pose) {
    out += ",\"refined_pose\":";
    append_pose(out, *r.refined_pose);
  }
  if (r.alignment_rms) out += ",\"alignment_rms\":" + format_double(*r.alignment_rms);
  out += '}';
  return out;
}

DatasetRecord record_from_json(std::string_view text, const SensorSpec& spec, std::size_t line) {
  const json j = parse_line(text, line);
  check_keys(j,
             {"scene_id", "frame", "timestamp", "ranges", "intensities", "init_pose", "true_pose",
              "labels", "flagged", "refined_pose", "alignment_rms"},
             line);
  DatasetRecord r;
  const json& id = require(j, "scene_id", line);
  if (!id.is_string()) fail(line, "scene_id must be a string");
  r.scene_id = id.get<std::string>();
  r.frame = integer(require(j, "frame", line), "frame", line);
  r.timestamp = number(require(j, "timestamp", line), "timestamp", line);
  r.ranges = numbers(require(j, "ranges", line), "ranges", spec.n_beams, line);
  r.intensities = numbers(require(j, "intensities", line), "intensities", spec.n_beams, line);
  r.init_pose = pose(require(j, "init_pose", line), "init_pose", line);
  if (auto it = j.find("true_pose"); it != j.end()) r.true_pose = pose(*it, "true_pose", line);
  if (auto it = j.find("labels"); it != j.end()) r.labels = labels(*it, "labels", spec.n_beams, line);
  if (auto it = j.find("flagged"); it != j.end()) {
    if (!it->is_boolean()) fail(line, "flagged must be a boolean");
    r.flagged = it->get<bool>();
  }
  if (auto it = j.find("refined_pose"); it != j.end()) r.refined_pose = pose(*it, "refined_pose", line);
  if (auto it = j.find("alignment_rms"); it != j.end()) {
    r.alignment_rms = number(*it, "alignment_rms", line);
  }
  return r;
}

DatasetReader::DatasetReader(std::istream& in) : in_(in) {
  while (std::getline(in_, buffer_)) {
    ++line_;
    if (is_blank(buffer_)) continue;
    sensor_ = dataset_header_from_json(buffer_);
    return;
  }
  fail(1, "missing dataset header");
}

bool DatasetReader::next(DatasetRecord& record) {
  while (std::getline(in_, buffer_)) {
    ++line_;
    if (is_blank(buffer_)) continue;
    record = record_from_json(buffer_, sensor_, line_);
    return true;
  }
  return false;
}

DatasetWriter::DatasetWriter(std::ostream& out, const SensorSpec& spec) : out_(out), sensor_(spec) {
  out_ << dataset_header_to_json(spec) << '\n';
}

void DatasetWriter::write(const DatasetRecord& record) {
  if (static_cast<int>(record.ranges.size()) != sensor_.n_beams ||
      static_cast<int>(record.intensities.size()) != sensor_.n_beams ||
      (record.labels && static_cast<int>(record.labels->size()) != sensor_.n_beams)) {
    throw InvalidArgument("record " + record.scene_id + "/" + std::to_string(record.frame) +
                          " does not match the sensor beam count");
  }
  out_ << record_to_json(record) << '\n';
  if (!out_) throw Error("dataset write failed");
}

Dataset read_dataset(std::string_view text) {
  std::istringstream in{std::string(text)};
  DatasetReader reader(in);
  Dataset out;
  out.sensor = reader.sensor();
  DatasetRecord r;
  while (reader.next(r)) out.records.push_back(std::move(r));
  return out;
}

Dataset read_dataset_file(const std::string& path) { return read_dataset(read_file_text(path)); }

std::string write_dataset(const Dataset& dataset) {
  std::ostringstream out;
  DatasetWriter writer(out, dataset.sensor);
  for (const auto& r : dataset.records) writer.write(r);
  return out.str();
}

void write_dataset_file(const std::string& path, const Dataset& dataset) {
  write_file(path, write_dataset(dataset));
}

std::string prediction_to_json(const PredictionRecord& r) {
  if (r.samples.empty()) throw InvalidArgument("prediction record without samples");
  std::string out = "{\"scene_id\":";
  append_string(out, r.scene_id);
  out += ",\"frame\":" + std::to_string(r.frame);
  if (r.samples.size() == 1) {
    out += ",\"labels\":";
    append_labels(out, r.samples.front());
  } else {
    out += ",\"samples\":[";
    for (std::size_t s = 0; s < r.samples.size(); ++s) {
      if (s) out += ',';
      append_labels(out, r.samples[s]);
    }
    out += ']';
  }
  out += '}';
  return out;
}

PredictionRecord prediction_from_json(std::string_view text, std::size_t line) {
  const json j = parse_line(text, line);
  check_keys(j, {"scene_id", "frame", "labels", "samples"}, line);
  PredictionRecord r;
  const json& id = require(j, "scene_id", line);
  if (!id.is_string()) fail(line, "scene_id must be a string");
  r.scene_id = id.get<std::string>();
  r.frame = integer(require(j, "frame", line), "frame", line);
  const bool has_labels = j.contains("labels");
  const bool has_samples = j.contains("samples");
  if (has_labels == has_samples) fail(line, "exactly one of labels or samples is required");
  if (has_labels) {
    r.samples.push_back(labels(j["labels"], "labels", -1, line));
  } else {
    const json& s = j["samples"];
    if (!s.is_array() || s.empty()) fail(line, "samples must be a non-empty array");
    for (const auto& sample : s) r.samples.push_back(labels(sample, "samples", -1, line));
  }
  for (const auto& sample : r.samples) {
    if (sample.size() != r.samples.front().size()) fail(line, "samples differ in length");
  }
  return r;
}

std::vector<PredictionRecord> read_predictions(std::string_view text) {
  std::vector<PredictionRecord> out;
  std::istringstream in{std::string(text)};
  std::string buffer;
  std::size_t line = 0;
  bool first = true;
  while (std::getline(in, buffer)) {
    ++line;
    if (is_blank(buffer)) continue;
    if (first) {
      first = false;
      if (buffer.find("\"schema_version\"") != std::string::npos) {
        dataset_header_from_json(buffer);
        continue;
      }
    }
    out.push_back(prediction_from_json(buffer, line));
  }
  return out;
}

std::string write_predictions(const std::vector<PredictionRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += prediction_to_json(r);
    out += '\n';
  }
  return out;
}

}  // namespace semlabel
