#include "semlabel/dataset_io.h"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "semlabel/error.h"
#include "semlabel/prng.h"
#include "test_support.h"

namespace semlabel {
namespace {

SensorSpec tiny_spec() {
  SensorSpec s;
  s.n_beams = 5;
  s.angular_resolution = 0.25;
  s.fov = 1.0;
  s.range_max = 30.0;
  return s;
}

double wild_double(Xoshiro256& rng) {
  switch (rng.bounded(4)) {
    case 0: return rng.uniform() * 30.0;
    case 1: return std::ldexp(rng.uniform() - 0.5, static_cast<int>(rng.bounded(80)) - 40);
    case 2: return static_cast<double>(rng.bounded(1000)) / 8.0;
    default: return std::nextafter(rng.uniform(), 2.0);
  }
}

Pose2D random_pose(Xoshiro256& rng) { return {wild_double(rng), -wild_double(rng), rng.uniform() * 6 - 3}; }

DatasetRecord random_record(Xoshiro256& rng, const SensorSpec& spec) {
  static const char* kIds[] = {"a", "scene \"quoted\"", "tab\there", "unicode-\xc3\xa9", "back\\slash"};
  DatasetRecord r;
  r.scene_id = kIds[rng.bounded(5)];
  r.frame = static_cast<std::int64_t>(rng.bounded(1u << 30));
  r.timestamp = wild_double(rng);
  for (int b = 0; b < spec.n_beams; ++b) {
    r.ranges.push_back(rng.bounded(5) ? wild_double(rng) : spec.no_return());
    r.intensities.push_back(wild_double(rng));
  }
  r.init_pose = random_pose(rng);
  if (rng.bounded(2)) r.true_pose = random_pose(rng);
  if (rng.bounded(2)) {
    std::vector<ClassLabel> labels;
    for (int b = 0; b < spec.n_beams; ++b) labels.push_back(class_from_index(static_cast<int>(rng.bounded(kNumClasses))));
    r.labels = labels;
    r.flagged = rng.bounded(2) == 1;
    r.refined_pose = random_pose(rng);
    if (rng.bounded(2)) r.alignment_rms = wild_double(rng);
  }
  return r;
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(format_double(-0.0), "0");
  EXPECT_EQ(format_double(1.0 / 3.0), "0.3333333333333333");
  EXPECT_THROW(format_double(std::numeric_limits<double>::infinity()), InvalidArgument);
  EXPECT_THROW(format_double(std::nan("")), InvalidArgument);
  Xoshiro256 rng(70);
  for (int k = 0; k < 10000; ++k) {
    const double v = wild_double(rng) * (rng.bounded(2) ? 1 : -1);
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  }
}

TEST(DatasetHeader, RoundTripAndErrors) {
  const SensorSpec spec;
  const std::string line = dataset_header_to_json(spec);
  EXPECT_EQ(line.rfind("{\"schema_version\":1,", 0), 0u);
  EXPECT_EQ(dataset_header_from_json(line), spec);
  try {
    dataset_header_from_json(R"({"schema_version":7,"sensor":{}})");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_TRUE(e.is_line());
    EXPECT_EQ(e.offset(), 1u);
  }
  EXPECT_THROW(dataset_header_from_json(
                   R"({"schema_version":1,"sensor":{"n_beams":10,"fov":1,"angular_resolution":1,"range_max":5,"rate":1}})"),
               ParseError);
}

TEST(DatasetRecordJson, ByteIdenticalRoundTrip) {
  const SensorSpec spec = tiny_spec();
  Xoshiro256 rng(71);
  Dataset ds{spec, {}};
  for (int k = 0; k < 1000; ++k) ds.records.push_back(random_record(rng, spec));
  const std::string text = write_dataset(ds);
  const Dataset back = read_dataset(text);
  EXPECT_EQ(back.sensor, spec);
  ASSERT_EQ(back.records.size(), ds.records.size());
  for (std::size_t k = 0; k < ds.records.size(); ++k) EXPECT_EQ(back.records[k], ds.records[k]) << k;
  EXPECT_EQ(write_dataset(back), text);
}

TEST(DatasetRecordJson, CanonicalLayout) {
  const SensorSpec spec = tiny_spec();
  DatasetRecord r;
  r.scene_id = "s";
  r.frame = 3;
  r.timestamp = 0.15;
  r.ranges = {1, 2.5, spec.no_return(), 0.125, 30};
  r.intensities = {100, 0, 1, 2, 3};
  r.init_pose = {1, -2, 0.5};
  EXPECT_EQ(record_to_json(r),
            "{\"scene_id\":\"s\",\"frame\":3,\"timestamp\":0.15,\"ranges\":[1,2.5,31,0.125,30],"
            "\"intensities\":[100,0,1,2,3],\"init_pose\":{\"x\":1,\"y\":-2,\"theta\":0.5}}");
}

TEST(DatasetReader, ErrorsCarryLineNumbers) {
  const SensorSpec spec;
  Xoshiro256 rng(72);
  std::string text = dataset_header_to_json(spec) + "\n";
  text += record_to_json(random_record(rng, spec)) + "\n\n";
  DatasetRecord bad = random_record(rng, spec);
  bad.ranges.pop_back();  // 1080 ranges for a 1081-beam sensor
  text += record_to_json(bad) + "\n";
  std::istringstream in(text);
  DatasetReader reader(in);
  DatasetRecord r;
  EXPECT_TRUE(reader.next(r));
  try {
    reader.next(r);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_TRUE(e.is_line());
    EXPECT_EQ(e.offset(), 4u);
    EXPECT_NE(std::string(e.what()).find("1080"), std::string::npos) << e.what();
  }
}

TEST(DatasetReader, EmptyBodyAndMissingHeader) {
  const Dataset empty = read_dataset(dataset_header_to_json(tiny_spec()) + "\n");
  EXPECT_TRUE(empty.records.empty());
  EXPECT_EQ(empty.sensor, tiny_spec());
  EXPECT_THROW(read_dataset(""), ParseError);
  EXPECT_THROW(read_dataset("{\"scene_id\":\"x\"}\n"), ParseError);
  try {
    read_dataset(dataset_header_to_json(tiny_spec()) + "\n{not json\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 2u);
  }
}

TEST(DatasetFile, WriteAndRead) {
  testing::TempDir dir;
  Xoshiro256 rng(73);
  Dataset ds{tiny_spec(), {}};
  for (int k = 0; k < 20; ++k) ds.records.push_back(random_record(rng, ds.sensor));
  const std::string path = dir.file("d.jsonl");
  write_dataset_file(path, ds);
  const Dataset back = read_dataset_file(path);
  EXPECT_EQ(back.records, ds.records);
  EXPECT_THROW(read_dataset_file(dir.file("missing.jsonl")), Error);

  std::ostringstream out;
  DatasetWriter writer(out, ds.sensor);
  for (const auto& r : ds.records) writer.write(r);
  EXPECT_EQ(out.str(), write_dataset(ds));
  DatasetRecord wrong = ds.records[0];
  wrong.intensities.push_back(1.0);
  EXPECT_THROW(writer.write(wrong), InvalidArgument);
}

TEST(Predictions, SingleAndMultiSample) {
  const PredictionRecord one{"s", 4, {{ClassLabel::kWall, ClassLabel::kPerson, ClassLabel::kOther}}};
  EXPECT_EQ(prediction_to_json(one), "{\"scene_id\":\"s\",\"frame\":4,\"labels\":[9,4,0]}");
  EXPECT_EQ(prediction_from_json(prediction_to_json(one), 1), one);

  const PredictionRecord many{"s", 5, {{ClassLabel::kWall}, {ClassLabel::kDoor}, {ClassLabel::kChair}}};
  EXPECT_EQ(prediction_to_json(many), "{\"scene_id\":\"s\",\"frame\":5,\"samples\":[[9],[2],[1]]}");
  EXPECT_EQ(prediction_from_json(prediction_to_json(many), 1), many);

  const std::string text = dataset_header_to_json(SensorSpec{}) + "\n" + write_predictions({one, many});
  const auto back = read_predictions(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], one);
  EXPECT_EQ(back[1], many);

  EXPECT_THROW(prediction_from_json(R"({"scene_id":"s","frame":1})", 3), ParseError);
  EXPECT_THROW(prediction_from_json(R"({"scene_id":"s","frame":1,"labels":[0],"samples":[[0]]})", 3), ParseError);
  EXPECT_THROW(prediction_from_json(R"({"scene_id":"s","frame":1,"labels":[10]})", 3), ParseError);
  EXPECT_THROW(prediction_from_json(R"({"scene_id":"s","frame":1,"samples":[[0],[0,1]]})", 3), ParseError);
  EXPECT_THROW(prediction_to_json(PredictionRecord{"s", 1, {}}), InvalidArgument);
  try {
    read_predictions(prediction_to_json(one) + "\n" + "[]\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 2u);
  }
}

}  // namespace
}  // namespace semlabel
