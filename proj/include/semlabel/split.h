#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "semlabel/dataset_io.h"

namespace semlabel {

struct SplitSpec {
  double train = 0.70;
  double val = 0.10;
  double test = 0.20;
  std::uint64_t seed = 0;

  // Throws InvalidArgument unless every ratio is in [0, 1] and they sum to 1.
  void validate() const;
};

struct SceneRecords {
  std::string scene_id;
  std::vector<DatasetRecord> records;
};

// Groups by scene_id in order of first appearance, keeping record order.
std::vector<SceneRecords> group_by_scene(std::vector<DatasetRecord> records);

// Per-scene sizes: floor(train * n) and floor(val * n), remainder to test.
struct SplitCounts {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};
SplitCounts split_counts(std::size_t n, const SplitSpec& spec);

// Fisher-Yates permutation of [0, n) driven by Xoshiro256(seed ^ fnv1a64(scene_id)),
// swapping position i with bounded(i + 1) for i = n-1 down to 1.
std::vector<std::size_t> scene_permutation(std::size_t n, std::uint64_t seed,
                                           const std::string& scene_id);

struct SplitResult {
  std::vector<DatasetRecord> train;
  std::vector<DatasetRecord> val;
  std::vector<DatasetRecord> test;
  std::vector<std::string> warnings;  // one per skipped empty scene
};

// Within a scene, the first train-count entries of the permutation go to
// train, the next val-count to val, the rest to test; each part keeps the
// scene's original record order. Scenes are concatenated in input order.
SplitResult split_dataset(std::span<const SceneRecords> scenes, const SplitSpec& spec);

}  // namespace semlabel
