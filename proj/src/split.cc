#include "semlabel/split.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "semlabel/error.h"
#include "semlabel/prng.h"

namespace semlabel {

void SplitSpec::validate() const {
  for (double r : {train, val, test}) {
    if (!(r >= 0.0 && r <= 1.0)) throw InvalidArgument("split ratios must lie in [0, 1]");
  }
  if (std::abs(train + val + test - 1.0) > 1e-9) throw InvalidArgument("split ratios must sum to 1");
}

std::vector<SceneRecords> group_by_scene(std::vector<DatasetRecord> records) {
  std::vector<SceneRecords> out;
  std::unordered_map<std::string, std::size_t> slot;
  for (DatasetRecord& r : records) {
    auto [it, inserted] = slot.emplace(r.scene_id, out.size());
    if (inserted) out.push_back({r.scene_id, {}});
    out[it->second].records.push_back(std::move(r));
  }
  return out;
}

SplitCounts split_counts(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  // The epsilon keeps exact products such as 0.7 * 10 from flooring to 6.
  const auto part = [n](double ratio) {
    return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
  };
  SplitCounts c;
  c.train = std::min(n, part(spec.train));
  c.val = std::min(n - c.train, part(spec.val));
  c.test = n - c.train - c.val;
  return c;
}

std::vector<std::size_t> scene_permutation(std::size_t n, std::uint64_t seed,
                                           const std::string& scene_id) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Xoshiro256 rng(seed ^ fnv1a64(scene_id));
  for (std::size_t i = n; i-- > 1;) std::swap(perm[i], perm[rng.bounded(i + 1)]);
  return perm;
}

SplitResult split_dataset(std::span<const SceneRecords> scenes, const SplitSpec& spec) {
  spec.validate();
  SplitResult out;
  for (const SceneRecords& scene : scenes) {
    const std::size_t n = scene.records.size();
    if (n == 0) {
      out.warnings.push_back("scene \"" + scene.scene_id + "\" has no records, skipped");
      continue;
    }
    const SplitCounts counts = split_counts(n, spec);
    const std::vector<std::size_t> perm = scene_permutation(n, spec.seed, scene.scene_id);
    std::vector<int> part(n, 2);
    for (std::size_t k = 0; k < n; ++k) {
      if (k < counts.train) {
        part[perm[k]] = 0;
      } else if (k < counts.train + counts.val) {
        part[perm[k]] = 1;
      }
    }
    for (std::size_t idx = 0; idx < n; ++idx) {
      auto& dest = part[idx] == 0 ? out.train : part[idx] == 1 ? out.val : out.test;
      dest.push_back(scene.records[idx]);
    }
  }
  return out;
}

}  // namespace semlabel
