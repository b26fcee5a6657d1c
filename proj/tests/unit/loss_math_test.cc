#include "semlabel/loss_math.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "semlabel/error.h"
#include "semlabel/prng.h"

namespace semlabel {
namespace {

// --- independent oracles ---------------------------------------------------

// Jaccard loss of a mispredicted set M for class c: |M| / |gt_c u M|.
double jaccard_set_loss(const std::vector<bool>& gt, const std::vector<bool>& mispredicted) {
  std::size_t m = 0, uni = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    m += mispredicted[i];
    uni += gt[i] || mispredicted[i];
  }
  return uni ? static_cast<double>(m) / static_cast<double>(uni) : 0.0;
}

// Lovasz extension as the level-set integral of the set function over
// t in [0, max e]: sum over ascending distinct values of (v_k - v_{k-1}) * F({e >= v_k}).
double lovasz_by_level_sets(const std::vector<double>& errors, const std::vector<bool>& gt) {
  std::vector<double> levels(errors);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  double prev = 0.0, total = 0.0;
  for (double v : levels) {
    if (v <= 0.0) continue;
    std::vector<bool> set(errors.size());
    for (std::size_t i = 0; i < errors.size(); ++i) set[i] = errors[i] >= v;
    total += (v - prev) * jaccard_set_loss(gt, set);
    prev = v;
  }
  return total;
}

double lovasz_oracle(const ProbField& f, const std::vector<int>& truth) {
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < f.num_classes(); ++c) {
    std::vector<bool> gt(truth.size());
    std::vector<double> e(truth.size());
    bool any = false;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      gt[i] = truth[i] == c;
      any = any || gt[i];
      const double p = f.prob(static_cast<int>(i), c);
      e[i] = gt[i] ? 1.0 - p : p;
    }
    if (!any) continue;
    sum += lovasz_by_level_sets(e, gt);
    ++present;
  }
  return present ? sum / present : 0.0;
}

std::vector<double> random_simplex(Xoshiro256& rng, int n, int c) {
  std::vector<double> p;
  for (int i = 0; i < n; ++i) {
    std::vector<double> row(c);
    double s = 0;
    for (double& v : row) {
      v = 0.05 + rng.uniform();
      s += v;
    }
    for (double v : row) p.push_back(v / s);
  }
  return p;
}

std::vector<int> random_labels(Xoshiro256& rng, int n, int c) {
  std::vector<int> y(n);
  for (int& v : y) v = static_cast<int>(rng.bounded(c));
  return y;
}

// --- median frequency ----------------------------------------------------

TEST(MedianFrequencyWeights, HandCases) {
  const std::vector<std::uint64_t> two = {90, 10};
  const ClassWeights w = median_frequency_weights(two);
  ASSERT_EQ(w.w.size(), 2u);
  EXPECT_NEAR(w.w[0], 0.5 / 0.9, 1e-12);
  EXPECT_NEAR(w.w[1], 5.0, 1e-12);

  const std::vector<std::uint64_t> equal(10, 1234);
  for (double v : median_frequency_weights(equal).w) EXPECT_NEAR(v, 1.0, 1e-12);

  const std::vector<std::uint64_t> with_zero = {0, 10, 20, 40};
  const ClassWeights z = median_frequency_weights(with_zero);
  EXPECT_EQ(z.w[0], 0.0);
  EXPECT_NEAR(z.w[1], 2.0, 1e-12);
  EXPECT_NEAR(z.w[2], 1.0, 1e-12);
  EXPECT_NEAR(z.w[3], 0.5, 1e-12);

  const std::vector<std::uint64_t> zeros(4, 0);
  EXPECT_THROW(median_frequency_weights(zeros), InvalidArgument);
}

TEST(MedianFrequencyWeights, MedianClassGetsOne) {
  Xoshiro256 rng(60);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + 2 * static_cast<int>(rng.bounded(5));  // odd
    std::vector<std::uint64_t> counts;
    for (int k = 0; k < n; ++k) counts.push_back(1 + rng.bounded(100000));
    const ClassWeights w = median_frequency_weights(counts);
    std::vector<std::uint64_t> sorted(counts);
    std::sort(sorted.begin(), sorted.end());
    const std::uint64_t med = sorted[n / 2];
    for (int k = 0; k < n; ++k) {
      EXPECT_GT(w.w[k], 0.0);
      if (counts[k] == med) {
        EXPECT_EQ(w.w[k], 1.0);
      }
    }
  }
}

// --- cross entropy ---------------------------------------------------------

TEST(WeightedCrossEntropy, Examples) {
  const std::vector<int> y = {0, 3, 9, 9, 2};
  const ClassWeights w{std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 0.5}};
  const ProbField hot = ProbField::one_hot(10, y);
  EXPECT_NEAR(weighted_cross_entropy(hot, y, w), 0.0, 1e-11);

  const ProbField uniform(10, std::vector<double>(50, 0.1));
  EXPECT_NEAR(weighted_cross_entropy(uniform, y, w), std::log(10.0), 1e-12);
  EXPECT_NEAR(std::log(10.0), 2.302585, 1e-6);

  Xoshiro256 rng(61);
  const ProbField f(10, random_simplex(rng, 5, 10));
  ClassWeights w2 = w;
  for (double& v : w2.w) v *= 2;
  EXPECT_NEAR(weighted_cross_entropy(f, y, w), weighted_cross_entropy(f, y, w2), 1e-14);

  // Direct evaluation.
  double num = 0, den = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    num -= w.w[y[i]] * std::log(f.prob(static_cast<int>(i), y[i]));
    den += w.w[y[i]];
  }
  EXPECT_NEAR(weighted_cross_entropy(f, y, w), num / den, 1e-14);
}

TEST(WeightedCrossEntropy, Errors) {
  const std::vector<int> y = {0, 1};
  const ProbField f = ProbField::one_hot(2, y);
  EXPECT_THROW(weighted_cross_entropy(f, y, ClassWeights{{0.0, 0.0}}), InvalidArgument);
  EXPECT_THROW(weighted_cross_entropy(f, std::vector<int>{0}, ClassWeights{{1.0, 1.0}}), InvalidArgument);
  EXPECT_THROW(weighted_cross_entropy(f, y, ClassWeights{{1.0}}), InvalidArgument);
  // A zero probability on the truth is clamped, not infinite.
  const std::vector<int> wrong = {1, 0};
  EXPECT_NEAR(weighted_cross_entropy(f, wrong, ClassWeights{{1.0, 1.0}}), -std::log(kLogEpsilon), 1e-9);
}

TEST(ProbField, Validation) {
  EXPECT_THROW(ProbField(2, {0.5, 0.6}), InvalidArgument);
  EXPECT_THROW(ProbField(2, {1.2, -0.2}), InvalidArgument);
  EXPECT_THROW(ProbField(3, {0.5, 0.5}), InvalidArgument);
  EXPECT_NO_THROW(ProbField(2, {0.5, 0.5 + 5e-7}));
  EXPECT_THROW(ProbField::one_hot(3, std::vector<int>{3}), InvalidArgument);
}

// --- Lovasz ------------------------------------------------------------------

TEST(LovaszSoftmax, Examples) {
  const std::vector<int> y = {0, 1, 1, 2};
  EXPECT_EQ(lovasz_softmax(ProbField::one_hot(3, y), y), 0.0);

  const std::vector<int> one = {0};
  EXPECT_DOUBLE_EQ(lovasz_softmax(ProbField::one_hot(2, std::vector<int>{1}), one), 1.0);

  EXPECT_EQ(lovasz_softmax(ProbField(3, {}), std::vector<int>{}), 0.0);
}

TEST(LovaszSoftmax, OneHotEqualsSetJaccard) {
  Xoshiro256 rng(62);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 1 + static_cast<int>(rng.bounded(20));
    const int c = 1 + static_cast<int>(rng.bounded(4));
    const auto y = random_labels(rng, n, c);
    const auto yhat = random_labels(rng, n, c);
    const ProbField f = ProbField::one_hot(c, yhat);
    const auto per_class = lovasz_class_losses(f, y);
    ASSERT_EQ(static_cast<int>(per_class.size()), c);
    double sum = 0;
    int present = 0;
    for (int k = 0; k < c; ++k) {
      std::size_t inter = 0, uni = 0, gt = 0;
      for (int i = 0; i < n; ++i) {
        inter += y[i] == k && yhat[i] == k;
        uni += y[i] == k || yhat[i] == k;
        gt += y[i] == k;
      }
      if (gt == 0) {
        EXPECT_TRUE(std::isnan(per_class[k]));
        continue;
      }
      const double expected = 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
      EXPECT_NEAR(per_class[k], expected, 1e-9);
      sum += expected;
      ++present;
    }
    EXPECT_NEAR(lovasz_softmax(f, y), sum / present, 1e-9);
  }
}

TEST(LovaszSoftmax, MatchesLevelSetIntegral) {
  Xoshiro256 rng(63);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng.bounded(20));
    const int c = 2 + static_cast<int>(rng.bounded(3));
    const auto y = random_labels(rng, n, c);
    const ProbField f(c, random_simplex(rng, n, c));
    EXPECT_NEAR(lovasz_softmax(f, y), lovasz_oracle(f, y), 1e-12);
    const double v = lovasz_softmax(f, y);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(LovaszSoftmax, PermutationInvariant) {
  Xoshiro256 rng(64);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.bounded(30));
    const int c = 2 + static_cast<int>(rng.bounded(4));
    const auto y = random_labels(rng, n, c);
    const auto p = random_simplex(rng, n, c);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> y2;
    std::vector<double> p2;
    for (int i : perm) {
      y2.push_back(y[i]);
      for (int k = 0; k < c; ++k) p2.push_back(p[i * c + k]);
    }
    EXPECT_NEAR(lovasz_softmax(ProbField(c, p), y), lovasz_softmax(ProbField(c, p2), y2), 1e-12);
  }
}

TEST(LovaszSoftmax, RaisingTrueClassNeverIncreasesLoss) {
  Xoshiro256 rng(65);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng.bounded(10));
    const int c = 2 + static_cast<int>(rng.bounded(3));
    const auto y = random_labels(rng, n, c);
    auto p = random_simplex(rng, n, c);
    const double before = lovasz_softmax(ProbField(c, p), y);
    const int i = static_cast<int>(rng.bounded(n));
    const double old_true = p[i * c + y[i]];
    const double new_true = old_true + (1.0 - old_true) * rng.uniform();
    const double scale = (1.0 - new_true) / (1.0 - old_true);
    for (int k = 0; k < c; ++k) p[i * c + k] = k == y[i] ? new_true : p[i * c + k] * scale;
    EXPECT_LE(lovasz_softmax(ProbField(c, p), y), before + 1e-12);
  }
}

bool errors_distinct(const ProbField& f, const std::vector<int>& y, double gap) {
  for (int c = 0; c < f.num_classes(); ++c) {
    std::vector<double> e;
    for (int i = 0; i < f.num_points(); ++i) {
      const double p = f.prob(i, c);
      e.push_back(y[i] == c ? 1.0 - p : p);
    }
    std::sort(e.begin(), e.end());
    for (std::size_t k = 1; k < e.size(); ++k) {
      if (e[k] - e[k - 1] < gap) return false;
    }
  }
  return true;
}

void expect_relative_near(double numeric, double analytic, double rel) {
  const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-3});
  EXPECT_LE(std::abs(numeric - analytic) / scale, rel) << numeric << " vs " << analytic;
}

TEST(LovaszSoftmax, FiniteDifferenceGradient) {
  Xoshiro256 rng(66);
  const double h = 1e-7;
  int checked = 0;
  while (checked < 100) {
    const int n = 2 + static_cast<int>(rng.bounded(10));
    const int c = 2 + static_cast<int>(rng.bounded(3));
    const auto y = random_labels(rng, n, c);
    const auto p = random_simplex(rng, n, c);
    const ProbField f(c, p);
    if (!errors_distinct(f, y, 1e-4)) continue;
    ++checked;
    const auto grad = lovasz_softmax_grad(f, y);
    ASSERT_EQ(grad.size(), p.size());
    // Perturb one entry at a time; sums stay within the 1e-6 tolerance.
    for (std::size_t k = 0; k < p.size(); ++k) {
      auto up = p, down = p;
      up[k] += h;
      down[k] -= h;
      const double numeric =
          (lovasz_softmax(ProbField(c, up), y) - lovasz_softmax(ProbField(c, down), y)) / (2 * h);
      expect_relative_near(numeric, grad[k], 1e-4);
    }
  }
}

TEST(WeightedCrossEntropy, FiniteDifferenceGradient) {
  Xoshiro256 rng(67);
  const double h = 1e-7;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.bounded(10));
    const int c = 2 + static_cast<int>(rng.bounded(4));
    const auto y = random_labels(rng, n, c);
    const auto p = random_simplex(rng, n, c);
    ClassWeights w;
    for (int k = 0; k < c; ++k) w.w.push_back(0.1 + rng.uniform());
    const auto grad = weighted_cross_entropy_grad(ProbField(c, p), y, w);
    for (std::size_t k = 0; k < p.size(); ++k) {
      auto up = p, down = p;
      up[k] += h;
      down[k] -= h;
      const double numeric = (weighted_cross_entropy(ProbField(c, up), y, w) -
                              weighted_cross_entropy(ProbField(c, down), y, w)) /
                             (2 * h);
      expect_relative_near(numeric, grad[k], 1e-4);
    }
  }
}

// --- KL and hybrid -----------------------------------------------------------

TEST(KlGaussian, Examples) {
  const std::vector<double> zero(8, 0.0);
  EXPECT_EQ(kl_gaussian(zero, zero), 0.0);
  EXPECT_DOUBLE_EQ(kl_gaussian(std::vector<double>{1.0}, std::vector<double>{0.0}), 0.5);
  Xoshiro256 rng(68);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> mu, lv;
    for (int d = 0; d < 16; ++d) {
      mu.push_back(rng.gaussian() * 3);
      lv.push_back(rng.gaussian() * 3);
    }
    const double v = kl_gaussian(mu, lv);
    EXPECT_GE(v, -1e-12);
    double expect = 0;
    for (int d = 0; d < 16; ++d) expect += -0.5 * (1 + lv[d] - mu[d] * mu[d] - std::exp(lv[d]));
    EXPECT_NEAR(v, expect, 1e-9 * std::max(1.0, expect));
  }
  EXPECT_THROW(kl_gaussian(std::vector<double>{1.0}, std::vector<double>{}), InvalidArgument);
}

TEST(HybridLoss, Examples) {
  const std::vector<int> y = {0, 1, 2, 2};
  const ClassWeights w{{1.0, 2.0, 0.5}};
  const std::vector<double> zero(4, 0.0);
  const HybridLoss perfect = hybrid_loss(ProbField::one_hot(3, y), y, w, zero, zero);
  EXPECT_NEAR(perfect.total, 0.0, 1e-11);

  Xoshiro256 rng(69);
  const ProbField f(3, random_simplex(rng, 4, 3));
  const std::vector<double> mu = {0.3, -1.0}, lv = {0.2, -0.4};
  const HybridLoss ce_only = hybrid_loss(f, y, w, mu, lv, {1, 0, 0});
  EXPECT_EQ(ce_only.total, weighted_cross_entropy(f, y, w));

  const LossBetas betas;
  EXPECT_EQ(betas.ce, 1.0);
  EXPECT_EQ(betas.lovasz, 1.0);
  EXPECT_EQ(betas.kl, 0.01);
  const HybridLoss h = hybrid_loss(f, y, w, mu, lv);
  EXPECT_EQ(h.wce, weighted_cross_entropy(f, y, w));
  EXPECT_EQ(h.lovasz, lovasz_softmax(f, y));
  EXPECT_EQ(h.kl, kl_gaussian(mu, lv));
  EXPECT_NEAR(h.total, h.wce + h.lovasz + 0.01 * h.kl, 1e-15);

  EXPECT_THROW(hybrid_loss(f, y, w, mu, lv, {1, -1, 0}), InvalidArgument);
}

TEST(LossBatch, ParseAndEvaluate) {
  const std::string json = R"({
    "num_classes": 3,
    "probs": [[0.7, 0.2, 0.1], [0.1, 0.8, 0.1], [0.3, 0.3, 0.4]],
    "truth": [0, 1, 2],
    "class_counts": [90, 10, 50],
    "mu": [0.5, -0.5],
    "logvar": [0.1, 0.0],
    "betas": [1, 1, 0.01]
  })";
  const LossBatch batch = parse_loss_batch(json);
  EXPECT_EQ(batch.field.num_points(), 3);
  ASSERT_EQ(batch.weights.w.size(), 3u);
  EXPECT_NEAR(batch.weights.w[2], 1.0, 1e-12);
  const HybridLoss h = hybrid_loss(batch.field, batch.truth, batch.weights, batch.mu, batch.logvar,
                                   batch.betas);
  const double w0 = 50.0 / 90.0, w1 = 5.0, w2 = 1.0;
  const double wce = -(w0 * std::log(0.7) + w1 * std::log(0.8) + w2 * std::log(0.4)) / (w0 + w1 + w2);
  EXPECT_NEAR(h.wce, wce, 1e-12);
  EXPECT_NEAR(h.kl, -0.5 * ((1 + 0.1 - 0.25 - std::exp(0.1)) + (1 + 0 - 0.25 - 1)), 1e-12);

  const std::string out = hybrid_loss_to_json(h);
  EXPECT_EQ(out.rfind("{\"wce\":", 0), 0u);
  EXPECT_NE(out.find("\"total\":"), std::string::npos);

  EXPECT_THROW(parse_loss_batch("{\"num_classes\": 2}"), ParseError);
  EXPECT_THROW(parse_loss_batch("{\"num_classes\": 2, \"probs\": [[1,0,0]], \"truth\": [0], \"weights\": [1,1]}"),
               InvalidArgument);
  EXPECT_THROW(parse_loss_batch("not json"), ParseError);
}

}  // namespace
}  // namespace semlabel
