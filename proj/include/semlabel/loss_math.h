#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace semlabel {

// Reference implementations of the segmentation training loss. These do not
// train anything; they pin down the numbers a trainer must reproduce.

struct ClassWeights {
  std::vector<double> w;
};

// w_c = median(f over classes with f > 0) / f_c with f_c = count_c / total;
// zero-frequency classes get weight 0. Throws InvalidArgument when every
// count is zero.
ClassWeights median_frequency_weights(std::span<const std::uint64_t> counts);

// Per-point class probabilities, point-major: prob(i, c) = probs[i * C + c].
// Every point's probabilities lie in [0, 1] and sum to 1 within 1e-6.
class ProbField {
 public:
  ProbField(int num_classes, std::vector<double> probs);

  int num_classes() const { return num_classes_; }
  int num_points() const { return num_points_; }
  double prob(int point, int cls) const { return probs_[point * num_classes_ + cls]; }
  const std::vector<double>& data() const { return probs_; }

  // Probabilities of a hard labelling (1 on the label, 0 elsewhere).
  static ProbField one_hot(int num_classes, std::span<const int> labels);

 private:
  int num_classes_;
  int num_points_;
  std::vector<double> probs_;
};

inline constexpr double kLogEpsilon = 1e-12;

// -sum_i w_{y_i} log(max(p_{i,y_i}, eps)) / sum_i w_{y_i}.
double weighted_cross_entropy(const ProbField& field, std::span<const int> truth,
                              const ClassWeights& weights);
// d/dp of the above, same layout as ProbField::data().
std::vector<double> weighted_cross_entropy_grad(const ProbField& field,
                                                std::span<const int> truth,
                                                const ClassWeights& weights);

// Lovasz-Softmax averaged over classes present in the ground truth; 0 when
// there are no points.
double lovasz_softmax(const ProbField& field, std::span<const int> truth);
// Per-class Lovasz extension values; entries for absent classes are unset
// (NaN).
std::vector<double> lovasz_class_losses(const ProbField& field, std::span<const int> truth);
// Subgradient w.r.t. probabilities (exact where the error sort has no ties).
std::vector<double> lovasz_softmax_grad(const ProbField& field, std::span<const int> truth);

// KL(N(mu, exp(logvar)) || N(0, 1)) summed over dimensions.
double kl_gaussian(std::span<const double> mu, std::span<const double> logvar);

struct LossBetas {
  double ce = 1.0;
  double lovasz = 1.0;
  double kl = 0.01;
};

struct HybridLoss {
  double wce = 0.0;
  double lovasz = 0.0;
  double kl = 0.0;
  double total = 0.0;
};

HybridLoss hybrid_loss(const ProbField& field, std::span<const int> truth,
                       const ClassWeights& weights, std::span<const double> mu,
                       std::span<const double> logvar, const LossBetas& betas = {});

// Exchange format for cross-checking trainer losses, see docs/formats.md.
struct LossBatch {
  ProbField field{1, {}};
  std::vector<int> truth;
  ClassWeights weights;
  std::vector<double> mu;
  std::vector<double> logvar;
  LossBetas betas;
};

LossBatch parse_loss_batch(std::string_view json_text);
std::string hybrid_loss_to_json(const HybridLoss& loss);

}  // namespace semlabel
