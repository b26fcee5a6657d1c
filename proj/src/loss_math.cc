#include "semlabel/loss_math.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "semlabel/error.h"

namespace semlabel {

ClassWeights median_frequency_weights(std::span<const std::uint64_t> counts) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0,
                                       [](double acc, std::uint64_t v) { return acc + static_cast<double>(v); });
  if (!(total > 0.0)) throw InvalidArgument("median frequency weights: all counts are zero");
  std::vector<double> freq(counts.size());
  std::vector<double> nonzero;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    freq[c] = static_cast<double>(counts[c]) / total;
    if (counts[c] > 0) nonzero.push_back(freq[c]);
  }
  std::sort(nonzero.begin(), nonzero.end());
  const std::size_t n = nonzero.size();
  const double median = n % 2 == 1 ? nonzero[n / 2] : 0.5 * (nonzero[n / 2 - 1] + nonzero[n / 2]);
  ClassWeights out;
  out.w.resize(counts.size(), 0.0);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] > 0) out.w[c] = median / freq[c];
  }
  return out;
}

ProbField::ProbField(int num_classes, std::vector<double> probs)
    : num_classes_(num_classes), probs_(std::move(probs)) {
  if (num_classes_ < 1) throw InvalidArgument("probability field needs at least one class");
  if (probs_.size() % static_cast<std::size_t>(num_classes_) != 0) {
    throw InvalidArgument("probability field size is not a multiple of the class count");
  }
  num_points_ = static_cast<int>(probs_.size() / static_cast<std::size_t>(num_classes_));
  for (int i = 0; i < num_points_; ++i) {
    double sum = 0.0;
    for (int c = 0; c < num_classes_; ++c) {
      const double p = prob(i, c);
      if (!(p >= 0.0 && p <= 1.0)) {
        throw InvalidArgument("probability outside [0, 1] at point " + std::to_string(i));
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw InvalidArgument("probabilities of point " + std::to_string(i) + " do not sum to 1");
    }
  }
}

ProbField ProbField::one_hot(int num_classes, std::span<const int> labels) {
  std::vector<double> probs(labels.size() * static_cast<std::size_t>(num_classes), 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) throw InvalidArgument("label out of range");
    probs[i * num_classes + labels[i]] = 1.0;
  }
  return ProbField(num_classes, std::move(probs));
}

namespace {

void check_truth(const ProbField& field, std::span<const int> truth) {
  if (static_cast<int>(truth.size()) != field.num_points()) {
    throw InvalidArgument("truth has " + std::to_string(truth.size()) + " labels, field has " +
                          std::to_string(field.num_points()) + " points");
  }
  for (int y : truth) {
    if (y < 0 || y >= field.num_classes()) throw InvalidArgument("truth label out of range");
  }
}

double weight_total(const ProbField& field, std::span<const int> truth, const ClassWeights& weights) {
  check_truth(field, truth);
  if (static_cast<int>(weights.w.size()) != field.num_classes()) {
    throw InvalidArgument("class weight count does not match the field");
  }
  double total = 0.0;
  for (int y : truth) total += weights.w[y];
  if (!(total > 0.0)) throw InvalidArgument("weighted cross entropy: total weight is zero");
  return total;
}

}  // namespace

double weighted_cross_entropy(const ProbField& field, std::span<const int> truth,
                              const ClassWeights& weights) {
  const double total = weight_total(field, truth, weights);
  double sum = 0.0;
  for (int i = 0; i < field.num_points(); ++i) {
    const int y = truth[i];
    sum -= weights.w[y] * std::log(std::max(field.prob(i, y), kLogEpsilon));
  }
  return sum / total;
}

std::vector<double> weighted_cross_entropy_grad(const ProbField& field,
                                                std::span<const int> truth,
                                                const ClassWeights& weights) {
  const double total = weight_total(field, truth, weights);
  std::vector<double> grad(field.data().size(), 0.0);
  for (int i = 0; i < field.num_points(); ++i) {
    const int y = truth[i];
    const double p = field.prob(i, y);
    if (p > kLogEpsilon) grad[i * field.num_classes() + y] = -weights.w[y] / (p * total);
  }
  return grad;
}

namespace {

struct ClassOrder {
  std::vector<int> order;      // point indices sorted by descending error
  std::vector<double> lovasz;  // Lovasz-Jaccard gradient per sorted position
};

// Returns false when class c has no ground-truth points.
bool lovasz_order(const ProbField& field, std::span<const int> truth, int c, ClassOrder& out,
                  std::vector<double>& errors) {
  const int n = field.num_points();
  int gts = 0;
  errors.resize(n);
  for (int i = 0; i < n; ++i) {
    const bool fg = truth[i] == c;
    gts += fg;
    errors[i] = fg ? 1.0 - field.prob(i, c) : field.prob(i, c);
  }
  if (gts == 0) return false;
  out.order.resize(n);
  std::iota(out.order.begin(), out.order.end(), 0);
  std::stable_sort(out.order.begin(), out.order.end(),
                   [&](int a, int b) { return errors[a] > errors[b]; });
  out.lovasz.resize(n);
  double cum_fg = 0.0, cum_bg = 0.0, prev = 0.0;
  for (int k = 0; k < n; ++k) {
    const bool fg = truth[out.order[k]] == c;
    cum_fg += fg;
    cum_bg += !fg;
    const double inter = gts - cum_fg;
    const double uni = gts + cum_bg;
    const double jac = 1.0 - inter / uni;
    out.lovasz[k] = jac - prev;
    prev = jac;
  }
  return true;
}

}  // namespace

std::vector<double> lovasz_class_losses(const ProbField& field, std::span<const int> truth) {
  check_truth(field, truth);
  std::vector<double> out(field.num_classes(), std::numeric_limits<double>::quiet_NaN());
  ClassOrder ord;
  std::vector<double> errors;
  for (int c = 0; c < field.num_classes(); ++c) {
    if (!lovasz_order(field, truth, c, ord, errors)) continue;
    double loss = 0.0;
    for (int k = 0; k < field.num_points(); ++k) loss += errors[ord.order[k]] * ord.lovasz[k];
    out[c] = loss;
  }
  return out;
}

double lovasz_softmax(const ProbField& field, std::span<const int> truth) {
  const std::vector<double> per_class = lovasz_class_losses(field, truth);
  double sum = 0.0;
  int present = 0;
  for (double v : per_class) {
    if (std::isnan(v)) continue;
    sum += v;
    ++present;
  }
  return present > 0 ? sum / present : 0.0;
}

std::vector<double> lovasz_softmax_grad(const ProbField& field, std::span<const int> truth) {
  check_truth(field, truth);
  std::vector<double> grad(field.data().size(), 0.0);
  ClassOrder ord;
  std::vector<double> errors;
  std::vector<std::pair<int, ClassOrder>> present;
  for (int c = 0; c < field.num_classes(); ++c) {
    if (lovasz_order(field, truth, c, ord, errors)) present.emplace_back(c, ord);
  }
  if (present.empty()) return grad;
  const double scale = 1.0 / static_cast<double>(present.size());
  for (const auto& [c, o] : present) {
    for (int k = 0; k < field.num_points(); ++k) {
      const int i = o.order[k];
      const double de_dp = truth[i] == c ? -1.0 : 1.0;
      grad[i * field.num_classes() + c] += scale * de_dp * o.lovasz[k];
    }
  }
  return grad;
}

double kl_gaussian(std::span<const double> mu, std::span<const double> logvar) {
  if (mu.size() != logvar.size()) throw InvalidArgument("KL: mu and logvar differ in length");
  double sum = 0.0;
  for (std::size_t d = 0; d < mu.size(); ++d) {
    sum += 1.0 + logvar[d] - mu[d] * mu[d] - std::exp(logvar[d]);
  }
  return -0.5 * sum;
}

HybridLoss hybrid_loss(const ProbField& field, std::span<const int> truth,
                       const ClassWeights& weights, std::span<const double> mu,
                       std::span<const double> logvar, const LossBetas& betas) {
  if (betas.ce < 0.0 || betas.lovasz < 0.0 || betas.kl < 0.0) {
    throw InvalidArgument("loss betas must be non-negative");
  }
  HybridLoss out;
  out.wce = weighted_cross_entropy(field, truth, weights);
  out.lovasz = lovasz_softmax(field, truth);
  out.kl = kl_gaussian(mu, logvar);
  out.total = betas.ce * out.wce + betas.lovasz * out.lovasz + betas.kl * out.kl;
  return out;
}

LossBatch parse_loss_batch(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("loss batch: ") + e.what(), e.byte);
  }
  try {
    LossBatch batch;
    const int classes = j.at("num_classes").get<int>();
    std::vector<double> probs;
    for (const auto& row : j.at("probs")) {
      if (static_cast<int>(row.size()) != classes) {
        throw InvalidArgument("loss batch: probability row length differs from num_classes");
      }
      for (const auto& v : row) probs.push_back(v.get<double>());
    }
    batch.field = ProbField(classes, std::move(probs));
    batch.truth = j.at("truth").get<std::vector<int>>();
    if (j.contains("weights")) {
      batch.weights.w = j["weights"].get<std::vector<double>>();
    } else {
      batch.weights = median_frequency_weights(j.at("class_counts").get<std::vector<std::uint64_t>>());
    }
    batch.mu = j.value("mu", std::vector<double>{});
    batch.logvar = j.value("logvar", std::vector<double>{});
    if (j.contains("betas")) {
      const auto b = j["betas"].get<std::vector<double>>();
      if (b.size() != 3) throw InvalidArgument("loss batch: betas needs 3 values");
      batch.betas = {b[0], b[1], b[2]};
    }
    return batch;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("loss batch: ") + e.what(), 0);
  }
}

std::string hybrid_loss_to_json(const HybridLoss& loss) {
  nlohmann::ordered_json j;
  j["wce"] = loss.wce;
  j["lovasz"] = loss.lovasz;
  j["kl"] = loss.kl;
  j["total"] = loss.total;
  return j.dump() + "\n";
}

}  // namespace semlabel
