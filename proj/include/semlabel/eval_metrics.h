#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semlabel/scan_model.h"

namespace semlabel {

// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  void add(ClassLabel truth, ClassLabel pred, std::uint64_t n = 1) {
    counts_[class_index(truth)][class_index(pred)] += n;
  }
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  std::uint64_t at(ClassLabel truth, ClassLabel pred) const {
    return counts_[class_index(truth)][class_index(pred)];
  }
  std::uint64_t total() const;
  std::uint64_t trace() const;

  std::uint64_t tp(ClassLabel c) const;
  std::uint64_t fp(ClassLabel c) const;
  std::uint64_t fn(ClassLabel c) const;
  std::uint64_t tn(ClassLabel c) const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts_{};
};

// Throws InvalidArgument on length mismatch.
ConfusionMatrix confusion_matrix(std::span<const ClassLabel> pred,
                                 std::span<const ClassLabel> truth);

// (TP + TN) / total. Throws InvalidArgument for an empty matrix.
double class_accuracy(const ConfusionMatrix& cm, ClassLabel c);

// TP / (TP + FP + FN); nullopt when the denominator is zero.
std::optional<double> iou(const ConfusionMatrix& cm, ClassLabel c);

using ClassMask = std::bitset<kNumClasses>;

inline ClassMask all_classes_mask() { return ClassMask().set(); }
ClassMask mask_without_other(ClassMask mask = all_classes_mask());

struct ClassMetrics {
  ClassLabel cls = ClassLabel::kOther;
  double ca = 0.0;
  std::optional<double> iou;
};

struct MeanMetrics {
  double mca = 0.0;
  double miou = 0.0;
  std::vector<ClassMetrics> per_class;      // classes in the mask, ascending id
  std::vector<ClassLabel> undefined_iou;    // excluded from miou
};

// Means over the classes in `mask`. Throws InvalidArgument if the matrix is
// empty or no masked class has a defined IoU.
MeanMetrics mean_metrics(const ConfusionMatrix& cm, ClassMask mask = all_classes_mask());

// Door and Elevator folded into Wall, the single class a line detector can
// report.
ClassLabel merge_linear(ClassLabel c);
constexpr ClassMask linear_classes_mask() {
  return ClassMask((1u << class_index(ClassLabel::kWall)));
}

struct ClassFrequencies {
  std::array<std::uint64_t, kNumClasses> counts{};
  std::array<double, kNumClasses> percent{};
  std::uint64_t total = 0;
};

// Throws InvalidArgument when there are no labels at all.
ClassFrequencies class_frequencies(std::span<const std::vector<ClassLabel>> scans);

// Mean and population standard deviation of per-sample metrics. A class's
// IoU statistics cover only samples in which it is defined.
struct MetricStat {
  double mean = 0.0;
  double std = 0.0;
  int n = 0;  // samples contributing
};

struct ClassSummary {
  ClassLabel cls = ClassLabel::kOther;
  MetricStat ca;
  MetricStat iou;
};

struct EvalSummary {
  int n_samples = 0;
  bool merged_linear = false;
  MetricStat mca;             // over the mask
  MetricStat miou;
  MetricStat mca_no_other;    // mask minus Other
  MetricStat miou_no_other;
  std::vector<ClassSummary> per_class;
};

// One confusion matrix per prediction sample (S = 1 for deterministic
// predictors).
EvalSummary summarize_samples(std::span<const ConfusionMatrix> samples, ClassMask mask,
                              bool merged_linear);

// Percent-valued table in the layout CA/IoU x (All, All w/o Other, classes).
std::string format_eval_table(const EvalSummary& summary, const std::string& method);
std::string format_eval_csv(const EvalSummary& summary, const std::string& method);

}  // namespace semlabel
