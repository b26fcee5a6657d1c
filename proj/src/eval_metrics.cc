#include "semlabel/eval_metrics.h"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "semlabel/error.h"

namespace semlabel {

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  for (int t = 0; t < kNumClasses; ++t) {
    for (int p = 0; p < kNumClasses; ++p) counts_[t][p] += other.counts_[t][p];
  }
  return *this;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t sum = 0;
  for (const auto& row : counts_) {
    for (auto v : row) sum += v;
  }
  return sum;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t sum = 0;
  for (int c = 0; c < kNumClasses; ++c) sum += counts_[c][c];
  return sum;
}

std::uint64_t ConfusionMatrix::tp(ClassLabel c) const {
  return counts_[class_index(c)][class_index(c)];
}

std::uint64_t ConfusionMatrix::fp(ClassLabel c) const {
  std::uint64_t col = 0;
  for (int t = 0; t < kNumClasses; ++t) col += counts_[t][class_index(c)];
  return col - tp(c);
}

std::uint64_t ConfusionMatrix::fn(ClassLabel c) const {
  std::uint64_t row = 0;
  for (int p = 0; p < kNumClasses; ++p) row += counts_[class_index(c)][p];
  return row - tp(c);
}

std::uint64_t ConfusionMatrix::tn(ClassLabel c) const {
  return total() - tp(c) - fp(c) - fn(c);
}

ConfusionMatrix confusion_matrix(std::span<const ClassLabel> pred,
                                 std::span<const ClassLabel> truth) {
  if (pred.size() != truth.size()) {
    throw InvalidArgument("prediction has " + std::to_string(pred.size()) +
                          " labels, truth has " + std::to_string(truth.size()));
  }
  ConfusionMatrix cm;
  for (std::size_t k = 0; k < pred.size(); ++k) cm.add(truth[k], pred[k]);
  return cm;
}

double class_accuracy(const ConfusionMatrix& cm, ClassLabel c) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw InvalidArgument("class accuracy of an empty confusion matrix");
  return static_cast<double>(cm.tp(c) + cm.tn(c)) / static_cast<double>(total);
}

std::optional<double> iou(const ConfusionMatrix& cm, ClassLabel c) {
  const std::uint64_t denom = cm.tp(c) + cm.fp(c) + cm.fn(c);
  if (denom == 0) return std::nullopt;
  return static_cast<double>(cm.tp(c)) / static_cast<double>(denom);
}

ClassMask mask_without_other(ClassMask mask) {
  mask.reset(class_index(ClassLabel::kOther));
  return mask;
}

MeanMetrics mean_metrics(const ConfusionMatrix& cm, ClassMask mask) {
  if (cm.total() == 0) throw InvalidArgument("mean metrics of an empty confusion matrix");
  if (mask.none()) throw InvalidArgument("mean metrics: empty class mask");
  MeanMetrics out;
  double ca_sum = 0.0, iou_sum = 0.0;
  int iou_n = 0;
  for (ClassLabel c : kAllClasses) {
    if (!mask.test(class_index(c))) continue;
    ClassMetrics m{c, class_accuracy(cm, c), iou(cm, c)};
    ca_sum += m.ca;
    if (m.iou) {
      iou_sum += *m.iou;
      ++iou_n;
    } else {
      out.undefined_iou.push_back(c);
    }
    out.per_class.push_back(m);
  }
  if (iou_n == 0) throw InvalidArgument("mean metrics: every class in the mask is undefined");
  out.mca = ca_sum / static_cast<double>(out.per_class.size());
  out.miou = iou_sum / iou_n;
  return out;
}

ClassLabel merge_linear(ClassLabel c) {
  return (c == ClassLabel::kDoor || c == ClassLabel::kElevator) ? ClassLabel::kWall : c;
}

ClassFrequencies class_frequencies(std::span<const std::vector<ClassLabel>> scans) {
  ClassFrequencies out;
  for (const auto& labels : scans) {
    for (ClassLabel c : labels) ++out.counts[class_index(c)];
  }
  for (auto v : out.counts) out.total += v;
  if (out.total == 0) throw InvalidArgument("class frequencies of an empty label stream");
  for (int c = 0; c < kNumClasses; ++c) {
    out.percent[c] = 100.0 * static_cast<double>(out.counts[c]) / static_cast<double>(out.total);
  }
  return out;
}

namespace {

class StatAccumulator {
 public:
  void add(double v) {
    sum_ += v;
    values_.push_back(v);
  }
  MetricStat finish() const {
    MetricStat s;
    s.n = static_cast<int>(values_.size());
    if (s.n == 0) return s;
    s.mean = sum_ / s.n;
    double var = 0.0;
    for (double v : values_) var += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(var / s.n);
    return s;
  }

 private:
  double sum_ = 0.0;
  std::vector<double> values_;
};

}  // namespace

EvalSummary summarize_samples(std::span<const ConfusionMatrix> samples, ClassMask mask,
                              bool merged_linear) {
  if (samples.empty()) throw InvalidArgument("no prediction samples to evaluate");
  EvalSummary out;
  out.n_samples = static_cast<int>(samples.size());
  out.merged_linear = merged_linear;
  StatAccumulator mca, miou, mca_no, miou_no;
  std::array<StatAccumulator, kNumClasses> ca, io;
  const ClassMask no_other = mask_without_other(mask);
  for (const ConfusionMatrix& cm : samples) {
    const MeanMetrics m = mean_metrics(cm, mask);
    mca.add(m.mca);
    miou.add(m.miou);
    for (const ClassMetrics& cls : m.per_class) {
      ca[class_index(cls.cls)].add(cls.ca);
      if (cls.iou) io[class_index(cls.cls)].add(*cls.iou);
    }
    if (no_other.any()) {
      try {
        const MeanMetrics n = mean_metrics(cm, no_other);
        mca_no.add(n.mca);
        miou_no.add(n.miou);
      } catch (const InvalidArgument&) {
        // No defined class once Other is removed; leave the statistic empty.
      }
    }
  }
  out.mca = mca.finish();
  out.miou = miou.finish();
  out.mca_no_other = mca_no.finish();
  out.miou_no_other = miou_no.finish();
  for (ClassLabel c : kAllClasses) {
    if (!mask.test(class_index(c))) continue;
    out.per_class.push_back({c, ca[class_index(c)].finish(), io[class_index(c)].finish()});
  }
  return out;
}

namespace {

std::string column_name(ClassLabel c, bool merged) {
  if (merged && c == ClassLabel::kWall) return "Wall+Door+Elevator";
  return std::string(class_name(c));
}

std::string cell(const MetricStat& s, int n_samples) {
  if (s.n == 0) return "-";
  char buf[64];
  if (n_samples > 1) {
    std::snprintf(buf, sizeof buf, "%.2f+-%.2f", 100.0 * s.mean, 100.0 * s.std);
  } else {
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * s.mean);
  }
  return buf;
}

}  // namespace

std::string format_eval_table(const EvalSummary& summary, const std::string& method) {
  std::vector<std::string> header = {"Method", "Metric", "All Classes", "All w/o Other"};
  for (const ClassSummary& c : summary.per_class) header.push_back(column_name(c.cls, summary.merged_linear));
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> ca = {method, "CA", cell(summary.mca, summary.n_samples),
                                 cell(summary.mca_no_other, summary.n_samples)};
  std::vector<std::string> io = {"", "IoU", cell(summary.miou, summary.n_samples),
                                 cell(summary.miou_no_other, summary.n_samples)};
  for (const ClassSummary& c : summary.per_class) {
    ca.push_back(cell(c.ca, summary.n_samples));
    io.push_back(cell(c.iou, summary.n_samples));
  }
  rows = {header, ca, io};
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) width[k] = std::max(width[k], row[k].size());
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t k = 0; k < rows[r].size(); ++k) {
      out << (k ? " | " : "") << rows[r][k] << std::string(width[k] - rows[r][k].size(), ' ');
    }
    out << '\n';
    if (r == 0) {
      for (std::size_t k = 0; k < width.size(); ++k) out << (k ? "-+-" : "") << std::string(width[k], '-');
      out << '\n';
    }
  }
  out << "samples: " << summary.n_samples << '\n';
  return out.str();
}

std::string format_eval_csv(const EvalSummary& summary, const std::string& method) {
  std::ostringstream out;
  out.precision(17);
  out << "method,metric,class,mean,std,n\n";
  auto row = [&](const char* metric, const std::string& cls, const MetricStat& s) {
    out << method << ',' << metric << ',' << cls << ',';
    if (s.n > 0) {
      out << 100.0 * s.mean << ',' << 100.0 * s.std;
    } else {
      out << ',';
    }
    out << ',' << s.n << '\n';
  };
  row("CA", "All", summary.mca);
  row("IoU", "All", summary.miou);
  row("CA", "AllNoOther", summary.mca_no_other);
  row("IoU", "AllNoOther", summary.miou_no_other);
  for (const ClassSummary& c : summary.per_class) {
    row("CA", column_name(c.cls, summary.merged_linear), c.ca);
    row("IoU", column_name(c.cls, summary.merged_linear), c.iou);
  }
  return out.str();
}

}  // namespace semlabel
