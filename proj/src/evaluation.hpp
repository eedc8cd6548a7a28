#pragma once

#include <span>
#include <utility>
#include <vector>

namespace fslstm {

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

// Predict positive iff score >= threshold. Labels must be 0/1.
ConfusionCounts confusion(std::span<const double> y, std::span<const double> scores,
                          double threshold);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// 0/0 denominators yield 0 by convention.
Prf precision_recall_f1(const ConfusionCounts& c);

// (TPR + TNR) / 2; throws if either class is absent.
double balanced_accuracy(const ConfusionCounts& c);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // threshold-descending, (0,0) .. (1,1)
};

// Threshold sweep over unique scores, ties grouped into one step; AUC is the
// trapezoidal area, which with this tie handling equals the Mann-Whitney
// statistic P(s+ > s-) + P(s+ = s-)/2.
std::pair<RocCurve, double> roc_auc(std::span<const double> y,
                                    std::span<const double> scores);

double mae(std::span<const double> y, std::span<const double> y_hat);

}  // namespace fslstm
