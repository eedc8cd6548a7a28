#include "evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace fslstm {

namespace {

void require_equal_lengths(std::size_t a, std::size_t b, const char* op) {
  if (a != b) {
    std::ostringstream os;
    os << op << ": " << a << " labels vs " << b << " scores";
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

ConfusionCounts confusion(std::span<const double> y, std::span<const double> scores,
                          double threshold) {
  require_equal_lengths(y.size(), scores.size(), "confusion");
  ConfusionCounts c;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const bool positive = scores[i] >= threshold;
    const bool truth = y[i] != 0.0;
    if (truth && positive) ++c.tp;
    else if (!truth && positive) ++c.fp;
    else if (truth && !positive) ++c.fn;
    else ++c.tn;
  }
  return c;
}

Prf precision_recall_f1(const ConfusionCounts& c) {
  Prf out;
  const double tp = static_cast<double>(c.tp);
  out.precision = (c.tp + c.fp) == 0 ? 0.0 : tp / static_cast<double>(c.tp + c.fp);
  out.recall = (c.tp + c.fn) == 0 ? 0.0 : tp / static_cast<double>(c.tp + c.fn);
  out.f1 = (out.precision + out.recall) == 0.0
               ? 0.0
               : 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

double balanced_accuracy(const ConfusionCounts& c) {
  if (c.tp + c.fn == 0)
    throw std::invalid_argument("balanced_accuracy: no positive samples");
  if (c.tn + c.fp == 0)
    throw std::invalid_argument("balanced_accuracy: no negative samples");
  const double tpr = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  const double tnr = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
  return (tpr + tnr) / 2.0;
}

std::pair<RocCurve, double> roc_auc(std::span<const double> y,
                                    std::span<const double> scores) {
  require_equal_lengths(y.size(), scores.size(), "roc_auc");
  std::size_t pos = 0, neg = 0;
  for (double label : y) (label != 0.0 ? pos : neg) += 1;
  if (pos == 0 || neg == 0)
    throw std::invalid_argument("roc_auc: both classes must be present");

  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});

  double auc = 0.0;
  std::size_t tp = 0, fp = 0;
  double prev_fpr = 0.0, prev_tpr = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double thr = scores[order[i]];
    // consume the whole tie group at this threshold
    while (i < order.size() && scores[order[i]] == thr) {
      if (y[order[i]] != 0.0) ++tp;
      else ++fp;
      ++i;
    }
    const double fpr = static_cast<double>(fp) / static_cast<double>(neg);
    const double tpr = static_cast<double>(tp) / static_cast<double>(pos);
    auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
    curve.points.push_back({fpr, tpr, thr});
    prev_fpr = fpr;
    prev_tpr = tpr;
  }
  return {std::move(curve), auc};
}

double mae(std::span<const double> y, std::span<const double> y_hat) {
  require_equal_lengths(y.size(), y_hat.size(), "mae");
  if (y.empty()) throw std::invalid_argument("mae: empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += std::fabs(y[i] - y_hat[i]);
  return total / static_cast<double>(y.size());
}

}  // namespace fslstm
