#include "pccd/metrics.hpp"

#include <cstdio>
#include <stdexcept>

namespace pccd {

ConfusionMatrix confusion(const std::vector<ChangeLabel>& pred,
                          const std::vector<ChangeLabel>& truth) {
  if (pred.size() != truth.size()) {
    throw std::invalid_argument("confusion: prediction has " + std::to_string(pred.size()) +
                                " points but ground truth has " + std::to_string(truth.size()));
  }
  ConfusionMatrix m;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (truth[i] == kChanged) {
      (pred[i] == kChanged ? m.tp : m.fn) += 1;
    } else {
      (pred[i] == kChanged ? m.fp : m.tn) += 1;
    }
  }
  return m;
}

Scores scores(const ConfusionMatrix& m) {
  if (m.tp + m.fn == 0 || m.tn + m.fp == 0) {
    throw std::invalid_argument("scores: ground truth must contain both classes");
  }
  Scores s;
  const double recall_changed = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  const double recall_unchanged = static_cast<double>(m.tn) / static_cast<double>(m.tn + m.fp);
  s.macc = 100.0 * (recall_changed + recall_unchanged) / 2.0;
  s.iou_changed = 100.0 * static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp + m.fn);
  s.iou_unchanged = 100.0 * static_cast<double>(m.tn) / static_cast<double>(m.tn + m.fp + m.fn);
  s.miou = (s.iou_changed + s.iou_unchanged) / 2.0;
  return s;
}

std::string render_scores_table(const ConfusionMatrix& m, const Scores& s) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "            TP %10lld    FP %10lld\n"
                "            FN %10lld    TN %10lld\n"
                "  mAcc           %10.4f %%\n"
                "  mIoU           %10.4f %%\n"
                "  IoU unchanged  %10.4f %%\n"
                "  IoU changed    %10.4f %%\n",
                static_cast<long long>(m.tp), static_cast<long long>(m.fp),
                static_cast<long long>(m.fn), static_cast<long long>(m.tn), s.macc, s.miou,
                s.iou_unchanged, s.iou_changed);
  return buf;
}

std::string scores_csv_line(const Scores& s) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%.4f,%.4f,%.4f,%.4f", s.macc, s.miou, s.iou_unchanged,
                s.iou_changed);
  return buf;
}

}  // namespace pccd
