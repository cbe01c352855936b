#ifndef PCCD_METRICS_HPP
#define PCCD_METRICS_HPP

#include "pccd/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pccd {

/// Binary change-detection counts; changed is the positive class.
struct ConfusionMatrix {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;

  std::int64_t total() const { return tp + fp + fn + tn; }
};

/// Throws std::invalid_argument on length mismatch, naming both counts.
ConfusionMatrix confusion(const std::vector<ChangeLabel>& pred,
                          const std::vector<ChangeLabel>& truth);

/// All values are percentages. mAcc is macro-averaged recall; IoU_changed =
/// TP/(TP+FP+FN), IoU_unchanged = TN/(TN+FP+FN), mIoU their mean.
struct Scores {
  double macc = 0.0;
  double iou_unchanged = 0.0;
  double iou_changed = 0.0;
  double miou = 0.0;
};

/// Throws std::invalid_argument when a class is absent from the ground truth.
Scores scores(const ConfusionMatrix& m);

/// Aligned human-readable table.
std::string render_scores_table(const ConfusionMatrix& m, const Scores& s);

/// Machine-readable line: `mAcc,mIoU,IoU_unchanged,IoU_changed`.
std::string scores_csv_line(const Scores& s);

}  // namespace pccd

#endif  // PCCD_METRICS_HPP
