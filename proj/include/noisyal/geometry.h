#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace noisyal {

using ImageId = std::int64_t;
using LabelId = std::int64_t;
// Class ids are 1-based: {1, ..., K}.
using ClassId = int;

// Axis-aligned box in pixels, stored as (left, top, width, height).
// Construction rejects degenerate or non-finite boxes, so every BBox has a
// strictly positive area.
class BBox {
 public:
  BBox(double x, double y, double w, double h);

  double x() const { return x_; }
  double y() const { return y_; }
  double w() const { return w_; }
  double h() const { return h_; }
  double right() const { return x_ + w_; }
  double bottom() const { return y_ + h_; }
  double area() const { return w_ * h_; }

  friend bool operator==(const BBox&, const BBox&) = default;

 private:
  double x_;
  double y_;
  double w_;
  double h_;
};

double iou(const BBox& a, const BBox& b);

// One detector output: box, objectness score and a class-probability vector
// over the K classes (probs[c - 1] is the probability of class c).
struct Prediction {
  BBox box;
  double objectness = 0.0;
  std::vector<double> probs;

  // Most probable class, ties broken towards the lowest class id.
  ClassId argmax_class() const;
};

// Keeps predictions with objectness >= s_eps, in input order.
std::vector<Prediction> score_filter(std::span<const Prediction> preds,
                                     double s_eps);

// Greedy per-class NMS. Candidates are visited in descending objectness
// (ties: ascending input index); a candidate survives iff its IoU with every
// survivor of the same argmax class is below iou_thr. The result is ordered
// by descending objectness.
std::vector<Prediction> nms(std::span<const Prediction> preds, double iou_thr);

// Localization-only matching: the id of the label with maximal IoU to `box`
// if that IoU reaches iou_thr. Ties go to the smallest label id. `labels` is
// any range of records exposing `.id` and `.box`; callers pass only labels
// that are present.
template <typename Labels>
std::optional<LabelId> match_class_agnostic(const BBox& box,
                                            const Labels& labels,
                                            double iou_thr) {
  std::optional<LabelId> best;
  double best_iou = -1.0;
  for (const auto& label : labels) {
    const double overlap = iou(box, label.box);
    if (overlap > best_iou || (overlap == best_iou && best && label.id < *best)) {
      best_iou = overlap;
      best = label.id;
    }
  }
  if (best && best_iou >= iou_thr) return best;
  return std::nullopt;
}

}  // namespace noisyal
