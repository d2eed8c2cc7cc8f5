#pragma once

#include <optional>
#include <span>
#include <vector>

#include "noisyal/dataset.h"
#include "noisyal/detector.h"
#include "noisyal/geometry.h"
#include "noisyal/review.h"

namespace noisyal {

struct GroundTruthBox {
  BBox box;
  ClassId cls = 1;
};

struct EvalImage {
  ImageId id = 0;
  std::vector<Prediction> predictions;
  std::vector<GroundTruthBox> truth;
};

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct ClassAP {
  ClassId cls = 1;
  int num_gt = 0;
  std::optional<double> ap;  // undefined when the class has no ground truth
  std::vector<PrPoint> curve;
};

struct APResult {
  std::vector<ClassAP> per_class;
  double map = 0.0;
};

// Pairs the clean test labels with predictions (images without an entry get
// none). Images keep ascending id order.
std::vector<EvalImage> make_eval_images(std::span<const ImageRecord> test,
                                        const PredictionMap& preds);

// VOC all-point AP for class c. Predictions whose argmax is c are pooled and
// visited by descending objectness (ties: image order, prediction index); a
// prediction is a true positive iff the unmatched ground truth of class c in
// its image with the highest IoU reaches iou_thr, which then gets consumed.
std::optional<double> average_precision(std::span<const EvalImage> images, ClassId c,
                                         double iou_thr, std::vector<PrPoint>* curve = nullptr);

// Mean of the defined per-class APs. Throws DataError if no class has ground
// truth.
APResult mean_average_precision(std::span<const EvalImage> images, int num_classes,
                                double iou_thr = 0.5);

// Share of consumed proposals of `kind` that were real errors; nullopt when
// none of that kind were reviewed.
std::optional<double> review_precision(std::span<const ReviewOutcome> outcomes, ErrorKind kind);

}  // namespace noisyal
