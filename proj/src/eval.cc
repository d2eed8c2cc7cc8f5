#include "noisyal/eval.h"

#include <algorithm>

#include "noisyal/errors.h"

namespace noisyal {

std::vector<EvalImage> make_eval_images(std::span<const ImageRecord> test,
                                        const PredictionMap& preds) {
  std::vector<EvalImage> out;
  out.reserve(test.size());
  for (const auto& img : test) {
    EvalImage e;
    e.id = img.id;
    if (auto it = preds.find(img.id); it != preds.end()) e.predictions = it->second;
    for (const auto& l : img.labels) e.truth.push_back({l.box, l.true_class});
    out.push_back(std::move(e));
  }
  return out;
}

std::optional<double> average_precision(std::span<const EvalImage> images, ClassId c,
                                         double iou_thr, std::vector<PrPoint>* curve) {
  struct Candidate {
    double score;
    std::size_t image;
    std::size_t index;
  };
  std::vector<Candidate> candidates;
  std::vector<std::vector<std::size_t>> gt_of_class(images.size());
  int num_gt = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (std::size_t g = 0; g < images[i].truth.size(); ++g) {
      if (images[i].truth[g].cls == c) {
        gt_of_class[i].push_back(g);
        ++num_gt;
      }
    }
    for (std::size_t p = 0; p < images[i].predictions.size(); ++p) {
      if (images[i].predictions[p].argmax_class() == c) {
        candidates.push_back({images[i].predictions[p].objectness, i, p});
      }
    }
  }
  if (curve) curve->clear();
  if (num_gt == 0) return std::nullopt;

  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.score > b.score; });

  std::vector<std::vector<bool>> used(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) used[i].assign(gt_of_class[i].size(), false);

  std::vector<double> recall;
  std::vector<double> precision;
  int tp = 0;
  int fp = 0;
  for (const auto& cand : candidates) {
    const auto& pred = images[cand.image].predictions[cand.index];
    double best = -1.0;
    std::size_t best_slot = 0;
    const auto& slots = gt_of_class[cand.image];
    for (std::size_t s = 0; s < slots.size(); ++s) {
      if (used[cand.image][s]) continue;
      const double o = iou(pred.box, images[cand.image].truth[slots[s]].box);
      if (o > best) {
        best = o;
        best_slot = s;
      }
    }
    if (best >= iou_thr) {
      used[cand.image][best_slot] = true;
      ++tp;
    } else {
      ++fp;
    }
    recall.push_back(static_cast<double>(tp) / num_gt);
    precision.push_back(static_cast<double>(tp) / (tp + fp));
  }
  if (curve) {
    for (std::size_t i = 0; i < recall.size(); ++i) curve->push_back({recall[i], precision[i]});
  }

  // All-point interpolation: area under the precision envelope.
  std::vector<double> mrec{0.0};
  std::vector<double> mpre{0.0};
  mrec.insert(mrec.end(), recall.begin(), recall.end());
  mpre.insert(mpre.end(), precision.begin(), precision.end());
  mrec.push_back(1.0);
  mpre.push_back(0.0);
  for (std::size_t i = mpre.size() - 1; i > 0; --i) mpre[i - 1] = std::max(mpre[i - 1], mpre[i]);
  double ap = 0.0;
  for (std::size_t i = 1; i < mrec.size(); ++i) {
    if (mrec[i] != mrec[i - 1]) ap += (mrec[i] - mrec[i - 1]) * mpre[i];
  }
  return std::clamp(ap, 0.0, 1.0);
}

APResult mean_average_precision(std::span<const EvalImage> images, int num_classes,
                                double iou_thr) {
  APResult result;
  double sum = 0.0;
  int defined = 0;
  for (ClassId c = 1; c <= num_classes; ++c) {
    ClassAP entry;
    entry.cls = c;
    for (const auto& img : images) {
      entry.num_gt += static_cast<int>(std::count_if(
          img.truth.begin(), img.truth.end(), [c](const GroundTruthBox& g) { return g.cls == c; }));
    }
    entry.ap = average_precision(images, c, iou_thr, &entry.curve);
    if (entry.ap) {
      sum += *entry.ap;
      ++defined;
    }
    result.per_class.push_back(std::move(entry));
  }
  if (defined == 0) throw DataError("mAP undefined: no class has ground-truth boxes");
  result.map = sum / defined;
  return result;
}

std::optional<double> review_precision(std::span<const ReviewOutcome> outcomes, ErrorKind kind) {
  int n = 0;
  int hits = 0;
  for (const auto& o : outcomes) {
    if (o.proposal.kind != kind) continue;
    ++n;
    if (o.was_true_error) ++hits;
  }
  if (n == 0) return std::nullopt;
  return static_cast<double>(hits) / n;
}

}  // namespace noisyal
