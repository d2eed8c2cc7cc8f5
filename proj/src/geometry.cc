#include "noisyal/geometry.h"

#include <cmath>
#include <numeric>
#include <string>

#include "noisyal/errors.h"

namespace noisyal {

BBox::BBox(double x, double y, double w, double h) : x_(x), y_(y), w_(w), h_(h) {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(w) ||
      !std::isfinite(h)) {
    throw ValidationError("bbox coordinates must be finite");
  }
  if (!(w > 0.0) || !(h > 0.0)) {
    throw ValidationError("bbox width and height must be positive, got w=" +
                          std::to_string(w) + " h=" + std::to_string(h));
  }
}

double iou(const BBox& a, const BBox& b) {
  const double ix = std::min(a.right(), b.right()) - std::max(a.x(), b.x());
  const double iy = std::min(a.bottom(), b.bottom()) - std::max(a.y(), b.y());
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  // Areas from the same corner differences as the intersection, so that
  // identical boxes give exactly 1.
  const double inter = ix * iy;
  const double area_a = (a.right() - a.x()) * (a.bottom() - a.y());
  const double area_b = (b.right() - b.x()) * (b.bottom() - b.y());
  const double uni = area_a + area_b - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

ClassId Prediction::argmax_class() const {
  std::size_t best = 0;
  for (std::size_t c = 1; c < probs.size(); ++c) {
    if (probs[c] > probs[best]) best = c;
  }
  return static_cast<ClassId>(best) + 1;
}

std::vector<Prediction> score_filter(std::span<const Prediction> preds,
                                     double s_eps) {
  std::vector<Prediction> kept;
  for (const auto& p : preds) {
    if (p.objectness >= s_eps) kept.push_back(p);
  }
  return kept;
}

std::vector<Prediction> nms(std::span<const Prediction> preds, double iou_thr) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].objectness > preds[b].objectness;
  });

  std::vector<std::size_t> kept;
  std::vector<ClassId> kept_class;
  for (std::size_t idx : order) {
    const ClassId cls = preds[idx].argmax_class();
    bool suppressed = false;
    for (std::size_t k = 0; k < kept.size(); ++k) {
      if (kept_class[k] == cls && iou(preds[kept[k]].box, preds[idx].box) >= iou_thr) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) {
      kept.push_back(idx);
      kept_class.push_back(cls);
    }
  }

  std::vector<Prediction> out;
  out.reserve(kept.size());
  for (std::size_t idx : kept) out.push_back(preds[idx]);
  return out;
}

}  // namespace noisyal
