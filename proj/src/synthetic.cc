#include <cmath>
#include <string>

#include "noisyal/dataset.h"
#include "noisyal/errors.h"

namespace noisyal {

namespace {

double round_down_cents(double v) { return std::floor(v * 100.0) / 100.0; }

void check_spec(const SyntheticSpec& spec) {
  if (spec.n_train < 0 || spec.n_test < 0) {
    throw ConfigError("image counts must be non-negative");
  }
  if (spec.num_classes < 2) throw ConfigError("num_classes must be at least 2");
  if (spec.min_boxes < 0 || spec.max_boxes < spec.min_boxes) {
    throw ConfigError("boxes per image must form a non-empty range of non-negative counts");
  }
  if (!(spec.min_box_size > 0) || spec.max_box_size < spec.min_box_size) {
    throw ConfigError("box size range must be non-empty and positive");
  }
  if (spec.max_box_size > spec.image_width || spec.max_box_size > spec.image_height) {
    throw ConfigError("boxes must fit inside the image");
  }
  if (spec.max_attempts < 1) throw ConfigError("max_attempts must be positive");
  if (!(spec.class_imbalance >= 1.0) || !std::isfinite(spec.class_imbalance)) {
    throw ConfigError("class_imbalance must be a finite ratio >= 1");
  }
}

}  // namespace

DatasetStore generate_synthetic_dataset(const SyntheticSpec& spec, Rng& rng) {
  check_spec(spec);
  std::vector<std::string> names;
  for (int c = 1; c <= spec.num_classes; ++c) names.push_back("class_" + std::to_string(c));

  DatasetStore store;
  store.catalog = ClassCatalog(std::move(names));

  std::uniform_int_distribution<int> count_dist(spec.min_boxes, spec.max_boxes);
  // Class c has weight imbalance^(-(c - 1) / (K - 1)).
  std::vector<double> class_mass;
  for (int c = 1; c <= spec.num_classes; ++c) {
    class_mass.push_back(
        std::pow(spec.class_imbalance, -static_cast<double>(c - 1) / (spec.num_classes - 1)));
  }
  std::discrete_distribution<int> class_dist(class_mass.begin(), class_mass.end());
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * uniform01(rng); };

  LabelId next_label = 1;
  const int total = spec.n_train + spec.n_test;
  for (int i = 0; i < total; ++i) {
    ImageRecord img;
    img.id = i + 1;
    img.width = spec.image_width;
    img.height = spec.image_height;
    const int n_boxes = count_dist(rng);
    for (int b = 0; b < n_boxes; ++b) {
      bool placed = false;
      for (int attempt = 0; attempt < spec.max_attempts && !placed; ++attempt) {
        const double w = round_down_cents(uniform(spec.min_box_size, spec.max_box_size));
        const double h = round_down_cents(uniform(spec.min_box_size, spec.max_box_size));
        const double x = round_down_cents(uniform(0.0, spec.image_width - w));
        const double y = round_down_cents(uniform(0.0, spec.image_height - h));
        BBox box(x, y, w, h);
        bool ok = true;
        for (const auto& other : img.labels) {
          if (iou(box, other.box) > spec.max_pairwise_iou) {
            ok = false;
            break;
          }
        }
        if (!ok) continue;
        const ClassId cls = class_dist(rng) + 1;
        img.labels.push_back({next_label++, box, cls, cls, true, Provenance::kClean});
        placed = true;
      }
      if (!placed) {
        throw RuntimeError("could not place box " + std::to_string(b + 1) + " of " +
                           std::to_string(n_boxes) + " in image index " + std::to_string(i) +
                           " after " + std::to_string(spec.max_attempts) + " attempts");
      }
    }
    (i < spec.n_train ? store.train : store.test).push_back(std::move(img));
  }
  return store;
}

}  // namespace noisyal
