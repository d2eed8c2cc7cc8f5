#include "noisyal/dataset.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "noisyal/errors.h"

namespace noisyal {

std::size_t noise_count(double gamma_l, std::size_t label_count) {
  // The epsilon keeps products like 0.3 * 10 from flooring to 2.
  const double m = gamma_l / 2.0 * static_cast<double>(label_count);
  return static_cast<std::size_t>(std::floor(m + 1e-9));
}

namespace {

ClassId draw_wrong_class(ClassId true_class, int num_classes, Rng& rng) {
  std::uniform_int_distribution<int> dist(1, num_classes - 1);
  const int c = dist(rng);
  return c >= true_class ? c + 1 : c;
}

std::vector<LabelRecord*> train_labels(DatasetStore& store) {
  std::vector<LabelRecord*> out;
  for (auto& img : store.train) {
    for (auto& l : img.labels) out.push_back(&l);
  }
  return out;
}

}  // namespace

DatasetStore inject_noise(const DatasetStore& store, double gamma_l, Rng& rng) {
  if (!(gamma_l >= 0.0 && gamma_l <= 1.0)) {
    throw ConfigError("gamma_l must lie in [0, 1]");
  }
  DatasetStore out = store;
  std::vector<LabelRecord*> labels = train_labels(out);
  for (const auto* l : labels) {
    if (l->provenance != Provenance::kClean) {
      throw ValidationError("noise can only be injected into a clean dataset (label " +
                            std::to_string(l->id) + " is " +
                            std::string(to_string(l->provenance)) + ")");
    }
  }
  const std::size_t g = labels.size();
  const std::size_t m = noise_count(gamma_l, g);
  if (2 * m > g) {
    throw ValidationError("cannot draw 2x" + std::to_string(m) + " disjoint errors from " +
                          std::to_string(g) + " labels");
  }
  if (m == 0) return out;

  std::vector<std::size_t> order(g);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  for (std::size_t i = 0; i < m; ++i) {
    LabelRecord& l = *labels[order[i]];
    l.present = false;
    l.provenance = Provenance::kMissed;
  }
  const int k = out.catalog.size();
  for (std::size_t i = m; i < 2 * m; ++i) {
    LabelRecord& l = *labels[order[i]];
    l.observed_class = draw_wrong_class(l.true_class, k, rng);
    l.provenance = Provenance::kFlipped;
  }
  return out;
}

NoiseSidecar extract_noise(const DatasetStore& store) {
  NoiseSidecar noise;
  for (const auto& img : store.train) {
    for (const auto& l : img.labels) {
      if (l.provenance == Provenance::kMissed) noise.missed.push_back(l.id);
      if (l.provenance == Provenance::kFlipped) noise.flips.emplace_back(l.id, l.observed_class);
    }
  }
  return noise;
}

DatasetStore clean_copy(const DatasetStore& store) {
  DatasetStore out = store;
  for (auto& img : out.train) {
    img.pool_state = PoolState::kUnlabeled;
    for (auto& l : img.labels) {
      l.observed_class = l.true_class;
      l.present = true;
      l.provenance = Provenance::kClean;
    }
  }
  return out;
}

DatasetStore apply_noise(const DatasetStore& clean, const NoiseSidecar& noise) {
  DatasetStore out = clean;
  std::map<LabelId, LabelRecord*> by_id;
  for (auto& img : out.train) {
    for (auto& l : img.labels) {
      if (l.provenance != Provenance::kClean) {
        throw ValidationError("noise sidecar needs a clean dataset (label " +
                              std::to_string(l.id) + ")");
      }
      by_id[l.id] = &l;
    }
  }
  auto lookup = [&](LabelId id) -> LabelRecord& {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw ValidationError("noise sidecar references unknown train label " +
                            std::to_string(id));
    }
    return *it->second;
  };
  for (LabelId id : noise.missed) {
    LabelRecord& l = lookup(id);
    if (l.provenance != Provenance::kClean) {
      throw ValidationError("label " + std::to_string(id) + " listed twice in noise sidecar");
    }
    l.present = false;
    l.provenance = Provenance::kMissed;
  }
  for (const auto& [id, observed] : noise.flips) {
    LabelRecord& l = lookup(id);
    if (l.provenance != Provenance::kClean) {
      throw ValidationError("label " + std::to_string(id) +
                            " is both missed and flipped in noise sidecar");
    }
    if (!out.catalog.contains(observed)) {
      throw ValidationError("flip of label " + std::to_string(id) + " targets class " +
                            std::to_string(observed) + " outside 1.." +
                            std::to_string(out.catalog.size()));
    }
    if (observed == l.true_class) {
      throw ValidationError("flip of label " + std::to_string(id) + " keeps its true class");
    }
    l.observed_class = observed;
    l.provenance = Provenance::kFlipped;
  }
  return out;
}

}  // namespace noisyal
