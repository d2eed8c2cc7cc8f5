#include "noisyal/dataset.h"

#include <algorithm>
#include <set>

#include "noisyal/errors.h"

namespace noisyal {

ClassCatalog::ClassCatalog(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.size() < 2) {
    throw ValidationError("class catalog needs at least two classes");
  }
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (!seen.insert(n).second) {
      throw ValidationError("duplicate class name '" + n + "'");
    }
  }
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kClean: return "clean";
    case Provenance::kFlipped: return "flipped";
    case Provenance::kMissed: return "missed";
    case Provenance::kRestored: return "restored";
    case Provenance::kReviewCorrupted: return "review_corrupted";
  }
  return "unknown";
}

int ImageRecord::present_count() const {
  return static_cast<int>(std::count_if(labels.begin(), labels.end(),
                                        [](const LabelRecord& l) { return l.present; }));
}

std::vector<NoisyLabel> noisy_labels(const ImageRecord& image) {
  std::vector<NoisyLabel> out;
  out.reserve(image.labels.size());
  for (const auto& l : image.labels) {
    if (l.present) out.push_back({l.id, l.box, l.observed_class});
  }
  return out;
}

namespace {

template <typename Images>
auto find_image(Images& images, ImageId id) -> decltype(&images.front()) {
  auto it = std::lower_bound(images.begin(), images.end(), id,
                             [](const ImageRecord& img, ImageId v) { return img.id < v; });
  if (it == images.end() || it->id != id) return nullptr;
  return &*it;
}

}  // namespace

ImageRecord& DatasetStore::train_image(ImageId id) {
  auto* img = find_image(train, id);
  if (img == nullptr) throw DataError("unknown train image id " + std::to_string(id));
  return *img;
}

const ImageRecord& DatasetStore::train_image(ImageId id) const {
  const auto* img = find_image(train, id);
  if (img == nullptr) throw DataError("unknown train image id " + std::to_string(id));
  return *img;
}

std::size_t DatasetStore::train_label_count() const {
  std::size_t n = 0;
  for (const auto& img : train) n += img.labels.size();
  return n;
}

void DatasetStore::validate() const {
  std::set<ImageId> image_ids;
  std::set<LabelId> label_ids;
  auto check_split = [&](const std::vector<ImageRecord>& images, bool is_test) {
    ImageId prev = 0;
    bool first = true;
    for (const auto& img : images) {
      const std::string where = "image " + std::to_string(img.id);
      if (!image_ids.insert(img.id).second) {
        throw ValidationError("duplicate image id " + std::to_string(img.id));
      }
      if (!first && img.id <= prev) {
        throw ValidationError(where + ": images must be sorted by id");
      }
      first = false;
      prev = img.id;
      if (!(img.width > 0) || !(img.height > 0)) {
        throw ValidationError(where + ": width and height must be positive");
      }
      if (is_test && img.pool_state != PoolState::kUnlabeled) {
        throw ValidationError(where + ": test images cannot join the active pool");
      }
      for (const auto& l : img.labels) {
        const std::string lw = "label " + std::to_string(l.id) + " (" + where + ")";
        if (!label_ids.insert(l.id).second) {
          throw ValidationError("duplicate label id " + std::to_string(l.id));
        }
        if (!catalog.contains(l.true_class) || !catalog.contains(l.observed_class)) {
          throw ValidationError(lw + ": class id out of range 1.." +
                                std::to_string(catalog.size()));
        }
        constexpr double kSlack = 1e-9;
        if (l.box.x() < -kSlack || l.box.y() < -kSlack ||
            l.box.right() > img.width + kSlack || l.box.bottom() > img.height + kSlack) {
          throw ValidationError(lw + ": box outside image bounds");
        }
        switch (l.provenance) {
          case Provenance::kClean:
            if (!l.present || l.observed_class != l.true_class) {
              throw ValidationError(lw + ": clean label must be present and correct");
            }
            break;
          case Provenance::kMissed:
            if (l.present) throw ValidationError(lw + ": missed label marked present");
            break;
          case Provenance::kFlipped:
            if (l.observed_class == l.true_class) {
              throw ValidationError(lw + ": flipped label carries its true class");
            }
            break;
          default:
            break;
        }
        if (is_test && l.provenance != Provenance::kClean) {
          throw ValidationError(lw + ": test labels must be clean");
        }
      }
    }
  };
  check_split(train, false);
  check_split(test, true);
}

std::vector<NoisyLabel> reveal_labels(DatasetStore& store, ImageId image_id) {
  ImageRecord& img = store.train_image(image_id);
  if (img.pool_state == PoolState::kActive) {
    throw DataError("image " + std::to_string(image_id) + " is already labeled");
  }
  img.pool_state = PoolState::kActive;
  return noisy_labels(img);
}

}  // namespace noisyal
