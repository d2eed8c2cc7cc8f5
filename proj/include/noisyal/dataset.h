#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "noisyal/geometry.h"
#include "noisyal/random.h"

namespace noisyal {

class ClassCatalog {
 public:
  // Requires at least two unique names.
  explicit ClassCatalog(std::vector<std::string> names);

  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }
  bool contains(ClassId c) const { return c >= 1 && c <= size(); }

  friend bool operator==(const ClassCatalog&, const ClassCatalog&) = default;

 private:
  std::vector<std::string> names_;
};

enum class Provenance { kClean, kFlipped, kMissed, kRestored, kReviewCorrupted };

std::string_view to_string(Provenance p);

// One annotation of the training pool. true_class and provenance are hidden
// ground truth: only noise injection, review adjudication, evaluation and the
// surrogate detector read them.
struct LabelRecord {
  LabelId id = 0;
  BBox box{0, 0, 1, 1};
  ClassId true_class = 1;
  ClassId observed_class = 1;
  bool present = true;
  Provenance provenance = Provenance::kClean;

  bool is_error() const { return !present || observed_class != true_class; }

  friend bool operator==(const LabelRecord&, const LabelRecord&) = default;
};

enum class PoolState { kUnlabeled, kActive };

struct ImageRecord {
  ImageId id = 0;
  double width = 0;
  double height = 0;
  std::vector<LabelRecord> labels;
  PoolState pool_state = PoolState::kUnlabeled;

  int present_count() const;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

// What an annotator hands back: box and (possibly wrong) class, nothing else.
struct NoisyLabel {
  LabelId id = 0;
  BBox box{0, 0, 1, 1};
  ClassId observed_class = 1;

  friend bool operator==(const NoisyLabel&, const NoisyLabel&) = default;
};

// Present labels of an image as seen through the noisy oracle.
std::vector<NoisyLabel> noisy_labels(const ImageRecord& image);

struct DatasetStore {
  ClassCatalog catalog{{"a", "b"}};
  // Both splits are kept sorted by ascending image id.
  std::vector<ImageRecord> train;
  std::vector<ImageRecord> test;

  ImageRecord& train_image(ImageId id);
  const ImageRecord& train_image(ImageId id) const;
  std::size_t train_label_count() const;

  // Checks ids, class ranges, box bounds and the provenance invariants.
  // Throws ValidationError.
  void validate() const;

  friend bool operator==(const DatasetStore&, const DatasetStore&) = default;
};

// Marks the image active and returns its present labels. Throws DataError if
// the image is unknown or already active.
std::vector<NoisyLabel> reveal_labels(DatasetStore& store, ImageId image_id);

// Number of labels hit by each error type for a given noise level:
// floor(gamma_l / 2 * G).
std::size_t noise_count(double gamma_l, std::size_t label_count);

// Discards floor(gamma_l/2 * G) uniformly chosen train labels, then flips the
// class of as many of the remaining ones to a uniformly drawn wrong class.
// Requires a clean train split; the test split is never touched.
DatasetStore inject_noise(const DatasetStore& store, double gamma_l, Rng& rng);

// Noise state kept next to a clean dataset file.
struct NoiseSidecar {
  std::vector<LabelId> missed;
  std::vector<std::pair<LabelId, ClassId>> flips;

  friend bool operator==(const NoiseSidecar&, const NoiseSidecar&) = default;
};

NoiseSidecar extract_noise(const DatasetStore& store);
// Applies a sidecar to a clean store. Throws ValidationError on unknown ids,
// out-of-range classes or non-flipping "flips".
DatasetStore apply_noise(const DatasetStore& clean, const NoiseSidecar& noise);
// Resets every train label to its clean state (test split is already clean).
DatasetStore clean_copy(const DatasetStore& store);

struct SyntheticSpec {
  int n_train = 2000;
  int n_test = 400;
  int num_classes = 10;
  int min_boxes = 2;
  int max_boxes = 6;
  double image_width = 128;
  double image_height = 128;
  double min_box_size = 12;
  double max_box_size = 40;
  double max_pairwise_iou = 0.3;
  int max_attempts = 1000;
  // Frequency ratio of the most to the least common class; classes in
  // between decay geometrically. 1 draws classes uniformly.
  double class_imbalance = 10.0;

  friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

// Images with uniformly placed boxes; boxes within an image
// overlap by at most max_pairwise_iou. Throws RuntimeError naming the image
// when placement fails.
DatasetStore generate_synthetic_dataset(const SyntheticSpec& spec, Rng& rng);

// Canonical clean JSON form:
// {"classes":[...], "images":[{"id","width","height","split","labels":[...]}]}
std::string dataset_to_json(const DatasetStore& store);
DatasetStore dataset_from_json(std::string_view text);
void save_dataset(const DatasetStore& store, const std::filesystem::path& path);
DatasetStore load_dataset(const std::filesystem::path& path);

// {"missed":[ids...], "flips":[{"id":7,"observed":5}]}
std::string noise_to_json(const NoiseSidecar& noise);
NoiseSidecar noise_from_json(std::string_view text);
void save_noise(const NoiseSidecar& noise, const std::filesystem::path& path);
NoiseSidecar load_noise(const std::filesystem::path& path);

}  // namespace noisyal
