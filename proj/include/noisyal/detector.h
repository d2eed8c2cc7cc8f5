#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "noisyal/dataset.h"
#include "noisyal/geometry.h"
#include "noisyal/random.h"

namespace noisyal {

// Parameters of the surrogate detector. The surrogate is a stand-in for a
// trained network: its skill grows with the amount of active training boxes
// and shrinks with the fraction of label errors among them.
struct SurrogateParams {
  double n_half = 500;        // boxes at which skill reaches half saturation
  double kappa = 0.3;         // noise penalty
  double sigma_min = 0.05;    // skill floor
  double jitter_frac = 0.15;  // box jitter scale at zero skill
  double fp_rate = 20.0;      // background false positives per image at zero skill
  double objectness_std = 0.1;
  double objectness_base = 0.55;  // foreground objectness mean = base + gain * skill
  double objectness_gain = 0.4;
  double class_mass_base = 0.5;   // probability on the true class = base + gain * skill
  double class_mass_gain = 0.45;
  double prob_jitter = 0.05;      // multiplicative probability noise
  double background_alpha = 0.3;  // Beta(alpha, beta) objectness of background boxes
  double background_beta = 1.2;
  // Classes differ in how many boxes they need: class c uses the half-saturation
  // point n_half / K * spread^((c - 1) / (K - 1) - 1/2). A spread of 1 makes all
  // classes equally hard.
  double class_difficulty_spread = 1.0;
  bool per_class_skill = true;

  void validate() const;

  friend bool operator==(const SurrogateParams&, const SurrogateParams&) = default;
};

struct ActiveStats {
  long n_boxes = 0;             // present labels on active images
  double error_fraction = 0.0;  // (missed + wrong-class) / ground-truth objects
};

// sigma = clamp((1 - kappa * rho) * n / (n + n_half), sigma_min, 1 - 1e-6)
double skill_from_training(const ActiveStats& stats, const SurrogateParams& params);

// Class-resolved training statistics of the active set.
struct TrainingSummary {
  ActiveStats overall;
  // Present labels by true class, size K. A flipped label still shows the
  // detector an object of its true class; its harm is charged through
  // error_fraction.
  std::vector<long> boxes_per_class;
};

struct SkillProfile {
  double overall = 0.0;
  std::vector<double> per_class;  // size K; per_class[c - 1]

  double for_class(ClassId c) const { return per_class[static_cast<std::size_t>(c - 1)]; }
};

// Half-saturation point used for class c (1-based) out of k classes.
double class_half_saturation(const SurrogateParams& params, ClassId c, int k);

SkillProfile skill_profile(const TrainingSummary& summary, const SurrogateParams& params,
                           int num_classes);

// Samples raw predictions for one image from its clean ground truth.
//  - every object is detected with probability 0.5 + 0.5 * s_c (s_c = skill
//    of its class); the box gets Gaussian jitter of std
//    (1 - s_c) * jitter_frac * min(w, h) per coordinate, the objectness is
//    N(base + gain * overall, std) clamped to [0, 1], and the class mass
//    base + gain * s_c sits on the true class with the remainder spread evenly;
//  - Poisson(fp_rate * (1 - overall)) background boxes follow, with
//    Beta-distributed low objectness and near-uniform class probabilities.
std::vector<Prediction> predict_surrogate(const ImageRecord& image, const SkillProfile& skill,
                                          const SurrogateParams& params, int num_classes,
                                          Rng& rng);

// Score threshold followed by NMS; feeds query scoring and review proposals.
std::vector<Prediction> postprocess(std::span<const Prediction> raw, double s_eps,
                                    double nms_iou);

using PredictionMap = std::map<ImageId, std::vector<Prediction>>;

// {"images":[{"id":1,"predictions":[{"bbox":[x,y,w,h],"score":s,"probs":[...]}]}]}
// Probability vectors must have length K and sum to 1 within 1e-6 unless
// `renormalize` is set, in which case any positive sum is rescaled.
PredictionMap predictions_from_json(std::string_view text, const DatasetStore& store,
                                    bool renormalize = false);
PredictionMap load_predictions(const std::filesystem::path& path, const DatasetStore& store,
                               bool renormalize = false);
std::string predictions_to_json(const PredictionMap& preds);
void save_predictions(const PredictionMap& preds, const std::filesystem::path& path);

}  // namespace noisyal
