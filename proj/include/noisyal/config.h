#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "noisyal/dataset.h"
#include "noisyal/detector.h"
#include "noisyal/query.h"
#include "noisyal/review.h"

namespace noisyal {

// Everything that determines a run. Serialized to JSON with exactly these
// field names.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  int num_classes = 10;
  int n_train = 2000;
  int n_test = 400;
  int u_init = 150;
  int budget = 200;  // per-cycle annotation budget
  int cycles = 20;
  double lambda = 0.2;  // review share of the budget
  double alpha = 0.5;   // miss share of the review budget
  double gamma_l = 0.2;
  double gamma_r = 0.05;
  double s_eps = 0.7;
  double iou_eps = 0.3;
  double nms_iou = 0.5;
  double eval_iou = 0.5;
  double eval_score_threshold = 0.0;
  double class_weight_min = 0.1;
  double class_weight_max = 10.0;
  QueryStrategy strategy = QueryStrategy::kEntropy;
  ReviewPolicy policy = ReviewPolicy::kHighestLoss;
  // Unspent review budget joins the next cycle's query budget instead of
  // being forfeited.
  bool review_rollover = false;
  SyntheticSpec synthetic;  // n_train/n_test/num_classes come from above
  SurrogateParams surrogate;
  std::string dataset_path;      // load instead of generating when set
  std::string noise_path;        // apply this sidecar instead of injecting noise
  std::string predictions_path;  // use a fixed predictions file instead of the surrogate
  bool renormalize_predictions = false;
  std::string output_dir = "run";

  // Throws ConfigError.
  void validate() const;
  SyntheticSpec synthetic_spec() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

std::string config_to_json(const ExperimentConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
void save_config(const ExperimentConfig& config, const std::filesystem::path& path);

}  // namespace noisyal
