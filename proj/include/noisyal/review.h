#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "noisyal/dataset.h"
#include "noisyal/geometry.h"
#include "noisyal/random.h"

namespace noisyal {

enum class ReviewPolicy { kNone, kRandom, kHighestLoss };
enum class ErrorKind { kMiss, kFlip };
enum class ReviewAction { kRestored, kCorrected, kCorrupted, kRejected, kOverlooked };

std::string_view to_string(ReviewPolicy p);
std::string_view to_string(ErrorKind k);
std::string_view to_string(ReviewAction a);
// Accepts "none", "random", "highest_loss" and "highest-loss".
ReviewPolicy parse_review_policy(std::string_view s);

struct ReviewProposal {
  ErrorKind kind = ErrorKind::kMiss;
  ImageId image_id = 0;
  // Index into the image's postprocessed predictions (miss) or label id (flip).
  std::int64_t target = 0;
  // Predicted box (miss) or label box (flip).
  BBox box{0, 0, 1, 1};
  // Objectness (miss) or -log p_observed (flip).
  double rank_score = 0.0;
};

// What proposal generation may see of one active image: its postprocessed
// predictions and the noisy labels. No hidden ground truth.
struct ReviewImage {
  ImageId id = 0;
  std::span<const Prediction> predictions;
  std::vector<NoisyLabel> labels;
};

// Predictions without a present label at IoU >= iou_eps. Highest loss sorts
// by descending objectness (ties: image id, prediction index); random
// shuffles. `images` must be in ascending id order.
std::vector<ReviewProposal> miss_proposals(std::span<const ReviewImage> images, double iou_eps,
                                           ReviewPolicy policy, Rng& rng);

// Labels whose most-overlapping prediction reaches iou_eps, scored by the
// cross-entropy -log p_observed of that prediction. Highest loss sorts by
// descending score (ties: image id, label id); random shuffles the assigned
// labels. Unassigned labels are never proposed.
std::vector<ReviewProposal> flip_proposals(std::span<const ReviewImage> images, double iou_eps,
                                           ReviewPolicy policy, Rng& rng);

struct ReviewOutcome {
  ReviewProposal proposal;
  bool was_true_error = false;
  ReviewAction action = ReviewAction::kRejected;
  int cost = 1;
};

// True miss iff the proposed box overlaps a still-missed label by IoU >=
// iou_eps. Such a label is restored with probability 1 - gamma_r and
// overlooked otherwise; false alarms are rejected without mutation.
ReviewOutcome adjudicate_miss(const ReviewProposal& proposal, DatasetStore& truth,
                              double iou_eps, double gamma_r, Rng& rng);

// The reviewer fixes the class with probability 1 - gamma_r and assigns a
// uniformly drawn wrong class otherwise, whether or not the label was wrong.
ReviewOutcome adjudicate_flip(const ReviewProposal& proposal, DatasetStore& truth,
                              double gamma_r, Rng& rng);

// Per-cycle budget accounting. The query lane gets round((1 - lambda) * B)
// plus any carried-over budget; review gets what querying left over.
struct BudgetLedger {
  int budget = 0;
  double lambda = 0.0;
  double alpha = 0.5;
  int carry_in = 0;
  int spent_query = 0;
  int spent_review_miss = 0;
  int spent_review_flip = 0;

  int query_budget() const;
  int nominal_review_budget() const;
  int effective_review_budget() const;
  int cycle_budget() const { return budget + carry_in; }
  int total_spent() const { return spent_query + spent_review_miss + spent_review_flip; }

  friend bool operator==(const BudgetLedger&, const BudgetLedger&) = default;
};

struct ReviewResult {
  std::vector<ReviewOutcome> outcomes;
  int miss_budget = 0;
  int flip_budget = 0;
  int forfeited_miss = 0;
  int forfeited_flip = 0;
  int candidates_miss = 0;
  int candidates_flip = 0;
  // Fraction of candidates that were real errors when proposals were made.
  std::optional<double> base_rate_miss;
  std::optional<double> base_rate_flip;
};

// Splits the effective review budget into floor(alpha * C_R) miss reviews
// and the rest for flips, then consumes proposals of each kind in ranked
// order. Unused budget of a lane is forfeited.
ReviewResult run_review(std::span<const ReviewImage> images, DatasetStore& truth,
                        ReviewPolicy policy, BudgetLedger& ledger, double gamma_r,
                        double iou_eps, Rng& rng);

}  // namespace noisyal
