#include "noisyal/review.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "noisyal/errors.h"

namespace noisyal {

std::string_view to_string(ReviewPolicy p) {
  switch (p) {
    case ReviewPolicy::kNone: return "none";
    case ReviewPolicy::kRandom: return "random";
    case ReviewPolicy::kHighestLoss: return "highest_loss";
  }
  return "none";
}

std::string_view to_string(ErrorKind k) { return k == ErrorKind::kMiss ? "miss" : "flip"; }

std::string_view to_string(ReviewAction a) {
  switch (a) {
    case ReviewAction::kRestored: return "restored";
    case ReviewAction::kCorrected: return "corrected";
    case ReviewAction::kCorrupted: return "corrupted";
    case ReviewAction::kRejected: return "rejected";
    case ReviewAction::kOverlooked: return "overlooked";
  }
  return "rejected";
}

ReviewPolicy parse_review_policy(std::string_view s) {
  if (s == "none") return ReviewPolicy::kNone;
  if (s == "random") return ReviewPolicy::kRandom;
  if (s == "highest_loss" || s == "highest-loss") return ReviewPolicy::kHighestLoss;
  throw ConfigError("unknown review policy '" + std::string(s) +
                    "' (none|random|highest-loss)");
}

namespace {

void order_proposals(std::vector<ReviewProposal>& proposals, ReviewPolicy policy, Rng& rng) {
  if (policy == ReviewPolicy::kRandom) {
    std::shuffle(proposals.begin(), proposals.end(), rng);
  } else {
    // Input is already in (image id, target) order, so a stable sort keeps
    // the documented tie-break.
    std::stable_sort(proposals.begin(), proposals.end(),
                     [](const ReviewProposal& a, const ReviewProposal& b) {
                       return a.rank_score > b.rank_score;
                     });
  }
}

// Best-overlapping prediction index, ties towards the lower index.
std::optional<std::size_t> assign_prediction(const BBox& box,
                                             std::span<const Prediction> preds,
                                             double iou_eps) {
  std::optional<std::size_t> best;
  double best_iou = -1.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double o = iou(box, preds[i].box);
    if (o > best_iou) {
      best_iou = o;
      best = i;
    }
  }
  if (best && best_iou >= iou_eps) return best;
  return std::nullopt;
}

double cross_entropy(const Prediction& p, ClassId observed) {
  const double prob = p.probs.at(static_cast<std::size_t>(observed - 1));
  return -std::log(std::max(prob, std::numeric_limits<double>::min()));
}

LabelRecord* find_missed_match(ImageRecord& img, const BBox& box, double iou_eps) {
  LabelRecord* best = nullptr;
  double best_iou = -1.0;
  for (auto& l : img.labels) {
    if (l.present) continue;
    const double o = iou(box, l.box);
    if (o > best_iou) {
      best_iou = o;
      best = &l;
    }
  }
  return best_iou >= iou_eps ? best : nullptr;
}

LabelRecord& find_label(ImageRecord& img, LabelId id) {
  for (auto& l : img.labels) {
    if (l.id == id) return l;
  }
  throw DataError("label " + std::to_string(id) + " not found in image " +
                  std::to_string(img.id));
}

}  // namespace

std::vector<ReviewProposal> miss_proposals(std::span<const ReviewImage> images, double iou_eps,
                                           ReviewPolicy policy, Rng& rng) {
  std::vector<ReviewProposal> out;
  if (policy == ReviewPolicy::kNone) return out;
  for (const auto& img : images) {
    for (std::size_t i = 0; i < img.predictions.size(); ++i) {
      const auto& p = img.predictions[i];
      if (!match_class_agnostic(p.box, img.labels, iou_eps)) {
        out.push_back({ErrorKind::kMiss, img.id, static_cast<std::int64_t>(i), p.box,
                       p.objectness});
      }
    }
  }
  order_proposals(out, policy, rng);
  return out;
}

std::vector<ReviewProposal> flip_proposals(std::span<const ReviewImage> images, double iou_eps,
                                           ReviewPolicy policy, Rng& rng) {
  std::vector<ReviewProposal> out;
  if (policy == ReviewPolicy::kNone) return out;
  for (const auto& img : images) {
    std::vector<const NoisyLabel*> labels;
    for (const auto& l : img.labels) labels.push_back(&l);
    std::sort(labels.begin(), labels.end(),
              [](const NoisyLabel* a, const NoisyLabel* b) { return a->id < b->id; });
    for (const NoisyLabel* l : labels) {
      const auto assigned = assign_prediction(l->box, img.predictions, iou_eps);
      if (!assigned) continue;
      out.push_back({ErrorKind::kFlip, img.id, l->id, l->box,
                     cross_entropy(img.predictions[*assigned], l->observed_class)});
    }
  }
  order_proposals(out, policy, rng);
  return out;
}

ReviewOutcome adjudicate_miss(const ReviewProposal& proposal, DatasetStore& truth,
                              double iou_eps, double gamma_r, Rng& rng) {
  ReviewOutcome outcome{proposal, false, ReviewAction::kRejected, 1};
  ImageRecord& img = truth.train_image(proposal.image_id);
  LabelRecord* missed = find_missed_match(img, proposal.box, iou_eps);
  if (missed == nullptr) return outcome;
  outcome.was_true_error = true;
  if (uniform01(rng) < gamma_r) {
    outcome.action = ReviewAction::kOverlooked;
    return outcome;
  }
  missed->present = true;
  missed->observed_class = missed->true_class;
  missed->provenance = Provenance::kRestored;
  outcome.action = ReviewAction::kRestored;
  return outcome;
}

ReviewOutcome adjudicate_flip(const ReviewProposal& proposal, DatasetStore& truth,
                              double gamma_r, Rng& rng) {
  ImageRecord& img = truth.train_image(proposal.image_id);
  LabelRecord& label = find_label(img, proposal.target);
  if (!label.present) {
    throw DataError("flip review targets label " + std::to_string(label.id) +
                    " which is not present");
  }
  ReviewOutcome outcome{proposal, label.observed_class != label.true_class,
                        ReviewAction::kCorrected, 1};
  if (uniform01(rng) < gamma_r) {
    const int k = truth.catalog.size();
    std::uniform_int_distribution<int> dist(1, k - 1);
    const int c = dist(rng);
    label.observed_class = c >= label.true_class ? c + 1 : c;
    label.provenance = Provenance::kReviewCorrupted;
    outcome.action = ReviewAction::kCorrupted;
  } else {
    label.observed_class = label.true_class;
    if (label.provenance == Provenance::kFlipped ||
        label.provenance == Provenance::kReviewCorrupted) {
      label.provenance = Provenance::kRestored;
    }
  }
  return outcome;
}

int BudgetLedger::query_budget() const {
  return static_cast<int>(std::lround((1.0 - lambda) * budget)) + carry_in;
}

int BudgetLedger::nominal_review_budget() const {
  return budget - static_cast<int>(std::lround((1.0 - lambda) * budget));
}

int BudgetLedger::effective_review_budget() const {
  return std::max(0, cycle_budget() - spent_query);
}

ReviewResult run_review(std::span<const ReviewImage> images, DatasetStore& truth,
                        ReviewPolicy policy, BudgetLedger& ledger, double gamma_r,
                        double iou_eps, Rng& rng) {
  ReviewResult result;
  const int c_r = ledger.effective_review_budget();
  result.miss_budget = static_cast<int>(std::floor(ledger.alpha * c_r));
  result.flip_budget = c_r - result.miss_budget;
  if (policy == ReviewPolicy::kNone) {
    result.forfeited_miss = result.miss_budget;
    result.forfeited_flip = result.flip_budget;
    return result;
  }

  const auto misses = miss_proposals(images, iou_eps, policy, rng);
  const auto flips = flip_proposals(images, iou_eps, policy, rng);
  result.candidates_miss = static_cast<int>(misses.size());
  result.candidates_flip = static_cast<int>(flips.size());

  if (!misses.empty()) {
    int hits = 0;
    for (const auto& p : misses) {
      if (find_missed_match(truth.train_image(p.image_id), p.box, iou_eps) != nullptr) ++hits;
    }
    result.base_rate_miss = static_cast<double>(hits) / static_cast<double>(misses.size());
  }
  if (!flips.empty()) {
    int hits = 0;
    for (const auto& p : flips) {
      const auto& l = find_label(truth.train_image(p.image_id), p.target);
      if (l.observed_class != l.true_class) ++hits;
    }
    result.base_rate_flip = static_cast<double>(hits) / static_cast<double>(flips.size());
  }

  const auto n_miss = std::min<std::size_t>(misses.size(), static_cast<std::size_t>(result.miss_budget));
  for (std::size_t i = 0; i < n_miss; ++i) {
    result.outcomes.push_back(adjudicate_miss(misses[i], truth, iou_eps, gamma_r, rng));
  }
  const auto n_flip = std::min<std::size_t>(flips.size(), static_cast<std::size_t>(result.flip_budget));
  for (std::size_t i = 0; i < n_flip; ++i) {
    result.outcomes.push_back(adjudicate_flip(flips[i], truth, gamma_r, rng));
  }
  ledger.spent_review_miss += static_cast<int>(n_miss);
  ledger.spent_review_flip += static_cast<int>(n_flip);
  result.forfeited_miss = result.miss_budget - static_cast<int>(n_miss);
  result.forfeited_flip = result.flip_budget - static_cast<int>(n_flip);
  return result;
}

}  // namespace noisyal
