#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "noisyal/detector.h"
#include "noisyal/geometry.h"
#include "noisyal/random.h"

namespace noisyal {

enum class QueryStrategy { kRandom, kEntropy };

std::string_view to_string(QueryStrategy s);
QueryStrategy parse_query_strategy(std::string_view s);

struct ImageScore {
  ImageId image_id = 0;
  double score = 0.0;
};

// Shannon entropy in nats, with 0 * log 0 = 0.
double entropy(std::span<const double> probs);

// Add-one smoothed inverse class frequency of the active set,
// w_c = (sum_k n_k + K) / (K * (n_c + 1)), clamped to [w_min, w_max].
std::vector<double> class_weights(std::span<const long> histogram, double w_min = 0.1,
                                  double w_max = 10.0);

// Sum over predictions of w[argmax] * H(probs). Expects postprocessed
// predictions.
double image_query_score(std::span<const Prediction> preds, std::span<const double> weights);

// Orders the pool for acquisition. Entropy: descending score, ties by
// ascending image id; every pool image needs an entry in `preds` (throws
// DataError otherwise). Random: uniform permutation drawn from `rng`.
std::vector<ImageId> rank_pool(std::span<const ImageId> pool, QueryStrategy strategy,
                               const PredictionMap& preds, std::span<const double> weights,
                               Rng& rng);

}  // namespace noisyal
