#include "noisyal/query.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "noisyal/errors.h"

namespace noisyal {

std::string_view to_string(QueryStrategy s) {
  return s == QueryStrategy::kRandom ? "random" : "entropy";
}

QueryStrategy parse_query_strategy(std::string_view s) {
  if (s == "random") return QueryStrategy::kRandom;
  if (s == "entropy") return QueryStrategy::kEntropy;
  throw ConfigError("unknown query strategy '" + std::string(s) + "' (random|entropy)");
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

std::vector<double> class_weights(std::span<const long> histogram, double w_min,
                                  double w_max) {
  const double k = static_cast<double>(histogram.size());
  const double total = static_cast<double>(std::accumulate(histogram.begin(), histogram.end(), 0L));
  std::vector<double> w;
  w.reserve(histogram.size());
  for (long n : histogram) {
    w.push_back(std::clamp((total + k) / (k * (static_cast<double>(n) + 1.0)), w_min, w_max));
  }
  return w;
}

double image_query_score(std::span<const Prediction> preds, std::span<const double> weights) {
  double score = 0.0;
  for (const auto& p : preds) {
    const auto c = static_cast<std::size_t>(p.argmax_class() - 1);
    const double w = c < weights.size() ? weights[c] : 1.0;
    score += w * entropy(p.probs);
  }
  return score;
}

std::vector<ImageId> rank_pool(std::span<const ImageId> pool, QueryStrategy strategy,
                               const PredictionMap& preds, std::span<const double> weights,
                               Rng& rng) {
  std::vector<ImageId> ranked(pool.begin(), pool.end());
  if (strategy == QueryStrategy::kRandom) {
    std::shuffle(ranked.begin(), ranked.end(), rng);
    return ranked;
  }
  std::vector<ImageScore> scores;
  scores.reserve(pool.size());
  for (ImageId id : pool) {
    auto it = preds.find(id);
    if (it == preds.end()) {
      throw DataError("no predictions for pool image " + std::to_string(id));
    }
    scores.push_back({id, image_query_score(it->second, weights)});
  }
  std::sort(scores.begin(), scores.end(), [](const ImageScore& a, const ImageScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.image_id < b.image_id;
  });
  for (std::size_t i = 0; i < scores.size(); ++i) ranked[i] = scores[i].image_id;
  return ranked;
}

}  // namespace noisyal
