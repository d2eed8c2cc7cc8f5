#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "noisyal/detector.h"
#include "noisyal/errors.h"
#include "noisyal/json_util.h"

namespace noisyal {

PredictionMap predictions_from_json(std::string_view text, const DatasetStore& store,
                                    bool renormalize) {
  std::set<ImageId> known;
  for (const auto& img : store.train) known.insert(img.id);
  for (const auto& img : store.test) known.insert(img.id);
  const int k = store.catalog.size();

  const nlohmann::json root = detail::parse_json(text, "predictions");
  const auto& images = detail::require_array(root, "images", "predictions");
  PredictionMap out;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string path = "predictions.images[" + std::to_string(i) + "]";
    const ImageId id = detail::require_integer(images[i], "id", path);
    if (!known.count(id)) {
      throw ValidationError(path + ": unknown image id " + std::to_string(id));
    }
    if (out.count(id)) {
      throw ValidationError(path + ": image id " + std::to_string(id) + " listed twice");
    }
    auto& preds = out[id];
    const auto& list = detail::require_array(images[i], "predictions", path);
    for (std::size_t j = 0; j < list.size(); ++j) {
      const std::string ppath = path + ".predictions[" + std::to_string(j) + "]";
      const auto& pj = list[j];
      const auto& bb = detail::require_array(pj, "bbox", ppath);
      if (bb.size() != 4 || !std::all_of(bb.begin(), bb.end(),
                                         [](const auto& v) { return v.is_number(); })) {
        throw ParseError(ppath + ".bbox: expected [x, y, w, h]");
      }
      const double score = detail::require_number(pj, "score", ppath);
      if (!(score >= 0.0 && score <= 1.0)) {
        throw ValidationError(ppath + ": score must lie in [0, 1]");
      }
      const auto& pv = detail::require_array(pj, "probs", ppath);
      if (pv.size() != static_cast<std::size_t>(k)) {
        throw ValidationError(ppath + ": probs has length " + std::to_string(pv.size()) +
                              ", expected " + std::to_string(k));
      }
      std::vector<double> probs;
      for (const auto& v : pv) {
        if (!v.is_number()) throw ParseError(ppath + ".probs: expected numbers");
        const double p = v.get<double>();
        if (!(p >= 0.0) || !std::isfinite(p)) {
          throw ValidationError(ppath + ": probabilities must be finite and non-negative");
        }
        probs.push_back(p);
      }
      const double sum = std::accumulate(probs.begin(), probs.end(), 0.0);
      if (std::abs(sum - 1.0) > 1e-6) {
        if (!renormalize || !(sum > 0)) {
          throw ValidationError(ppath + ": probs sum to " + std::to_string(sum) +
                                ", expected 1 within 1e-6");
        }
      }
      if (sum != 1.0 && sum > 0) {
        for (double& p : probs) p /= sum;
      }
      try {
        preds.push_back({BBox(bb[0].get<double>(), bb[1].get<double>(), bb[2].get<double>(),
                              bb[3].get<double>()),
                         score, std::move(probs)});
      } catch (const ValidationError& e) {
        throw ValidationError(ppath + ": " + e.what());
      }
    }
  }
  return out;
}

PredictionMap load_predictions(const std::filesystem::path& path, const DatasetStore& store,
                               bool renormalize) {
  try {
    return predictions_from_json(detail::read_text_file(path), store, renormalize);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string predictions_to_json(const PredictionMap& preds) {
  using detail::ordered_json;
  std::string out = "{\"images\":[";
  bool first = true;
  for (const auto& [id, list] : preds) {
    ordered_json ij;
    ij["id"] = id;
    ordered_json arr = ordered_json::array();
    for (const auto& p : list) {
      ordered_json pj;
      pj["bbox"] = {p.box.x(), p.box.y(), p.box.w(), p.box.h()};
      pj["score"] = p.objectness;
      pj["probs"] = p.probs;
      arr.push_back(std::move(pj));
    }
    ij["predictions"] = std::move(arr);
    out += first ? "\n" : ",\n";
    first = false;
    out += ij.dump();
  }
  out += "\n]}\n";
  return out;
}

void save_predictions(const PredictionMap& preds, const std::filesystem::path& path) {
  detail::write_text_file(path, predictions_to_json(preds));
}

}  // namespace noisyal
