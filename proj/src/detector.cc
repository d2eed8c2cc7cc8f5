#include "noisyal/detector.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "noisyal/errors.h"

namespace noisyal {

void SurrogateParams::validate() const {
  const double values[] = {n_half, kappa, sigma_min, jitter_frac, fp_rate, objectness_std,
                           objectness_base, objectness_gain, class_mass_base, class_mass_gain,
                           prob_jitter, background_alpha, background_beta,
                           class_difficulty_spread};
  for (double v : values) {
    if (!std::isfinite(v)) throw ConfigError("surrogate parameters must be finite");
  }
  if (!(n_half > 0)) throw ConfigError("surrogate.n_half must be positive");
  if (kappa < 0 || kappa > 1) throw ConfigError("surrogate.kappa must lie in [0, 1]");
  if (sigma_min < 0 || sigma_min >= 1) throw ConfigError("surrogate.sigma_min must lie in [0, 1)");
  if (jitter_frac < 0 || fp_rate < 0 || objectness_std < 0) {
    throw ConfigError("surrogate jitter, fp_rate and objectness_std must be non-negative");
  }
  if (class_mass_base + class_mass_gain > 1.0 || class_mass_base <= 0) {
    throw ConfigError("surrogate class mass must stay within (0, 1]");
  }
  if (prob_jitter < 0 || prob_jitter >= 1) throw ConfigError("surrogate.prob_jitter must lie in [0, 1)");
  if (!(background_alpha > 0) || !(background_beta > 0)) {
    throw ConfigError("surrogate background Beta parameters must be positive");
  }
  if (!(class_difficulty_spread > 0)) {
    throw ConfigError("surrogate.class_difficulty_spread must be positive");
  }
}

double skill_from_training(const ActiveStats& stats, const SurrogateParams& params) {
  const double n = static_cast<double>(std::max(0L, stats.n_boxes));
  const double rho = std::clamp(stats.error_fraction, 0.0, 1.0);
  const double raw = (1.0 - params.kappa * rho) * n / (n + params.n_half);
  return std::clamp(raw, params.sigma_min, 1.0 - 1e-6);
}

double class_half_saturation(const SurrogateParams& params, ClassId c, int k) {
  const double position = k > 1 ? static_cast<double>(c - 1) / (k - 1) - 0.5 : 0.0;
  return params.n_half / k * std::pow(params.class_difficulty_spread, position);
}

SkillProfile skill_profile(const TrainingSummary& summary, const SurrogateParams& params,
                           int num_classes) {
  SkillProfile profile;
  profile.overall = skill_from_training(summary.overall, params);
  profile.per_class.assign(static_cast<std::size_t>(num_classes), profile.overall);
  if (!params.per_class_skill) return profile;
  for (int c = 1; c <= num_classes; ++c) {
    SurrogateParams class_params = params;
    class_params.n_half = class_half_saturation(params, c, num_classes);
    const long n_c = static_cast<std::size_t>(c - 1) < summary.boxes_per_class.size()
                         ? summary.boxes_per_class[static_cast<std::size_t>(c - 1)]
                         : 0L;
    profile.per_class[static_cast<std::size_t>(c - 1)] =
        skill_from_training({n_c, summary.overall.error_fraction}, class_params);
  }
  return profile;
}

namespace {

double sample_beta(double a, double b, Rng& rng) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x + y > 0 ? x / (x + y) : 0.5;
}

// Multiplicative jitter then renormalization.
std::vector<double> jittered(std::vector<double> probs, double jitter, Rng& rng) {
  for (double& p : probs) p *= 1.0 + jitter * (2.0 * uniform01(rng) - 1.0);
  const double sum = std::accumulate(probs.begin(), probs.end(), 0.0);
  for (double& p : probs) p /= sum;
  return probs;
}

}  // namespace

std::vector<Prediction> predict_surrogate(const ImageRecord& image, const SkillProfile& skill,
                                          const SurrogateParams& params, int num_classes,
                                          Rng& rng) {
  std::vector<Prediction> out;
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double objectness_mean = params.objectness_base + params.objectness_gain * skill.overall;

  for (const auto& label : image.labels) {
    const ClassId c = label.true_class;
    const double s = skill.for_class(c);
    if (uniform01(rng) >= 0.5 + 0.5 * s) continue;

    const BBox& b = label.box;
    const double sd = (1.0 - s) * params.jitter_frac * std::min(b.w(), b.h());
    const double x = b.x() + sd * gauss(rng);
    const double y = b.y() + sd * gauss(rng);
    const double w = std::max(b.w() + sd * gauss(rng), 0.1 * b.w());
    const double h = std::max(b.h() + sd * gauss(rng), 0.1 * b.h());
    const double objectness =
        std::clamp(objectness_mean + params.objectness_std * gauss(rng), 0.0, 1.0);

    const double mass = params.class_mass_base + params.class_mass_gain * s;
    std::vector<double> probs(static_cast<std::size_t>(num_classes),
                              (1.0 - mass) / (num_classes - 1));
    probs[static_cast<std::size_t>(c - 1)] = mass;
    out.push_back({BBox(x, y, w, h), objectness, jittered(std::move(probs), params.prob_jitter, rng)});
  }

  const double fp_mean = params.fp_rate * (1.0 - skill.overall);
  const int n_fp = fp_mean > 0 ? std::poisson_distribution<int>(fp_mean)(rng) : 0;
  const double dim = std::min(image.width, image.height);
  for (int i = 0; i < n_fp; ++i) {
    const double w = dim * (0.1 + 0.3 * uniform01(rng));
    const double h = dim * (0.1 + 0.3 * uniform01(rng));
    const double x = (image.width - w) * uniform01(rng);
    const double y = (image.height - h) * uniform01(rng);
    const double objectness = sample_beta(params.background_alpha, params.background_beta, rng);
    std::vector<double> probs(static_cast<std::size_t>(num_classes), 1.0 / num_classes);
    out.push_back({BBox(x, y, w, h), objectness, jittered(std::move(probs), params.prob_jitter, rng)});
  }
  return out;
}

std::vector<Prediction> postprocess(std::span<const Prediction> raw, double s_eps,
                                    double nms_iou) {
  const auto kept = score_filter(raw, s_eps);
  return nms(kept, nms_iou);
}

}  // namespace noisyal
