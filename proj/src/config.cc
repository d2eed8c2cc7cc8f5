#include "noisyal/config.h"

#include <cmath>
#include <set>

#include "noisyal/errors.h"
#include "noisyal/json_util.h"

namespace noisyal {

namespace {

void check_unit(double v, std::string_view name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ConfigError(std::string(name) + " must lie in [0, 1], got " + std::to_string(v));
  }
}

using detail::ordered_json;

ordered_json synthetic_json(const SyntheticSpec& s) {
  ordered_json j;
  j["min_boxes"] = s.min_boxes;
  j["max_boxes"] = s.max_boxes;
  j["image_width"] = s.image_width;
  j["image_height"] = s.image_height;
  j["min_box_size"] = s.min_box_size;
  j["max_box_size"] = s.max_box_size;
  j["max_pairwise_iou"] = s.max_pairwise_iou;
  j["max_attempts"] = s.max_attempts;
  j["class_imbalance"] = s.class_imbalance;
  return j;
}

ordered_json surrogate_json(const SurrogateParams& p) {
  ordered_json j;
  j["n_half"] = p.n_half;
  j["kappa"] = p.kappa;
  j["sigma_min"] = p.sigma_min;
  j["jitter_frac"] = p.jitter_frac;
  j["fp_rate"] = p.fp_rate;
  j["objectness_std"] = p.objectness_std;
  j["objectness_base"] = p.objectness_base;
  j["objectness_gain"] = p.objectness_gain;
  j["class_mass_base"] = p.class_mass_base;
  j["class_mass_gain"] = p.class_mass_gain;
  j["prob_jitter"] = p.prob_jitter;
  j["background_alpha"] = p.background_alpha;
  j["background_beta"] = p.background_beta;
  j["class_difficulty_spread"] = p.class_difficulty_spread;
  j["per_class_skill"] = p.per_class_skill;
  return j;
}

// Reads known keys of `obj` into fields, rejecting anything unknown.
class Reader {
 public:
  Reader(const nlohmann::json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <typename T>
  void get(std::string_view key, T& field) {
    seen_.insert(std::string(key));
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError("expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw ConfigError("expected an integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw ConfigError("expected a number");
      } else {
        if (!it->is_string()) throw ConfigError("expected a string");
      }
      field = it->template get<T>();
    } catch (const std::exception& e) {
      throw ConfigError(path_ + "." + std::string(key) + ": " + e.what());
    }
  }

  const nlohmann::json* child(std::string_view key) {
    seen_.insert(std::string(key));
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) throw ConfigError(path_ + ": unknown key '" + key + "'");
    }
  }

 private:
  const nlohmann::json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

void ExperimentConfig::validate() const {
  if (num_classes < 2) throw ConfigError("num_classes must be at least 2");
  if (n_train < 0 || n_test < 0) throw ConfigError("n_train and n_test must be non-negative");
  if (u_init < 0 || u_init > n_train) throw ConfigError("u_init must lie in [0, n_train]");
  if (budget < 1) throw ConfigError("budget must be at least 1");
  if (cycles < 1) throw ConfigError("cycles must be at least 1");
  check_unit(lambda, "lambda");
  check_unit(alpha, "alpha");
  check_unit(gamma_l, "gamma_l");
  check_unit(gamma_r, "gamma_r");
  check_unit(s_eps, "s_eps");
  check_unit(nms_iou, "nms_iou");
  check_unit(eval_score_threshold, "eval_score_threshold");
  if (!(iou_eps > 0.0 && iou_eps < 1.0)) throw ConfigError("iou_eps must lie in (0, 1)");
  if (!(eval_iou > 0.0 && eval_iou <= 1.0)) throw ConfigError("eval_iou must lie in (0, 1]");
  if (!(class_weight_min > 0) || class_weight_max < class_weight_min) {
    throw ConfigError("class weight clamp must be a positive, non-empty range");
  }
  surrogate.validate();
  if (!noise_path.empty() && dataset_path.empty()) {
    throw ConfigError("noise_path requires dataset_path");
  }
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

SyntheticSpec ExperimentConfig::synthetic_spec() const {
  SyntheticSpec spec = synthetic;
  spec.n_train = n_train;
  spec.n_test = n_test;
  spec.num_classes = num_classes;
  return spec;
}

std::string config_to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["num_classes"] = c.num_classes;
  j["n_train"] = c.n_train;
  j["n_test"] = c.n_test;
  j["u_init"] = c.u_init;
  j["budget"] = c.budget;
  j["cycles"] = c.cycles;
  j["lambda"] = c.lambda;
  j["alpha"] = c.alpha;
  j["gamma_l"] = c.gamma_l;
  j["gamma_r"] = c.gamma_r;
  j["s_eps"] = c.s_eps;
  j["iou_eps"] = c.iou_eps;
  j["nms_iou"] = c.nms_iou;
  j["eval_iou"] = c.eval_iou;
  j["eval_score_threshold"] = c.eval_score_threshold;
  j["class_weight_min"] = c.class_weight_min;
  j["class_weight_max"] = c.class_weight_max;
  j["strategy"] = std::string(to_string(c.strategy));
  j["policy"] = std::string(to_string(c.policy));
  j["review_rollover"] = c.review_rollover;
  j["synthetic"] = synthetic_json(c.synthetic);
  j["surrogate"] = surrogate_json(c.surrogate);
  j["dataset_path"] = c.dataset_path;
  j["noise_path"] = c.noise_path;
  j["predictions_path"] = c.predictions_path;
  j["renormalize_predictions"] = c.renormalize_predictions;
  j["output_dir"] = c.output_dir;
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(std::string_view text, ExperimentConfig c) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  Reader r(root, "config");
  r.get("seed", c.seed);
  r.get("num_classes", c.num_classes);
  r.get("n_train", c.n_train);
  r.get("n_test", c.n_test);
  r.get("u_init", c.u_init);
  r.get("budget", c.budget);
  r.get("cycles", c.cycles);
  r.get("lambda", c.lambda);
  r.get("alpha", c.alpha);
  r.get("gamma_l", c.gamma_l);
  r.get("gamma_r", c.gamma_r);
  r.get("s_eps", c.s_eps);
  r.get("iou_eps", c.iou_eps);
  r.get("nms_iou", c.nms_iou);
  r.get("eval_iou", c.eval_iou);
  r.get("eval_score_threshold", c.eval_score_threshold);
  r.get("class_weight_min", c.class_weight_min);
  r.get("class_weight_max", c.class_weight_max);
  std::string strategy(to_string(c.strategy));
  std::string policy(to_string(c.policy));
  r.get("strategy", strategy);
  r.get("policy", policy);
  c.strategy = parse_query_strategy(strategy);
  c.policy = parse_review_policy(policy);
  r.get("review_rollover", c.review_rollover);
  if (const auto* s = r.child("synthetic")) {
    Reader sr(*s, "config.synthetic");
    sr.get("min_boxes", c.synthetic.min_boxes);
    sr.get("max_boxes", c.synthetic.max_boxes);
    sr.get("image_width", c.synthetic.image_width);
    sr.get("image_height", c.synthetic.image_height);
    sr.get("min_box_size", c.synthetic.min_box_size);
    sr.get("max_box_size", c.synthetic.max_box_size);
    sr.get("max_pairwise_iou", c.synthetic.max_pairwise_iou);
    sr.get("max_attempts", c.synthetic.max_attempts);
    sr.get("class_imbalance", c.synthetic.class_imbalance);
    sr.finish();
  }
  if (const auto* s = r.child("surrogate")) {
    Reader sr(*s, "config.surrogate");
    auto& p = c.surrogate;
    sr.get("n_half", p.n_half);
    sr.get("kappa", p.kappa);
    sr.get("sigma_min", p.sigma_min);
    sr.get("jitter_frac", p.jitter_frac);
    sr.get("fp_rate", p.fp_rate);
    sr.get("objectness_std", p.objectness_std);
    sr.get("objectness_base", p.objectness_base);
    sr.get("objectness_gain", p.objectness_gain);
    sr.get("class_mass_base", p.class_mass_base);
    sr.get("class_mass_gain", p.class_mass_gain);
    sr.get("prob_jitter", p.prob_jitter);
    sr.get("background_alpha", p.background_alpha);
    sr.get("background_beta", p.background_beta);
    sr.get("class_difficulty_spread", p.class_difficulty_spread);
    sr.get("per_class_skill", p.per_class_skill);
    sr.finish();
  }
  r.get("dataset_path", c.dataset_path);
  r.get("noise_path", c.noise_path);
  r.get("predictions_path", c.predictions_path);
  r.get("renormalize_predictions", c.renormalize_predictions);
  r.get("output_dir", c.output_dir);
  r.finish();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::string text;
  try {
    text = detail::read_text_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  try {
    return config_from_json(text, std::move(base));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void save_config(const ExperimentConfig& config, const std::filesystem::path& path) {
  detail::write_text_file(path, config_to_json(config));
}

}  // namespace noisyal
