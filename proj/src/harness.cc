#include "noisyal/harness.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "noisyal/errors.h"
#include "noisyal/eval.h"
#include "noisyal/json_util.h"
#include "noisyal/query.h"
#include "noisyal/random.h"

namespace noisyal {

namespace {

using detail::ordered_json;

void emit(const AuditSink& audit, const ordered_json& record) {
  if (audit) audit(record.dump());
}

ordered_json event(int cycle, std::string_view stage) {
  ordered_json j;
  j["cycle"] = cycle;
  j["stage"] = stage;
  return j;
}

std::uint64_t key(std::int64_t v) { return static_cast<std::uint64_t>(v); }

// Lazily produced predictions of one cycle. Each image draws from its own
// stream, so the result does not depend on the order of requests.
class CyclePredictions {
 public:
  CyclePredictions(const RunState& state, const SkillProfile& skill, const PredictionMap* fixed)
      : state_(state), skill_(skill), fixed_(fixed) {}

  const std::vector<Prediction>& train(ImageId id) {
    auto it = train_.find(id);
    if (it != train_.end()) return it->second;
    const auto& c = state_.config;
    const auto raw = raw_predictions(state_.store.train_image(id), StreamTag::kPredictTrain);
    return train_.emplace(id, postprocess(raw, c.s_eps, c.nms_iou)).first->second;
  }

  PredictionMap test() {
    const auto& c = state_.config;
    PredictionMap out;
    for (const auto& image : state_.store.test) {
      const auto raw = raw_predictions(image, StreamTag::kPredictTest);
      out.emplace(image.id, postprocess(raw, c.eval_score_threshold, c.nms_iou));
    }
    return out;
  }

  // Predictions for every requested image, keyed by id.
  const PredictionMap& cache() const { return train_; }

 private:
  std::vector<Prediction> raw_predictions(const ImageRecord& image, StreamTag tag) const {
    if (fixed_ != nullptr) {
      auto it = fixed_->find(image.id);
      return it == fixed_->end() ? std::vector<Prediction>{} : it->second;
    }
    const auto& c = state_.config;
    Rng rng = make_stream(c.seed, tag, {key(state_.cycle), key(image.id)});
    return predict_surrogate(image, skill_, c.surrogate, c.num_classes, rng);
  }

  const RunState& state_;
  const SkillProfile& skill_;
  const PredictionMap* fixed_;
  PredictionMap train_;
};

std::vector<long> observed_histogram(const DatasetStore& store) {
  std::vector<long> hist(static_cast<std::size_t>(store.catalog.size()), 0);
  for (const auto& image : store.train) {
    if (image.pool_state != PoolState::kActive) continue;
    for (const auto& l : image.labels) {
      if (l.present) ++hist[static_cast<std::size_t>(l.observed_class - 1)];
    }
  }
  return hist;
}

DatasetStore build_dataset(const ExperimentConfig& c) {
  if (c.dataset_path.empty()) {
    Rng rng = make_stream(c.seed, StreamTag::kGenerate);
    return generate_synthetic_dataset(c.synthetic_spec(), rng);
  }
  DatasetStore store = load_dataset(c.dataset_path);
  if (store.catalog.size() != c.num_classes) {
    throw ConfigError(fmt::format("num_classes is {} but {} declares {} classes", c.num_classes,
                                  c.dataset_path, store.catalog.size()));
  }
  if (static_cast<std::size_t>(c.u_init) > store.train.size()) {
    throw ConfigError(fmt::format("u_init {} exceeds the {} train images of {}", c.u_init,
                                  store.train.size(), c.dataset_path));
  }
  return store;
}

}  // namespace

ActiveStats active_stats(const DatasetStore& store) {
  ActiveStats stats;
  long objects = 0;
  long errors = 0;
  for (const auto& image : store.train) {
    if (image.pool_state != PoolState::kActive) continue;
    for (const auto& l : image.labels) {
      ++objects;
      if (l.present) ++stats.n_boxes;
      if (l.is_error()) ++errors;
    }
  }
  stats.error_fraction = objects == 0 ? 0.0 : static_cast<double>(errors) / objects;
  return stats;
}

TrainingSummary training_summary(const DatasetStore& store) {
  TrainingSummary summary{active_stats(store),
                          std::vector<long>(static_cast<std::size_t>(store.catalog.size()), 0)};
  for (const auto& image : store.train) {
    if (image.pool_state != PoolState::kActive) continue;
    for (const auto& l : image.labels) {
      if (l.present) ++summary.boxes_per_class[static_cast<std::size_t>(l.true_class - 1)];
    }
  }
  return summary;
}

RunState init_run(const ExperimentConfig& config, const AuditSink& audit) {
  config.validate();
  RunState state;
  state.config = config;
  const DatasetStore clean = build_dataset(config);
  if (config.noise_path.empty()) {
    Rng rng = make_stream(config.seed, StreamTag::kNoise);
    state.store = inject_noise(clean, config.gamma_l, rng);
  } else {
    state.store = apply_noise(clean, load_noise(config.noise_path));
  }

  std::vector<ImageId> ids;
  ids.reserve(state.store.train.size());
  for (const auto& image : state.store.train) ids.push_back(image.id);
  Rng rng = make_stream(config.seed, StreamTag::kInitialSet);
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(static_cast<std::size_t>(config.u_init));
  std::sort(ids.begin(), ids.end());
  for (const ImageId id : ids) {
    state.initial_boxes += static_cast<long>(reveal_labels(state.store, id).size());
  }
  state.budget_total = state.initial_boxes;

  auto j = event(0, "init");
  j["train_images"] = state.store.train.size();
  j["test_images"] = state.store.test.size();
  j["initial_images"] = ids.size();
  j["initial_boxes"] = state.initial_boxes;
  emit(audit, j);
  return state;
}

CycleMetrics run_cycle(RunState& state, const PredictionMap* fixed, const AuditSink& audit) {
  const auto& c = state.config;
  if (state.cycle >= c.cycles) {
    throw RuntimeError(fmt::format("run already completed {} cycles", c.cycles));
  }
  const int cycle = state.cycle + 1;
  auto& store = state.store;

  // (1) Predict with the skill reached at cycle start.
  const SkillProfile skill = skill_profile(training_summary(store), c.surrogate, c.num_classes);
  CyclePredictions preds(state, skill, fixed);
  {
    auto j = event(cycle, "predict");
    j["source"] = fixed != nullptr ? "file" : "surrogate";
    j["skill"] = fixed != nullptr ? 0.0 : skill.overall;
    emit(audit, j);
  }

  // (2) Rank the pool.
  std::vector<ImageId> pool;
  for (const auto& image : store.train) {
    if (image.pool_state == PoolState::kUnlabeled) pool.push_back(image.id);
  }
  if (c.strategy == QueryStrategy::kEntropy) {
    for (const ImageId id : pool) preds.train(id);
  }
  const auto weights =
      class_weights(observed_histogram(store), c.class_weight_min, c.class_weight_max);
  Rng query_rng = make_stream(c.seed, StreamTag::kQuery, {key(cycle)});
  const auto ranking = rank_pool(pool, c.strategy, preds.cache(), weights, query_rng);

  BudgetLedger ledger{c.budget, c.lambda, c.alpha, state.carry, 0, 0, 0};
  const int c_q = ledger.query_budget();
  {
    auto j = event(cycle, "query");
    j["strategy"] = to_string(c.strategy);
    j["pool"] = pool.size();
    j["query_budget"] = c_q;
    emit(audit, j);
  }

  // (3) Label in rank order until the query budget is reached. An image that
  // would push the spend past the whole cycle budget is not started.
  int labeled_images = 0;
  for (const ImageId id : ranking) {
    if (ledger.spent_query >= c_q) break;
    const int cost = store.train_image(id).present_count();
    if (ledger.spent_query + cost > ledger.cycle_budget()) break;
    reveal_labels(store, id);
    ledger.spent_query += cost;
    ++labeled_images;
    auto j = event(cycle, "label");
    j["image"] = id;
    j["cost"] = cost;
    emit(audit, j);
  }
  const bool exhausted =
      static_cast<std::size_t>(labeled_images) == ranking.size() && ledger.spent_query < c_q;
  if (exhausted) {
    auto j = event(cycle, "pool_exhausted");
    j["spent_query"] = ledger.spent_query;
    emit(audit, j);
  }

  // (4) Review all active images with this cycle's predictions.
  std::vector<ReviewImage> review_images;
  for (const auto& image : store.train) {
    if (image.pool_state != PoolState::kActive) continue;
    review_images.push_back({image.id, {}, noisy_labels(image)});
  }
  if (c.policy != ReviewPolicy::kNone) {
    for (auto& ri : review_images) ri.predictions = preds.train(ri.id);
  }
  Rng review_rng = make_stream(c.seed, StreamTag::kReview, {key(cycle)});
  const ReviewResult review =
      run_review(review_images, store, c.policy, ledger, c.gamma_r, c.iou_eps, review_rng);
  for (const auto& o : review.outcomes) {
    auto j = event(cycle, "review");
    j["kind"] = to_string(o.proposal.kind);
    j["image"] = o.proposal.image_id;
    j["target"] = o.proposal.target;
    j["was_true_error"] = o.was_true_error;
    j["action"] = to_string(o.action);
    emit(audit, j);
  }
  if (review.forfeited_miss > 0 || review.forfeited_flip > 0) {
    auto j = event(cycle, "forfeit");
    j["miss"] = review.forfeited_miss;
    j["flip"] = review.forfeited_flip;
    j["rolled_over"] = c.review_rollover;
    emit(audit, j);
  }

  // (5) Evaluate on the clean test split with the same skill.
  const auto eval_images = make_eval_images(store.test, preds.test());
  const APResult ap = mean_average_precision(eval_images, c.num_classes, c.eval_iou);
  {
    auto j = event(cycle, "eval");
    j["map"] = ap.map;
    emit(audit, j);
  }

  // (6) Record.
  const ActiveStats after = active_stats(store);
  CycleMetrics m;
  m.cycle = cycle;
  state.budget_total += ledger.total_spent();
  m.budget_total = state.budget_total;
  m.boxes_labeled = ledger.spent_query;
  m.reviews_miss = ledger.spent_review_miss;
  m.reviews_flip = ledger.spent_review_flip;
  m.map = ap.map;
  m.precision_miss = review_precision(review.outcomes, ErrorKind::kMiss);
  m.precision_flip = review_precision(review.outcomes, ErrorKind::kFlip);
  m.active_images = static_cast<int>(review_images.size());
  m.active_boxes = after.n_boxes;
  m.active_error_fraction = after.error_fraction;
  m.skill = fixed != nullptr ? 0.0 : skill.overall;
  m.forfeited_miss = review.forfeited_miss;
  m.forfeited_flip = review.forfeited_flip;
  m.pool_exhausted = exhausted;
  m.base_rate_miss = review.base_rate_miss;
  m.base_rate_flip = review.base_rate_flip;

  state.carry = c.review_rollover ? ledger.cycle_budget() - ledger.total_spent() : 0;
  state.ledgers.push_back(ledger);
  state.metrics.push_back(m);
  state.cycle = cycle;
  return m;
}

std::optional<PredictionMap> load_fixed_predictions(const ExperimentConfig& config,
                                                    const DatasetStore& store) {
  if (config.predictions_path.empty()) return std::nullopt;
  return load_predictions(config.predictions_path, store, config.renormalize_predictions);
}

std::vector<CycleMetrics> simulate(const ExperimentConfig& config) {
  RunState state = init_run(config);
  const auto fixed = load_fixed_predictions(config, state.store);
  while (state.cycle < config.cycles) run_cycle(state, fixed ? &*fixed : nullptr);
  return state.metrics;
}

std::vector<CycleMetrics> run_experiment(const ExperimentConfig& config,
                                         const RunOptions& options) {
  const std::filesystem::path dir = config.output_dir;
  const auto state_path = dir / "state.bin";
  const auto audit_path = dir / "audit.log";

  RunState state;
  std::ofstream audit_file;
  if (options.resume) {
    state = load_state(state_path);
    // The directory may have moved since the checkpoint was written.
    state.config.output_dir = config.output_dir;
    if (state.config != config) {
      throw ConfigError(fmt::format("{} was written with a different configuration",
                                    state_path.string()));
    }
    // Drop events logged after the checkpoint.
    std::error_code ec;
    std::filesystem::resize_file(audit_path, state.audit_bytes, ec);
    if (ec) throw RuntimeError(fmt::format("cannot truncate {}: {}", audit_path.string(), ec.message()));
    audit_file.open(audit_path, std::ios::binary | std::ios::app);
  } else {
    config.validate();
    std::filesystem::create_directories(dir);
    audit_file.open(audit_path, std::ios::binary | std::ios::trunc);
  }
  if (!audit_file) throw RuntimeError(fmt::format("cannot open {}", audit_path.string()));
  std::uint64_t audit_bytes = state.audit_bytes;
  AuditSink audit = [&](std::string_view line) {
    audit_file << line << '\n';
    audit_bytes += line.size() + 1;
  };
  auto checkpoint = [&](RunState& s) {
    audit_file.flush();
    s.audit_bytes = audit_bytes;
    save_state(s, state_path);
  };

  if (!options.resume) {
    save_config(config, dir / "config.json");
    state = init_run(config, audit);
    save_dataset(clean_copy(state.store), dir / "dataset.json");
    save_noise(extract_noise(state.store), dir / "noise.json");
    checkpoint(state);
  }
  const auto fixed = load_fixed_predictions(config, state.store);

  while (state.cycle < config.cycles) {
    if (options.stop_after && state.cycle >= *options.stop_after) break;
    RunState before = state;
    try {
      run_cycle(state, fixed ? &*fixed : nullptr, audit);
    } catch (...) {
      save_state(before, state_path);
      throw;
    }
    checkpoint(state);
    write_metrics_csv(state.metrics, dir / "metrics.csv");
  }
  if (!audit_file) throw RuntimeError(fmt::format("failed writing {}", audit_path.string()));
  return state.metrics;
}

std::vector<std::vector<CycleMetrics>> run_multi(const ExperimentConfig& config,
                                                 std::span<const std::uint64_t> seeds,
                                                 const RunOptions& options) {
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  std::vector<std::vector<CycleMetrics>> runs;
  for (const std::uint64_t seed : seeds) {
    ExperimentConfig c = config;
    c.seed = seed;
    c.output_dir = (std::filesystem::path(config.output_dir) / fmt::format("seed_{}", seed)).string();
    runs.push_back(run_experiment(c, options));
  }
  write_aggregate_csv(runs, std::filesystem::path(config.output_dir) / "aggregate.csv");
  return runs;
}

std::string lambda_tag(double lambda) { return fmt::format("{:.2f}", lambda); }

void run_sweep(const ExperimentConfig& config, std::span<const double> lambdas,
               std::span<const std::uint64_t> seeds) {
  if (lambdas.empty()) throw ConfigError("at least one lambda value is required");
  const std::filesystem::path dir = config.output_dir;
  std::vector<Curve> curves;
  for (const double lambda : lambdas) {
    ExperimentConfig c = config;
    c.lambda = lambda;
    const std::string tag = lambda_tag(lambda);
    c.output_dir = (dir / ("lambda_" + tag)).string();
    const auto runs = run_multi(c, seeds);
    const std::string csv = aggregate_csv(runs);
    detail::write_text_file(dir / ("lambda_" + tag + ".csv"), csv);
    curves.push_back(curve_from_csv(parse_csv(csv), "lambda = " + tag));
  }
  detail::write_text_file(dir / "sweep.svg", render_svg(curves, "mAP vs. annotation budget"));
}

}  // namespace noisyal
