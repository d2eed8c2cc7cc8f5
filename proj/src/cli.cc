#include "noisyal/cli.h"

#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "noisyal/config.h"
#include "noisyal/errors.h"
#include "noisyal/harness.h"
#include "noisyal/json_util.h"
#include "noisyal/metrics.h"

namespace noisyal {

namespace {

// Options that mirror ExperimentConfig fields. Values land in `flags` while
// parsing; only options given on the command line are copied over the
// config file afterwards.
class ConfigFlags {
 public:
  void add_config_file(CLI::App* app) {
    app->add_option("--config", config_path_, "JSON config file; explicit flags override it")
        ->check(CLI::ExistingFile);
  }

  template <typename T, typename Access>
  void add(CLI::App* app, const std::string& name, Access access, const std::string& help) {
    auto holder = std::make_shared<T>();
    CLI::Option* opt = app->add_option(name, *holder, help);
    appliers_.push_back([opt, holder, access](ExperimentConfig& c) {
      if (opt->count() > 0) access(c) = *holder;
    });
  }

  void add_flag(CLI::App* app, const std::string& name,
                std::function<bool&(ExperimentConfig&)> access, const std::string& help) {
    auto holder = std::make_shared<bool>(false);
    CLI::Option* opt = app->add_flag(name, *holder, help);
    appliers_.push_back([opt, holder, access](ExperimentConfig& c) {
      if (opt->count() > 0) access(c) = *holder;
    });
  }

  // Experiment parameters shared by run, sweep and eval-preds.
  void add_experiment(CLI::App* app, bool with_lambda) {
    add_config_file(app);
    add<std::uint64_t>(app, "--seed", [](ExperimentConfig& c) -> auto& { return c.seed; }, "random seed");
    add<int>(app, "--num-classes", [](ExperimentConfig& c) -> auto& { return c.num_classes; }, "number of classes K");
    add<int>(app, "--n-train", [](ExperimentConfig& c) -> auto& { return c.n_train; }, "synthetic train images");
    add<int>(app, "--n-test", [](ExperimentConfig& c) -> auto& { return c.n_test; }, "synthetic test images");
    add<int>(app, "--u-init", [](ExperimentConfig& c) -> auto& { return c.u_init; }, "initially labeled images");
    add<int>(app, "--budget", [](ExperimentConfig& c) -> auto& { return c.budget; }, "per-cycle budget");
    add<int>(app, "--cycles", [](ExperimentConfig& c) -> auto& { return c.cycles; }, "number of cycles");
    if (with_lambda) {
      add<double>(app, "--lambda", [](ExperimentConfig& c) -> auto& { return c.lambda; }, "review share of the budget");
    }
    add<double>(app, "--alpha", [](ExperimentConfig& c) -> auto& { return c.alpha; }, "miss share of the review budget");
    add<double>(app, "--gamma-l", [](ExperimentConfig& c) -> auto& { return c.gamma_l; }, "label noise level");
    add<double>(app, "--gamma-r", [](ExperimentConfig& c) -> auto& { return c.gamma_r; }, "reviewer error rate");
    add<double>(app, "--s-eps", [](ExperimentConfig& c) -> auto& { return c.s_eps; }, "objectness threshold");
    add<double>(app, "--iou-eps", [](ExperimentConfig& c) -> auto& { return c.iou_eps; }, "review matching IoU");
    add<double>(app, "--nms-iou", [](ExperimentConfig& c) -> auto& { return c.nms_iou; }, "NMS IoU threshold");
    add<double>(app, "--eval-iou", [](ExperimentConfig& c) -> auto& { return c.eval_iou; }, "evaluation IoU threshold");
    add<double>(app, "--eval-score-threshold", [](ExperimentConfig& c) -> auto& { return c.eval_score_threshold; }, "objectness threshold for evaluation");
    add<std::string>(app, "--strategy", [this](ExperimentConfig&) -> auto& { return strategy_; }, "random | entropy");
    add<std::string>(app, "--policy", [this](ExperimentConfig&) -> auto& { return policy_; }, "none | random | highest-loss");
    add_flag(app, "--review-rollover", [](ExperimentConfig& c) -> bool& { return c.review_rollover; }, "carry unused review budget into the next cycle");
    add<double>(app, "--n-half", [](ExperimentConfig& c) -> auto& { return c.surrogate.n_half; }, "surrogate half-saturation box count");
    add<double>(app, "--kappa", [](ExperimentConfig& c) -> auto& { return c.surrogate.kappa; }, "surrogate noise penalty");
    add<double>(app, "--class-difficulty-spread", [](ExperimentConfig& c) -> auto& { return c.surrogate.class_difficulty_spread; }, "surrogate per-class difficulty spread");
    add<std::string>(app, "--dataset", [](ExperimentConfig& c) -> auto& { return c.dataset_path; }, "clean dataset JSON to load instead of generating");
    add<std::string>(app, "--noise", [](ExperimentConfig& c) -> auto& { return c.noise_path; }, "noise sidecar JSON to apply instead of injecting");
    add<std::string>(app, "--predictions", [](ExperimentConfig& c) -> auto& { return c.predictions_path; }, "predictions JSON replacing the surrogate");
    add_flag(app, "--renormalize", [](ExperimentConfig& c) -> bool& { return c.renormalize_predictions; }, "rescale probability vectors that do not sum to 1");
    add<std::string>(app, "--out", [](ExperimentConfig& c) -> auto& { return c.output_dir; }, "output directory");
  }

  ExperimentConfig resolve(ExperimentConfig base = {}) {
    ExperimentConfig c = config_path_.empty() ? base : load_config(config_path_, base);
    strategy_ = std::string(to_string(c.strategy));
    policy_ = std::string(to_string(c.policy));
    for (const auto& apply : appliers_) apply(c);
    c.strategy = parse_query_strategy(strategy_);
    c.policy = parse_review_policy(policy_);
    c.validate();
    return c;
  }

 private:
  std::string config_path_;
  std::string strategy_;
  std::string policy_;
  std::vector<std::function<void(ExperimentConfig&)>> appliers_;
};

std::string curve_label(const std::string& path) {
  const std::filesystem::path p(path);
  if ((p.filename() == "aggregate.csv" || p.filename() == "metrics.csv") &&
      p.has_parent_path() && !p.parent_path().filename().empty()) {
    return p.parent_path().filename().string();
  }
  return p.stem().string();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Active learning simulator for object detection with noisy annotations and label review"};
  app.require_subcommand(1);

  // gen-data
  ConfigFlags gen_flags;
  auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset and its label noise");
  gen_flags.add_experiment(gen, true);

  // run
  ConfigFlags run_flags;
  std::vector<std::uint64_t> run_seeds;
  bool resume = false;
  int stop_after = -1;
  auto* run = app.add_subcommand("run", "run the active learning cycles");
  run_flags.add_experiment(run, true);
  run->add_option("--seeds", run_seeds, "comma-separated seeds; writes seed_<s> runs and aggregate.csv")
      ->delimiter(',');
  run->add_flag("--resume", resume, "continue from the checkpoint in the output directory");
  run->add_option("--stop-after", stop_after, "stop after this many completed cycles")
      ->check(CLI::NonNegativeNumber);

  // sweep
  ConfigFlags sweep_flags;
  std::vector<double> sweep_lambdas;
  std::vector<std::uint64_t> sweep_seeds;
  auto* sweep = app.add_subcommand("sweep", "ablation over the review share lambda");
  sweep_flags.add_experiment(sweep, false);
  sweep->add_option("--lambda", sweep_lambdas, "comma-separated lambda values")
      ->delimiter(',')
      ->required();
  sweep->add_option("--seeds", sweep_seeds, "comma-separated seeds")->delimiter(',');

  // eval-preds
  ConfigFlags eval_flags;
  auto* eval = app.add_subcommand("eval-preds", "query, review and evaluate with a predictions file");
  eval_flags.add_experiment(eval, true);

  // plot
  std::vector<std::string> plot_inputs;
  std::vector<std::string> plot_labels;
  std::string plot_out;
  std::string plot_title = "mAP vs. annotation budget";
  auto* plot = app.add_subcommand("plot", "draw mAP against cumulative budget as SVG");
  plot->add_option("inputs", plot_inputs, "metrics.csv or aggregate.csv files")
      ->required()
      ->check(CLI::ExistingFile);
  plot->add_option("--labels", plot_labels, "comma-separated curve labels")->delimiter(',');
  plot->add_option("--out", plot_out, "output SVG path")->required();
  plot->add_option("--title", plot_title, "chart title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gen->parsed()) {
      const ExperimentConfig c = gen_flags.resolve();
      const RunState state = init_run(c);
      const std::filesystem::path dir = c.output_dir;
      save_dataset(clean_copy(state.store), dir / "dataset.json");
      save_noise(extract_noise(state.store), dir / "noise.json");
      out << fmt::format("wrote {} and {}\n", (dir / "dataset.json").string(),
                         (dir / "noise.json").string());
    } else if (run->parsed()) {
      const ExperimentConfig c = run_flags.resolve();
      RunOptions options;
      options.resume = resume;
      if (stop_after >= 0) options.stop_after = stop_after;
      if (run_seeds.empty()) {
        const auto history = run_experiment(c, options);
        if (!history.empty()) {
          out << fmt::format("{} cycles, final mAP {:.4f}, metrics in {}\n", history.back().cycle,
                             history.back().map,
                             (std::filesystem::path(c.output_dir) / "metrics.csv").string());
        }
      } else {
        run_multi(c, run_seeds, options);
        out << fmt::format("{} runs, aggregate in {}\n", run_seeds.size(),
                           (std::filesystem::path(c.output_dir) / "aggregate.csv").string());
      }
    } else if (sweep->parsed()) {
      const ExperimentConfig c = sweep_flags.resolve();
      std::vector<std::uint64_t> seeds = sweep_seeds;
      if (seeds.empty()) seeds.push_back(c.seed);
      run_sweep(c, sweep_lambdas, seeds);
      for (const double l : sweep_lambdas) {
        out << (std::filesystem::path(c.output_dir) / ("lambda_" + lambda_tag(l) + ".csv")).string()
            << '\n';
      }
    } else if (eval->parsed()) {
      ExperimentConfig defaults;
      defaults.cycles = 1;
      const ExperimentConfig c = eval_flags.resolve(defaults);
      if (c.predictions_path.empty() || c.dataset_path.empty()) {
        throw ConfigError("eval-preds needs --dataset and --predictions");
      }
      const auto history = run_experiment(c);
      for (const auto& m : history) {
        out << fmt::format("cycle {}: mAP {:.4f}, labeled {}, reviews {}/{}\n", m.cycle, m.map,
                           m.boxes_labeled, m.reviews_miss, m.reviews_flip);
      }
    } else if (plot->parsed()) {
      if (!plot_labels.empty() && plot_labels.size() != plot_inputs.size()) {
        throw ConfigError("--labels needs one label per input");
      }
      std::vector<Curve> curves;
      for (std::size_t i = 0; i < plot_inputs.size(); ++i) {
        const std::string label = plot_labels.empty() ? curve_label(plot_inputs[i]) : plot_labels[i];
        curves.push_back(curve_from_csv(read_csv(plot_inputs[i]), label));
      }
      detail::write_text_file(plot_out, render_svg(curves, plot_title));
      out << "wrote " << plot_out << '\n';
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace noisyal
