#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "noisyal/config.h"
#include "noisyal/dataset.h"
#include "noisyal/detector.h"
#include "noisyal/metrics.h"
#include "noisyal/review.h"

namespace noisyal {

// Receives one JSON object per line, in event order.
using AuditSink = std::function<void(std::string_view line)>;

// Complete state between two cycles. Random streams are derived from
// (seed, purpose, cycle), so no generator state is needed to resume.
struct RunState {
  ExperimentConfig config;
  int cycle = 0;  // completed cycles
  DatasetStore store;
  long initial_boxes = 0;
  long budget_total = 0;  // cumulative spend including the initial set
  int carry = 0;          // budget rolled into the next cycle
  std::vector<BudgetLedger> ledgers;
  std::vector<CycleMetrics> metrics;
  std::uint64_t audit_bytes = 0;  // audit log length at this state

  friend bool operator==(const RunState&, const RunState&) = default;
};

// Hidden-truth statistics of the active set: present boxes and the fraction
// of ground-truth objects that are missed or carry a wrong class.
ActiveStats active_stats(const DatasetStore& store);
TrainingSummary training_summary(const DatasetStore& store);

// Builds or loads the dataset, applies label noise once and reveals u_init
// uniformly drawn images.
RunState init_run(const ExperimentConfig& config, const AuditSink& audit = {});

// One predict -> query -> label -> review -> eval cycle. With `fixed` set,
// its predictions replace the surrogate.
CycleMetrics run_cycle(RunState& state, const PredictionMap* fixed = nullptr,
                       const AuditSink& audit = {});

// Loads the fixed predictions named by the config, if any.
std::optional<PredictionMap> load_fixed_predictions(const ExperimentConfig& config,
                                                    const DatasetStore& store);

// All cycles in memory without touching the file system.
std::vector<CycleMetrics> simulate(const ExperimentConfig& config);

struct RunOptions {
  bool resume = false;          // continue from output_dir/state.bin
  std::optional<int> stop_after;  // stop once this many cycles are complete
};

// Runs into config.output_dir: config.json, dataset.json, noise.json,
// metrics.csv, audit.log and a state.bin checkpoint after every cycle.
// A failing cycle leaves the last checkpoint in place.
std::vector<CycleMetrics> run_experiment(const ExperimentConfig& config,
                                         const RunOptions& options = {});

// One run per seed in output_dir/seed_<s>, plus output_dir/aggregate.csv.
std::vector<std::vector<CycleMetrics>> run_multi(const ExperimentConfig& config,
                                                 std::span<const std::uint64_t> seeds,
                                                 const RunOptions& options = {});

// Lambda ablation: run_multi per value in output_dir/lambda_<v>, one curve
// file output_dir/lambda_<v>.csv per value and a combined sweep.svg.
void run_sweep(const ExperimentConfig& config, std::span<const double> lambdas,
               std::span<const std::uint64_t> seeds);

std::string lambda_tag(double lambda);

// state.bin: 8-byte magic "NALSTATE", little-endian uint32 format version,
// then the state as CBOR.
inline constexpr std::uint32_t kStateVersion = 1;
std::string serialize_state(const RunState& state);
RunState deserialize_state(std::string_view bytes);
void save_state(const RunState& state, const std::filesystem::path& path);
RunState load_state(const std::filesystem::path& path);

}  // namespace noisyal
