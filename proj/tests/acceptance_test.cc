// Acceptance checks, one PASS/FAIL line per criterion. Exit status is
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "noisyal/dataset.h"
#include "noisyal/eval.h"
#include "noisyal/geometry.h"
#include "noisyal/harness.h"
#include "noisyal/query.h"
#include "noisyal/review.h"
#include "oracles.h"
#include "test_util.h"

namespace noisyal {
namespace {

// Tolerances and limits, fixed by the acceptance contract.
constexpr double kApTolerance = 1e-9;
constexpr double kEntropyTolerance = 1e-12;
constexpr double kReviewerNoiseLow = 0.04;
constexpr double kReviewerNoiseHigh = 0.06;
constexpr double kMissPrecisionMin = 0.85;
constexpr double kFlipPrecisionMin = 0.6;
constexpr double kRandomPolicySlack = 0.05;
constexpr double kMapPointGap = 0.01;  // one mAP point
// One-sided Student t critical value, 0.1 significance, 4 degrees of freedom
// (five paired seeds).
constexpr double kTCritical = 1.5332;
constexpr int kSeeds = 5;
constexpr int kLastCycles = 5;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int number, const char* name, const Verdict& v, double secs, double limit_secs) {
  const bool in_time = limit_secs <= 0 || secs < limit_secs;
  const bool ok = v.pass && in_time;
  if (!ok) ++failures;
  std::string timing = fmt::format("{:.1f}s", secs);
  if (limit_secs > 0) timing += fmt::format(" of {:.0f}s", limit_secs);
  std::printf("%s  %d. %s: %s [%s]\n", ok ? "PASS" : "FAIL", number, name, v.detail.c_str(),
              timing.c_str());
  std::fflush(stdout);
}

template <typename F>
void check(int number, const char* name, double limit_secs, F&& body) {
  const auto t0 = Clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  report(number, name, v, seconds_since(t0), limit_secs);
}

// --- 1 ---------------------------------------------------------------------

DatasetStore store_with_labels(int g) {
  DatasetStore s;
  s.catalog = ClassCatalog({"a", "b", "c", "d"});
  LabelId id = 1;
  for (ImageId i = 1; id <= g; ++i) {
    ImageRecord img{i, 128, 128, {}};
    for (int j = 0; j < 5 && id <= g; ++j, ++id) {
      img.labels.push_back({id, BBox(20.0 * j, 10, 15, 15), static_cast<ClassId>(1 + id % 4),
                            static_cast<ClassId>(1 + id % 4), true, Provenance::kClean});
    }
    s.train.push_back(std::move(img));
  }
  s.test.push_back({100000, 128, 128, {{900000, BBox(1, 1, 10, 10), 2, 2, true, Provenance::kClean}}});
  return s;
}

Verdict noise_exactness() {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 100; ++trial) {
    const int g = 1 + static_cast<int>(gen() % 600);
    const int percent = static_cast<int>(gen() % 101);  // gamma_l = percent / 100
    const long want = static_cast<long>(percent) * g / 200;  // integer floor of gamma/2 * G
    const auto clean = store_with_labels(g);
    Rng rng(gen());
    const auto noisy = inject_noise(clean, percent / 100.0, rng);
    long misses = 0, flips = 0;
    for (const auto& img : noisy.train) {
      for (const auto& l : img.labels) {
        if (!l.present) {
          ++misses;
          if (l.observed_class != l.true_class) return {false, fmt::format("trial {}: a missed label is also flipped", trial)};
        } else if (l.observed_class != l.true_class) {
          ++flips;
        }
      }
    }
    if (misses != want || flips != want) {
      return {false, fmt::format("trial {} (G={}, gamma={}): {} misses, {} flips, want {}", trial, g,
                                 percent / 100.0, misses, flips, want)};
    }
    if (noisy.test != clean.test) return {false, fmt::format("trial {}: test split changed", trial)};
  }
  return {true, "100 (G, gamma) pairs exact, disjoint, test split untouched"};
}

// --- 2 ---------------------------------------------------------------------

Verdict geometry_oracles() {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 1 + static_cast<int>(gen() % 3);
    const auto preds = oracle::random_predictions(gen, 1 + static_cast<int>(gen() % 8), k, 60);
    const auto kept = nms(preds, 0.5);
    const auto want = oracle::nms(preds, 0.5);
    if (kept.size() != want.size()) return {false, fmt::format("nms trial {}: size mismatch", trial)};
    for (std::size_t i = 0; i < kept.size(); ++i) {
      const auto& p = preds[want[i]];
      if (!(kept[i].box == p.box) || kept[i].objectness != p.objectness) {
        return {false, fmt::format("nms trial {}: survivor {} differs", trial, i)};
      }
    }
  }
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 1 + static_cast<int>(gen() % 3);
    const auto imgs = oracle::random_eval_instance(gen, k);
    const auto want = oracle::mean_ap(imgs, k, 0.5);
    if (!want) continue;
    worst = std::max(worst, std::abs(mean_average_precision(imgs, k).map - *want));
  }
  if (worst > kApTolerance) return {false, fmt::format("max mAP deviation {:.3g}", worst)};
  return {true, fmt::format("1000 NMS instances exact; 1000 mAP instances, max deviation {:.1g}", worst)};
}

// --- 3 ---------------------------------------------------------------------

Verdict entropy_and_ce() {
  const std::vector<double> uniform(10, 0.1);
  const double h_err = std::abs(entropy(uniform) - std::log(10.0));
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(1e-6, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    const int k = 2 + static_cast<int>(gen() % 12);
    std::vector<double> p(static_cast<std::size_t>(k));
    double sum = 0;
    for (double& x : p) sum += (x = u(gen));
    for (double& x : p) x /= sum;
    const ClassId observed = static_cast<ClassId>(1 + gen() % static_cast<std::uint64_t>(k));
    const std::vector<Prediction> preds{{BBox(0, 0, 10, 10), 0.9, p}};
    const ReviewImage img{1, preds, {{1, BBox(0, 0, 10, 10), observed}}};
    Rng rng(1);
    const auto props = flip_proposals(std::span(&img, 1), 0.3, ReviewPolicy::kHighestLoss, rng);
    if (props.size() != 1) return {false, "flip proposal missing"};
    worst = std::max(worst, std::abs(props[0].rank_score + std::log(p[static_cast<std::size_t>(observed - 1)])));
  }
  const bool ok = h_err <= kEntropyTolerance && worst <= kEntropyTolerance;
  return {ok, fmt::format("|H(uniform10) - ln 10| = {:.1g}; max CE deviation over 1e4 vectors {:.1g}",
                          h_err, worst)};
}

// --- 4 ---------------------------------------------------------------------

Verdict budget_conservation() {
  ExperimentConfig c;  // B = 200, lambda = 0.2, alpha = 0.5, 20 cycles
  RunState s = init_run(c);
  long cumulative = s.initial_boxes;
  int equal_cycles = 0;
  while (s.cycle < c.cycles) {
    const auto m = run_cycle(s);
    const int spend = m.boxes_labeled + m.reviews_miss + m.reviews_flip;
    if (spend != s.ledgers.back().total_spent()) return {false, fmt::format("cycle {}: ledger disagrees", m.cycle)};
    if (spend > c.budget) return {false, fmt::format("cycle {}: spent {}", m.cycle, spend)};
    const bool exhausted = m.pool_exhausted || m.forfeited_miss > 0 || m.forfeited_flip > 0;
    if (!exhausted && spend != c.budget) {
      return {false, fmt::format("cycle {}: spent {} without exhaustion", m.cycle, spend)};
    }
    equal_cycles += spend == c.budget;
    cumulative += spend;
    if (m.budget_total != cumulative) return {false, fmt::format("cycle {}: budget axis drifts", m.cycle)};
  }
  return {true, fmt::format("{} cycles, {} at full spend, budget axis exact", c.cycles, equal_cycles)};
}

// --- 5 ---------------------------------------------------------------------

Verdict reviewer_noise() {
  constexpr int kTrials = 20000;
  constexpr double kGamma = 0.05;
  DatasetStore s;
  s.catalog = ClassCatalog({"a", "b", "c"});
  s.train.push_back({1, 100, 100, {{1, BBox(0, 0, 10, 10), 1, 2, true, Provenance::kFlipped},
                                   {2, BBox(50, 50, 10, 10), 3, 3, false, Provenance::kMissed}}});
  s.train[0].pool_state = PoolState::kActive;
  Rng rng(5);
  int corrupted = 0, overlooked = 0;
  for (int i = 0; i < kTrials; ++i) {
    auto flip_store = s;
    corrupted += adjudicate_flip({ErrorKind::kFlip, 1, 1, BBox(0, 0, 10, 10), 1.0}, flip_store, kGamma, rng)
                     .action == ReviewAction::kCorrupted;
    auto miss_store = s;
    overlooked += adjudicate_miss({ErrorKind::kMiss, 1, 0, BBox(50, 50, 10, 10), 0.9}, miss_store, 0.3,
                                  kGamma, rng)
                      .action == ReviewAction::kOverlooked;
  }
  const double fc = static_cast<double>(corrupted) / kTrials;
  const double fo = static_cast<double>(overlooked) / kTrials;
  auto inside = [](double f) { return f >= kReviewerNoiseLow && f <= kReviewerNoiseHigh; };
  return {inside(fc) && inside(fo),
          fmt::format("corrupted {:.4f}, overlooked {:.4f} over {} adjudications each", fc, fo, kTrials)};
}

// --- 6 to 8: shared multi-seed runs ------------------------------------------

struct Variant {
  QueryStrategy strategy;
  ReviewPolicy policy;
  double lambda;
  auto operator<=>(const Variant&) const = default;
};

std::map<Variant, std::vector<std::vector<CycleMetrics>>> run_cache;
std::map<Variant, double> run_seconds;  // wall time of each variant's seeds

double seconds_of(std::initializer_list<Variant> vs) {
  double s = 0;
  for (const auto& v : vs) s += run_seconds.at(v);
  return s;
}

const std::vector<std::vector<CycleMetrics>>& runs(const Variant& v) {
  auto it = run_cache.find(v);
  if (it != run_cache.end()) return it->second;
  const auto t0 = Clock::now();
  std::vector<std::vector<CycleMetrics>> out;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    ExperimentConfig c;
    c.seed = static_cast<std::uint64_t>(seed);
    c.strategy = v.strategy;
    c.policy = v.policy;
    c.lambda = v.lambda;
    out.push_back(simulate(c));
  }
  run_seconds[v] = seconds_since(t0);
  return run_cache.emplace(v, std::move(out)).first->second;
}

const Variant kEntHl{QueryStrategy::kEntropy, ReviewPolicy::kHighestLoss, 0.2};
const Variant kRndHl{QueryStrategy::kRandom, ReviewPolicy::kHighestLoss, 0.2};
// Without review the whole budget goes to queries.
const Variant kRndNone{QueryStrategy::kRandom, ReviewPolicy::kNone, 0.0};
const Variant kRndRnd{QueryStrategy::kRandom, ReviewPolicy::kRandom, 0.2};

// Mean of a per-cycle optional over the last cycles of every seed.
template <typename Get>
double tail_mean(const std::vector<std::vector<CycleMetrics>>& rs, Get get) {
  double sum = 0;
  int n = 0;
  for (const auto& h : rs) {
    for (std::size_t i = h.size() - kLastCycles; i < h.size(); ++i) {
      if (const std::optional<double> v = get(h[i])) {
        sum += *v;
        ++n;
      }
    }
  }
  return n > 0 ? sum / n : std::nan("");
}

Verdict review_precision_separation() {
  const auto& hl = runs(kEntHl);
  const double pm = tail_mean(hl, [](const CycleMetrics& m) { return m.precision_miss; });
  const double pf = tail_mean(hl, [](const CycleMetrics& m) { return m.precision_flip; });
  const auto& rnd = runs(kRndRnd);
  const double rm = tail_mean(rnd, [](const CycleMetrics& m) { return m.precision_miss; });
  const double bm = tail_mean(rnd, [](const CycleMetrics& m) { return m.base_rate_miss; });
  const double rf = tail_mean(rnd, [](const CycleMetrics& m) { return m.precision_flip; });
  const double bf = tail_mean(rnd, [](const CycleMetrics& m) { return m.base_rate_flip; });
  const double secs = seconds_of({kEntHl, kRndRnd});
  const bool ok = pm >= kMissPrecisionMin && pf >= kFlipPrecisionMin &&
                  std::abs(rm - bm) <= kRandomPolicySlack && std::abs(rf - bf) <= kRandomPolicySlack &&
                  secs < 120;
  return {ok, fmt::format("highest-loss miss {:.3f}, flip {:.3f}; random miss {:.3f} vs base {:.3f}, "
                          "flip {:.3f} vs base {:.3f}; runs {:.0f}s",
                          pm, pf, rm, bm, rf, bf, secs)};
}

std::vector<double> final_maps(const std::vector<std::vector<CycleMetrics>>& rs) {
  std::vector<double> out;
  for (const auto& h : rs) out.push_back(h.back().map);
  return out;
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// a >= b, confirmed by a paired one-sided t test or a gap of one mAP point.
bool gap_confirmed(const std::vector<double>& a, const std::vector<double>& b, std::string& detail) {
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) d.push_back(a[i] - b[i]);
  const double md = mean(d);
  double ss = 0;
  for (double x : d) ss += (x - md) * (x - md);
  const double sd = std::sqrt(ss / static_cast<double>(d.size() - 1));
  const double t = sd > 0 ? md / (sd / std::sqrt(static_cast<double>(d.size()))) : (md > 0 ? INFINITY : 0.0);
  const bool ok = md >= 0 && (md >= kMapPointGap || t >= kTCritical);
  detail += fmt::format(" gap {:+.4f} (t={:.2f})", md, t);
  return ok;
}

Verdict curve_ordering() {
  const auto a = final_maps(runs(kEntHl));
  const auto b = final_maps(runs(kRndHl));
  const auto c = final_maps(runs(kRndNone));
  const auto d = final_maps(runs(kRndRnd));
  std::string detail = fmt::format("Ent+HL {:.4f} >= Rnd+HL {:.4f} >= Rnd+none {:.4f} >= Rnd+random {:.4f};",
                                   mean(a), mean(b), mean(c), mean(d));
  bool ok = gap_confirmed(a, b, detail);
  detail += ",";
  ok = gap_confirmed(b, c, detail) && ok;
  detail += ",";
  ok = gap_confirmed(c, d, detail) && ok;
  const double secs = seconds_of({kEntHl, kRndHl, kRndNone, kRndRnd});
  detail += fmt::format("; runs {:.0f}s", secs);
  return {ok && secs < 600, detail};
}

Verdict lambda_sweep() {
  std::map<double, double> final_map;
  std::string detail;
  for (double l : {0.0, 0.1, 0.2, 0.3, 0.4}) {
    final_map[l] = mean(final_maps(runs({QueryStrategy::kRandom, ReviewPolicy::kHighestLoss, l})));
    detail += fmt::format("{}lambda {:.1f}: {:.4f}", detail.empty() ? "" : ", ", l, final_map[l]);
  }
  const bool ok = final_map[0.2] >= final_map[0.0] && final_map[0.2] >= final_map[0.4];
  return {ok, detail};
}

// --- 9 ---------------------------------------------------------------------

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism() {
  test::TempDir tmp;
  ExperimentConfig c;
  c.cycles = 6;
  c.output_dir = (tmp.path() / "a").string();
  run_experiment(c);
  c.output_dir = (tmp.path() / "b").string();
  run_experiment(c);
  c.output_dir = (tmp.path() / "c").string();
  run_experiment(c, {false, 3});
  run_experiment(c, {true, std::nullopt});
  const auto a = slurp(tmp.path() / "a" / "metrics.csv");
  const bool same = !a.empty() && a == slurp(tmp.path() / "b" / "metrics.csv");
  const bool resumed = a == slurp(tmp.path() / "c" / "metrics.csv") &&
                       slurp(tmp.path() / "a" / "audit.log") == slurp(tmp.path() / "c" / "audit.log");
  return {same && resumed, fmt::format("repeat run {}, resume after 3 of 6 cycles {}",
                                       same ? "byte-identical" : "DIFFERS", resumed ? "identical" : "DIFFERS")};
}

}  // namespace
}  // namespace noisyal

int main() {
  using namespace noisyal;
  check(1, "noise-injection exactness", 5, noise_exactness);
  check(2, "geometry oracles", 30, geometry_oracles);
  check(3, "entropy and cross-entropy", 0, entropy_and_ce);
  check(4, "budget conservation", 0, budget_conservation);
  check(5, "reviewer-noise statistics", 0, reviewer_noise);
  check(6, "review-precision separation", 0, review_precision_separation);
  check(7, "learning-curve ordering", 0, curve_ordering);
  check(8, "lambda-sweep shape", 0, lambda_sweep);
  check(9, "determinism and resume", 0, determinism);
  std::printf("%s: %d of 9 criteria failed\n", failures ? "FAILED" : "OK", failures);
  return failures ? 1 : 0;
}
