#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "noisyal/errors.h"
#include "noisyal/eval.h"
#include "noisyal/metrics.h"
#include "oracles.h"

namespace noisyal {
namespace {

std::vector<double> sure(ClassId c, int k = 2) {
  std::vector<double> p(static_cast<std::size_t>(k), 0.0);
  p[static_cast<std::size_t>(c - 1)] = 1.0;
  return p;
}

TEST(AveragePrecision, PerfectAndMissed) {
  std::vector<EvalImage> on{{1, {{BBox(0, 0, 10, 10), 0.9, sure(1)}}, {{BBox(0, 0, 10, 10), 1}}}};
  EXPECT_EQ(average_precision(on, 1, 0.5), 1.0);
  std::vector<EvalImage> off{{1, {{BBox(50, 50, 10, 10), 0.9, sure(1)}}, {{BBox(0, 0, 10, 10), 1}}}};
  EXPECT_EQ(average_precision(off, 1, 0.5), 0.0);
  EXPECT_FALSE(average_precision(off, 2, 0.5).has_value());
}

TEST(AveragePrecision, TpFpTpWalk) {
  std::vector<EvalImage> imgs{{1,
                               {{BBox(0, 0, 10, 10), 0.9, sure(1)},
                                {BBox(60, 60, 10, 10), 0.8, sure(1)},
                                {BBox(30, 0, 10, 10), 0.7, sure(1)}},
                               {{BBox(0, 0, 10, 10), 1}, {BBox(30, 0, 10, 10), 1}}}};
  std::vector<PrPoint> curve;
  const auto ap = average_precision(imgs, 1, 0.5, &curve);
  ASSERT_TRUE(ap);
  EXPECT_NEAR(*ap, 0.5 * 1.0 + 0.5 * (2.0 / 3.0), 1e-12);
  EXPECT_NEAR(*ap, 0.8333, 1e-4);
  ASSERT_EQ(curve.size(), 3u);
  EXPECT_EQ(curve[0].recall, 0.5);
  EXPECT_EQ(curve[2].recall, 1.0);
  EXPECT_NEAR(curve[2].precision, 2.0 / 3.0, 1e-15);
}

TEST(AveragePrecision, MatchingIsClassAware) {
  // Right place, wrong argmax: an FP for class 1 and no GT for class 2.
  std::vector<EvalImage> imgs{{1, {{BBox(0, 0, 10, 10), 0.9, sure(2)}}, {{BBox(0, 0, 10, 10), 1}}}};
  EXPECT_EQ(average_precision(imgs, 1, 0.5), 0.0);
  EXPECT_FALSE(average_precision(imgs, 2, 0.5).has_value());
}

TEST(MeanAveragePrecision, Examples) {
  std::vector<EvalImage> perfect{
      {1, {{BBox(0, 0, 10, 10), 0.9, sure(1, 3)}, {BBox(40, 40, 10, 10), 0.8, sure(3, 3)}},
       {{BBox(0, 0, 10, 10), 1}, {BBox(40, 40, 10, 10), 3}}}};
  EXPECT_EQ(mean_average_precision(perfect, 3).map, 1.0);

  std::vector<EvalImage> half{{1, {{BBox(0, 0, 10, 10), 0.9, sure(1, 3)}},
                               {{BBox(0, 0, 10, 10), 1}, {BBox(40, 40, 10, 10), 2}}}};
  const auto r = mean_average_precision(half, 3);
  EXPECT_EQ(r.map, 0.5);
  ASSERT_EQ(r.per_class.size(), 3u);
  EXPECT_FALSE(r.per_class[2].ap.has_value());
  EXPECT_EQ(r.per_class[1].num_gt, 1);

  std::vector<EvalImage> empty{{1, {{BBox(0, 0, 10, 10), 0.9, sure(1, 3)}}, {}}};
  EXPECT_THROW(mean_average_precision(empty, 3), DataError);
}

TEST(MeanAveragePrecision, MatchesBruteForceOracle) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    const int k = 1 + static_cast<int>(rng() % 3);
    const auto imgs = oracle::random_eval_instance(rng, k);
    const auto want = oracle::mean_ap(imgs, k, 0.5);
    if (!want) {
      EXPECT_THROW(mean_average_precision(imgs, k), DataError);
      continue;
    }
    EXPECT_NEAR(mean_average_precision(imgs, k).map, *want, 1e-9) << "trial " << trial;
    for (ClassId c = 1; c <= k; ++c) {
      const auto a = average_precision(imgs, c, 0.5);
      const auto b = oracle::average_precision(imgs, c, 0.5);
      ASSERT_EQ(a.has_value(), b.has_value());
      if (a) {
        EXPECT_NEAR(*a, *b, 1e-9);
        EXPECT_GE(*a, 0.0);
        EXPECT_LE(*a, 1.0);
      }
    }
  }
}

TEST(MeanAveragePrecision, InvariantUnderMonotoneScoreTransform) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 2;
    auto imgs = oracle::random_eval_instance(rng, k);
    if (!oracle::mean_ap(imgs, k, 0.5)) continue;
    const double before = mean_average_precision(imgs, k).map;
    for (auto& img : imgs) {
      for (auto& p : img.predictions) p.objectness = std::exp(3.0 * p.objectness) - 0.5;
    }
    EXPECT_EQ(mean_average_precision(imgs, k).map, before) << "trial " << trial;
  }
}

TEST(MeanAveragePrecision, LowerScoredDuplicateOfTpNeverHelps) {
  std::mt19937_64 rng(11);
  int checked = 0;
  for (int trial = 0; trial < 400; ++trial) {
    auto imgs = oracle::random_eval_instance(rng, 2);
    for (std::size_t i = 0; i < imgs.size() && checked <= trial; ++i) {
      for (const auto& p : imgs[i].predictions) {
        const ClassId c = p.argmax_class();
        const bool is_tp = std::any_of(imgs[i].truth.begin(), imgs[i].truth.end(), [&](const auto& g) {
          return g.cls == c && iou(g.box, p.box) >= 0.5;
        });
        if (!is_tp) continue;
        const auto before = average_precision(imgs, c, 0.5);
        auto dup = imgs;
        Prediction copy = p;
        copy.objectness = p.objectness - 1e-3;
        dup[i].predictions.push_back(copy);
        EXPECT_LE(*average_precision(dup, c, 0.5), *before + 1e-12);
        ++checked;
        break;
      }
    }
  }
  EXPECT_GT(checked, 50);
}

TEST(MakeEvalImages, PairsByIdWithCleanLabels) {
  ImageRecord a{1, 50, 50, {{1, BBox(0, 0, 5, 5), 2, 1, false, Provenance::kMissed}}};
  ImageRecord b{2, 50, 50, {}};
  PredictionMap preds;
  preds[2] = {{BBox(0, 0, 5, 5), 0.5, sure(1)}};
  const std::vector<ImageRecord> test{a, b};
  const auto imgs = make_eval_images(test, preds);
  ASSERT_EQ(imgs.size(), 2u);
  EXPECT_TRUE(imgs[0].predictions.empty());
  ASSERT_EQ(imgs[0].truth.size(), 1u);
  EXPECT_EQ(imgs[0].truth[0].cls, 2);
  EXPECT_EQ(imgs[1].predictions.size(), 1u);
}

ReviewOutcome outcome(ErrorKind kind, bool real) {
  return {{kind, 1, 0, BBox(0, 0, 1, 1), 0.0}, real, ReviewAction::kRejected, 1};
}

TEST(ReviewPrecision, Ratios) {
  std::vector<ReviewOutcome> o;
  for (int i = 0; i < 20; ++i) o.push_back(outcome(ErrorKind::kFlip, i < 17));
  o.push_back(outcome(ErrorKind::kMiss, false));
  EXPECT_EQ(review_precision(o, ErrorKind::kFlip), 0.85);
  EXPECT_EQ(review_precision(o, ErrorKind::kMiss), 0.0);
  o.pop_back();
  EXPECT_FALSE(review_precision(o, ErrorKind::kMiss).has_value());
  std::vector<ReviewOutcome> all{outcome(ErrorKind::kMiss, true), outcome(ErrorKind::kMiss, true)};
  EXPECT_EQ(review_precision(all, ErrorKind::kMiss), 1.0);
}

CycleMetrics row(int cycle, double map) {
  CycleMetrics m;
  m.cycle = cycle;
  m.budget_total = 1000 + 200L * cycle;
  m.boxes_labeled = 160;
  m.reviews_miss = 20;
  m.reviews_flip = 20;
  m.map = map;
  m.precision_miss = 0.95;
  m.active_images = 150 + cycle * 40;
  m.active_boxes = 600;
  m.active_error_fraction = 0.125;
  return m;
}

TEST(MetricsCsv, GoldenSingleRow) {
  const std::string want =
      "cycle,budget_total,boxes_labeled,reviews_miss,reviews_flip,map,precision_miss,"
      "precision_flip,active_images,active_boxes,active_error_fraction\n"
      "1,1200,160,20,20,0.5,0.95,,190,600,0.125\n";
  EXPECT_EQ(metrics_csv({row(1, 0.5)}), want);
}

TEST(MetricsCsv, ParsesBack) {
  const auto table = parse_csv(metrics_csv({row(1, 0.5), row(2, 0.625)}));
  ASSERT_EQ(table.rows.size(), 2u);
  EXPECT_EQ(table.header.size(), 11u);
  EXPECT_EQ(table.rows[1][table.column("map")], "0.625");
  EXPECT_THROW(table.column("loss"), DataError);
}

TEST(AggregateCsv, IdenticalRunsHaveZeroStd) {
  const std::vector<CycleMetrics> run{row(1, 0.5), row(2, 0.6)};
  const auto table = parse_csv(aggregate_csv({run, run, run, run}));
  ASSERT_EQ(table.rows.size(), 2u);
  EXPECT_EQ(table.header[0], "cycle");
  EXPECT_EQ(table.header[1], "runs");
  EXPECT_EQ(table.rows[0][table.column("runs")], "4");
  EXPECT_DOUBLE_EQ(std::stod(table.rows[1][table.column("map_mean")]), 0.6);
  EXPECT_DOUBLE_EQ(std::stod(table.rows[1][table.column("map_std")]), 0.0);
  // Every undefined flip precision is skipped, leaving an empty statistic.
  EXPECT_EQ(table.rows[0][table.column("precision_flip_mean")], "");
}

TEST(AggregateCsv, SampleStd) {
  const auto table = parse_csv(aggregate_csv({{row(1, 0.5)}, {row(1, 0.7)}}));
  EXPECT_NEAR(std::stod(table.rows[0][table.column("map_mean")]), 0.6, 1e-12);
  EXPECT_NEAR(std::stod(table.rows[0][table.column("map_std")]), std::sqrt(0.02), 1e-12);
}

TEST(Plot, DeterministicSvgWithBands) {
  const auto table = parse_csv(aggregate_csv({{row(1, 0.5), row(2, 0.6)}, {row(1, 0.7), row(2, 0.8)}}));
  const auto curve = curve_from_csv(table, "rnd");
  ASSERT_EQ(curve.x.size(), 2u);
  EXPECT_EQ(curve.x[0], 1200.0);
  EXPECT_EQ(curve.band.size(), 2u);
  const auto a = render_svg({curve}, "title");
  const auto b = render_svg({curve}, "title");
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.rfind("<svg", 0), 0u);
  EXPECT_NE(a.find("rnd"), std::string::npos);
  const auto single = curve_from_csv(parse_csv(metrics_csv({row(1, 0.5)})), "one");
  EXPECT_TRUE(single.band.empty());
}

}  // namespace
}  // namespace noisyal
