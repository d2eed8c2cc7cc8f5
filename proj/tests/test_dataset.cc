#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>

#include "noisyal/dataset.h"
#include "noisyal/errors.h"
#include "noisyal/random.h"
#include "test_util.h"

namespace noisyal {
namespace {

SyntheticSpec small_spec(int n_train = 200, int n_test = 20) {
  SyntheticSpec spec;
  spec.n_train = n_train;
  spec.n_test = n_test;
  return spec;
}

DatasetStore small_store(std::uint64_t seed = 1, int n_train = 200) {
  Rng rng = make_stream(seed, StreamTag::kGenerate);
  return generate_synthetic_dataset(small_spec(n_train), rng);
}

// A store with exactly `g` train labels in one image, spaced apart.
DatasetStore store_with_labels(int g, int k = 10) {
  DatasetStore store;
  std::vector<std::string> names;
  for (int c = 1; c <= k; ++c) names.push_back("c" + std::to_string(c));
  store.catalog = ClassCatalog(names);
  ImageRecord img{1, 10.0 * g + 10, 10, {}, PoolState::kUnlabeled};
  for (int i = 0; i < g; ++i) {
    img.labels.push_back({i + 1, BBox(10.0 * i, 0, 5, 5), i % k + 1, i % k + 1, true,
                          Provenance::kClean});
  }
  store.train.push_back(img);
  store.test.push_back({2, 10, 10, {{g + 1, BBox(0, 0, 5, 5), 1, 1, true, Provenance::kClean}},
                        PoolState::kUnlabeled});
  return store;
}

struct NoiseCounts {
  std::size_t missed = 0;
  std::size_t flipped = 0;
  std::size_t both = 0;
};

NoiseCounts count_noise(const DatasetStore& s) {
  NoiseCounts n;
  for (const auto& img : s.train) {
    for (const auto& l : img.labels) {
      const bool missed = !l.present;
      const bool flipped = l.observed_class != l.true_class;
      n.missed += missed;
      n.flipped += flipped;
      n.both += missed && flipped;
    }
  }
  return n;
}

TEST(ClassCatalog, RequiresTwoUniqueNames) {
  EXPECT_THROW(ClassCatalog({"a"}), Error);
  EXPECT_THROW(ClassCatalog({"a", "a"}), Error);
  EXPECT_EQ(ClassCatalog({"a", "b"}).size(), 2);
}

TEST(InjectNoise, TenLabelsAtTwentyPercent) {
  Rng rng(1);
  const auto noisy = inject_noise(store_with_labels(10), 0.2, rng);
  const auto n = count_noise(noisy);
  EXPECT_EQ(n.missed, 1u);
  EXPECT_EQ(n.flipped, 1u);
  EXPECT_EQ(n.both, 0u);
  for (const auto& l : noisy.train[0].labels) {
    if (!l.present) {
      EXPECT_EQ(l.provenance, Provenance::kMissed);
    }
    if (l.observed_class != l.true_class) {
      EXPECT_EQ(l.provenance, Provenance::kFlipped);
    }
  }
  noisy.validate();
}

TEST(InjectNoise, ZeroRateLeavesStoreUnchanged) {
  const auto store = small_store();
  Rng rng(3);
  EXPECT_EQ(inject_noise(store, 0.0, rng), store);
}

TEST(InjectNoise, ExactCountsAndTestSplitUntouched) {
  std::mt19937_64 meta(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int g = std::uniform_int_distribution<int>(1, 400)(meta);
    const double gamma = std::uniform_real_distribution<double>(0, 1)(meta);
    const auto store = store_with_labels(g);
    Rng rng(trial);
    const auto noisy = inject_noise(store, gamma, rng);
    const auto n = count_noise(noisy);
    const auto m = static_cast<std::size_t>(std::floor(gamma / 2 * g));
    EXPECT_EQ(noise_count(gamma, static_cast<std::size_t>(g)), m);
    EXPECT_EQ(n.missed, m);
    EXPECT_EQ(n.flipped, m);
    EXPECT_EQ(n.both, 0u);
    EXPECT_EQ(noisy.test, store.test);
  }
}

TEST(InjectNoise, FlippedClassesAreUniformOverWrongClasses) {
  // Chi-square goodness of fit of (observed - true) mod K over the 9 wrong
  // offsets; 20.09 is the 0.99 quantile with 8 degrees of freedom.
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    const auto noisy = inject_noise(store_with_labels(1000), 0.2, rng);
    std::vector<int> hist(10, 0);
    int total = 0;
    for (const auto& l : noisy.train[0].labels) {
      if (l.present && l.observed_class != l.true_class) {
        ++hist[static_cast<std::size_t>((l.observed_class - l.true_class + 10) % 10)];
        ++total;
      }
    }
    ASSERT_EQ(total, 100);
    EXPECT_EQ(hist[0], 0);
    const double expected = total / 9.0;
    double chi2 = 0;
    for (int o = 1; o < 10; ++o) chi2 += std::pow(hist[static_cast<std::size_t>(o)] - expected, 2) / expected;
    EXPECT_LT(chi2, 20.09) << "seed " << seed;
  }
}

TEST(InjectNoise, RejectsBadInput) {
  Rng rng(1);
  EXPECT_THROW(inject_noise(store_with_labels(10), 1.5, rng), ConfigError);
  EXPECT_THROW(inject_noise(store_with_labels(10), -0.1, rng), ConfigError);
  const auto noisy = inject_noise(store_with_labels(10), 0.2, rng);
  EXPECT_THROW(inject_noise(noisy, 0.2, rng), ValidationError);
}

TEST(RevealLabels, ReturnsPresentLabelsOnce) {
  auto store = store_with_labels(3);
  auto labels = reveal_labels(store, 1);
  ASSERT_EQ(labels.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(labels[i].observed_class, store.train[0].labels[i].true_class);
  }
  EXPECT_EQ(store.train[0].pool_state, PoolState::kActive);
  EXPECT_THROW(reveal_labels(store, 1), DataError);
  EXPECT_THROW(reveal_labels(store, 99), DataError);
}

TEST(RevealLabels, SkipsMissedLabels) {
  auto store = store_with_labels(2);
  store.train[0].labels[0].present = false;
  store.train[0].labels[0].provenance = Provenance::kMissed;
  const auto labels = reveal_labels(store, 1);
  ASSERT_EQ(labels.size(), 1u);
  EXPECT_EQ(labels[0].id, 2);
  EXPECT_EQ(store.train[0].present_count(), 1);
}

TEST(Synthetic, RespectsSpec) {
  const auto store = small_store();
  EXPECT_EQ(store.train.size(), 200u);
  EXPECT_EQ(store.test.size(), 20u);
  for (const auto* split : {&store.train, &store.test}) {
    for (const auto& img : *split) {
      EXPECT_GE(img.labels.size(), 2u);
      EXPECT_LE(img.labels.size(), 6u);
      for (std::size_t i = 0; i < img.labels.size(); ++i) {
        EXPECT_TRUE(store.catalog.contains(img.labels[i].true_class));
        for (std::size_t j = i + 1; j < img.labels.size(); ++j) {
          EXPECT_LE(iou(img.labels[i].box, img.labels[j].box), 0.3);
        }
      }
    }
  }
  store.validate();
}

TEST(Synthetic, EmptyTrainSplit) {
  Rng rng(1);
  const auto store = generate_synthetic_dataset(small_spec(0, 5), rng);
  EXPECT_TRUE(store.train.empty());
  EXPECT_EQ(store.test.size(), 5u);
}

TEST(Synthetic, SameSeedSameFile) {
  EXPECT_EQ(dataset_to_json(small_store(4)), dataset_to_json(small_store(4)));
  EXPECT_NE(dataset_to_json(small_store(4)), dataset_to_json(small_store(5)));
}

TEST(Synthetic, ImbalanceSkewsClassFrequencies) {
  SyntheticSpec spec = small_spec(2000, 0);
  spec.class_imbalance = 10;
  Rng rng(2);
  const auto store = generate_synthetic_dataset(spec, rng);
  std::map<ClassId, int> counts;
  for (const auto& img : store.train) {
    for (const auto& l : img.labels) ++counts[l.true_class];
  }
  const double ratio = static_cast<double>(counts[1]) / counts[10];
  EXPECT_GT(ratio, 6.0);
  EXPECT_LT(ratio, 16.0);
}

TEST(Synthetic, ReportsImpossiblePlacement) {
  SyntheticSpec spec = small_spec(3, 0);
  spec.min_boxes = 6;
  spec.image_width = spec.image_height = 40;
  spec.min_box_size = spec.max_box_size = 39;
  spec.max_attempts = 20;
  Rng rng(1);
  try {
    generate_synthetic_dataset(spec, rng);
    FAIL() << "expected a placement failure";
  } catch (const RuntimeError& e) {
    EXPECT_NE(std::string(e.what()).find("image"), std::string::npos);
  }
}

TEST(DatasetIo, RoundTrip) {
  const auto store = small_store();
  const test::TempDir dir;
  save_dataset(store, dir.path() / "d.json");
  EXPECT_EQ(load_dataset(dir.path() / "d.json"), store);
}

TEST(DatasetIo, NoiseSidecarRoundTrip) {
  const auto clean = small_store();
  Rng rng(9);
  const auto noisy = inject_noise(clean, 0.2, rng);
  const auto sidecar = extract_noise(noisy);
  EXPECT_EQ(noise_from_json(noise_to_json(sidecar)), sidecar);
  EXPECT_EQ(apply_noise(clean, sidecar), noisy);
  EXPECT_EQ(clean_copy(noisy), clean);
}

TEST(DatasetIo, RejectsClassZero) {
  const std::string text =
      R"({"classes":["a","b"],"images":[{"id":1,"width":10,"height":10,"split":"train",)"
      R"("labels":[{"id":7,"bbox":[0,0,2,2],"class":0}]}]})";
  EXPECT_THROW(dataset_from_json(text), ValidationError);
}

TEST(DatasetIo, ZeroWidthBoxNamesLabel) {
  const std::string text =
      R"({"classes":["a","b"],"images":[{"id":1,"width":10,"height":10,"split":"train",)"
      R"("labels":[{"id":42,"bbox":[0,0,0,2],"class":1}]}]})";
  try {
    dataset_from_json(text);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("label 42"), std::string::npos) << e.what();
  }
}

TEST(DatasetIo, MalformedInputCarriesContext) {
  EXPECT_THROW(dataset_from_json("{\"classes\": [\"a\", "), ParseError);
  try {
    dataset_from_json(R"({"classes":["a","b"],"images":[{"id":1,"width":10}]})");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("images[0]"), std::string::npos) << e.what();
  }
}

TEST(DatasetIo, RejectsDuplicateIdsAndOutOfBoundsBoxes) {
  const std::string dup =
      R"({"classes":["a","b"],"images":[{"id":1,"width":10,"height":10,"split":"train",)"
      R"("labels":[{"id":1,"bbox":[0,0,2,2],"class":1},{"id":1,"bbox":[4,4,2,2],"class":1}]}]})";
  EXPECT_THROW(dataset_from_json(dup), ValidationError);
  const std::string outside =
      R"({"classes":["a","b"],"images":[{"id":1,"width":10,"height":10,"split":"train",)"
      R"("labels":[{"id":1,"bbox":[9,9,2,2],"class":1}]}]})";
  EXPECT_THROW(dataset_from_json(outside), ValidationError);
}

}  // namespace
}  // namespace noisyal
