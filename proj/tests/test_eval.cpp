#include <gtest/gtest.h>

#include <cmath>

#include "sigver/evaluation.hpp"
#include "test_util.hpp"

namespace sigver {
namespace {

using testutil::TempDir;

Protocol protocol(int refs, ForgeryMode mode) {
  Protocol p;
  p.reference_count = refs;
  p.forgery_mode = mode;
  return p;
}

TEST(Split, GpdsShapedCounts) {
  const ImageCatalog cat(testutil::shaped_dataset(75, 24, 30));
  const auto r10sf = count(split_protocol(cat, protocol(10, ForgeryMode::kSkilled)));
  EXPECT_EQ(r10sf.references, 750u);
  EXPECT_EQ(r10sf.genuine_tests, 1050u);
  EXPECT_EQ(r10sf.forgeries, 2250u);
  EXPECT_EQ(count(split_protocol(cat, protocol(10, ForgeryMode::kRandom))).forgeries, 5550u);
  const auto r5 = count(split_protocol(cat, protocol(5, ForgeryMode::kSkilled)));
  EXPECT_EQ(r5.references, 375u);
  EXPECT_EQ(r5.genuine_tests, 1425u);
}

TEST(Split, ClosedFormsOverSizes) {
  for (int users : {2, 3, 7}) {
    for (int g : {6, 11, 15}) {
      for (int f : {1, 4}) {
        const ImageCatalog cat(testutil::shaped_dataset(users, g, f));
        for (int r : {1, 5}) {
          const auto sf = count(split_protocol(cat, protocol(r, ForgeryMode::kSkilled)));
          const auto rf = count(split_protocol(cat, protocol(r, ForgeryMode::kRandom)));
          EXPECT_EQ(sf.references, static_cast<std::size_t>(users * r));
          EXPECT_EQ(sf.genuine_tests, static_cast<std::size_t>(users * (g - r)));
          EXPECT_EQ(sf.forgeries, static_cast<std::size_t>(users * f));
          EXPECT_EQ(rf.forgeries, static_cast<std::size_t>(users * (users - 1)));
        }
      }
    }
  }
}

TEST(Split, TwoUsersSixGenuineR5Random) {
  const ImageCatalog cat(testutil::shaped_dataset(2, 6, 0));
  const auto splits = split_protocol(cat, protocol(5, ForgeryMode::kRandom));
  ASSERT_EQ(splits.size(), 2u);
  for (int u = 0; u < 2; ++u) {
    EXPECT_EQ(splits[u].references, std::vector<int>(cat.genuine(u).begin(), cat.genuine(u).begin() + 5));
    EXPECT_EQ(splits[u].genuine_tests, std::vector<int>{cat.genuine(u)[5]});
    ASSERT_EQ(splits[u].forgery_tests.size(), 1u);
    EXPECT_EQ(splits[u].forgery_tests[0].image, cat.genuine(1 - u).front());
    EXPECT_EQ(splits[u].forgery_tests[0].label, SampleLabel::kRandom);
  }
}

TEST(Split, TooFewGenuines) {
  const ImageCatalog cat(testutil::shaped_dataset(2, 5, 1));
  try {
    split_protocol(cat, protocol(5, ForgeryMode::kSkilled));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientGenuines);
  }
}

TEST(Split, RandomSelectionIsSeededPerRun) {
  const ImageCatalog cat(testutil::shaped_dataset(4, 24, 2));
  Protocol p = protocol(10, ForgeryMode::kSkilled);
  p.selection = ReferenceSelection::kRandomSeeded;
  p.seed = 42;
  p.runs = 3;
  const auto a0 = split_protocol(cat, p, 0), a0b = split_protocol(cat, p, 0), a1 = split_protocol(cat, p, 1);
  bool differs = false;
  for (std::size_t u = 0; u < a0.size(); ++u) {
    EXPECT_EQ(a0[u].references, a0b[u].references);
    differs |= a0[u].references != a1[u].references;
    std::vector<int> all = a0[u].references;
    all.insert(all.end(), a0[u].genuine_tests.begin(), a0[u].genuine_tests.end());
    std::sort(all.begin(), all.end());
    EXPECT_EQ(all, cat.genuine(static_cast<int>(u)));
  }
  EXPECT_TRUE(differs);
}

TEST(Split, SignatureIds) {
  TempDir dir("ids");
  const auto ds = testutil::separable_dataset(dir.path(), 2, 6, 1);
  const ImageCatalog cat(ds);
  EXPECT_EQ(cat.signature_id(cat.genuine(0)[2]), "u001/genuine/03");
  EXPECT_EQ(cat.signature_id(cat.forgeries(1)[0]), "u002/forgery/01");
}

class SeparableData : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("separable");
    ds_ = new SignatureDataset(testutil::separable_dataset(dir_->path()));
    model_ = new EmbeddingModel(nn::Architecture::parse("fc:8,relu,fc:4", 16));
    model_->initialize(3);
  }
  static void TearDownTestSuite() {
    delete model_;
    delete ds_;
    delete dir_;
  }
  static inline TempDir* dir_ = nullptr;
  static inline SignatureDataset* ds_ = nullptr;
  static inline EmbeddingModel* model_ = nullptr;
};

TEST_F(SeparableData, EverySystemSeparates) {
  Evaluator ev(*ds_, {}, model_);
  for (auto mode : {ForgeryMode::kSkilled, ForgeryMode::kRandom}) {
    for (auto sys : {SystemKind::kGed, SystemKind::kNeural, SystemKind::kMcs}) {
      const auto r = ev.run_protocol(protocol(5, mode), sys);
      EXPECT_EQ(r.eer, 0.0) << to_string(sys);
    }
  }
}

TEST_F(SeparableData, ScoreRows) {
  Evaluator ev(*ds_, {}, model_);
  const auto r = ev.run_protocol(protocol(5, ForgeryMode::kSkilled), SystemKind::kMcs);
  ASSERT_EQ(r.rows.size(), r.counts.genuine_tests + r.counts.forgeries);
  EXPECT_EQ(r.rows.size(), 3u * (1 + 2));
  for (const auto& row : r.rows) {
    EXPECT_FALSE(std::isnan(row.d_ged));
    EXPECT_FALSE(std::isnan(row.d_neural));
    EXPECT_FALSE(std::isnan(row.score_mcs));
    if (row.label == SampleLabel::kGenuine) {
      EXPECT_EQ(row.d_ged, 0.0);
      EXPECT_EQ(row.signature_id.substr(0, 12), row.user_id + "/genuine");
    } else {
      EXPECT_GT(row.d_ged, 0.0);
      EXPECT_EQ(row.label, SampleLabel::kSkilled);
    }
  }
}

TEST_F(SeparableData, GedOnlyLeavesNeuralColumnsEmptyWithoutModel) {
  Evaluator ev(*ds_, {});
  const auto r = ev.run_protocol(protocol(5, ForgeryMode::kRandom), SystemKind::kGed);
  for (const auto& row : r.rows) {
    EXPECT_TRUE(std::isnan(row.d_neural));
    EXPECT_TRUE(std::isnan(row.score_mcs));
  }
  EXPECT_THROW(ev.run_protocol(protocol(5, ForgeryMode::kRandom), SystemKind::kNeural), Error);
}

TEST_F(SeparableData, CacheIsReused) {
  auto cache = std::make_shared<ScoreCache>();
  Evaluator ev(*ds_, {}, nullptr, cache);
  ev.run_protocol(protocol(5, ForgeryMode::kSkilled), SystemKind::kGed);
  const auto n = cache->size();
  EXPECT_GT(n, 0u);
  ev.run_protocol(protocol(5, ForgeryMode::kSkilled), SystemKind::kGed);
  EXPECT_EQ(cache->size(), n);
  ev.set_costs({10, 10});
  ev.run_protocol(protocol(5, ForgeryMode::kSkilled), SystemKind::kGed);
  EXPECT_GT(cache->size(), n);
}

TEST_F(SeparableData, RepeatedRunsAreDeterministic) {
  Protocol p = protocol(3, ForgeryMode::kRandom);
  p.selection = ReferenceSelection::kRandomSeeded;
  p.runs = 10;
  p.seed = 7;
  Evaluator a(*ds_, {}, model_), b(*ds_, {}, model_);
  const auto ra = a.run_protocol(p, SystemKind::kMcs);
  const auto rb = b.run_protocol(p, SystemKind::kMcs);
  ASSERT_EQ(ra.run_eers.size(), 10u);
  EXPECT_EQ(ra.run_eers, rb.run_eers);
  EXPECT_EQ(ra.eer, rb.eer);
  double mean = 0;
  for (double e : ra.run_eers) mean += e;
  EXPECT_DOUBLE_EQ(ra.eer, mean / 10);
}

TEST_F(SeparableData, ThreadCountDoesNotChangeScores) {
  EvalSettings one, many;
  one.threads = 1;
  many.threads = 4;
  Evaluator a(*ds_, one, model_), b(*ds_, many, model_);
  const auto ra = a.run_protocol(protocol(5, ForgeryMode::kSkilled), SystemKind::kMcs);
  const auto rb = b.run_protocol(protocol(5, ForgeryMode::kSkilled), SystemKind::kMcs);
  ASSERT_EQ(ra.rows.size(), rb.rows.size());
  for (std::size_t i = 0; i < ra.rows.size(); ++i) {
    EXPECT_EQ(ra.rows[i].score_mcs, rb.rows[i].score_mcs);
    EXPECT_EQ(ra.rows[i].d_ged, rb.rows[i].d_ged);
  }
}

class SyntheticData : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("grid");
    SynthConfig cfg;
    cfg.users = 4;
    cfg.genuine_per_user = 7;
    cfg.skilled_per_user = 2;
    cfg.width = 128;
    cfg.height = 64;
    cfg.seed = 11;
    ds_ = new SignatureDataset(generate_synthetic(cfg, dir_->path()));
  }
  static void TearDownTestSuite() {
    delete ds_;
    delete dir_;
  }
  static inline TempDir* dir_ = nullptr;
  static inline SignatureDataset* ds_ = nullptr;
};

TEST_F(SyntheticData, SingletonGrid) {
  Evaluator ev(*ds_, {});
  const auto g = grid_search_costs(ev, {35}, {20}, protocol(5, ForgeryMode::kSkilled));
  ASSERT_EQ(g.entries.size(), 1u);
  EXPECT_EQ(g.best.c_node, 35);
  EXPECT_EQ(g.best.c_edge, 20);
}

TEST_F(SyntheticData, TwoByTwoMatchesManualEnumeration) {
  Evaluator ev(*ds_, {});
  const auto g = grid_search_costs(ev, {40, 10}, {60, 15}, protocol(5, ForgeryMode::kSkilled));
  ASSERT_EQ(g.entries.size(), 4u);
  double best = 2;
  GridEntry manual;
  for (double cn : {10.0, 40.0}) {
    for (double ce : {15.0, 60.0}) {
      EvalSettings s;
      s.costs = {cn, ce};
      Evaluator fresh(*ds_, s);
      const double eer = fresh.run_protocol(protocol(5, ForgeryMode::kRandom), SystemKind::kGed).eer;
      if (eer < best) {
        best = eer;
        manual = {cn, ce, eer};
      }
    }
  }
  EXPECT_EQ(g.best.c_node, manual.c_node);
  EXPECT_EQ(g.best.c_edge, manual.c_edge);
  EXPECT_EQ(g.best.eer, manual.eer);
  EXPECT_EQ(g.entries[0].c_node, 10);
  EXPECT_EQ(g.entries[0].c_edge, 15);
  EXPECT_EQ(ev.settings().costs.c_node, CostParams{}.c_node);
}

TEST_F(SyntheticData, DefaultGridHas121Entries) {
  const auto grid = default_cost_grid();
  ASSERT_EQ(grid.size(), 11u);
  EXPECT_EQ(grid.front(), 10);
  EXPECT_EQ(grid.back(), 60);
  Evaluator ev(*ds_, {});
  const auto g = grid_search_costs(ev, grid, grid, protocol(5, ForgeryMode::kRandom));
  EXPECT_EQ(g.entries.size(), 121u);
  for (const auto& e : g.entries) EXPECT_GE(e.eer, g.best.eer);
  const auto again = grid_search_costs(ev, grid, grid, protocol(5, ForgeryMode::kRandom));
  EXPECT_EQ(again.best.c_node, g.best.c_node);
  EXPECT_EQ(again.best.c_edge, g.best.c_edge);
}

TEST(Grid, Rejections) {
  const auto one_user = testutil::shaped_dataset(1, 6, 1);
  Evaluator ev(one_user, {});
  EXPECT_THROW(grid_search_costs(ev, {10}, {10}, {}), Error);
  EXPECT_THROW(grid_search_costs(ev, {}, {10}, {}), Error);
  EXPECT_THROW(value_range(1, 2, 0), Error);
  EXPECT_EQ(value_range(0.5, 1.0, 0.25).size(), 3u);
}

TEST(Cache, SaveLoadRoundTrip) {
  TempDir dir("cache");
  ScoreCache c;
  const auto k = ScoreCache::key("ged", "p", "b.png", "a.png");
  EXPECT_EQ(k, ScoreCache::key("ged", "p", "a.png", "b.png"));
  c.insert(k, 0.1);
  c.insert(ScoreCache::key("ged", "q", "a.png", "c.png"), 1.0 / 3.0);
  c.save(dir.path() / "cache.txt");
  ScoreCache d;
  d.load(dir.path() / "cache.txt");
  EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(*d.find(k), 0.1);
  EXPECT_EQ(*d.find(ScoreCache::key("ged", "q", "c.png", "a.png")), 1.0 / 3.0);
  EXPECT_FALSE(d.find(ScoreCache::key("ged", "r", "a.png", "c.png")));
}

}  // namespace
}  // namespace sigver
