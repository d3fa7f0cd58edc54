#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "hoover/learn/model_io.hpp"
#include "hoover/learn/validation.hpp"
#include "hoover/rng.hpp"

using namespace hoover;
using namespace hoover::learn;

namespace {

RegressionSet cloud(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  RegressionSet s;
  for (std::size_t i = 0; i < n; ++i) {
    const Point truth{rng.uniform(0, 720), rng.uniform(0, 1280)};
    std::vector<double> f = {truth.x + rng.normal(8, 5), truth.y + rng.normal(-4, 5), rng.uniform(0, 10)};
    s.add(f, truth, int(i % 3));
  }
  return s;
}

// Leave-one-out written out longhand: copy every other row by hand, refit, predict.
double naive_loocv(const RegressionSet& data, const ModelSpec& spec) {
  double ss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    RegressionSet train;
    for (std::size_t j = 0; j < data.size(); ++j)
      if (j != i) train.add(data.row(j), data.y[j], data.groups[j]);
    const Point p = predict(fit(spec, train), data.row(i));
    ss += std::pow(p.x - data.y[i].x, 2) + std::pow(p.y - data.y[i].y, 2);
  }
  return std::sqrt(ss / double(data.size()));
}

}  // namespace

TEST(Loocv, MatchesNaiveLoop) {
  const RegressionSet data = cloud(40, 1);
  for (ModelKind k : {ModelKind::BaselineReg, ModelKind::OLS, ModelKind::Lasso, ModelKind::TreeReg}) {
    ModelSpec spec;
    spec.kind = k;
    spec.lambda = 0.5;
    EXPECT_NEAR(*loocv_rmse(data, spec).rmse_px, naive_loocv(data, spec), 1e-9) << to_string(k);
  }
}

TEST(Loocv, BaselineIsTheFirstHoverDistance) {
  const RegressionSet data = cloud(25, 2);
  double ss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    ss += std::pow(data.row(i)[0] - data.y[i].x, 2) + std::pow(data.row(i)[1] - data.y[i].y, 2);
  EXPECT_NEAR(*loocv_rmse(data, {}).rmse_px, std::sqrt(ss / 25.0), 1e-12);
}

TEST(Loocv, ConstantTargetIsPredictedExactly) {
  RegressionSet data;
  Rng rng(3);
  for (int i = 0; i < 20; ++i) data.add(std::vector<double>{rng.uniform(0, 9), rng.uniform(0, 9)}, Point{50, 60});
  for (ModelKind k : {ModelKind::OLS, ModelKind::Lasso, ModelKind::TreeReg, ModelKind::ForestReg}) {
    ModelSpec spec;
    spec.kind = k;
    spec.n_trees = 5;
    EXPECT_NEAR(*loocv_rmse(data, spec).rmse_px, 0.0, 1e-9) << to_string(k);
  }
  EXPECT_THROW(loocv_rmse(cloud(1, 1), {}), std::invalid_argument);
}

TEST(Kfold, FoldsPartitionTheRows) {
  for (std::size_t n : {10u, 37u, 100u}) {
    const auto folds = learn::detail::make_folds(n, 10, 5);
    std::set<std::size_t> seen;
    for (const auto& f : folds) {
      EXPECT_TRUE(f.size() == n / 10 || f.size() == n / 10 + 1);
      for (std::size_t i : f) EXPECT_TRUE(seen.insert(i).second);
    }
    EXPECT_EQ(seen.size(), n);
  }
}

TEST(Kfold, BaselineAtKeyCentersIsPerfect) {
  const KeyboardLayout layout = make_layout({720, 1280, 20});
  ClassificationSet data;
  for (int rep = 0; rep < 3; ++rep)
    for (const Key& k : layout.keys) {
      const Point c = k.rect.center();
      data.add(std::vector<double>{c.x, c.y, c.x, c.y}, k.label, rep);
    }
  ModelSpec spec;
  spec.kind = ModelKind::BaselineCls;
  spec.layout = layout;
  const Metrics m = kfold_accuracy(data, spec);
  EXPECT_EQ(*m.accuracy, 1.0);
  EXPECT_EQ(m.confusion.labels.size(), layout.keys.size());
  long diag = 0;
  for (std::size_t i = 0; i < m.confusion.labels.size(); ++i) diag += m.confusion.counts[i][i];
  EXPECT_EQ(diag, long(data.size()));
}

TEST(Kfold, SameSeedSameMetrics) {
  ClassificationSet data;
  Rng rng(4);
  for (int i = 0; i < 120; ++i) {
    const int c = int(rng.below(4));
    data.add(std::vector<double>{c + rng.normal(0, 0.8), rng.normal(0, 1)}, std::string(1, char('a' + c)), i % 2);
  }
  ModelSpec spec;
  spec.kind = ModelKind::ForestCls;
  spec.n_trees = 10;
  const Metrics a = kfold_accuracy(data, spec, 10, 7), b = kfold_accuracy(data, spec, 10, 7);
  EXPECT_EQ(a.accuracy, b.accuracy);
  EXPECT_EQ(a.confusion.counts, b.confusion.counts);
  const RegressionSet r = cloud(60, 5);
  ModelSpec rs;
  rs.kind = ModelKind::ForestReg;
  rs.n_trees = 5;
  EXPECT_EQ(kfold_rmse(r, rs, 5, 1).rmse_px, kfold_rmse(r, rs, 5, 1).rmse_px);
  EXPECT_THROW(kfold_accuracy(data, spec, 1), std::invalid_argument);
  EXPECT_THROW(kfold_rmse(cloud(3, 1), rs, 5, 1), std::invalid_argument);
}

TEST(Metrics, ConfusionAndAccuracy) {
  const std::vector<std::string> truth = {"a", "a", "b", "c"}, pred = {"a", "b", "b", "d"};
  EXPECT_EQ(accuracy(truth, pred), 0.5);
  const Confusion c = confusion(truth, pred);
  EXPECT_EQ(c.labels, (std::vector<std::string>{"a", "b", "c", "d"}));
  EXPECT_EQ(c.counts[0][0], 1);
  EXPECT_EQ(c.counts[0][1], 1);
  EXPECT_EQ(c.counts[2][3], 1);
  const std::vector<Point> t = {{0, 0}, {0, 0}}, p = {{3, 4}, {0, 0}};
  EXPECT_NEAR(rmse(t, p), std::sqrt(12.5), 1e-12);
}

TEST(PerUser, NeedsTwoUsersWithEnoughRows) {
  ClassificationSet one;
  for (int i = 0; i < 30; ++i) one.add(std::vector<double>{double(i)}, i % 2 ? "a" : "b", 0);
  ModelSpec spec;
  spec.kind = ModelKind::TreeCls;
  EXPECT_THROW(per_user_eval(one, spec), GroupTooSmall);
  ClassificationSet two = one;
  for (int i = 0; i < 5; ++i) two.add(std::vector<double>{double(i)}, "a", 1);
  EXPECT_THROW(per_user_eval(two, spec), GroupTooSmall);
}

TEST(PerUser, IdenticalUsersMatchPooledClosely) {
  ClassificationSet data;
  Rng rng(6);
  for (int i = 0; i < 400; ++i) {
    const int c = int(rng.below(3));
    data.add(std::vector<double>{c * 2.0 + rng.normal(0, 1), rng.normal(0, 1)}, std::string(1, char('a' + c)), i % 2);
  }
  ModelSpec spec;
  spec.kind = ModelKind::ForestCls;
  spec.n_trees = 20;
  const PerUserReport r = per_user_eval(data, spec);
  EXPECT_NEAR(*r.pooled.accuracy, *r.per_user.accuracy, 0.06);
  EXPECT_EQ(r.per_user.n, 400u);
  ASSERT_EQ(r.per_user.per_user.size(), 2u);
}

TEST(MetricsCsv, FixedColumns) {
  Metrics reg;
  reg.n = 3;
  reg.rmse_px = 1.0 / 3.0;
  Metrics cls;
  cls.n = 4;
  cls.accuracy = 0.75;
  const std::vector<MetricsRow> rows = {{"stylus", "ols", "loocv", reg}, {"a,b", "forest_cls", "kfold:10", cls}};
  EXPECT_EQ(metrics_csv(rows),
            "corpus,model,cv,n,rmse_px,accuracy\n"
            "stylus,ols,loocv,3,0.333333,\n"
            "\"a,b\",forest_cls,kfold:10,4,,0.750000\n");
}
