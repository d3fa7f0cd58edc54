#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "hoover/learn/model.hpp"
#include "hoover/learn/model_io.hpp"
#include "hoover/rng.hpp"

using namespace hoover;
using namespace hoover::learn;

namespace {

// Well-conditioned random design with a known linear target plus small noise.
struct Design {
  std::vector<double> x, y;
  std::size_t n, d;
};

Design linear_design(std::size_t n, std::size_t d, std::uint64_t seed, double noise = 0.1) {
  Rng rng(seed);
  Design out{{}, {}, n, d};
  std::vector<double> w(d);
  for (double& v : w) v = rng.normal(0, 2);
  for (std::size_t i = 0; i < n; ++i) {
    double t = 1.5;
    for (std::size_t j = 0; j < d; ++j) {
      const double v = rng.normal(0, 1 + double(j));
      out.x.push_back(v);
      t += w[j] * v;
    }
    out.y.push_back(t + rng.normal(0, noise));
  }
  return out;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Classification set of distinct rows with labels drawn from a small alphabet.
ClassificationSet blobs(std::size_t n, std::uint64_t seed, std::size_t dim = 4) {
  Rng rng(seed);
  ClassificationSet s;
  static const std::string labels[] = {"a", "b", "c", "d", "e"};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = rng.below(5);
    std::vector<double> f(dim);
    for (std::size_t j = 0; j < dim; ++j) f[j] = double(c) * 3.0 + rng.normal(0, 2.0);
    s.add(f, labels[c], int(i % 3));
  }
  return s;
}

RegressionSet cloud(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  RegressionSet s;
  for (std::size_t i = 0; i < n; ++i) {
    const Point truth{rng.uniform(0, 720), rng.uniform(0, 1280)};
    std::vector<double> f;
    for (int k = 0; k < 4; ++k) {
      f.push_back(truth.x + rng.normal(10, 20));
      f.push_back(truth.y + rng.normal(-5, 20));
    }
    for (int k = 0; k < 4; ++k) f.push_back(20.0 * k + rng.uniform(0, 5));
    s.add(f, truth, int(i % 4));
  }
  return s;
}

}  // namespace

TEST(Featurize, OrderAndPadding) {
  CapturedClick c;
  c.hovers = {{61, 10, 20}, {80, 11, 21}};
  EXPECT_EQ(featurize(c), (std::vector<double>{10, 20, 11, 21, 11, 21, 11, 21, 61, 80, 80, 80}));
  EXPECT_EQ(featurize(c, {2, false}), (std::vector<double>{10, 20, 11, 21}));
  EXPECT_THROW(featurize(CapturedClick{}), EmptyCapture);
  EXPECT_THROW(featurize(c, {0, true}), std::invalid_argument);
}

TEST(Ols, ExactOnNoiselessData) {
  // y = 2 x0 - 3 x1 + 5
  const std::vector<double> x = {0, 0, 1, 0, 0, 1, 1, 1, 2, 3};
  const std::vector<double> y = {5, 7, 2, 4, 0};
  const LinearFit f = fit_ols(x, 2, y);
  EXPECT_NEAR(f.weights[0], 2.0, 1e-6);
  EXPECT_NEAR(f.weights[1], -3.0, 1e-6);
  EXPECT_NEAR(f.intercept, 5.0, 1e-6);
}

TEST(Ols, CollinearColumnsStaySolvable) {
  const std::vector<double> x = {1, 2, 2, 4, 3, 6, 4, 8};
  const std::vector<double> y = {1, 2, 3, 4};
  const LinearFit f = fit_ols(x, 2, y);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(f.predict({x.data() + 2 * i, 2}), y[i], 1e-6);
}

TEST(Lasso, HugePenaltyGivesTheMean) {
  const Design d = linear_design(50, 3, 1);
  const LinearFit f = fit_lasso(d.x, d.d, d.y, {1e6});
  for (double w : f.weights) EXPECT_EQ(w, 0.0);
  double mean = 0.0;
  for (double v : d.y) mean += v;
  EXPECT_NEAR(f.intercept, mean / 50.0, 1e-12);
}

TEST(Lasso, VanishingPenaltyMatchesOls) {
  const Design d = linear_design(200, 9, 2);
  const LinearFit ols = fit_ols(d.x, d.d, d.y);
  const LinearFit lasso = fit_lasso(d.x, d.d, d.y, {1e-12, 1e-12, 100000});
  EXPECT_LE(max_abs_diff(ols.weights, lasso.weights), 1e-6);
  EXPECT_NEAR(ols.intercept, lasso.intercept, 1e-6);
}

TEST(Lasso, ObjectiveNeverIncreases) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Design d = linear_design(80, 6, seed, 3.0);
    for (double lambda : {0.0, 0.5, 5.0, 50.0}) {
      LassoDiagnostics diag;
      fit_lasso(d.x, d.d, d.y, {lambda}, &diag);
      EXPECT_TRUE(diag.converged);
      for (std::size_t i = 1; i < diag.objective.size(); ++i)
        EXPECT_LE(diag.objective[i], diag.objective[i - 1] * (1 + 1e-12)) << seed << " " << lambda;
    }
  }
}

TEST(Lasso, ConstantColumnGetsZeroWeight) {
  Design d = linear_design(40, 2, 3);
  for (std::size_t i = 0; i < d.n; ++i) d.x[2 * i + 1] = 7.0;
  const LinearFit f = fit_lasso(d.x, d.d, d.y, {0.1});
  EXPECT_EQ(f.weights[1], 0.0);
  EXPECT_THROW(fit_lasso(d.x, d.d, d.y, {-1.0}), std::invalid_argument);
}

TEST(Tree, FitsDistinctRowsPerfectly) {
  const ClassificationSet data = blobs(50, 4);
  ModelSpec spec;
  spec.kind = ModelKind::TreeCls;
  const ClassificationModel m = fit(spec, data);
  for (std::size_t i = 0; i < data.size(); ++i) EXPECT_EQ(predict(m, data.row(i)), data.y[i]);
}

TEST(Tree, RegressionLeavesAreMeans) {
  RegressionSet s;
  s.add(std::vector<double>{0.0}, Point{0, 0});
  s.add(std::vector<double>{0.0}, Point{2, 4});
  s.add(std::vector<double>{10.0}, Point{100, 100});
  ModelSpec spec;
  spec.kind = ModelKind::TreeReg;
  const RegressionModel m = fit(spec, s);
  const auto& tree = std::get<Tree<Point>>(m.impl);
  ASSERT_EQ(tree.leaf_count(), 2u);
  EXPECT_EQ(tree.nodes[0].threshold, 5.0);  // midpoint split
  EXPECT_EQ(predict(m, std::vector<double>{-1.0}), (Point{1, 2}));
  EXPECT_EQ(predict(m, std::vector<double>{7.0}), (Point{100, 100}));
}

TEST(Tree, DepthAndLeafLimits) {
  const ClassificationSet data = blobs(200, 5);
  ModelSpec spec;
  spec.kind = ModelKind::TreeCls;
  spec.max_depth = 1;
  EXPECT_LE(std::get<Tree<int>>(fit(spec, data).impl).leaf_count(), 2u);
  spec.max_depth = 0;
  spec.min_leaf = 40;
  EXPECT_LE(std::get<Tree<int>>(fit(spec, data).impl).leaf_count(), 5u);
}

TEST(Forest, SingleTreeWithoutBootstrapEqualsTheTree) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ClassificationSet data = blobs(120, seed, 9);
    ModelSpec f;
    f.kind = ModelKind::ForestCls;
    f.n_trees = 1;
    f.bootstrap = false;
    f.seed = seed;
    ModelSpec t = f;
    t.kind = ModelKind::TreeCls;
    t.max_features = int(resolved_max_features(f, data.dim));
    const ClassificationModel fm = fit(f, data), tm = fit(t, data);
    EXPECT_EQ(std::get<Forest<int>>(fm.impl).trees.front(), std::get<Tree<int>>(tm.impl));
    const ClassificationSet probe = blobs(100, seed + 50, 9);
    for (std::size_t i = 0; i < probe.size(); ++i) EXPECT_EQ(predict(fm, probe.row(i)), predict(tm, probe.row(i)));

    const RegressionSet rdata = cloud(80, seed);
    ModelSpec rf;
    rf.kind = ModelKind::ForestReg;
    rf.n_trees = 1;
    rf.bootstrap = false;
    rf.seed = seed;
    ModelSpec rt = rf;
    rt.kind = ModelKind::TreeReg;
    rt.max_features = int(resolved_max_features(rf, rdata.dim));
    EXPECT_EQ(std::get<Forest<Point>>(fit(rf, rdata).impl).trees.front(), std::get<Tree<Point>>(fit(rt, rdata).impl));
  }
}

TEST(Forest, SeedDeterminesTheModel) {
  const ClassificationSet data = blobs(150, 8);
  ModelSpec spec;
  spec.kind = ModelKind::ForestCls;
  spec.n_trees = 15;
  spec.seed = 1;
  const std::string a = model_to_json(fit(spec, data));
  EXPECT_EQ(a, model_to_json(fit(spec, data)));
  spec.seed = 2;
  EXPECT_NE(a, model_to_json(fit(spec, data)));
}

TEST(Forest, BaggingUsesEveryFeature) {
  ModelSpec s;
  s.kind = ModelKind::BaggingCls;
  EXPECT_EQ(resolved_max_features(s, 12), 12u);
  s.kind = ModelKind::ForestCls;
  EXPECT_EQ(resolved_max_features(s, 12), 4u);
  EXPECT_EQ(resolved_max_features(s, 8), 3u);
  s.kind = ModelKind::ForestReg;
  EXPECT_EQ(resolved_max_features(s, 12), 4u);
  EXPECT_EQ(resolved_max_features(s, 2), 1u);
}

namespace {

// True when the forest's top vote at x is shared by two or more classes.
bool vote_tied(const ClassificationModel& m, std::span<const double> x) {
  const auto* forest = std::get_if<Forest<int>>(&m.impl);
  if (!forest) return false;
  std::vector<int> votes(m.labels.size(), 0);
  for (const auto& t : forest->trees) ++votes[std::size_t(t.predict(x))];
  const int top = *std::max_element(votes.begin(), votes.end());
  return std::count(votes.begin(), votes.end(), top) > 1;
}

}  // namespace

// Renaming classes consistently cannot change which rows are predicted right.
// Vote ties resolve to the smallest label, so an order-reversing renaming is
// only held to that on rows where the vote is untied.
TEST(Classification, RelabelInvariance) {
  const ClassificationSet train = blobs(200, 10), test = blobs(100, 11);
  auto reverse = [](ClassificationSet s) {
    for (auto& y : s.y) y = "key_" + std::string(1, char('z' - (y[0] - 'a')));
    return s;
  };
  auto keep_order = [](ClassificationSet s) {
    for (auto& y : s.y) y = "key_" + y;
    return s;
  };
  for (ModelKind kind : {ModelKind::TreeCls, ModelKind::ForestCls, ModelKind::BaggingCls}) {
    ModelSpec spec;
    spec.kind = kind;
    spec.n_trees = 10;
    spec.seed = 3;
    const ClassificationModel a = fit(spec, train);
    const ClassificationModel b = fit(spec, reverse(train)), c = fit(spec, keep_order(train));
    const ClassificationSet test_b = reverse(test), test_c = keep_order(test);
    std::size_t compared = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
      const bool right = predict(a, test.row(i)) == test.y[i];
      EXPECT_EQ(right, predict(c, test_c.row(i)) == test_c.y[i]) << to_string(kind);
      if (vote_tied(a, test.row(i))) continue;
      ++compared;
      EXPECT_EQ(right, predict(b, test_b.row(i)) == test_b.y[i]) << to_string(kind);
    }
    EXPECT_GT(compared, 80u);
  }
}

TEST(Classification, BaselineUsesTheFirstHover) {
  const KeyboardLayout layout = make_layout({720, 1280, 20});
  ClassificationSet s;
  s.add(std::vector<double>{10, 800, 0, 0}, "q");
  ModelSpec spec;
  spec.kind = ModelKind::BaselineCls;
  EXPECT_THROW(fit(spec, s), std::invalid_argument);
  spec.layout = layout;
  const ClassificationModel m = fit(spec, s);
  EXPECT_EQ(predict(m, std::vector<double>{700, 1200, 0, 0}), ".");
  EXPECT_EQ(predict(m, std::vector<double>{30, 10, 0, 0}), "q");  // above the keyboard: nearest key
  EXPECT_THROW(predict(m, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST(Predict, IsPure) {
  const RegressionSet data = cloud(60, 1);
  ModelSpec spec;
  spec.kind = ModelKind::ForestReg;
  spec.n_trees = 5;
  const RegressionModel m = fit(spec, data);
  const Point a = predict(m, data.row(3));
  EXPECT_EQ(a, predict(m, data.row(3)));
}

TEST(Fit, RejectsMismatchedSpecs) {
  const RegressionSet r = cloud(10, 1);
  ModelSpec spec;
  spec.kind = ModelKind::TreeCls;
  EXPECT_THROW(fit(spec, r), std::invalid_argument);
  spec.kind = ModelKind::Lasso;
  spec.lambda = -1;
  EXPECT_THROW(fit(spec, r), std::invalid_argument);
  spec.kind = ModelKind::ForestReg;
  spec.lambda = 0;
  spec.n_trees = 0;
  EXPECT_THROW(fit(spec, r), std::invalid_argument);
  EXPECT_THROW(fit(ModelSpec{}, RegressionSet{}), std::invalid_argument);
}

TEST(ModelSpecText, Parsing) {
  const ModelSpec a = parse_model_spec("forest:n=50,mtry=3,seed=9,bootstrap=0", Task::Classification);
  EXPECT_EQ(a.kind, ModelKind::ForestCls);
  EXPECT_EQ(a.n_trees, 50);
  EXPECT_EQ(a.max_features, 3);
  EXPECT_EQ(a.seed, 9u);
  EXPECT_FALSE(a.bootstrap);
  EXPECT_EQ(parse_model_spec("forest", Task::Regression).kind, ModelKind::ForestReg);
  EXPECT_EQ(parse_model_spec("lasso:lambda=0.25", Task::Regression).lambda, 0.25);
  EXPECT_EQ(parse_model_spec("tree_cls:depth=4,leaf=2", Task::Classification).max_depth, 4);
  EXPECT_THROW(parse_model_spec("ols", Task::Classification), std::invalid_argument);
  EXPECT_THROW(parse_model_spec("svm", Task::Regression), std::invalid_argument);
  EXPECT_THROW(parse_model_spec("tree:depth", Task::Regression), std::invalid_argument);
  EXPECT_THROW(parse_model_spec("tree:depth=x", Task::Regression), std::invalid_argument);
  EXPECT_THROW(parse_model_spec("tree:colour=1", Task::Regression), std::invalid_argument);
}

TEST(ModelJson, RoundTripsEveryKind) {
  const RegressionSet r = cloud(80, 2);
  for (ModelKind k : {ModelKind::BaselineReg, ModelKind::OLS, ModelKind::Lasso, ModelKind::TreeReg, ModelKind::ForestReg}) {
    ModelSpec spec;
    spec.kind = k;
    spec.lambda = 0.3;
    spec.n_trees = 4;
    const RegressionModel m = fit(spec, r);
    const std::string text = model_to_json(m);
    const RegressionModel back = regression_model_from_json(text);
    EXPECT_EQ(model_to_json(back), text) << to_string(k);
    for (std::size_t i = 0; i < r.size(); ++i) ASSERT_EQ(predict(back, r.row(i)), predict(m, r.row(i)));
  }
  const ClassificationSet c = blobs(90, 3);
  for (ModelKind k : {ModelKind::BaselineCls, ModelKind::TreeCls, ModelKind::ForestCls, ModelKind::BaggingCls}) {
    ModelSpec spec;
    spec.kind = k;
    spec.n_trees = 4;
    spec.layout = make_layout({720, 1280, 20});
    const ClassificationModel m = fit(spec, c);
    const std::string text = model_to_json(m);
    const ClassificationModel back = classification_model_from_json(text);
    EXPECT_EQ(model_to_json(back), text) << to_string(k);
    for (std::size_t i = 0; i < c.size(); ++i) ASSERT_EQ(predict(back, c.row(i)), predict(m, c.row(i)));
  }
}

TEST(ModelJson, RejectsBrokenDocuments) {
  EXPECT_THROW(regression_model_from_json("{"), ModelFormatError);
  EXPECT_THROW(regression_model_from_json(R"({"format":"other","version":1})"), ModelFormatError);
  EXPECT_THROW(regression_model_from_json(R"({"format":"hoover-model","version":2})"), ModelFormatError);
  EXPECT_THROW(regression_model_from_json(R"({"format":"hoover-model","version":1,"kind":"tree_cls","dim":1})"),
               ModelFormatError);
  EXPECT_THROW(classification_model_from_json(
                   R"({"format":"hoover-model","version":1,"kind":"tree_cls","dim":1,"labels":["a"],"tree":["leaf",3]})"),
               ModelFormatError);
  EXPECT_THROW(classification_model_from_json(
                   R"({"format":"hoover-model","version":1,"kind":"tree_cls","dim":1,"labels":["a"],"tree":[4,"1",["leaf",0],["leaf",0]]})"),
               ModelFormatError);
  EXPECT_THROW(parse_decimal("1.5x"), ModelFormatError);
  EXPECT_EQ(parse_decimal(exact_decimal(0.1 + 0.2)), 0.1 + 0.2);
}
