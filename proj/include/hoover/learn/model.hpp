#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "hoover/layout.hpp"
#include "hoover/learn/dataset.hpp"
#include "hoover/learn/forest.hpp"
#include "hoover/learn/linear.hpp"
#include "hoover/learn/tree.hpp"

namespace hoover::learn {

enum class ModelKind { BaselineReg, OLS, Lasso, TreeReg, ForestReg, BaselineCls, TreeCls, ForestCls, BaggingCls };

enum class Task { Regression, Classification };

inline Task task_of(ModelKind k) {
  switch (k) {
    case ModelKind::BaselineReg:
    case ModelKind::OLS:
    case ModelKind::Lasso:
    case ModelKind::TreeReg:
    case ModelKind::ForestReg: return Task::Regression;
    default: return Task::Classification;
  }
}

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::BaselineReg: return "baseline_reg";
    case ModelKind::OLS: return "ols";
    case ModelKind::Lasso: return "lasso";
    case ModelKind::TreeReg: return "tree_reg";
    case ModelKind::ForestReg: return "forest_reg";
    case ModelKind::BaselineCls: return "baseline_cls";
    case ModelKind::TreeCls: return "tree_cls";
    case ModelKind::ForestCls: return "forest_cls";
    case ModelKind::BaggingCls: return "bagging_cls";
  }
  return "?";
}

inline std::optional<ModelKind> parse_model_kind(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(ModelKind::BaggingCls); ++i) {
    const auto k = static_cast<ModelKind>(i);
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

struct ModelSpec {
  ModelKind kind = ModelKind::BaselineReg;
  double lambda = 0.0;
  int n_trees = 100;
  int max_depth = 0;  // 0: unlimited
  int min_leaf = 1;
  int max_features = 0;  // 0: sqrt(d) for forest classifiers, d/3 for forest regressors, d otherwise
  bool bootstrap = true;
  std::uint64_t seed = 0;
  std::optional<KeyboardLayout> layout;  // required by BaselineCls
};

inline std::size_t resolved_max_features(const ModelSpec& s, std::size_t dim) {
  if (s.max_features > 0) return std::min<std::size_t>(static_cast<std::size_t>(s.max_features), dim);
  if (s.kind == ModelKind::ForestCls) return static_cast<std::size_t>(std::ceil(std::sqrt(double(dim))));
  if (s.kind == ModelKind::ForestReg) return (dim + 2) / 3;
  return dim;
}

inline TreeParams tree_params(const ModelSpec& s, std::size_t dim) {
  TreeParams p;
  p.max_depth = s.max_depth;
  p.min_leaf = s.min_leaf;
  const std::size_t m = resolved_max_features(s, dim);
  p.max_features = m >= dim ? 0 : static_cast<int>(m);
  return p;
}

inline ForestParams forest_params(const ModelSpec& s, std::size_t dim) {
  return {s.n_trees, tree_params(s, dim), s.bootstrap};
}

struct LinearPair {
  LinearFit x, y;
  friend bool operator==(const LinearPair&, const LinearPair&) = default;
};

struct BaselineReg {
  friend bool operator==(const BaselineReg&, const BaselineReg&) = default;
};

struct RegressionModel {
  ModelKind kind = ModelKind::BaselineReg;
  std::size_t dim = 0;
  std::variant<BaselineReg, LinearPair, Tree<Point>, Forest<Point>> impl;

  friend bool operator==(const RegressionModel&, const RegressionModel&) = default;
};

struct ClassificationModel {
  ModelKind kind = ModelKind::BaselineCls;
  std::size_t dim = 0;
  std::vector<std::string> labels;  // sorted; class index i is labels[i]
  std::variant<KeyboardLayout, Tree<int>, Forest<int>> impl;

  friend bool operator==(const ClassificationModel&, const ClassificationModel&) = default;
};

namespace detail {

inline void check_spec(const ModelSpec& s, Task expected, std::size_t dim) {
  if (task_of(s.kind) != expected) throw std::invalid_argument("model kind does not match the target type");
  if (s.lambda < 0.0) throw std::invalid_argument("lasso lambda must be >= 0");
  if (s.n_trees < 1 || s.min_leaf < 1 || s.max_depth < 0 || s.max_features < 0)
    throw std::invalid_argument("model hyperparameters out of range");
  if ((s.kind == ModelKind::BaselineReg || s.kind == ModelKind::BaselineCls) && dim < 2)
    throw std::invalid_argument("baseline needs at least the first hover coordinates");
}

inline std::vector<double> column(std::span<const Point> pts, bool want_x) {
  std::vector<double> v(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) v[i] = want_x ? pts[i].x : pts[i].y;
  return v;
}

inline void check_dim(std::size_t expected, std::size_t got) {
  if (expected != got) throw std::invalid_argument("feature vector dimension mismatch");
}

}  // namespace detail

inline RegressionModel fit(const ModelSpec& s, const RegressionSet& data) {
  if (data.empty()) throw std::invalid_argument("fit: empty training set");
  detail::check_spec(s, Task::Regression, data.dim);
  if (data.x.size() != data.size() * data.dim) throw std::invalid_argument("fit: dimension mismatch");
  RegressionModel m;
  m.kind = s.kind;
  m.dim = data.dim;
  const std::span<const Point> ys(data.y);
  switch (s.kind) {
    case ModelKind::BaselineReg: m.impl = BaselineReg{}; break;
    case ModelKind::OLS:
      m.impl = LinearPair{fit_ols(data.x, data.dim, detail::column(ys, true)),
                          fit_ols(data.x, data.dim, detail::column(ys, false))};
      break;
    case ModelKind::Lasso: {
      const LassoOptions opt{s.lambda};
      m.impl = LinearPair{fit_lasso(data.x, data.dim, detail::column(ys, true), opt),
                          fit_lasso(data.x, data.dim, detail::column(ys, false), opt)};
      break;
    }
    case ModelKind::TreeReg: {
      std::vector<std::size_t> rows(data.size());
      std::iota(rows.begin(), rows.end(), std::size_t{0});
      Rng rng = tree_rng(s.seed, 0);
      m.impl = fit_tree(data.x, data.dim, std::move(rows), RegressionCriterion(ys), tree_params(s, data.dim), &rng);
      break;
    }
    case ModelKind::ForestReg:
      m.impl = fit_forest(
          data.x, data.dim, data.size(), [&] { return RegressionCriterion(ys); }, forest_params(s, data.dim), s.seed);
      break;
    default: break;
  }
  return m;
}

inline Point predict(const RegressionModel& m, std::span<const double> x) {
  detail::check_dim(m.dim, x.size());
  return std::visit(
      [&](const auto& impl) -> Point {
        using T = std::decay_t<decltype(impl)>;
        if constexpr (std::is_same_v<T, BaselineReg>) {
          return {x[0], x[1]};
        } else if constexpr (std::is_same_v<T, LinearPair>) {
          return {impl.x.predict(x), impl.y.predict(x)};
        } else if constexpr (std::is_same_v<T, Tree<Point>>) {
          return impl.predict(x);
        } else {
          return predict_mean(impl, x);
        }
      },
      m.impl);
}

inline std::vector<std::string> sorted_labels(std::span<const std::string> ys) {
  std::vector<std::string> labels(ys.begin(), ys.end());
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  return labels;
}

inline ClassificationModel fit(const ModelSpec& s, const ClassificationSet& data) {
  if (data.empty()) throw std::invalid_argument("fit: empty training set");
  detail::check_spec(s, Task::Classification, data.dim);
  if (data.x.size() != data.size() * data.dim) throw std::invalid_argument("fit: dimension mismatch");
  ClassificationModel m;
  m.kind = s.kind;
  m.dim = data.dim;
  m.labels = sorted_labels(data.y);

  if (s.kind == ModelKind::BaselineCls) {
    if (!s.layout) throw std::invalid_argument("baseline classifier needs a keyboard layout");
    m.impl = *s.layout;
    return m;
  }

  std::vector<int> classes(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    classes[i] = static_cast<int>(std::lower_bound(m.labels.begin(), m.labels.end(), data.y[i]) - m.labels.begin());
  const std::size_t n_classes = m.labels.size();
  auto make = [&] { return GiniCriterion(classes, n_classes); };

  if (s.kind == ModelKind::TreeCls) {
    std::vector<std::size_t> rows(data.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    Rng rng = tree_rng(s.seed, 0);
    m.impl = fit_tree(data.x, data.dim, std::move(rows), make(), tree_params(s, data.dim), &rng);
  } else {
    m.impl = fit_forest(data.x, data.dim, data.size(), make, forest_params(s, data.dim), s.seed);
  }
  return m;
}

inline std::string predict(const ClassificationModel& m, std::span<const double> x) {
  detail::check_dim(m.dim, x.size());
  if (const auto* layout = std::get_if<KeyboardLayout>(&m.impl)) {
    const Point first{x[0], x[1]};
    if (auto k = key_at(*layout, first)) return *k;
    return nearest_key(*layout, first).label;
  }
  if (const auto* tree = std::get_if<Tree<int>>(&m.impl)) return m.labels[static_cast<std::size_t>(tree->predict(x))];
  return m.labels[static_cast<std::size_t>(predict_vote(std::get<Forest<int>>(m.impl), x, m.labels.size()))];
}

/// Parses "name[:key=value,...]". Names: baseline, ols, lasso, tree, forest,
/// bagging (the first four of these resolve against `task`) or any explicit
/// kind such as forest_cls. Keys: n, depth, leaf, mtry, lambda, bootstrap, seed.
inline ModelSpec parse_model_spec(std::string_view text, Task task) {
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  ModelSpec s;
  const bool reg = task == Task::Regression;
  if (auto k = parse_model_kind(name)) {
    s.kind = *k;
  } else if (name == "baseline") {
    s.kind = reg ? ModelKind::BaselineReg : ModelKind::BaselineCls;
  } else if (name == "ols" || name == "linear") {
    s.kind = ModelKind::OLS;
  } else if (name == "tree") {
    s.kind = reg ? ModelKind::TreeReg : ModelKind::TreeCls;
  } else if (name == "forest" || name == "rf") {
    s.kind = reg ? ModelKind::ForestReg : ModelKind::ForestCls;
  } else if (name == "bagging") {
    s.kind = ModelKind::BaggingCls;
  } else {
    throw std::invalid_argument("unknown model '" + std::string(name) + "'");
  }
  if (task_of(s.kind) != task) throw std::invalid_argument("model '" + std::string(name) + "' does not fit this task");

  std::string_view rest = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument("model option '" + std::string(item) + "' needs a value");
    const std::string_view key = item.substr(0, eq), val = item.substr(eq + 1);
    auto number = [&](auto& out) {
      const auto [p, ec] = std::from_chars(val.data(), val.data() + val.size(), out);
      if (ec != std::errc() || p != val.data() + val.size())
        throw std::invalid_argument("model option '" + std::string(key) + "': bad value '" + std::string(val) + "'");
    };
    if (key == "n") number(s.n_trees);
    else if (key == "depth") number(s.max_depth);
    else if (key == "leaf") number(s.min_leaf);
    else if (key == "mtry") number(s.max_features);
    else if (key == "lambda") number(s.lambda);
    else if (key == "seed") number(s.seed);
    else if (key == "bootstrap") {
      int b = 1;
      number(b);
      s.bootstrap = b != 0;
    } else {
      throw std::invalid_argument("unknown model option '" + std::string(key) + "'");
    }
  }
  return s;
}

}  // namespace hoover::learn
