#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hoover/geometry.hpp"
#include "hoover/rng.hpp"

namespace hoover::learn {

struct TreeParams {
  int max_depth = 0;     // 0: unlimited
  int min_leaf = 1;
  int max_features = 0;  // features tried per split; 0: all

  bool valid() const { return max_depth >= 0 && min_leaf >= 1 && max_features >= 0; }
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int value = -1;  // leaf payload index

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Binary decision tree; rows with x[feature] <= threshold go left.
template <class Value>
struct Tree {
  std::size_t dim = 0;
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::vector<Value> values;

  const Value& predict(std::span<const double> x) const {
    int at = 0;
    while (nodes[at].feature >= 0) at = x[nodes[at].feature] <= nodes[at].threshold ? nodes[at].left : nodes[at].right;
    return values[nodes[at].value];
  }

  std::size_t leaf_count() const { return values.size(); }

  friend bool operator==(const Tree&, const Tree&) = default;
};

// Multi-output variance reduction over (x, y) click targets.
class RegressionCriterion {
 public:
  using Value = Point;

  explicit RegressionCriterion(std::span<const Point> targets) : t_(targets) {}

  bool pure(std::span<const std::size_t> rows) const {
    for (std::size_t r : rows)
      if (!(t_[r] == t_[rows.front()])) return false;
    return true;
  }

  Point leaf_value(std::span<const std::size_t> rows) const {
    double sx = 0.0, sy = 0.0;
    for (std::size_t r : rows) sx += t_[r].x, sy += t_[r].y;
    return {sx / double(rows.size()), sy / double(rows.size())};
  }

  void reset(std::span<const std::size_t> rows) {
    lx_ = ly_ = 0.0;
    rx_ = ry_ = 0.0;
    for (std::size_t r : rows) rx_ += t_[r].x, ry_ += t_[r].y;
  }

  void move_left(std::size_t r) {
    lx_ += t_[r].x, ly_ += t_[r].y;
    rx_ -= t_[r].x, ry_ -= t_[r].y;
  }

  // Larger is better: equals total SS minus children's SSE, up to a constant.
  double score(std::size_t nl, std::size_t nr) const {
    return (lx_ * lx_ + ly_ * ly_) / double(nl) + (rx_ * rx_ + ry_ * ry_) / double(nr);
  }

 private:
  std::span<const Point> t_;
  double lx_ = 0, ly_ = 0, rx_ = 0, ry_ = 0;
};

// Gini impurity over class indices in [0, n_classes).
class GiniCriterion {
 public:
  using Value = int;

  GiniCriterion(std::span<const int> targets, std::size_t n_classes)
      : t_(targets), left_(n_classes, 0), right_(n_classes, 0) {}

  bool pure(std::span<const std::size_t> rows) const {
    for (std::size_t r : rows)
      if (t_[r] != t_[rows.front()]) return false;
    return true;
  }

  // Majority class; ties go to the smallest class index.
  int leaf_value(std::span<const std::size_t> rows) const {
    std::vector<int> counts(left_.size(), 0);
    for (std::size_t r : rows) ++counts[t_[r]];
    return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  }

  void reset(std::span<const std::size_t> rows) {
    std::fill(left_.begin(), left_.end(), 0);
    std::fill(right_.begin(), right_.end(), 0);
    for (std::size_t r : rows) ++right_[t_[r]];
    sq_left_ = 0.0;
    sq_right_ = 0.0;
    for (long c : right_) sq_right_ += double(c) * double(c);
  }

  void move_left(std::size_t r) {
    const int c = t_[r];
    sq_left_ += 2.0 * double(left_[c]) + 1.0;
    sq_right_ -= 2.0 * double(right_[c]) - 1.0;
    ++left_[c];
    --right_[c];
  }

  // Larger is better: n minus the size-weighted Gini of the children.
  double score(std::size_t nl, std::size_t nr) const { return sq_left_ / double(nl) + sq_right_ / double(nr); }

 private:
  std::span<const int> t_;
  std::vector<long> left_, right_;
  double sq_left_ = 0.0, sq_right_ = 0.0;
};

namespace detail {

template <class Criterion>
class TreeBuilder {
 public:
  using Value = typename Criterion::Value;

  TreeBuilder(std::span<const double> x, std::size_t dim, Criterion crit, const TreeParams& p, Rng* rng)
      : x_(x), dim_(dim), crit_(std::move(crit)), p_(p), rng_(rng) {}

  Tree<Value> build(std::vector<std::size_t> rows) {
    tree_ = {};
    tree_.dim = dim_;
    if (rows.empty()) throw std::invalid_argument("tree: no training rows");
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
  };

  int make_leaf(std::span<const std::size_t> rows) {
    TreeNode leaf;
    leaf.value = static_cast<int>(tree_.values.size());
    tree_.values.push_back(crit_.leaf_value(rows));
    tree_.nodes.push_back(leaf);
    return static_cast<int>(tree_.nodes.size() - 1);
  }

  std::vector<std::size_t> candidate_features() {
    std::vector<std::size_t> f(dim_);
    for (std::size_t j = 0; j < dim_; ++j) f[j] = j;
    const std::size_t m = static_cast<std::size_t>(p_.max_features);
    if (m == 0 || m >= dim_ || !rng_) return f;
    for (std::size_t i = 0; i < m; ++i) std::swap(f[i], f[i + rng_->below(dim_ - i)]);
    f.resize(m);
    std::sort(f.begin(), f.end());
    return f;
  }

  // Exhaustive midpoint search; strict improvement keeps the earliest
  // feature and then the lowest threshold on ties.
  Split best_split(std::span<const std::size_t> rows) {
    const std::size_t n = rows.size();
    const std::size_t min_leaf = static_cast<std::size_t>(p_.min_leaf);
    Split best;
    double best_score = -1.0;
    std::vector<std::pair<double, std::size_t>> order(n);
    for (std::size_t f : candidate_features()) {
      for (std::size_t i = 0; i < n; ++i) order[i] = {x_[rows[i] * dim_ + f], rows[i]};
      std::sort(order.begin(), order.end());
      if (order.front().first == order.back().first) continue;
      crit_.reset(rows);
      for (std::size_t i = 0; i + 1 < n; ++i) {
        crit_.move_left(order[i].second);
        const double lo = order[i].first, hi = order[i + 1].first;
        if (lo == hi) continue;
        const std::size_t nl = i + 1;
        if (nl < min_leaf || n - nl < min_leaf) continue;
        const double s = crit_.score(nl, n - nl);
        if (s > best_score) {
          best_score = s;
          double mid = lo + (hi - lo) / 2.0;
          if (!(mid < hi)) mid = lo;
          best = {static_cast<int>(f), mid};
        }
      }
    }
    return best;
  }

  int grow(std::vector<std::size_t> rows, int depth) {
    const bool depth_cap = p_.max_depth > 0 && depth >= p_.max_depth;
    if (depth_cap || rows.size() < 2 * static_cast<std::size_t>(p_.min_leaf) || crit_.pure(rows))
      return make_leaf(rows);
    const Split split = best_split(rows);
    if (split.feature < 0) return make_leaf(rows);

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) (x_[r * dim_ + std::size_t(split.feature)] <= split.threshold ? left : right).push_back(r);
    rows = {};

    const int self = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({split.feature, split.threshold, -1, -1, -1});
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    tree_.nodes[self].left = l;
    tree_.nodes[self].right = r;
    return self;
  }

  std::span<const double> x_;
  std::size_t dim_;
  Criterion crit_;
  TreeParams p_;
  Rng* rng_;
  Tree<Value> tree_;
};

}  // namespace detail

/// CART fit on the given rows (repeats allowed, as in a bootstrap sample).
/// `rng` drives per-split feature subsampling and may be null when
/// max_features is 0.
template <class Criterion>
Tree<typename Criterion::Value> fit_tree(std::span<const double> x, std::size_t dim, std::vector<std::size_t> rows,
                                         Criterion crit, const TreeParams& p, Rng* rng = nullptr) {
  if (!p.valid()) throw std::invalid_argument("tree: invalid parameters");
  return detail::TreeBuilder<Criterion>(x, dim, std::move(crit), p, rng).build(std::move(rows));
}

}  // namespace hoover::learn
