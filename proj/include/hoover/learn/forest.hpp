#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "hoover/learn/tree.hpp"
#include "hoover/rng.hpp"

namespace hoover::learn {

struct ForestParams {
  int n_trees = 100;
  TreeParams tree;
  bool bootstrap = true;  // false is a diagnostic mode: every tree sees all rows

  bool valid() const { return n_trees >= 1 && tree.valid(); }
};

template <class Value>
struct Forest {
  std::vector<Tree<Value>> trees;

  friend bool operator==(const Forest&, const Forest&) = default;
};

// Each tree owns an RNG stream derived from (seed, tree index), so the fit
// does not depend on the order trees are grown in.
inline Rng tree_rng(std::uint64_t seed, std::size_t tree_index) { return Rng(derive_seed(seed, tree_index)); }

template <class MakeCriterion>
auto fit_forest(std::span<const double> x, std::size_t dim, std::size_t n_rows, MakeCriterion make_criterion,
                const ForestParams& p, std::uint64_t seed) {
  if (!p.valid()) throw std::invalid_argument("forest: invalid parameters");
  if (n_rows == 0) throw std::invalid_argument("forest: no training rows");
  using Criterion = decltype(make_criterion());
  Forest<typename Criterion::Value> forest;
  forest.trees.reserve(static_cast<std::size_t>(p.n_trees));
  for (std::size_t t = 0; t < static_cast<std::size_t>(p.n_trees); ++t) {
    Rng rng = tree_rng(seed, t);
    std::vector<std::size_t> rows(n_rows);
    if (p.bootstrap) {
      for (std::size_t& r : rows) r = static_cast<std::size_t>(rng.below(n_rows));
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    forest.trees.push_back(fit_tree(x, dim, std::move(rows), make_criterion(), p.tree, &rng));
  }
  return forest;
}

inline Point predict_mean(const Forest<Point>& f, std::span<const double> x) {
  double sx = 0.0, sy = 0.0;
  for (const auto& t : f.trees) {
    const Point p = t.predict(x);
    sx += p.x, sy += p.y;
  }
  const double n = double(f.trees.size());
  return {sx / n, sy / n};
}

// Majority vote; ties go to the smallest class index.
inline int predict_vote(const Forest<int>& f, std::span<const double> x, std::size_t n_classes) {
  std::vector<int> votes(n_classes, 0);
  for (const auto& t : f.trees) ++votes[static_cast<std::size_t>(t.predict(x))];
  return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

}  // namespace hoover::learn
