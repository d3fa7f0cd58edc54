#pragma once

#include <algorithm>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hoover/capture.hpp"
#include "hoover/events.hpp"
#include "hoover/geometry.hpp"

namespace hoover::learn {

class EmptyCapture : public std::runtime_error {
 public:
  EmptyCapture() : std::runtime_error("capture has no post-click hovers") {}
};

class JoinError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FeatureOptions {
  int k = 4;
  bool include_dt = true;

  std::size_t dim() const { return static_cast<std::size_t>(include_dt ? 3 * k : 2 * k); }
};

/// (x1, y1, ..., xk, yk) of the first k hovers, then dt1..dtk when enabled.
/// Missing hovers repeat the last observed one.
inline std::vector<double> featurize(const CapturedClick& c, const FeatureOptions& opt = {}) {
  if (opt.k < 1) throw std::invalid_argument("k must be >= 1");
  if (c.hovers.empty()) throw EmptyCapture();
  const std::size_t k = static_cast<std::size_t>(opt.k);
  std::vector<double> f(opt.dim());
  for (std::size_t i = 0; i < k; ++i) {
    const HoverSample& h = c.hovers[std::min(i, c.hovers.size() - 1)];
    f[2 * i] = h.x;
    f[2 * i + 1] = h.y;
    if (opt.include_dt) f[2 * k + i] = h.dt_ms;
  }
  return f;
}

/// Row-major feature matrix with one target and one group tag per row.
template <class Target>
struct LabeledSet {
  std::size_t dim = 0;
  std::vector<double> x;
  std::vector<Target> y;
  std::vector<int> groups;

  std::size_t size() const { return y.size(); }
  bool empty() const { return y.empty(); }

  std::span<const double> row(std::size_t i) const { return {x.data() + i * dim, dim}; }

  void add(std::span<const double> features, Target target, int group = 0) {
    if (empty() && dim == 0) dim = features.size();
    if (features.size() != dim || dim == 0) throw std::invalid_argument("inconsistent feature dimensionality");
    x.insert(x.end(), features.begin(), features.end());
    y.push_back(std::move(target));
    groups.push_back(group);
  }

  LabeledSet subset(std::span<const std::size_t> rows) const {
    LabeledSet out;
    out.dim = dim;
    out.x.reserve(rows.size() * dim);
    for (std::size_t r : rows) {
      const auto f = row(r);
      out.x.insert(out.x.end(), f.begin(), f.end());
      out.y.push_back(y[r]);
      out.groups.push_back(groups[r]);
    }
    return out;
  }

  std::vector<int> distinct_groups() const {
    std::vector<int> g = groups;
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
  }
};

using RegressionSet = LabeledSet<Point>;
using ClassificationSet = LabeledSet<std::string>;

struct JoinedClick {
  const CapturedClick* capture;
  const Click* truth;
};

/// Pairs each capture with its session's truth click by (user_id, click_index).
/// The capture's touch-down time must agree with the truth to the millisecond.
inline std::vector<JoinedClick> join_captures(std::span<const CapturedClick> captures,
                                              std::span<const Session> sessions) {
  std::map<int, const Session*> by_user;
  for (const Session& s : sessions) {
    if (!by_user.emplace(s.user_id, &s).second)
      throw JoinError("two sessions share user_id " + std::to_string(s.user_id));
  }
  std::vector<JoinedClick> out;
  for (const CapturedClick& c : captures) {
    auto it = by_user.find(c.user_id);
    if (it == by_user.end()) throw JoinError("no session for user " + std::to_string(c.user_id));
    const auto& truth = it->second->truth_clicks;
    if (c.click_index < 0 || static_cast<std::size_t>(c.click_index) >= truth.size())
      throw JoinError("user " + std::to_string(c.user_id) + " has no click " + std::to_string(c.click_index));
    const Click& t = truth[static_cast<std::size_t>(c.click_index)];
    if (t.t_down_us / 1000 != c.t_down_ms)
      throw JoinError("user " + std::to_string(c.user_id) + " click " + std::to_string(c.click_index) +
                      ": capture time does not match truth");
    out.push_back({&c, &t});
  }
  return out;
}

struct BuildStats {
  std::size_t dropped_empty = 0;
  std::size_t dropped_unlabeled = 0;
};

inline RegressionSet regression_set(std::span<const JoinedClick> joined, const FeatureOptions& opt,
                                    BuildStats* stats = nullptr) {
  RegressionSet out;
  for (const JoinedClick& j : joined) {
    if (j.capture->hovers.empty()) {
      if (stats) ++stats->dropped_empty;
      continue;
    }
    out.add(featurize(*j.capture, opt), j.truth->position(), j.capture->user_id);
  }
  return out;
}

inline ClassificationSet classification_set(std::span<const JoinedClick> joined, const FeatureOptions& opt,
                                            BuildStats* stats = nullptr) {
  ClassificationSet out;
  for (const JoinedClick& j : joined) {
    if (j.capture->hovers.empty()) {
      if (stats) ++stats->dropped_empty;
      continue;
    }
    if (!j.truth->key_label) {
      if (stats) ++stats->dropped_unlabeled;
      continue;
    }
    out.add(featurize(*j.capture, opt), *j.truth->key_label, j.capture->user_id);
  }
  return out;
}

}  // namespace hoover::learn
