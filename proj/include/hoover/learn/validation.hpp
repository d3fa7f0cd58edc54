#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hoover/learn/dataset.hpp"
#include "hoover/learn/model.hpp"
#include "hoover/rng.hpp"

namespace hoover::learn {

class GroupTooSmall : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// counts[i][j]: rows whose true label is labels[i] and predicted label is labels[j].
struct Confusion {
  std::vector<std::string> labels;
  std::vector<std::vector<long>> counts;

  friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct GroupScore {
  int group = 0;
  std::size_t n = 0;
  double value = 0.0;  // RMSE in px or accuracy, matching the parent Metrics

  friend bool operator==(const GroupScore&, const GroupScore&) = default;
};

struct Metrics {
  std::size_t n = 0;
  std::optional<double> rmse_px;
  std::optional<double> accuracy;
  Confusion confusion;
  std::vector<GroupScore> per_user;

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

inline double rmse(std::span<const Point> truth, std::span<const Point> predicted) {
  if (truth.size() != predicted.size() || truth.empty()) throw std::invalid_argument("rmse: size mismatch");
  double ss = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double dx = truth[i].x - predicted[i].x, dy = truth[i].y - predicted[i].y;
    ss += dx * dx + dy * dy;
  }
  return std::sqrt(ss / double(truth.size()));
}

inline double accuracy(std::span<const std::string> truth, std::span<const std::string> predicted) {
  if (truth.size() != predicted.size() || truth.empty()) throw std::invalid_argument("accuracy: size mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == predicted[i];
  return double(hits) / double(truth.size());
}

inline Confusion confusion(std::span<const std::string> truth, std::span<const std::string> predicted) {
  Confusion c;
  c.labels.assign(truth.begin(), truth.end());
  c.labels.insert(c.labels.end(), predicted.begin(), predicted.end());
  std::sort(c.labels.begin(), c.labels.end());
  c.labels.erase(std::unique(c.labels.begin(), c.labels.end()), c.labels.end());
  c.counts.assign(c.labels.size(), std::vector<long>(c.labels.size(), 0));
  auto index = [&](const std::string& s) {
    return static_cast<std::size_t>(std::lower_bound(c.labels.begin(), c.labels.end(), s) - c.labels.begin());
  };
  for (std::size_t i = 0; i < truth.size(); ++i) ++c.counts[index(truth[i])][index(predicted[i])];
  return c;
}

namespace detail {

inline std::vector<GroupScore> per_group_rmse(std::span<const int> groups, std::span<const Point> truth,
                                              std::span<const Point> pred) {
  std::map<int, std::pair<std::size_t, double>> acc;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double dx = truth[i].x - pred[i].x, dy = truth[i].y - pred[i].y;
    auto& [n, ss] = acc[groups[i]];
    ++n;
    ss += dx * dx + dy * dy;
  }
  std::vector<GroupScore> out;
  for (const auto& [g, v] : acc) out.push_back({g, v.first, std::sqrt(v.second / double(v.first))});
  return out;
}

inline std::vector<GroupScore> per_group_accuracy(std::span<const int> groups, std::span<const std::string> truth,
                                                  std::span<const std::string> pred) {
  std::map<int, std::pair<std::size_t, std::size_t>> acc;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    auto& [n, hits] = acc[groups[i]];
    ++n;
    hits += truth[i] == pred[i];
  }
  std::vector<GroupScore> out;
  for (const auto& [g, v] : acc) out.push_back({g, v.first, double(v.second) / double(v.first)});
  return out;
}

// Seeded shuffle split into k folds whose sizes differ by at most one.
inline std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t lo = f * n / k, hi = (f + 1) * n / k;
    folds[f].assign(order.begin() + std::ptrdiff_t(lo), order.begin() + std::ptrdiff_t(hi));
    std::sort(folds[f].begin(), folds[f].end());
  }
  return folds;
}

inline std::vector<std::size_t> complement(std::size_t n, std::span<const std::size_t> held_out) {
  std::vector<std::size_t> rest;
  rest.reserve(n - held_out.size());
  std::size_t h = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (h < held_out.size() && held_out[h] == i) {
      ++h;
      continue;
    }
    rest.push_back(i);
  }
  return rest;
}

}  // namespace detail

/// Leave-one-out: every row is predicted by a model fitted on all other rows.
inline Metrics loocv_rmse(const RegressionSet& data, const ModelSpec& spec) {
  const std::size_t n = data.size();
  if (n < 2) throw std::invalid_argument("loocv needs at least 2 rows");
  std::vector<Point> pred(n);
  if (spec.kind == ModelKind::BaselineReg) {
    const RegressionModel m = fit(spec, data);
    for (std::size_t i = 0; i < n; ++i) pred[i] = predict(m, data.row(i));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t held[] = {i};
      const auto rest = detail::complement(n, held);
      pred[i] = predict(fit(spec, data.subset(rest)), data.row(i));
    }
  }
  Metrics m;
  m.n = n;
  m.rmse_px = rmse(data.y, pred);
  m.per_user = detail::per_group_rmse(data.groups, data.y, pred);
  return m;
}

/// k-fold regression; RMSE is pooled over all held-out predictions.
inline Metrics kfold_rmse(const RegressionSet& data, const ModelSpec& spec, std::size_t k, std::uint64_t seed) {
  const std::size_t n = data.size();
  if (k < 2 || n < k) throw std::invalid_argument("k-fold needs 2 <= k <= rows");
  std::vector<Point> pred(n);
  for (const auto& fold : detail::make_folds(n, k, seed)) {
    const RegressionModel model = fit(spec, data.subset(detail::complement(n, fold)));
    for (std::size_t i : fold) pred[i] = predict(model, data.row(i));
  }
  Metrics m;
  m.n = n;
  m.rmse_px = rmse(data.y, pred);
  m.per_user = detail::per_group_rmse(data.groups, data.y, pred);
  return m;
}

/// k-fold classification; accuracy is the mean of per-fold accuracies and
/// the confusion matrix is summed over folds.
inline Metrics kfold_accuracy(const ClassificationSet& data, const ModelSpec& spec, std::size_t k = 10,
                              std::uint64_t seed = 0) {
  const std::size_t n = data.size();
  if (k < 2 || n < k) throw std::invalid_argument("k-fold needs 2 <= k <= rows");
  std::vector<std::string> pred(n);
  double acc_sum = 0.0;
  for (const auto& fold : detail::make_folds(n, k, seed)) {
    const ClassificationModel model = fit(spec, data.subset(detail::complement(n, fold)));
    std::size_t hits = 0;
    for (std::size_t i : fold) {
      pred[i] = predict(model, data.row(i));
      hits += pred[i] == data.y[i];
    }
    acc_sum += double(hits) / double(fold.size());
  }
  Metrics m;
  m.n = n;
  m.accuracy = acc_sum / double(k);
  m.confusion = confusion(data.y, pred);
  m.per_user = detail::per_group_accuracy(data.groups, data.y, pred);
  return m;
}

struct PerUserReport {
  Metrics pooled;
  Metrics per_user;  // accuracy is the size-weighted mean of within-user k-fold accuracies
};

inline PerUserReport per_user_eval(const ClassificationSet& data, const ModelSpec& spec, std::size_t k = 10,
                                   std::uint64_t seed = 0) {
  const std::vector<int> groups = data.distinct_groups();
  if (groups.size() < 2) throw GroupTooSmall("per-user evaluation needs at least 2 users");
  std::vector<std::vector<std::size_t>> rows_of(groups.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto g = std::lower_bound(groups.begin(), groups.end(), data.groups[i]) - groups.begin();
    rows_of[static_cast<std::size_t>(g)].push_back(i);
  }
  for (std::size_t g = 0; g < groups.size(); ++g)
    if (rows_of[g].size() < k)
      throw GroupTooSmall("user " + std::to_string(groups[g]) + " has fewer than " + std::to_string(k) + " rows");

  PerUserReport report;
  report.pooled = kfold_accuracy(data, spec, k, seed);

  Metrics& pu = report.per_user;
  double weighted = 0.0;
  std::vector<std::string> truth, pred_all;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const Metrics m = kfold_accuracy(data.subset(rows_of[g]), spec, k, seed);
    weighted += *m.accuracy * double(rows_of[g].size());
    pu.n += rows_of[g].size();
    pu.per_user.push_back({groups[g], rows_of[g].size(), *m.accuracy});
    // Rebuild the per-user confusion entries into one matrix over all labels.
    for (std::size_t i = 0; i < m.confusion.labels.size(); ++i)
      for (std::size_t j = 0; j < m.confusion.labels.size(); ++j)
        for (long c = 0; c < m.confusion.counts[i][j]; ++c) {
          truth.push_back(m.confusion.labels[i]);
          pred_all.push_back(m.confusion.labels[j]);
        }
  }
  pu.accuracy = weighted / double(pu.n);
  pu.confusion = confusion(truth, pred_all);
  return report;
}

}  // namespace hoover::learn
