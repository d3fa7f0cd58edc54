#pragma once

#include <charconv>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "hoover/learn/model.hpp"
#include "hoover/learn/validation.hpp"

namespace hoover::learn {

inline constexpr int kModelFormatVersion = 1;

class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shortest decimal that parses back to the same double.
inline std::string exact_decimal(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("cannot format number");
  return std::string(buf, p);
}

inline double parse_decimal(std::string_view s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ModelFormatError("bad decimal '" + std::string(s) + "'");
  return v;
}

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson linear_json(const LinearFit& f) {
  ojson w = ojson::array();
  for (double v : f.weights) w.push_back(exact_decimal(v));
  return {{"weights", w}, {"intercept", exact_decimal(f.intercept)}};
}

inline LinearFit linear_from(const ojson& j) {
  LinearFit f;
  for (const auto& w : j.at("weights")) f.weights.push_back(parse_decimal(w.get<std::string>()));
  f.intercept = parse_decimal(j.at("intercept").get<std::string>());
  return f;
}

inline ojson leaf_json(const Point& p) { return ojson::array({exact_decimal(p.x), exact_decimal(p.y)}); }
inline ojson leaf_json(int c) { return c; }
inline void leaf_from(const ojson& j, Point& p) {
  p = {parse_decimal(j.at(0).get<std::string>()), parse_decimal(j.at(1).get<std::string>())};
}
inline void leaf_from(const ojson& j, int& c) { c = j.get<int>(); }

// A leaf is ["leaf", value]; an inner node is [feature, "threshold", left, right].
template <class Value>
ojson node_json(const Tree<Value>& t, int at) {
  const TreeNode& n = t.nodes[static_cast<std::size_t>(at)];
  if (n.feature < 0) return ojson::array({"leaf", leaf_json(t.values[static_cast<std::size_t>(n.value)])});
  return ojson::array({n.feature, exact_decimal(n.threshold), node_json(t, n.left), node_json(t, n.right)});
}

template <class Value>
int node_from(const ojson& j, Tree<Value>& t) {
  if (!j.is_array() || j.empty()) throw ModelFormatError("tree node must be a non-empty array");
  const int self = static_cast<int>(t.nodes.size());
  if (j.at(0).is_string()) {
    if (j.at(0).get<std::string>() != "leaf" || j.size() != 2) throw ModelFormatError("malformed leaf");
    Value v{};
    leaf_from(j.at(1), v);
    t.nodes.push_back({-1, 0.0, -1, -1, static_cast<int>(t.values.size())});
    t.values.push_back(v);
    return self;
  }
  if (j.size() != 4) throw ModelFormatError("malformed split node");
  const int feature = j.at(0).get<int>();
  if (feature < 0 || static_cast<std::size_t>(feature) >= t.dim) throw ModelFormatError("split feature out of range");
  t.nodes.push_back({feature, parse_decimal(j.at(1).get<std::string>()), -1, -1, -1});
  const int l = node_from(j.at(2), t);
  const int r = node_from(j.at(3), t);
  t.nodes[static_cast<std::size_t>(self)].left = l;
  t.nodes[static_cast<std::size_t>(self)].right = r;
  return self;
}

template <class Value>
ojson tree_json(const Tree<Value>& t) {
  return node_json(t, 0);
}

template <class Value>
Tree<Value> tree_from(const ojson& j, std::size_t dim) {
  Tree<Value> t;
  t.dim = dim;
  node_from(j, t);
  return t;
}

inline ojson rect_json(const Rect& r) {
  return ojson::array({exact_decimal(r.x0), exact_decimal(r.y0), exact_decimal(r.x1), exact_decimal(r.y1)});
}

inline Rect rect_from(const ojson& j) {
  return {parse_decimal(j.at(0).get<std::string>()), parse_decimal(j.at(1).get<std::string>()),
          parse_decimal(j.at(2).get<std::string>()), parse_decimal(j.at(3).get<std::string>())};
}

inline ojson layout_json(const KeyboardLayout& l) {
  ojson keys = ojson::array();
  for (const Key& k : l.keys) keys.push_back({{"label", k.label}, {"rect", rect_json(k.rect)}});
  ojson rows = ojson::array();
  for (const KeyRow& r : l.rows)
    rows.push_back(ojson::array({exact_decimal(r.y0), exact_decimal(r.y1), r.first_key, r.key_count}));
  return {{"region", rect_json(l.region)}, {"keys", keys}, {"rows", rows}};
}

inline KeyboardLayout layout_from(const ojson& j) {
  KeyboardLayout l;
  l.region = rect_from(j.at("region"));
  for (const auto& k : j.at("keys")) l.keys.push_back({k.at("label").get<std::string>(), rect_from(k.at("rect"))});
  for (const auto& r : j.at("rows"))
    l.rows.push_back({parse_decimal(r.at(0).get<std::string>()), parse_decimal(r.at(1).get<std::string>()),
                      r.at(2).get<std::size_t>(), r.at(3).get<std::size_t>()});
  return l;
}

template <class Value>
ojson forest_json(const Forest<Value>& f) {
  ojson trees = ojson::array();
  for (const auto& t : f.trees) trees.push_back(tree_json(t));
  return trees;
}

template <class Value>
Forest<Value> forest_from(const ojson& j, std::size_t dim) {
  Forest<Value> f;
  for (const auto& t : j) f.trees.push_back(tree_from<Value>(t, dim));
  if (f.trees.empty()) throw ModelFormatError("forest has no trees");
  return f;
}

inline ModelKind kind_from(const ojson& j) {
  const auto k = parse_model_kind(j.at("kind").get<std::string>());
  if (!k) throw ModelFormatError("unknown model kind");
  return *k;
}

inline void check_header(const ojson& j) {
  if (j.at("format").get<std::string>() != "hoover-model") throw ModelFormatError("not a model document");
  if (j.at("version").get<int>() != kModelFormatVersion) throw ModelFormatError("unsupported model version");
}

template <class Fn>
auto guarded(Fn fn) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(e.what());
  }
}

}  // namespace detail

inline std::string model_to_json(const RegressionModel& m) {
  detail::ojson j = {{"format", "hoover-model"}, {"version", kModelFormatVersion},
                     {"kind", std::string(to_string(m.kind))}, {"dim", m.dim}};
  if (const auto* lin = std::get_if<LinearPair>(&m.impl)) {
    j["x"] = detail::linear_json(lin->x);
    j["y"] = detail::linear_json(lin->y);
  } else if (const auto* t = std::get_if<Tree<Point>>(&m.impl)) {
    j["tree"] = detail::tree_json(*t);
  } else if (const auto* f = std::get_if<Forest<Point>>(&m.impl)) {
    j["trees"] = detail::forest_json(*f);
  }
  return j.dump() + "\n";
}

inline std::string model_to_json(const ClassificationModel& m) {
  detail::ojson j = {{"format", "hoover-model"}, {"version", kModelFormatVersion},
                     {"kind", std::string(to_string(m.kind))}, {"dim", m.dim}, {"labels", m.labels}};
  if (const auto* l = std::get_if<KeyboardLayout>(&m.impl)) {
    j["layout"] = detail::layout_json(*l);
  } else if (const auto* t = std::get_if<Tree<int>>(&m.impl)) {
    j["tree"] = detail::tree_json(*t);
  } else {
    j["trees"] = detail::forest_json(std::get<Forest<int>>(m.impl));
  }
  return j.dump() + "\n";
}

inline RegressionModel regression_model_from_json(std::string_view text) {
  return detail::guarded([&] {
    const auto j = detail::ojson::parse(text);
    detail::check_header(j);
    RegressionModel m;
    m.kind = detail::kind_from(j);
    if (task_of(m.kind) != Task::Regression) throw ModelFormatError("not a regression model");
    m.dim = j.at("dim").get<std::size_t>();
    switch (m.kind) {
      case ModelKind::BaselineReg: m.impl = BaselineReg{}; break;
      case ModelKind::OLS:
      case ModelKind::Lasso: m.impl = LinearPair{detail::linear_from(j.at("x")), detail::linear_from(j.at("y"))}; break;
      case ModelKind::TreeReg: m.impl = detail::tree_from<Point>(j.at("tree"), m.dim); break;
      default: m.impl = detail::forest_from<Point>(j.at("trees"), m.dim); break;
    }
    return m;
  });
}

inline ClassificationModel classification_model_from_json(std::string_view text) {
  return detail::guarded([&] {
    const auto j = detail::ojson::parse(text);
    detail::check_header(j);
    ClassificationModel m;
    m.kind = detail::kind_from(j);
    if (task_of(m.kind) != Task::Classification) throw ModelFormatError("not a classification model");
    m.dim = j.at("dim").get<std::size_t>();
    m.labels = j.at("labels").get<std::vector<std::string>>();
    auto check_classes = [&](const auto& tree) {
      for (int v : tree.values)
        if (v < 0 || static_cast<std::size_t>(v) >= m.labels.size()) throw ModelFormatError("leaf class out of range");
    };
    if (m.kind == ModelKind::BaselineCls) {
      m.impl = detail::layout_from(j.at("layout"));
    } else if (m.kind == ModelKind::TreeCls) {
      auto t = detail::tree_from<int>(j.at("tree"), m.dim);
      check_classes(t);
      m.impl = std::move(t);
    } else {
      auto f = detail::forest_from<int>(j.at("trees"), m.dim);
      for (const auto& t : f.trees) check_classes(t);
      m.impl = std::move(f);
    }
    return m;
  });
}

// One CSV row per (model, corpus) pair.
struct MetricsRow {
  std::string corpus;
  std::string model;
  std::string cv;
  Metrics metrics;
};

inline std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Quotes a field only when it holds a separator, quote or line break.
inline std::string csv_field(std::string_view v) {
  if (v.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(v);
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline constexpr std::string_view kMetricsCsvHeader = "corpus,model,cv,n,rmse_px,accuracy\n";

inline std::string metrics_csv(std::span<const MetricsRow> rows) {
  std::string out(kMetricsCsvHeader);
  for (const MetricsRow& r : rows) {
    out += csv_field(r.corpus) + ',' + csv_field(r.model) + ',' + csv_field(r.cv) + ',' + std::to_string(r.metrics.n) + ',';
    out += r.metrics.rmse_px ? csv_number(*r.metrics.rmse_px) : std::string();
    out += ',';
    out += r.metrics.accuracy ? csv_number(*r.metrics.accuracy) : std::string();
    out += '\n';
  }
  return out;
}

}  // namespace hoover::learn
