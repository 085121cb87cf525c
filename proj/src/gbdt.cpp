#include "cardcorr/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include "cardcorr/errors.hpp"

namespace cardcorr {

using nlohmann::json;

double RegressionTree::predict(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[i].value;
}

namespace {

using LeafValue = std::function<double(std::span<const std::uint32_t> rows)>;

// Grows depth-limited regression trees on a fixed feature matrix. Columns are
// presorted once so every tree level costs O(rows * features).
class TreeGrower {
 public:
  TreeGrower(const FeatureMatrix& X, std::size_t max_depth, std::size_t min_leaf)
      : n_(X.rows()), d_(X.cols()), max_depth_(max_depth), min_leaf_(std::max<std::size_t>(1, min_leaf)) {
    columns_.assign(d_, std::vector<double>(n_));
    order_.assign(d_, std::vector<std::uint32_t>(n_));
    for (std::size_t f = 0; f < d_; ++f) {
      for (std::size_t i = 0; i < n_; ++i) columns_[f][i] = X.at(i, f);
      auto& order = order_[f];
      std::iota(order.begin(), order.end(), 0U);
      const auto& col = columns_[f];
      std::stable_sort(order.begin(), order.end(), [&col](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
    }
  }

  // `in_sample[i]` selects the rows this tree is grown on.
  RegressionTree grow(std::span<const double> residual, std::span<const std::uint8_t> in_sample,
                      const LeafValue& leaf_value) {
    RegressionTree tree;
    node_of_.assign(n_, -1);
    Open root;
    for (std::size_t i = 0; i < n_; ++i) {
      if (!in_sample[i]) continue;
      node_of_[i] = 0;
      root.sum += residual[i];
      root.sumsq += residual[i] * residual[i];
      ++root.count;
    }
    tree.nodes.emplace_back();
    std::vector<Open> level{root};

    for (std::size_t depth = 0; depth < max_depth_ && !level.empty(); ++depth) {
      std::vector<int> slot_of(tree.nodes.size(), -1);
      std::vector<Best> best(level.size());
      bool any = false;
      for (std::size_t s = 0; s < level.size(); ++s) {
        if (level[s].count >= 2 * min_leaf_) {
          slot_of[static_cast<std::size_t>(level[s].tree_node)] = static_cast<int>(s);
          const auto parent_sse = level[s].sumsq - level[s].sum * level[s].sum / static_cast<double>(level[s].count);
          best[s].tolerance = split_gain_tolerance(std::max(0.0, parent_sse));
          best[s].gain = best[s].tolerance;
          any = true;
        }
      }
      if (!any) break;
      search_splits(residual, level, slot_of, best);

      std::vector<Open> next;
      std::vector<int> split_slot_of(tree.nodes.size(), -1);
      for (std::size_t s = 0; s < level.size(); ++s) {
        if (!best[s].found) continue;
        const auto parent = level[s].tree_node;
        const auto left = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        auto& p = tree.nodes[static_cast<std::size_t>(parent)];
        p.feature = static_cast<int>(best[s].feature);
        p.threshold = best[s].threshold;
        p.left = left;
        p.right = left + 1;
        split_slot_of[static_cast<std::size_t>(parent)] = static_cast<int>(next.size());
        next.push_back(Open{left});
        next.push_back(Open{left + 1});
      }
      if (next.empty()) break;
      for (std::size_t i = 0; i < n_; ++i) {
        const auto node = node_of_[i];
        if (node < 0) continue;
        const auto slot = split_slot_of[static_cast<std::size_t>(node)];
        if (slot < 0) continue;
        const auto& p = tree.nodes[static_cast<std::size_t>(node)];
        const bool go_left = columns_[static_cast<std::size_t>(p.feature)][i] <= p.threshold;
        auto& child = next[static_cast<std::size_t>(slot) + (go_left ? 0 : 1)];
        node_of_[i] = child.tree_node;
        child.sum += residual[i];
        child.sumsq += residual[i] * residual[i];
        ++child.count;
      }
      level = std::move(next);
    }

    std::vector<std::vector<std::uint32_t>> rows_of(tree.nodes.size());
    for (std::size_t i = 0; i < n_; ++i) {
      if (node_of_[i] >= 0) rows_of[static_cast<std::size_t>(node_of_[i])].push_back(static_cast<std::uint32_t>(i));
    }
    for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
      if (tree.nodes[k].is_leaf()) tree.nodes[k].value = rows_of[k].empty() ? 0.0 : leaf_value(rows_of[k]);
    }
    return tree;
  }

 private:
  struct Open {
    int tree_node = 0;
    double sum = 0.0;
    double sumsq = 0.0;
    std::size_t count = 0;
  };

  struct Best {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
    double tolerance = 0.0;
  };

  struct Scan {
    double left_sum = 0.0;
    std::size_t left_count = 0;
    double prev = 0.0;
  };

  void search_splits(std::span<const double> residual, const std::vector<Open>& level, const std::vector<int>& slot_of,
                     std::vector<Best>& best) const {
    std::vector<Scan> scan(level.size());
    for (std::size_t f = 0; f < d_; ++f) {
      std::fill(scan.begin(), scan.end(), Scan{});
      const auto& col = columns_[f];
      for (const auto i : order_[f]) {
        const auto node = node_of_[i];
        if (node < 0) continue;
        const auto slot = slot_of[static_cast<std::size_t>(node)];
        if (slot < 0) continue;
        auto& st = scan[static_cast<std::size_t>(slot)];
        const auto& open = level[static_cast<std::size_t>(slot)];
        const auto v = col[i];
        if (st.left_count >= min_leaf_ && v != st.prev && open.count - st.left_count >= min_leaf_) {
          const auto nl = static_cast<double>(st.left_count);
          const auto nr = static_cast<double>(open.count - st.left_count);
          const auto right_sum = open.sum - st.left_sum;
          const auto gain = st.left_sum * st.left_sum / nl + right_sum * right_sum / nr -
                            open.sum * open.sum / static_cast<double>(open.count);
          auto& b = best[static_cast<std::size_t>(slot)];
          if (gain > b.gain + (b.found ? b.tolerance : 0.0)) {
            b.found = true;
            b.feature = f;
            b.threshold = st.prev + (v - st.prev) / 2.0;
            b.gain = gain;
          }
        }
        st.left_sum += residual[i];
        ++st.left_count;
        st.prev = v;
      }
    }
  }

  std::size_t n_;
  std::size_t d_;
  std::size_t max_depth_;
  std::size_t min_leaf_;
  std::vector<std::vector<double>> columns_;
  std::vector<std::vector<std::uint32_t>> order_;
  std::vector<int> node_of_;
};

std::vector<std::uint8_t> draw_sample(std::size_t n, double fraction, std::mt19937_64& rng) {
  std::vector<std::uint8_t> mask(n, 1);
  if (fraction >= 1.0) return mask;
  const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n))));
  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0U);
  for (std::size_t i = 0; i < keep; ++i) {
    const auto j = i + static_cast<std::size_t>(rng() % (n - i));
    std::swap(idx[i], idx[j]);
  }
  std::fill(mask.begin(), mask.end(), 0);
  for (std::size_t i = 0; i < keep; ++i) mask[idx[i]] = 1;
  return mask;
}

void check_params(const GbdtParams& params) {
  if (!(params.learning_rate > 0.0 && params.learning_rate <= 1.0)) {
    throw ConfigError("learning_rate must be in (0, 1]");
  }
  if (!(params.subsample > 0.0 && params.subsample <= 1.0)) throw ConfigError("subsample must be in (0, 1]");
  if (params.min_samples_leaf == 0) throw ConfigError("min_samples_leaf must be positive");
}

// Shared boosting loop. `gradient` fills residuals from the current raw scores;
// `leaf` computes the leaf value for a set of rows.
GbdtModel boost(const FeatureMatrix& X, const GbdtParams& params, double base,
                const std::function<void(std::span<const double>, std::span<double>)>& gradient,
                const std::function<LeafValue(std::span<const double>, std::span<const double>)>& make_leaf) {
  GbdtModel model;
  model.learning_rate = params.learning_rate;
  model.base_prediction = base;
  model.params = params;
  model.n_features = X.cols();

  const auto n = X.rows();
  std::vector<double> raw(n, base);
  std::vector<double> residual(n);
  TreeGrower grower(X, params.max_depth, params.min_samples_leaf);
  std::mt19937_64 rng(params.seed);
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    gradient(raw, residual);
    const auto sample = draw_sample(n, params.subsample, rng);
    auto tree = grower.grow(residual, sample, make_leaf(raw, residual));
    if (tree.nodes.size() == 1 && params.subsample >= 1.0) break;
    for (std::size_t i = 0; i < n; ++i) raw[i] += params.learning_rate * tree.predict(X.row(i));
    model.trees.push_back(std::move(tree));
  }
  return model;
}

}  // namespace

GbdtModel gbdt_train(const FeatureMatrix& X, std::span<const double> y, const GbdtParams& params) {
  check_params(params);
  if (X.rows() != y.size()) {
    throw DimensionMismatch("gbdt_train: " + std::to_string(X.rows()) + " rows but " + std::to_string(y.size()) +
                            " targets");
  }
  if (y.empty()) throw EmptyInput("gbdt_train on an empty dataset");
  const auto base = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  if (*lo == *hi) {
    GbdtModel constant;
    constant.learning_rate = params.learning_rate;
    constant.base_prediction = *lo;
    constant.params = params;
    constant.n_features = X.cols();
    return constant;
  }
  const auto gradient = [y](std::span<const double> raw, std::span<double> residual) {
    for (std::size_t i = 0; i < raw.size(); ++i) residual[i] = y[i] - raw[i];
  };
  const auto make_leaf = [](std::span<const double>, std::span<const double> residual) -> LeafValue {
    return [residual](std::span<const std::uint32_t> rows) {
      double sum = 0.0;
      for (const auto r : rows) sum += residual[r];
      return sum / static_cast<double>(rows.size());
    };
  };
  return boost(X, params, base, gradient, make_leaf);
}

double gbdt_predict_row(const GbdtModel& model, std::span<const double> row) {
  double sum = 0.0;
  for (const auto& tree : model.trees) sum += tree.predict(row);
  return model.base_prediction + model.learning_rate * sum;
}

std::vector<double> gbdt_predict(const GbdtModel& model, const FeatureMatrix& X) {
  if (X.rows() > 0 && X.cols() != model.n_features) {
    throw DimensionMismatch("model expects " + std::to_string(model.n_features) + " features, got " +
                            std::to_string(X.cols()));
  }
  std::vector<double> out(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) out[i] = gbdt_predict_row(model, X.row(i));
  return out;
}

json gbdt_params_to_json(const GbdtParams& p) {
  return json{{"n_trees", p.n_trees},
              {"max_depth", p.max_depth},
              {"learning_rate", p.learning_rate},
              {"min_samples_leaf", p.min_samples_leaf},
              {"subsample", p.subsample},
              {"seed", p.seed}};
}

GbdtParams gbdt_params_from_json(const json& j) {
  GbdtParams p;
  p.n_trees = j.at("n_trees").get<std::size_t>();
  p.max_depth = j.at("max_depth").get<std::size_t>();
  p.learning_rate = j.at("learning_rate").get<double>();
  p.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
  p.subsample = j.at("subsample").get<double>();
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

json gbdt_to_json(const GbdtModel& model) {
  json trees = json::array();
  for (const auto& tree : model.trees) {
    json nodes = json::array();
    for (const auto& n : tree.nodes) nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.value}));
    trees.push_back(std::move(nodes));
  }
  return json{{"base_prediction", model.base_prediction},
              {"learning_rate", model.learning_rate},
              {"n_features", model.n_features},
              {"params", gbdt_params_to_json(model.params)},
              {"trees", std::move(trees)}};
}

GbdtModel gbdt_from_json(const json& j) {
  GbdtModel model;
  model.base_prediction = j.at("base_prediction").get<double>();
  model.learning_rate = j.at("learning_rate").get<double>();
  model.n_features = j.at("n_features").get<std::size_t>();
  model.params = gbdt_params_from_json(j.at("params"));
  for (const auto& t : j.at("trees")) {
    RegressionTree tree;
    for (const auto& n : t) {
      TreeNode node{n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(),
                    n.at(4).get<double>()};
      if (!node.is_leaf() && static_cast<std::size_t>(node.feature) >= model.n_features) {
        throw Error("tree split feature out of range");
      }
      if (!std::isfinite(node.value)) throw Error("non-finite leaf value");
      tree.nodes.push_back(node);
    }
    if (tree.nodes.empty()) throw Error("empty tree in model");
    model.trees.push_back(std::move(tree));
  }
  return model;
}

namespace {

double sigmoid(double raw) {
  raw = std::clamp(raw, -30.0, 30.0);
  return 1.0 / (1.0 + std::exp(-raw));
}

}  // namespace

ZeroClassifier zero_train(const FeatureMatrix& X, std::span<const std::uint8_t> is_zero, const GbdtParams& params,
                          double threshold) {
  check_params(params);
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("zero-classifier threshold must be in (0, 1)");
  if (X.rows() != is_zero.size()) throw DimensionMismatch("zero_train: label count does not match rows");
  if (is_zero.empty()) throw EmptyInput("zero_train on an empty dataset");

  ZeroClassifier model;
  model.threshold = threshold;
  const auto positives = static_cast<double>(std::count_if(is_zero.begin(), is_zero.end(), [](auto v) { return v; }));
  const auto n = static_cast<double>(is_zero.size());
  if (positives == 0.0 || positives == n) {
    model.constant_probability = positives == 0.0 ? kZeroProbabilityEpsilon : 1.0 - kZeroProbabilityEpsilon;
    model.booster.params = params;
    model.booster.learning_rate = params.learning_rate;
    model.booster.n_features = X.cols();
    return model;
  }

  const auto p0 = positives / n;
  const auto gradient = [is_zero](std::span<const double> raw, std::span<double> residual) {
    for (std::size_t i = 0; i < raw.size(); ++i) residual[i] = static_cast<double>(is_zero[i]) - sigmoid(raw[i]);
  };
  const auto make_leaf = [](std::span<const double> raw, std::span<const double> residual) -> LeafValue {
    return [raw, residual](std::span<const std::uint32_t> rows) {
      double num = 0.0;
      double den = 0.0;
      for (const auto r : rows) {
        const auto p = sigmoid(raw[r]);
        num += residual[r];
        den += p * (1.0 - p);
      }
      return std::clamp(num / std::max(den, 1e-12), -10.0, 10.0);
    };
  };
  model.booster = boost(X, params, std::log(p0 / (1.0 - p0)), gradient, make_leaf);
  return model;
}

std::vector<double> zero_predict(const ZeroClassifier& model, const FeatureMatrix& X) {
  if (model.constant_probability) return std::vector<double>(X.rows(), *model.constant_probability);
  auto raw = gbdt_predict(model.booster, X);
  for (auto& r : raw) r = sigmoid(r);
  return raw;
}

json zero_classifier_to_json(const ZeroClassifier& model) {
  json j{{"threshold", model.threshold}, {"booster", gbdt_to_json(model.booster)}};
  j["constant_probability"] = model.constant_probability ? json(*model.constant_probability) : json();
  return j;
}

ZeroClassifier zero_classifier_from_json(const json& j) {
  ZeroClassifier model;
  model.threshold = j.at("threshold").get<double>();
  model.booster = gbdt_from_json(j.at("booster"));
  if (const auto& c = j.at("constant_probability"); !c.is_null()) model.constant_probability = c.get<double>();
  return model;
}

}  // namespace cardcorr
