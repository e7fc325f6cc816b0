#include <algorithm>
#include <cmath>
#include <numeric>

#include "traceguard/classifiers.hpp"
#include "traceguard/errors.hpp"
#include "traceguard/rng.hpp"

namespace traceguard {
namespace {

struct TrainData {
    const std::vector<FeatureVector>* X;
    const std::vector<bool>* y;
    double w_pos;  // balanced class weights n/(2 * n_class)
    double w_neg;
    std::size_t dim;
    std::size_t mtry;
};

double sample_weight(const TrainData& d, std::size_t i) {
    return (*d.y)[i] ? d.w_pos : d.w_neg;
}

double gini(double wp, double wn) {
    double w = wp + wn;
    if (w <= 0.0) return 0.0;
    double pp = wp / w, pn = wn / w;
    return 1.0 - pp * pp - pn * pn;
}

struct BestSplit {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double impurity = 0.0;  // weighted child impurity
};

// Exact split search over midpoints of sorted distinct values. Candidate
// features are visited in ascending index order and a new best must be
// strictly better, which pins tie-breaking to the lowest feature index and
// lowest threshold.
BestSplit find_split(const TrainData& d, const std::vector<std::size_t>& idx,
                     const std::vector<std::size_t>& features, double parent_impurity) {
    BestSplit best;
    double w_pos_total = 0.0, w_neg_total = 0.0;
    for (std::size_t i : idx) ((*d.y)[i] ? w_pos_total : w_neg_total) += sample_weight(d, i);
    double w_total = w_pos_total + w_neg_total;

    std::vector<std::pair<double, std::size_t>> vals;
    vals.reserve(idx.size());
    for (std::size_t f : features) {
        vals.clear();
        for (std::size_t i : idx) vals.emplace_back((*d.X)[i].values[f], i);
        std::sort(vals.begin(), vals.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        double wp_left = 0.0, wn_left = 0.0;
        for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
            std::size_t i = vals[k].second;
            ((*d.y)[i] ? wp_left : wn_left) += sample_weight(d, i);
            if (vals[k + 1].first == vals[k].first) continue;
            double wl = wp_left + wn_left;
            double wr = w_total - wl;
            double impurity =
                (wl * gini(wp_left, wn_left) + wr * gini(w_pos_total - wp_left, w_neg_total - wn_left)) /
                w_total;
            if (impurity < parent_impurity - 1e-12 && (!best.found || impurity < best.impurity)) {
                best.found = true;
                best.feature = f;
                best.threshold = 0.5 * (vals[k].first + vals[k + 1].first);
                best.impurity = impurity;
            }
        }
    }
    return best;
}

int build_node(const TrainData& d, DecisionTree& tree, std::vector<std::size_t>& idx, int depth,
               Rng& rng) {
    double wp = 0.0, wn = 0.0;
    for (std::size_t i : idx) ((*d.y)[i] ? wp : wn) += sample_weight(d, i);

    auto make_leaf = [&]() {
        TreeNode leaf;
        leaf.leaf_label = wp > wn ? 1 : 0;  // tie goes to benign
        tree.nodes.push_back(leaf);
        return static_cast<int>(tree.nodes.size()) - 1;
    };

    double parent_impurity = gini(wp, wn);
    if (depth >= ForestModel::kMaxDepth || idx.size() < 2 || parent_impurity <= 0.0) return make_leaf();

    // sqrt(d) candidate features per split, drawn without replacement
    std::vector<std::size_t> all(d.dim);
    std::iota(all.begin(), all.end(), std::size_t{0});
    for (std::size_t k = 0; k < d.mtry; ++k) {
        std::size_t pick = static_cast<std::size_t>(
            rng.uniform_int(static_cast<std::int64_t>(k), static_cast<std::int64_t>(d.dim) - 1));
        std::swap(all[k], all[pick]);
    }
    std::vector<std::size_t> features(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(d.mtry));
    std::sort(features.begin(), features.end());

    BestSplit split = find_split(d, idx, features, parent_impurity);
    if (!split.found) return make_leaf();

    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t i : idx)
        ((*d.X)[i].values[split.feature] <= split.threshold ? left_idx : right_idx).push_back(i);
    if (left_idx.empty() || right_idx.empty()) return make_leaf();

    int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[node_id].feature = static_cast<int>(split.feature);
    tree.nodes[node_id].threshold = split.threshold;
    idx.clear();
    idx.shrink_to_fit();
    int left = build_node(d, tree, left_idx, depth + 1, rng);
    int right = build_node(d, tree, right_idx, depth + 1, rng);
    tree.nodes[node_id].left = left;
    tree.nodes[node_id].right = right;
    return node_id;
}

}  // namespace

int DecisionTree::predict(const std::vector<double>& x) const {
    int node = 0;
    while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const TreeNode& n = nodes[static_cast<std::size_t>(node)];
        node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(node)].leaf_label;
}

int DecisionTree::depth() const {
    // recompute from structure; root is node 0
    std::vector<int> depths(nodes.size(), 0);
    int max_depth = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].feature < 0) continue;
        depths[static_cast<std::size_t>(nodes[i].left)] = depths[i] + 1;
        depths[static_cast<std::size_t>(nodes[i].right)] = depths[i] + 1;
        max_depth = std::max({max_depth, depths[i] + 1});
    }
    return max_depth;
}

ForestModel train_forest(const std::vector<FeatureVector>& X, const std::vector<bool>& y,
                         std::uint64_t seed) {
    if (X.empty() || X.size() != y.size()) throw InsufficientData("empty or mismatched training set");
    const std::size_t dim = X.front().dimension();
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        if (X[i].dimension() != dim) throw DimensionMismatch("inconsistent feature dimensions");
        for (double v : X[i].values)
            if (!std::isfinite(v)) throw NonFiniteInput("non-finite feature value");
        n_pos += y[i] ? 1 : 0;
    }
    const std::size_t n = X.size();
    const std::size_t n_neg = n - n_pos;
    if (n_pos < 2 || n_neg < 2) throw DegenerateLabels("need at least 2 samples per class");

    TrainData d;
    d.X = &X;
    d.y = &y;
    d.w_pos = static_cast<double>(n) / (2.0 * static_cast<double>(n_pos));
    d.w_neg = static_cast<double>(n) / (2.0 * static_cast<double>(n_neg));
    d.dim = dim;
    d.mtry = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(dim))));

    std::vector<DecisionTree> trees;
    trees.reserve(ForestModel::kTreeCount);
    for (int t = 0; t < ForestModel::kTreeCount; ++t) {
        Rng rng(derive_seed(seed, "tree", static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> bootstrap(n);
        for (std::size_t i = 0; i < n; ++i)
            bootstrap[i] = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
        DecisionTree tree;
        build_node(d, tree, bootstrap, 0, rng);
        trees.push_back(std::move(tree));
    }
    return ForestModel(std::move(trees), dim, seed);
}

Prediction ForestModel::predict(const FeatureVector& v) const {
    if (v.dimension() != feature_dim_) throw DimensionMismatch("forest feature dimension mismatch");
    int votes = 0;
    for (const auto& tree : trees_) votes += tree.predict(v.values);
    Prediction p;
    p.score = static_cast<double>(votes) / static_cast<double>(trees_.size());
    p.backdoor = p.score > threshold();
    return p;
}

}  // namespace traceguard
