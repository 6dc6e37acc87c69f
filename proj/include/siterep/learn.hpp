#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "siterep/jsonl.hpp"
#include "siterep/reputation.hpp"
#include "siterep/rng.hpp"

namespace siterep {

// Posterior over {bad, good}. Components nonnegative and summing to 1; the
// argmax tie resolves to bad (the security-conservative default used by the
// voting/or combination rules as well).
struct Posterior {
    double p_bad = 0.5;
    double p_good = 0.5;

    ClassLabel argmax() const {
        return p_bad >= p_good ? ClassLabel::bad : ClassLabel::good;
    }

    bool operator==(const Posterior&) const = default;
};

enum class SplitCriterion { gini, entropy };

inline std::string to_string(SplitCriterion c) {
    return c == SplitCriterion::gini ? "gini" : "entropy";
}

inline SplitCriterion criterion_from_string(std::string_view s) {
    if (s == "gini") return SplitCriterion::gini;
    if (s == "entropy") return SplitCriterion::entropy;
    throw InputError("unknown split criterion \"" + std::string(s) + "\"");
}

struct TreeParams {
    int max_depth = -1;  // -1 = unlimited
    int min_leaf = 1;
    SplitCriterion criterion = SplitCriterion::gini;

    bool operator==(const TreeParams&) const = default;
};

struct TreeNode {
    int feature = -1;        // split feature; meaningless at leaves
    double threshold = 0.0;  // go left when x[feature] <= threshold
    int left = -1;           // child indices; -1/-1 marks a leaf
    int right = -1;
    std::int64_t n_bad = 0;  // training class counts reaching this node
    std::int64_t n_good = 0;

    bool is_leaf() const { return left < 0; }
    std::int64_t total() const { return n_bad + n_good; }

    bool operator==(const TreeNode&) const = default;
};

namespace detail {

inline double impurity(std::int64_t n_bad, std::int64_t n_good, SplitCriterion c) {
    std::int64_t n = n_bad + n_good;
    if (n == 0) return 0.0;
    double pb = static_cast<double>(n_bad) / static_cast<double>(n);
    double pg = static_cast<double>(n_good) / static_cast<double>(n);
    if (c == SplitCriterion::gini) return 1.0 - pb * pb - pg * pg;
    double h = 0.0;
    if (pb > 0) h -= pb * std::log2(pb);
    if (pg > 0) h -= pg * std::log2(pg);
    return h;
}

}  // namespace detail

// CART-style binary decision tree with frequency-count leaves. Induction is
// greedy: at each node the (feature, midpoint-threshold) pair with the
// largest impurity decrease wins; exact ties resolve to the lower feature
// index, then the lower threshold, making training fully deterministic.
class DecisionTree {
  public:
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    TreeParams params;
    std::size_t n_features = 0;

    Posterior predict_proba(const std::vector<double>& x) const {
        if (nodes.empty()) throw Error("predict on untrained tree");
        if (x.size() != n_features)
            throw DataError("feature vector length " + std::to_string(x.size()) +
                            " does not match training dimension " +
                            std::to_string(n_features));
        const TreeNode* node = &nodes[0];
        while (!node->is_leaf()) {
            node = x[static_cast<std::size_t>(node->feature)] <= node->threshold
                       ? &nodes[static_cast<std::size_t>(node->left)]
                       : &nodes[static_cast<std::size_t>(node->right)];
        }
        // Laplace smoothing keeps posteriors off exact 0/1 so the product
        // combination rule never hard-zeroes a class.
        double pb = (static_cast<double>(node->n_bad) + 1.0) /
                    (static_cast<double>(node->total()) + 2.0);
        return {pb, 1.0 - pb};
    }

    bool operator==(const DecisionTree&) const = default;
};

namespace detail {

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double decrease = 0.0;
};

// Finds the best split of `idx` among `candidate_features`, requiring both
// children to hold at least min_leaf samples.
inline SplitChoice best_split(const std::vector<std::vector<double>>& X,
                              const std::vector<ClassLabel>& y,
                              const std::vector<std::size_t>& idx,
                              const std::vector<std::size_t>& candidate_features,
                              const TreeParams& params) {
    const auto n = static_cast<std::int64_t>(idx.size());
    std::int64_t bad_total = 0;
    for (std::size_t i : idx)
        if (y[i] == ClassLabel::bad) ++bad_total;
    const double parent_imp =
        impurity(bad_total, n - bad_total, params.criterion);

    SplitChoice best;
    std::vector<std::pair<double, bool>> vals;  // (value, is_bad) sorted
    vals.reserve(idx.size());

    for (std::size_t f : candidate_features) {
        vals.clear();
        for (std::size_t i : idx)
            vals.emplace_back(X[i][f], y[i] == ClassLabel::bad);
        std::sort(vals.begin(), vals.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        std::int64_t left_n = 0, left_bad = 0;
        for (std::size_t pos = 0; pos + 1 < vals.size(); ++pos) {
            ++left_n;
            if (vals[pos].second) ++left_bad;
            if (vals[pos].first == vals[pos + 1].first) continue;  // not a boundary
            if (left_n < params.min_leaf || n - left_n < params.min_leaf) continue;

            double thr = vals[pos].first +
                         (vals[pos + 1].first - vals[pos].first) / 2.0;
            // Floating-point midpoint of adjacent representable values can
            // collapse onto an endpoint; such a split would send everything
            // one way, so skip it.
            if (!(vals[pos].first <= thr && thr < vals[pos + 1].first)) continue;

            std::int64_t right_n = n - left_n;
            std::int64_t right_bad = bad_total - left_bad;
            double child_imp =
                (static_cast<double>(left_n) / static_cast<double>(n)) *
                    impurity(left_bad, left_n - left_bad, params.criterion) +
                (static_cast<double>(right_n) / static_cast<double>(n)) *
                    impurity(right_bad, right_n - right_bad, params.criterion);
            double decrease = parent_imp - child_imp;
            // Strict improvement comparison: on exact ties the earlier
            // candidate (lower feature index, lower threshold) stands.
            if (decrease > best.decrease + 1e-15 && decrease > 1e-15) {
                best.found = true;
                best.feature = static_cast<int>(f);
                best.threshold = thr;
                best.decrease = decrease;
            }
        }
    }
    return best;
}

struct TreeBuilder {
    const std::vector<std::vector<double>>& X;
    const std::vector<ClassLabel>& y;
    TreeParams params;
    std::size_t m_features;  // candidate features per split (forest mode)
    Rng* rng;                // nullptr = consider all features
    DecisionTree tree;

    int build(std::vector<std::size_t> idx, int depth) {
        TreeNode node;
        for (std::size_t i : idx) {
            if (y[i] == ClassLabel::bad)
                ++node.n_bad;
            else
                ++node.n_good;
        }
        int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(node);

        bool pure = node.n_bad == 0 || node.n_good == 0;
        bool depth_stop = params.max_depth >= 0 && depth >= params.max_depth;
        if (pure || depth_stop ||
            idx.size() < 2 * static_cast<std::size_t>(params.min_leaf) ||
            idx.size() < 2)
            return node_id;

        std::vector<std::size_t> candidates;
        const std::size_t d = X[0].size();
        if (rng && m_features < d) {
            candidates = rng->sample_without_replacement(d, m_features);
            std::sort(candidates.begin(), candidates.end());
        } else {
            candidates.resize(d);
            for (std::size_t f = 0; f < d; ++f) candidates[f] = f;
        }

        auto split = best_split(X, y, idx, candidates, params);
        if (!split.found) return node_id;

        std::vector<std::size_t> left_idx, right_idx;
        for (std::size_t i : idx) {
            if (X[i][static_cast<std::size_t>(split.feature)] <= split.threshold)
                left_idx.push_back(i);
            else
                right_idx.push_back(i);
        }
        if (left_idx.empty() || right_idx.empty()) return node_id;  // degenerate

        tree.nodes[static_cast<std::size_t>(node_id)].feature = split.feature;
        tree.nodes[static_cast<std::size_t>(node_id)].threshold = split.threshold;
        int left_id = build(std::move(left_idx), depth + 1);
        tree.nodes[static_cast<std::size_t>(node_id)].left = left_id;
        int right_id = build(std::move(right_idx), depth + 1);
        tree.nodes[static_cast<std::size_t>(node_id)].right = right_id;
        return node_id;
    }
};

}  // namespace detail

// Trains a single tree on the full data (no bootstrap, all features at every
// split). Single-class input yields a one-leaf tree. The seed is accepted for
// interface uniformity; plain tree induction is deterministic without it.
inline DecisionTree train_tree(const std::vector<std::vector<double>>& X,
                               const std::vector<ClassLabel>& y,
                               const TreeParams& params = {},
                               std::uint64_t /*seed*/ = 0) {
    if (X.size() < 2 || X.size() != y.size())
        throw InputError("train_tree needs >= 2 samples with matching labels");
    const std::size_t d = X[0].size();
    if (d == 0) throw InputError("train_tree: zero-dimensional features");
    for (const auto& row : X)
        if (row.size() != d) throw DataError("ragged feature matrix");
    if (params.min_leaf < 1) throw InputError("min_leaf must be >= 1");

    detail::TreeBuilder builder{X, y, params, d, nullptr, {}};
    std::vector<std::size_t> idx(X.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    builder.build(std::move(idx), 0);
    builder.tree.params = params;
    builder.tree.n_features = d;
    return builder.tree;
}

struct ForestParams {
    int n_trees = 100;
    int m_features = -1;  // candidate features per split; -1 = ceil(sqrt(d))
    bool bootstrap = true;
    TreeParams tree;

    bool operator==(const ForestParams&) const = default;
};

class RandomForest {
  public:
    std::vector<DecisionTree> trees;
    ForestParams params;
    std::uint64_t seed = 0;
    std::size_t n_features = 0;

    Posterior predict_proba(const std::vector<double>& x) const {
        if (trees.empty()) throw Error("predict on untrained forest");
        if (x.size() != n_features)
            throw DataError("feature vector length " + std::to_string(x.size()) +
                            " does not match training dimension " +
                            std::to_string(n_features));
        double pb = 0.0;
        for (const auto& t : trees) pb += t.predict_proba(x).p_bad;
        pb /= static_cast<double>(trees.size());
        return {pb, 1.0 - pb};
    }

    bool operator==(const RandomForest&) const = default;
};

// Random forest: each tree sees a bootstrap resample and m random candidate
// features per split. Every tree's randomness comes from its own seed derived
// from (master seed, tree index), so the model is identical no matter what
// order — or on how many threads — the trees are trained.
inline RandomForest train_forest(const std::vector<std::vector<double>>& X,
                                 const std::vector<ClassLabel>& y,
                                 const ForestParams& params, std::uint64_t seed) {
    if (X.size() < 2 || X.size() != y.size())
        throw InputError("train_forest needs >= 2 samples with matching labels");
    if (params.n_trees < 1) throw InputError("n_trees must be >= 1");
    const std::size_t d = X[0].size();
    if (d == 0) throw InputError("train_forest: zero-dimensional features");
    for (const auto& row : X)
        if (row.size() != d) throw DataError("ragged feature matrix");

    std::size_t m = params.m_features > 0
                        ? static_cast<std::size_t>(params.m_features)
                        : static_cast<std::size_t>(
                              std::ceil(std::sqrt(static_cast<double>(d))));
    if (m > d) m = d;

    RandomForest forest;
    forest.params = params;
    forest.seed = seed;
    forest.n_features = d;
    forest.trees.resize(static_cast<std::size_t>(params.n_trees));

    for (int i = 0; i < params.n_trees; ++i) {
        Rng rng(derive_seed(seed, "forest-tree", static_cast<std::uint64_t>(i)));

        std::vector<std::size_t> idx;
        idx.reserve(X.size());
        if (params.bootstrap) {
            for (std::size_t s = 0; s < X.size(); ++s)
                idx.push_back(rng.index(X.size()));
        } else {
            for (std::size_t s = 0; s < X.size(); ++s) idx.push_back(s);
        }

        detail::TreeBuilder builder{X, y, params.tree, m, &rng, {}};
        builder.build(std::move(idx), 0);
        builder.tree.params = params.tree;
        builder.tree.n_features = d;
        forest.trees[static_cast<std::size_t>(i)] = std::move(builder.tree);
    }
    return forest;
}

// Indices (sorted, hence original-order-preserving) of a class-balanced
// subsample: every minority sample kept, the majority class uniformly
// undersampled without replacement to the minority count.
inline std::vector<std::size_t> balance_indices(const std::vector<ClassLabel>& y,
                                                std::uint64_t seed) {
    std::vector<std::size_t> bad_idx, good_idx;
    for (std::size_t i = 0; i < y.size(); ++i)
        (y[i] == ClassLabel::bad ? bad_idx : good_idx).push_back(i);
    if (bad_idx.empty() || good_idx.empty())
        throw InputError("balance requires both classes present");

    auto& majority = bad_idx.size() >= good_idx.size() ? bad_idx : good_idx;
    auto& minority = bad_idx.size() >= good_idx.size() ? good_idx : bad_idx;

    std::vector<std::size_t> kept = minority;
    if (majority.size() > minority.size()) {
        Rng rng(derive_seed(seed, "balance"));
        auto pick = rng.sample_without_replacement(majority.size(), minority.size());
        for (std::size_t p : pick) kept.push_back(majority[p]);
    } else {
        kept.insert(kept.end(), majority.begin(), majority.end());
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

inline std::pair<std::vector<std::vector<double>>, std::vector<ClassLabel>> balance(
    const std::vector<std::vector<double>>& X, const std::vector<ClassLabel>& y,
    std::uint64_t seed) {
    if (X.size() != y.size()) throw InputError("balance: X/y length mismatch");
    auto kept = balance_indices(y, seed);
    std::pair<std::vector<std::vector<double>>, std::vector<ClassLabel>> out;
    out.first.reserve(kept.size());
    out.second.reserve(kept.size());
    for (std::size_t i : kept) {
        out.first.push_back(X[i]);
        out.second.push_back(y[i]);
    }
    return out;
}

// --- serialization ---------------------------------------------------------

inline json to_json(const TreeNode& n) {
    json j;
    j["f"] = n.feature;
    j["t"] = n.threshold;
    j["l"] = n.left;
    j["r"] = n.right;
    j["nb"] = n.n_bad;
    j["ng"] = n.n_good;
    return j;
}

inline TreeNode tree_node_from_json(const json& j) {
    TreeNode n;
    n.feature = j.at("f").get<int>();
    n.threshold = j.at("t").get<double>();
    n.left = j.at("l").get<int>();
    n.right = j.at("r").get<int>();
    n.n_bad = j.at("nb").get<std::int64_t>();
    n.n_good = j.at("ng").get<std::int64_t>();
    if (n.n_bad < 0 || n.n_good < 0 || n.total() <= 0)
        throw DataError("tree node with non-positive class counts");
    return n;
}

inline json to_json(const DecisionTree& t) {
    json j;
    j["max_depth"] = t.params.max_depth;
    j["min_leaf"] = t.params.min_leaf;
    j["criterion"] = to_string(t.params.criterion);
    j["n_features"] = t.n_features;
    json nodes = json::array();
    for (const auto& n : t.nodes) nodes.push_back(to_json(n));
    j["nodes"] = nodes;
    return j;
}

inline DecisionTree tree_from_json(const json& j) {
    DecisionTree t;
    t.params.max_depth = j.at("max_depth").get<int>();
    t.params.min_leaf = j.at("min_leaf").get<int>();
    t.params.criterion = criterion_from_string(j.at("criterion").get<std::string>());
    t.n_features = j.at("n_features").get<std::size_t>();
    for (const json& nj : j.at("nodes")) t.nodes.push_back(tree_node_from_json(nj));
    if (t.nodes.empty()) throw DataError("tree without nodes");
    return t;
}

inline json to_json(const RandomForest& f) {
    json j;
    j["schema_version"] = std::string(kSchemaVersion);
    j["kind"] = "forest";
    j["n_trees"] = f.params.n_trees;
    j["m_features"] = f.params.m_features;
    j["bootstrap"] = f.params.bootstrap;
    j["max_depth"] = f.params.tree.max_depth;
    j["min_leaf"] = f.params.tree.min_leaf;
    j["criterion"] = to_string(f.params.tree.criterion);
    j["seed"] = f.seed;
    j["n_features"] = f.n_features;
    json trees = json::array();
    for (const auto& t : f.trees) trees.push_back(to_json(t));
    j["trees"] = trees;
    return j;
}

inline RandomForest forest_from_json(const json& j) {
    std::string ver = j.value("schema_version", "");
    if (ver != kSchemaVersion)
        throw SchemaError("forest schema_version \"" + ver +
                          "\" does not match expected \"" +
                          std::string(kSchemaVersion) + "\"");
    RandomForest f;
    f.params.n_trees = j.at("n_trees").get<int>();
    f.params.m_features = j.at("m_features").get<int>();
    f.params.bootstrap = j.at("bootstrap").get<bool>();
    f.params.tree.max_depth = j.at("max_depth").get<int>();
    f.params.tree.min_leaf = j.at("min_leaf").get<int>();
    f.params.tree.criterion =
        criterion_from_string(j.at("criterion").get<std::string>());
    f.seed = j.at("seed").get<std::uint64_t>();
    f.n_features = j.at("n_features").get<std::size_t>();
    for (const json& tj : j.at("trees")) f.trees.push_back(tree_from_json(tj));
    if (f.trees.empty()) throw DataError("forest without trees");
    return f;
}

}  // namespace siterep
