#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "fptox/error.hpp"
#include "fptox/features.hpp"
#include "fptox/rng.hpp"

namespace fptox::classify {

enum class Algorithm { logistic, svm, forest };

inline const char* to_string(Algorithm a) {
    switch (a) {
        case Algorithm::logistic: return "logistic";
        case Algorithm::svm: return "svm";
        case Algorithm::forest: return "forest";
    }
    return "?";
}

inline Algorithm algorithm_from_string(const std::string& s) {
    if (s == "logistic" || s == "lr") return Algorithm::logistic;
    if (s == "svm") return Algorithm::svm;
    if (s == "forest" || s == "rf") return Algorithm::forest;
    throw Error("unknown algorithm: '" + s + "' (expected lr, svm, or rf)");
}

struct ForestParams {
    std::size_t n_trees = 100;
    std::size_t max_depth = 12;
    std::size_t min_samples_leaf = 1;
    std::size_t max_features = 0;  // 0 → ceil(sqrt(V))
    bool bootstrap = true;
};

struct TrainConfig {
    Algorithm algorithm = Algorithm::logistic;
    double l2_lambda = 1e-3;
    double learning_rate = 0.1;
    std::size_t epochs = 500;
    bool balanced = true;  // class weights n/(2*n_c); false → unit weights
    std::uint64_t seed = 0;
    ForestParams forest;
};

// Balanced class weights: w_c = n_total / (2 * n_c).
inline std::pair<double, double> compute_class_weights(const std::vector<bool>& labels) {
    std::size_t n_pos = 0;
    for (bool y : labels) n_pos += y ? 1 : 0;
    std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw Error("class weights undefined: training labels contain a single class");
    }
    const double n = static_cast<double>(labels.size());
    return {n / (2.0 * static_cast<double>(n_neg)), n / (2.0 * static_cast<double>(n_pos))};
}

struct LinearModel {
    std::vector<double> weights;
    double bias = 0.0;
    std::string trained_for;
    Algorithm algorithm = Algorithm::logistic;
};

namespace detail {

inline double dot(const std::vector<double>& w, const features::SparseVector& x) {
    double s = 0.0;
    for (auto& [i, v] : x.items) s += w[i] * v;
    return s;
}

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double softplus(double z) {  // ln(1 + e^z), overflow-safe
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline void validate_training_input(const std::vector<features::SparseVector>& X,
                                    const std::vector<bool>& y) {
    if (X.size() != y.size()) throw Error("training: feature/label count mismatch");
    if (X.size() < 2) throw Error("training: need at least two samples");
    const std::size_t dim = X.front().dim;
    for (auto& x : X) {
        if (x.dim != dim) throw Error("training: inconsistent feature dimensions");
        for (auto& [i, v] : x.items) {
            if (i >= dim) throw Error("training: feature index out of range");
            if (!std::isfinite(v)) throw Error("training: non-finite feature value");
        }
    }
}

inline std::pair<double, double> sample_weights(const std::vector<bool>& y, bool balanced) {
    if (balanced) return compute_class_weights(y);
    bool has_pos = false, has_neg = false;
    for (bool v : y) (v ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) throw Error("training labels contain a single class");
    return {1.0, 1.0};
}

}  // namespace detail

// Mean class-weighted log-loss plus (lambda/2)*||w||^2; bias unregularized.
inline double logistic_objective(const std::vector<features::SparseVector>& X,
                                 const std::vector<bool>& y, double w_neg, double w_pos,
                                 const std::vector<double>& w, double bias, double lambda) {
    double loss = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        const double z = detail::dot(w, X[i]) + bias;
        const double yi = y[i] ? 1.0 : 0.0;
        loss += (y[i] ? w_pos : w_neg) * (detail::softplus(z) - yi * z);
    }
    loss /= static_cast<double>(X.size());
    double reg = 0.0;
    for (double wi : w) reg += wi * wi;
    return loss + 0.5 * lambda * reg;
}

inline void logistic_gradient(const std::vector<features::SparseVector>& X,
                              const std::vector<bool>& y, double w_neg, double w_pos,
                              const std::vector<double>& w, double bias, double lambda,
                              std::vector<double>& grad_w, double& grad_b) {
    grad_w.assign(w.size(), 0.0);
    grad_b = 0.0;
    const double inv_n = 1.0 / static_cast<double>(X.size());
    for (std::size_t i = 0; i < X.size(); ++i) {
        const double z = detail::dot(w, X[i]) + bias;
        const double coef = (y[i] ? w_pos : w_neg) *
                            (detail::sigmoid(z) - (y[i] ? 1.0 : 0.0)) * inv_n;
        for (auto& [j, v] : X[i].items) grad_w[j] += coef * v;
        grad_b += coef;
    }
    for (std::size_t j = 0; j < w.size(); ++j) grad_w[j] += lambda * w[j];
}

inline double hinge_objective(const std::vector<features::SparseVector>& X,
                              const std::vector<bool>& y, double w_neg, double w_pos,
                              const std::vector<double>& w, double bias, double lambda) {
    double loss = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        const double s = y[i] ? 1.0 : -1.0;
        const double m = s * (detail::dot(w, X[i]) + bias);
        loss += (y[i] ? w_pos : w_neg) * std::max(0.0, 1.0 - m);
    }
    loss /= static_cast<double>(X.size());
    double reg = 0.0;
    for (double wi : w) reg += wi * wi;
    return loss + 0.5 * lambda * reg;
}

// Full-batch gradient descent in fixed sample order; deterministic.
// loss_history, when given, records the objective at initialization and
// after every epoch (epochs + 1 entries).
inline LinearModel train_logistic(const std::vector<features::SparseVector>& X,
                                  const std::vector<bool>& y, const TrainConfig& cfg,
                                  std::vector<double>* loss_history = nullptr) {
    detail::validate_training_input(X, y);
    auto [w_neg, w_pos] = detail::sample_weights(y, cfg.balanced);
    LinearModel model;
    model.algorithm = Algorithm::logistic;
    model.weights.assign(X.front().dim, 0.0);
    if (loss_history) {
        loss_history->clear();
        loss_history->push_back(logistic_objective(X, y, w_neg, w_pos, model.weights, model.bias,
                                                   cfg.l2_lambda));
    }
    std::vector<double> grad_w;
    double grad_b = 0.0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        logistic_gradient(X, y, w_neg, w_pos, model.weights, model.bias, cfg.l2_lambda, grad_w,
                          grad_b);
        for (std::size_t j = 0; j < model.weights.size(); ++j) {
            model.weights[j] -= cfg.learning_rate * grad_w[j];
        }
        model.bias -= cfg.learning_rate * grad_b;
        if (loss_history) {
            loss_history->push_back(logistic_objective(X, y, w_neg, w_pos, model.weights,
                                                       model.bias, cfg.l2_lambda));
        }
    }
    return model;
}

// Full-batch subgradient descent on the class-weighted hinge loss.
inline LinearModel train_svm(const std::vector<features::SparseVector>& X,
                             const std::vector<bool>& y, const TrainConfig& cfg,
                             std::vector<double>* loss_history = nullptr) {
    detail::validate_training_input(X, y);
    auto [w_neg, w_pos] = detail::sample_weights(y, cfg.balanced);
    LinearModel model;
    model.algorithm = Algorithm::svm;
    model.weights.assign(X.front().dim, 0.0);
    if (loss_history) {
        loss_history->clear();
        loss_history->push_back(hinge_objective(X, y, w_neg, w_pos, model.weights, model.bias,
                                                cfg.l2_lambda));
    }
    const double inv_n = 1.0 / static_cast<double>(X.size());
    std::vector<double> grad_w;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        grad_w.assign(model.weights.size(), 0.0);
        double grad_b = 0.0;
        for (std::size_t i = 0; i < X.size(); ++i) {
            const double s = y[i] ? 1.0 : -1.0;
            const double m = s * (detail::dot(model.weights, X[i]) + model.bias);
            if (m < 1.0) {
                const double coef = -(y[i] ? w_pos : w_neg) * s * inv_n;
                for (auto& [j, v] : X[i].items) grad_w[j] += coef * v;
                grad_b += coef;
            }
        }
        for (std::size_t j = 0; j < model.weights.size(); ++j) {
            model.weights[j] -= cfg.learning_rate * (grad_w[j] + cfg.l2_lambda * model.weights[j]);
        }
        model.bias -= cfg.learning_rate * grad_b;
        if (loss_history) {
            loss_history->push_back(hinge_objective(X, y, w_neg, w_pos, model.weights, model.bias,
                                                    cfg.l2_lambda));
        }
    }
    return model;
}

// score = w.x + b; label = (score >= 0), ties positive.
inline std::vector<std::pair<bool, double>> predict(const LinearModel& model,
                                                    const std::vector<features::SparseVector>& X) {
    std::vector<std::pair<bool, double>> out;
    out.reserve(X.size());
    for (auto& x : X) {
        if (x.dim != model.weights.size()) throw Error("predict: feature dimension mismatch");
        const double score = detail::dot(model.weights, x) + model.bias;
        out.push_back({score >= 0.0, score});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Random forest (CART, gini impurity, bootstrap, feature subsampling)

struct TreeNode {
    int feature = -1;  // -1 → leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double n_neg = 0.0;  // raw training sample counts at the leaf
    double n_pos = 0.0;

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  // root at index 0
};

struct ForestModel {
    std::vector<Tree> trees;
    double w_neg = 1.0;  // class weights used for impurity and leaf votes
    double w_pos = 1.0;
    std::uint64_t seed = 0;
    std::string trained_for;
};

namespace detail {

using Column = std::vector<std::pair<std::uint32_t, double>>;  // (sample, value), sorted

inline std::vector<Column> build_columns(const std::vector<features::SparseVector>& X) {
    std::vector<Column> columns(X.empty() ? 0 : X.front().dim);
    for (std::uint32_t i = 0; i < X.size(); ++i) {
        for (auto& [j, v] : X[i].items) columns[j].push_back({i, v});
    }
    return columns;
}

// Values of one feature for each node sample (zeros for absent entries);
// node sample ids are sorted and may repeat under bootstrap.
inline void gather_column(const Column& column, const std::vector<std::uint32_t>& samples,
                          std::vector<double>& values) {
    values.assign(samples.size(), 0.0);
    std::size_t j = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        while (j < column.size() && column[j].first < samples[i]) ++j;
        if (j < column.size() && column[j].first == samples[i]) values[i] = column[j].second;
    }
}

inline double gini(double wn, double wp) {
    const double w = wn + wp;
    if (w <= 0.0) return 0.0;
    const double pn = wn / w, pp = wp / w;
    return 1.0 - pn * pn - pp * pp;
}

struct TreeBuilder {
    const std::vector<Column>& columns;
    const std::vector<bool>& labels;
    double w_neg, w_pos;
    const ForestParams& params;
    std::size_t n_features;
    DeterministicRng& rng;
    Tree tree;

    struct ValueStats {
        std::size_t n_neg = 0, n_pos = 0;
    };

    int build(const std::vector<std::uint32_t>& samples, std::size_t depth) {
        std::size_t raw_neg = 0, raw_pos = 0;
        for (auto s : samples) (labels[s] ? raw_pos : raw_neg) += 1;

        const int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(TreeNode{});

        auto make_leaf = [&]() {
            tree.nodes[static_cast<std::size_t>(node_id)].n_neg = static_cast<double>(raw_neg);
            tree.nodes[static_cast<std::size_t>(node_id)].n_pos = static_cast<double>(raw_pos);
            return node_id;
        };

        if (raw_neg == 0 || raw_pos == 0 || depth >= params.max_depth ||
            samples.size() < 2 * params.min_samples_leaf) {
            return make_leaf();
        }

        auto candidates = candidate_features();
        int best_feature = -1;
        double best_threshold = 0.0;
        double best_score = std::numeric_limits<double>::infinity();
        std::vector<double> values;

        for (auto f : candidates) {
            gather_column(columns[f], samples, values);
            std::map<double, ValueStats> by_value;
            for (std::size_t i = 0; i < samples.size(); ++i) {
                auto& st = by_value[values[i]];
                (labels[samples[i]] ? st.n_pos : st.n_neg) += 1;
            }
            if (by_value.size() < 2) continue;

            std::size_t left_neg = 0, left_pos = 0;
            auto it = by_value.begin();
            auto next = std::next(it);
            for (; next != by_value.end(); ++it, ++next) {
                left_neg += it->second.n_neg;
                left_pos += it->second.n_pos;
                const std::size_t left_n = left_neg + left_pos;
                const std::size_t right_n = samples.size() - left_n;
                if (left_n < params.min_samples_leaf || right_n < params.min_samples_leaf) {
                    continue;
                }
                // Scale exact integer counts rather than subtracting pre-scaled
                // doubles: equal-impurity splits must tie exactly so that the
                // lowest-feature / lowest-threshold preference decides them.
                const double lwn = static_cast<double>(left_neg) * w_neg;
                const double lwp = static_cast<double>(left_pos) * w_pos;
                const double rwn = static_cast<double>(raw_neg - left_neg) * w_neg;
                const double rwp = static_cast<double>(raw_pos - left_pos) * w_pos;
                const double score = (lwn + lwp) * gini(lwn, lwp) + (rwn + rwp) * gini(rwn, rwp);
                if (score < best_score) {
                    best_score = score;
                    best_feature = static_cast<int>(f);
                    best_threshold = 0.5 * (it->first + next->first);
                }
            }
        }

        if (best_feature < 0) return make_leaf();

        gather_column(columns[static_cast<std::size_t>(best_feature)], samples, values);
        std::vector<std::uint32_t> left_samples, right_samples;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            (values[i] <= best_threshold ? left_samples : right_samples).push_back(samples[i]);
        }

        tree.nodes[static_cast<std::size_t>(node_id)].feature = best_feature;
        tree.nodes[static_cast<std::size_t>(node_id)].threshold = best_threshold;
        const int left_id = build(left_samples, depth + 1);
        tree.nodes[static_cast<std::size_t>(node_id)].left = left_id;
        const int right_id = build(right_samples, depth + 1);
        tree.nodes[static_cast<std::size_t>(node_id)].right = right_id;
        return node_id;
    }

    // ascending order so the lowest-index tie-break is well-defined
    std::vector<std::size_t> candidate_features() {
        std::size_t mf = params.max_features > 0
                             ? params.max_features
                             : static_cast<std::size_t>(
                                   std::ceil(std::sqrt(static_cast<double>(n_features))));
        mf = std::min(mf, n_features);
        std::vector<std::size_t> all(n_features);
        for (std::size_t i = 0; i < n_features; ++i) all[i] = i;
        if (mf >= n_features) return all;
        for (std::size_t k = 0; k < mf; ++k) {
            const std::size_t j = k + static_cast<std::size_t>(
                                          rng.bounded(static_cast<std::uint64_t>(all.size() - k)));
            std::swap(all[k], all[j]);
        }
        all.resize(mf);
        std::sort(all.begin(), all.end());
        return all;
    }
};

inline bool leaf_votes_positive(const TreeNode& leaf, double w_neg, double w_pos) {
    return leaf.n_pos * w_pos >= leaf.n_neg * w_neg;  // ties positive
}

inline bool tree_predict(const Tree& tree, const features::SparseVector& x, double w_neg,
                         double w_pos) {
    int node = 0;
    while (!tree.nodes[static_cast<std::size_t>(node)].is_leaf()) {
        const auto& n = tree.nodes[static_cast<std::size_t>(node)];
        double value = 0.0;
        auto it = std::lower_bound(x.items.begin(), x.items.end(),
                                   std::make_pair(static_cast<std::size_t>(n.feature), 0.0),
                                   [](auto& a, auto& b) { return a.first < b.first; });
        if (it != x.items.end() && it->first == static_cast<std::size_t>(n.feature)) {
            value = it->second;
        }
        node = value <= n.threshold ? n.left : n.right;
    }
    return leaf_votes_positive(tree.nodes[static_cast<std::size_t>(node)], w_neg, w_pos);
}

}  // namespace detail

inline ForestModel train_forest(const std::vector<features::SparseVector>& X,
                                const std::vector<bool>& y, const TrainConfig& cfg) {
    detail::validate_training_input(X, y);
    if (cfg.forest.n_trees < 1) throw Error("forest: n_trees must be >= 1");
    auto [w_neg, w_pos] = detail::sample_weights(y, cfg.balanced);

    ForestModel model;
    model.seed = cfg.seed;
    model.w_neg = w_neg;
    model.w_pos = w_pos;

    const auto columns = detail::build_columns(X);
    const std::size_t n = X.size();
    for (std::size_t t = 0; t < cfg.forest.n_trees; ++t) {
        DeterministicRng rng(mix_seed(cfg.seed, "tree-" + std::to_string(t)));
        std::vector<std::uint32_t> samples;
        samples.reserve(n);
        if (cfg.forest.bootstrap) {
            for (std::size_t i = 0; i < n; ++i) {
                samples.push_back(static_cast<std::uint32_t>(rng.bounded(n)));
            }
            std::sort(samples.begin(), samples.end());
        } else {
            for (std::uint32_t i = 0; i < n; ++i) samples.push_back(i);
        }
        detail::TreeBuilder builder{columns, y, w_neg, w_pos, cfg.forest, X.front().dim, rng, {}};
        builder.build(samples, 0);
        model.trees.push_back(std::move(builder.tree));
    }
    return model;
}

// label = majority of tree votes (ties positive); score = positive-vote share.
inline std::vector<std::pair<bool, double>> predict(const ForestModel& model,
                                                    const std::vector<features::SparseVector>& X) {
    std::vector<std::pair<bool, double>> out;
    out.reserve(X.size());
    for (auto& x : X) {
        std::size_t pos = 0;
        for (auto& tree : model.trees) {
            pos += detail::tree_predict(tree, x, model.w_neg, model.w_pos) ? 1 : 0;
        }
        const double score = static_cast<double>(pos) / static_cast<double>(model.trees.size());
        out.push_back({2 * pos >= model.trees.size(), score});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Persistence

inline nlohmann::json linear_to_json(const LinearModel& model) {
    nlohmann::json weights = nlohmann::json::array();
    for (std::size_t i = 0; i < model.weights.size(); ++i) {
        if (model.weights[i] != 0.0) weights.push_back({i, model.weights[i]});
    }
    return {{"algorithm", to_string(model.algorithm)},
            {"category", model.trained_for},
            {"dim", model.weights.size()},
            {"bias", model.bias},
            {"weights", weights}};
}

inline LinearModel linear_from_json(const nlohmann::json& j) {
    LinearModel model;
    model.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
    if (model.algorithm == Algorithm::forest) throw Error("model file: not a linear model");
    model.trained_for = j.value("category", std::string());
    model.bias = j.at("bias").get<double>();
    model.weights.assign(j.at("dim").get<std::size_t>(), 0.0);
    for (auto& pair : j.at("weights")) {
        const std::size_t idx = pair.at(0).get<std::size_t>();
        if (idx >= model.weights.size()) throw Error("model file: weight index out of range");
        model.weights[idx] = pair.at(1).get<double>();
    }
    return model;
}

inline nlohmann::json forest_to_json(const ForestModel& model) {
    nlohmann::json trees = nlohmann::json::array();
    for (auto& tree : model.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (auto& n : tree.nodes) {
            nodes.push_back({n.feature, n.threshold, n.left, n.right, n.n_neg, n.n_pos});
        }
        trees.push_back(std::move(nodes));
    }
    return {{"algorithm", "forest"},
            {"category", model.trained_for},
            {"seed", model.seed},
            {"w_neg", model.w_neg},
            {"w_pos", model.w_pos},
            {"trees", trees}};
}

inline ForestModel forest_from_json(const nlohmann::json& j) {
    if (algorithm_from_string(j.at("algorithm").get<std::string>()) != Algorithm::forest) {
        throw Error("model file: not a forest model");
    }
    ForestModel model;
    model.trained_for = j.value("category", std::string());
    model.seed = j.at("seed").get<std::uint64_t>();
    model.w_neg = j.at("w_neg").get<double>();
    model.w_pos = j.at("w_pos").get<double>();
    for (auto& tnodes : j.at("trees")) {
        Tree tree;
        for (auto& n : tnodes) {
            TreeNode node;
            node.feature = n.at(0).get<int>();
            node.threshold = n.at(1).get<double>();
            node.left = n.at(2).get<int>();
            node.right = n.at(3).get<int>();
            node.n_neg = n.at(4).get<double>();
            node.n_pos = n.at(5).get<double>();
            tree.nodes.push_back(node);
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

}  // namespace fptox::classify
