#include "narx/baselines.hpp"
#include "narx/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace narx {

namespace {

void check_features_labels(const Eigen::MatrixXd& x, const std::vector<int>& y,
                           const char* who) {
    if (x.rows() == 0)
        throw DataError(std::string(who) + ": empty training set");
    if (static_cast<Eigen::Index>(y.size()) != x.rows())
        throw DataError(std::string(who) + ": feature rows (" +
                        std::to_string(x.rows()) + ") != labels (" +
                        std::to_string(y.size()) + ")");
    for (int label : y)
        if (label < 1)
            throw DataError(std::string(who) + ": labels must be >= 1");
}

int max_label(const std::vector<int>& y) {
    return *std::max_element(y.begin(), y.end());
}

int lowest_argmax(const std::vector<long>& votes) {
    int best = 1;
    long best_count = -1;
    for (std::size_t c = 0; c < votes.size(); ++c) {
        if (votes[c] > best_count) {
            best_count = votes[c];
            best = static_cast<int>(c) + 1;
        }
    }
    return best;
}

} // namespace

KnnModel knn_fit(const Eigen::MatrixXd& x, const std::vector<int>& y, int k) {
    check_features_labels(x, y, "knn_fit");
    if (k < 1 || k > static_cast<int>(x.rows()))
        throw ConfigError("knn_fit: k must lie in [1, n], got k=" +
                          std::to_string(k) + " with n=" +
                          std::to_string(x.rows()));
    return {x, y, k};
}

std::vector<int> knn_predict(const KnnModel& model, const Eigen::MatrixXd& x) {
    if (x.cols() != model.train_x.cols())
        throw DataError("knn_predict: query has " + std::to_string(x.cols()) +
                        " features, model expects " +
                        std::to_string(model.train_x.cols()));
    const Eigen::Index n = model.train_x.rows();
    const int classes = max_label(model.train_y);
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(x.rows()));
    std::vector<std::pair<double, Eigen::Index>> dist(
        static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        for (Eigen::Index i = 0; i < n; ++i)
            dist[static_cast<std::size_t>(i)] = {
                (model.train_x.row(i) - x.row(r)).squaredNorm(), i};
        std::sort(dist.begin(), dist.end());  // ties fall to the lower index
        std::vector<long> votes(static_cast<std::size_t>(classes), 0);
        for (int j = 0; j < model.k; ++j)
            ++votes[static_cast<std::size_t>(
                model.train_y[static_cast<std::size_t>(dist[j].second)] - 1)];
        out.push_back(lowest_argmax(votes));
    }
    return out;
}

int DecisionTree::predict(const Eigen::VectorXd& x) const {
    int node = 0;
    while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const TreeNode& cur = nodes[static_cast<std::size_t>(node)];
        node = x(cur.feature) <= cur.threshold ? cur.left : cur.right;
    }
    return nodes[static_cast<std::size_t>(node)].majority;
}

void ForestParams::validate() const {
    if (trees < 1) throw ConfigError("forest: tree count must be >= 1");
    if (max_depth < 0) throw ConfigError("forest: max depth must be >= 0");
    if (min_leaf < 1) throw ConfigError("forest: min leaf size must be >= 1");
    if (features_per_split < 0)
        throw ConfigError("forest: features per split must be >= 0");
}

namespace {

double gini(const std::vector<long>& counts, long total) {
    if (total == 0) return 0.0;
    double sum_sq = 0.0;
    for (long c : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(total);
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

struct TreeBuilder {
    const Eigen::MatrixXd& x;
    const std::vector<int>& y;
    const ForestParams& params;
    int class_count;
    int mtry;
    std::mt19937_64& rng;
    DecisionTree tree;
    std::vector<int> feature_pool;  // scratch for subset draws

    int build(std::vector<Eigen::Index>& rows, int depth) {
        std::vector<long> counts(static_cast<std::size_t>(class_count), 0);
        for (Eigen::Index r : rows)
            ++counts[static_cast<std::size_t>(y[static_cast<std::size_t>(r)] - 1)];
        const long total = static_cast<long>(rows.size());
        const double node_gini = gini(counts, total);

        const bool at_depth_limit =
            params.max_depth > 0 && depth >= params.max_depth;
        if (node_gini == 0.0 || at_depth_limit ||
            total < 2 * params.min_leaf)
            return make_leaf(counts, total);

        // Best split over a fresh random feature subset.
        int best_feature = -1;
        double best_threshold = 0.0;
        double best_impurity = node_gini - 1e-12;
        draw_features();
        std::vector<std::pair<double, int>> column;
        column.reserve(rows.size());
        for (int fi = 0; fi < mtry; ++fi) {
            const int f = feature_pool[static_cast<std::size_t>(fi)];
            column.clear();
            for (Eigen::Index r : rows)
                column.emplace_back(x(r, f), y[static_cast<std::size_t>(r)]);
            std::sort(column.begin(), column.end());
            std::vector<long> left(static_cast<std::size_t>(class_count), 0);
            std::vector<long> right = counts;
            for (long i = 0; i + 1 < total; ++i) {
                const auto& [value, label] = column[static_cast<std::size_t>(i)];
                ++left[static_cast<std::size_t>(label - 1)];
                --right[static_cast<std::size_t>(label - 1)];
                const double next = column[static_cast<std::size_t>(i + 1)].first;
                if (next == value) continue;  // equal values cannot be separated
                const long n_left = i + 1;
                const long n_right = total - n_left;
                if (n_left < params.min_leaf || n_right < params.min_leaf)
                    continue;
                const double weighted =
                    (static_cast<double>(n_left) * gini(left, n_left) +
                     static_cast<double>(n_right) * gini(right, n_right)) /
                    static_cast<double>(total);
                if (weighted < best_impurity) {
                    best_impurity = weighted;
                    best_feature = f;
                    best_threshold = 0.5 * (value + next);
                }
            }
        }
        if (best_feature < 0) return make_leaf(counts, total);

        std::vector<Eigen::Index> left_rows, right_rows;
        for (Eigen::Index r : rows) {
            if (x(r, best_feature) <= best_threshold)
                left_rows.push_back(r);
            else
                right_rows.push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();

        const int node = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[static_cast<std::size_t>(node)].feature = best_feature;
        tree.nodes[static_cast<std::size_t>(node)].threshold = best_threshold;
        const int left_child = build(left_rows, depth + 1);
        const int right_child = build(right_rows, depth + 1);
        tree.nodes[static_cast<std::size_t>(node)].left = left_child;
        tree.nodes[static_cast<std::size_t>(node)].right = right_child;
        return node;
    }

    int make_leaf(const std::vector<long>& counts, long total) {
        TreeNode leaf;
        leaf.distribution.resize(counts.size(), 0.0);
        for (std::size_t c = 0; c < counts.size(); ++c)
            leaf.distribution[c] =
                static_cast<double>(counts[c]) / static_cast<double>(total);
        leaf.majority = lowest_argmax(counts);
        const int node = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(std::move(leaf));
        return node;
    }

    void draw_features() {
        const int d = static_cast<int>(x.cols());
        if (static_cast<int>(feature_pool.size()) != d) {
            feature_pool.resize(static_cast<std::size_t>(d));
            std::iota(feature_pool.begin(), feature_pool.end(), 0);
        }
        for (int i = 0; i < mtry; ++i) {
            std::uniform_int_distribution<int> pick(i, d - 1);
            std::swap(feature_pool[static_cast<std::size_t>(i)],
                      feature_pool[static_cast<std::size_t>(pick(rng))]);
        }
    }
};

} // namespace

ForestModel forest_fit(const Eigen::MatrixXd& x, const std::vector<int>& y,
                       const ForestParams& params, std::uint64_t seed) {
    check_features_labels(x, y, "forest_fit");
    params.validate();
    const int d = static_cast<int>(x.cols());
    if (d == 0) throw DataError("forest_fit: no features");
    int mtry = params.features_per_split;
    if (mtry == 0)
        mtry = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));
    mtry = std::min(mtry, d);

    ForestModel model;
    model.params = params;
    model.class_count = max_label(y);
    model.seed = seed;
    model.trees.reserve(static_cast<std::size_t>(params.trees));
    const Eigen::Index n = x.rows();
    for (int t = 0; t < params.trees; ++t) {
        std::mt19937_64 rng(seed +
                            0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(t + 1));
        std::vector<Eigen::Index> rows;
        rows.reserve(static_cast<std::size_t>(n));
        if (params.bootstrap) {
            std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
            for (Eigen::Index i = 0; i < n; ++i) rows.push_back(pick(rng));
        } else {
            for (Eigen::Index i = 0; i < n; ++i) rows.push_back(i);
        }
        TreeBuilder builder{x, y, params, model.class_count, mtry, rng, {}, {}};
        builder.tree.nodes.reserve(64);
        builder.build(rows, 0);
        model.trees.push_back(std::move(builder.tree));
    }
    return model;
}

std::vector<int> forest_predict(const ForestModel& model,
                                const Eigen::MatrixXd& x) {
    if (model.trees.empty())
        throw ConfigError("forest_predict: model has no trees");
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(x.rows()));
    std::vector<long> votes(static_cast<std::size_t>(model.class_count));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        std::fill(votes.begin(), votes.end(), 0);
        const Eigen::VectorXd row = x.row(r);
        for (const DecisionTree& tree : model.trees)
            ++votes[static_cast<std::size_t>(tree.predict(row) - 1)];
        out.push_back(lowest_argmax(votes));
    }
    return out;
}

std::vector<ForestParams> ParamGrid::expand() const {
    if (trees.empty() || max_depth.empty() || min_leaf.empty() ||
        features_per_split.empty())
        throw ConfigError("grid_search: every hyperparameter list must be "
                          "nonempty");
    std::vector<ForestParams> points;
    for (int t : trees)
        for (int depth : max_depth)
            for (int leaf : min_leaf)
                for (int mtry : features_per_split) {
                    ForestParams p;
                    p.trees = t;
                    p.max_depth = depth;
                    p.min_leaf = leaf;
                    p.features_per_split = mtry;
                    points.push_back(p);
                }
    return points;
}

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x,
                          const std::vector<Eigen::Index>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
    return out;
}

} // namespace

GridSearchResult grid_search(const ParamGrid& grid, const TimeSeriesDataset& ds,
                             const FoldPlan& folds, std::uint64_t seed) {
    if (ds.labels.empty())
        throw DataError("grid_search: dataset has no labels");
    const std::vector<ForestParams> points = grid.expand();
    for (const ForestParams& p : points) p.validate();

    GridSearchResult result;
    result.scores.reserve(points.size());
    std::size_t best_index = 0;
    double best_score = -1.0;
    for (std::size_t g = 0; g < points.size(); ++g) {
        const ForestParams& p = points[g];
        auto fit_predict = [&](const TimeSeriesDataset& data,
                               const std::vector<Eigen::Index>& train_rows,
                               const std::vector<Eigen::Index>& test_rows) {
            std::vector<int> train_y;
            train_y.reserve(train_rows.size());
            for (Eigen::Index r : train_rows)
                train_y.push_back(data.labels[static_cast<std::size_t>(r)]);
            const ForestModel model =
                forest_fit(take_rows(data.channels, train_rows), train_y, p, seed);
            return forest_predict(model, take_rows(data.channels, test_rows));
        };
        const CvMetrics cv = cross_validate(fit_predict, ds, folds);
        const double score = cv.average_accuracy.mean;
        result.scores.push_back(score);
        if (score > best_score) {
            best_score = score;
            best_index = g;
        }
    }
    result.best = points[best_index];
    result.cv_accuracy = best_score;
    result.model = forest_fit(ds.channels, ds.labels, result.best, seed);
    return result;
}

} // namespace narx
