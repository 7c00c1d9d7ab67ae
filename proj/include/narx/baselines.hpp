#pragma once

#include "narx/dataset.hpp"
#include "narx/metrics.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace narx {

/// Lazy k-nearest-neighbours classifier over Euclidean distance.
struct KnnModel {
    Eigen::MatrixXd train_x;  // n x d
    std::vector<int> train_y; // values 1..C
    int k = 1;
};

KnnModel knn_fit(const Eigen::MatrixXd& x, const std::vector<int>& y, int k);

/// Majority vote among the k nearest training rows. Equal distances are
/// broken toward the lower training index, equal votes toward the lowest
/// class.
std::vector<int> knn_predict(const KnnModel& model, const Eigen::MatrixXd& x);

/// One CART node; `feature == -1` marks a leaf.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<double> distribution;  // leaf class shares, sums to 1
    int majority = 1;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // node 0 is the root
    int predict(const Eigen::VectorXd& x) const;
};

struct ForestParams {
    int trees = 100;
    int max_depth = 0;           // 0 = unlimited
    int min_leaf = 1;
    int features_per_split = 0;  // 0 = ceil(sqrt(d))
    bool bootstrap = true;

    void validate() const;
    friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

struct ForestModel {
    std::vector<DecisionTree> trees;
    ForestParams params;
    int class_count = 0;
    std::uint64_t seed = 0;
};

/// Bagged CART forest: Gini-impurity splits over a per-split random
/// feature subset, each tree grown on its own bootstrap resample (or the
/// full data when bootstrap is off). Deterministic for a fixed seed.
ForestModel forest_fit(const Eigen::MatrixXd& x, const std::vector<int>& y,
                       const ForestParams& params, std::uint64_t seed);

/// Majority vote over trees; ties go to the lowest class.
std::vector<int> forest_predict(const ForestModel& model,
                                const Eigen::MatrixXd& x);

/// Exhaustive hyperparameter grid, expanded as the cross product of the
/// candidate lists in declaration order (trees outermost).
struct ParamGrid {
    std::vector<int> trees = {100};
    std::vector<int> max_depth = {0};
    std::vector<int> min_leaf = {1};
    std::vector<int> features_per_split = {0};

    std::vector<ForestParams> expand() const;
};

struct GridSearchResult {
    ForestParams best;
    ForestModel model;          // refit on the full data with `best`
    double cv_accuracy = 0.0;   // mean CV accuracy of `best`
    std::vector<double> scores; // per grid point, expansion order
};

/// Scores every grid point by k-fold mean accuracy over `ds.channels`
/// and refits the winner on all rows. Score ties keep the earlier grid
/// point.
GridSearchResult grid_search(const ParamGrid& grid, const TimeSeriesDataset& ds,
                             const FoldPlan& folds, std::uint64_t seed);

} // namespace narx
