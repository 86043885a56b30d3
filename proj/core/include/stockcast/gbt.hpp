#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stockcast/dataset.hpp"

namespace stockcast::gbt {

struct GbtParams {
    std::size_t n_rounds = 100;
    std::size_t max_depth = 4;
    double learning_rate = 0.1;   // eta in (0,1]
    double l2_reg = 1.0;          // lambda >= 0
    double min_split_gain = 0.0;  // gamma >= 0
    double min_child_weight = 1.0;
};

/// Binary regression tree stored as an array; nodes with feature < 0 are
/// leaves carrying an unscaled weight.
struct TreeNode {
    int feature = -1;
    double threshold = 0;
    int left = -1;
    int right = -1;
    double weight = 0;

    bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes;

    double eval(std::span<const double> row) const;
};

/// prediction = base_score + learning_rate * sum of per-tree leaf weights.
struct GbtEnsemble {
    double base_score = 0;
    GbtParams params;
    std::vector<RegressionTree> trees;
    std::size_t n_features = 0;
};

/// Second-order boosting on squared loss: per round the gradient is
/// yhat - y with unit hessian, leaf weight -G/(H+lambda), and exact greedy
/// splits at midpoints between consecutive distinct sorted feature values
/// (ties broken toward the lowest feature index, then lowest threshold).
/// Errors: EmptyDataset (fewer than 2 rows), LengthMismatch, BadParams.
GbtEnsemble fit(const FeatureMatrix& features, std::span<const double> targets,
                const GbtParams& params);

/// Errors: FeatureCountMismatch.
std::vector<double> predict(const GbtEnsemble& ensemble, const FeatureMatrix& features);

}  // namespace stockcast::gbt
