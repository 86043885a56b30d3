#include "stockcast/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "stockcast/errors.hpp"

namespace stockcast::gbt {

namespace {

void check_params(const GbtParams& p) {
    if (p.n_rounds == 0) raise(ErrorKind::BadParams, "n_rounds must be positive");
    if (p.learning_rate <= 0 || p.learning_rate > 1) {
        raise(ErrorKind::BadParams, "learning_rate must be in (0,1]");
    }
    if (p.l2_reg < 0 || p.min_split_gain < 0 || p.min_child_weight < 0) {
        raise(ErrorKind::BadParams, "regularization parameters must be non-negative");
    }
}

struct BestSplit {
    double gain = 0;
    int feature = -1;
    double threshold = 0;
};

double leaf_objective(double g, double h, double lambda) {
    return g * g / (h + lambda);
}

}  // namespace

double RegressionTree::eval(std::span<const double> row) const {
    int id = 0;
    while (!nodes[id].is_leaf()) {
        const TreeNode& n = nodes[id];
        id = row[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
    }
    return nodes[id].weight;
}

GbtEnsemble fit(const FeatureMatrix& X, std::span<const double> y, const GbtParams& prm) {
    check_params(prm);
    const std::size_t n = X.rows();
    if (y.size() != n) raise(ErrorKind::LengthMismatch, "targets length != feature rows");
    if (n < 2) raise(ErrorKind::EmptyDataset, "need at least 2 rows");
    const std::size_t n_feat = X.cols();

    GbtEnsemble ens;
    ens.params = prm;
    ens.n_features = n_feat;
    ens.base_score = 0;
    for (double v : y) ens.base_score += v;
    ens.base_score /= static_cast<double>(n);

    // Global presort: per feature, row indices ordered by value.
    std::vector<std::vector<std::size_t>> sorted(n_feat);
    for (std::size_t f = 0; f < n_feat; ++f) {
        auto& idx = sorted[f];
        idx.resize(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            const double va = X.at(a, f), vb = X.at(b, f);
            return va < vb || (va == vb && a < b);
        });
    }

    std::vector<double> pred(n, ens.base_score);
    std::vector<double> grad(n);
    std::vector<int> node_of(n);

    for (std::size_t round = 0; round < prm.n_rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) grad[i] = pred[i] - y[i];
        std::fill(node_of.begin(), node_of.end(), 0);

        RegressionTree tree;
        tree.nodes.push_back(TreeNode{});

        struct Pending {
            int node;
            double g_sum;
            double h_sum;
            std::size_t depth;
        };
        std::deque<Pending> queue;
        double g_root = 0;
        for (double g : grad) g_root += g;
        queue.push_back({0, g_root, static_cast<double>(n), 0});

        while (!queue.empty()) {
            const Pending cur = queue.front();
            queue.pop_front();

            BestSplit best;
            if (cur.depth < prm.max_depth && cur.h_sum >= 2 * prm.min_child_weight) {
                for (std::size_t f = 0; f < n_feat; ++f) {
                    double gl = 0, hl = 0;
                    double prev = 0;
                    bool have_prev = false;
                    for (std::size_t r : sorted[f]) {
                        if (node_of[r] != cur.node) continue;
                        const double v = X.at(r, f);
                        if (have_prev && v > prev && hl >= prm.min_child_weight &&
                            cur.h_sum - hl >= prm.min_child_weight) {
                            const double gr = cur.g_sum - gl;
                            const double hr = cur.h_sum - hl;
                            const double gain =
                                0.5 * (leaf_objective(gl, hl, prm.l2_reg) +
                                       leaf_objective(gr, hr, prm.l2_reg) -
                                       leaf_objective(cur.g_sum, cur.h_sum, prm.l2_reg)) -
                                prm.min_split_gain;
                            if (gain > best.gain) {
                                best.gain = gain;
                                best.feature = static_cast<int>(f);
                                best.threshold = 0.5 * (prev + v);
                            }
                        }
                        gl += grad[r];
                        hl += 1.0;
                        prev = v;
                        have_prev = true;
                    }
                }
            }

            if (best.feature < 0 || best.gain <= 0) {
                tree.nodes[cur.node].feature = -1;
                tree.nodes[cur.node].weight = -cur.g_sum / (cur.h_sum + prm.l2_reg);
                continue;
            }

            const int left_id = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back(TreeNode{});
            const int right_id = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back(TreeNode{});
            TreeNode& nd = tree.nodes[cur.node];
            nd.feature = best.feature;
            nd.threshold = best.threshold;
            nd.left = left_id;
            nd.right = right_id;

            double gl = 0, hl = 0;
            for (std::size_t r = 0; r < n; ++r) {
                if (node_of[r] != cur.node) continue;
                if (X.at(r, static_cast<std::size_t>(best.feature)) < best.threshold) {
                    node_of[r] = left_id;
                    gl += grad[r];
                    hl += 1.0;
                } else {
                    node_of[r] = right_id;
                }
            }
            queue.push_back({left_id, gl, hl, cur.depth + 1});
            queue.push_back({right_id, cur.g_sum - gl, cur.h_sum - hl, cur.depth + 1});
        }

        for (std::size_t i = 0; i < n; ++i) {
            pred[i] += prm.learning_rate * tree.eval(X.row(i));
        }
        ens.trees.push_back(std::move(tree));
    }
    return ens;
}

std::vector<double> predict(const GbtEnsemble& ens, const FeatureMatrix& X) {
    if (X.cols() != ens.n_features) {
        raise(ErrorKind::FeatureCountMismatch, "feature count differs from training");
    }
    std::vector<double> out(X.rows(), ens.base_score);
    for (std::size_t r = 0; r < X.rows(); ++r) {
        double s = 0;
        for (const auto& tree : ens.trees) s += tree.eval(X.row(r));
        out[r] += ens.params.learning_rate * s;
    }
    return out;
}

}  // namespace stockcast::gbt
