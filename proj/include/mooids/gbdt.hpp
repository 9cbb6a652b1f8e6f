#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mooids/dataset.hpp"

namespace mooids {

enum class LearnerKind { ExactSecondOrder, HistogramGossEfb };

const char* learner_kind_name(LearnerKind k);
LearnerKind learner_kind_from_name(const std::string& name);

struct Hyperparams {
    std::size_t n_estimators = 100;
    double learning_rate = 0.1;
    int max_depth = 6;
    double lambda_l2 = 1.0;
    double gamma = 0.0;
    double min_child_hessian = 1e-3;
    // histogram kind only
    double goss_a = 0.2;      // top-gradient fraction, [0, 1)th degenerate a=1 keeps all
    double goss_b = 0.1;      // random remainder fraction, (0, 1]
    int histogram_bins = 255;
    std::size_t efb_conflict_max = 0;
};

struct TreeNode {
    bool is_leaf = true;
    int feature = -1;        // bundled column index for the histogram kind
    double threshold = 0.0;  // go left when x <= threshold
    int left = -1;
    int right = -1;
    double weight = 0.0;     // leaf value (before learning-rate scaling)
};

struct Tree {
    std::vector<TreeNode> nodes;

    double eval(std::span<const double> row) const;
    int depth() const;
};

/// One bundle of mutually (near-)exclusive sparse columns, integer-coded
/// into a single synthetic column. Single-member bundles pass values
/// through unchanged.
struct FeatureBundle {
    std::vector<std::size_t> features;          // original column indices
    std::vector<std::vector<double>> vocab;     // sorted distinct nonzero values
    std::vector<double> base;                   // band start per member
    bool passthrough = false;

    double encode(std::span<const double> row) const;
};

struct GbdtModel {
    LearnerKind kind = LearnerKind::ExactSecondOrder;
    std::size_t class_count = 0;
    std::vector<double> base_score;  // log class priors
    Hyperparams hp;
    std::vector<std::string> feature_names;
    std::vector<std::string> label_names;
    std::vector<FeatureBundle> bundles;  // histogram kind only
    std::vector<Tree> trees;             // round-major, one per class per round
    std::vector<std::string> warnings;

    Matrix raw_scores(const Matrix& rows) const;
    Matrix predict_proba(const Matrix& rows) const;
    std::vector<int> predict_labels(const Matrix& rows) const;
    /// Internal node comparisons + leaf visits for one pass over `rows`;
    /// deterministic efficiency proxy used by the latency objective.
    std::size_t count_node_visits(const Matrix& rows) const;
};

/// Softmax cross-entropy first/second-order gradients: p - onehot, p(1-p).
void softmax_gradients(const std::vector<int>& labels, const Matrix& raw_scores,
                       Matrix& g, Matrix& h);

/// Closed-form minimizer -G/(H + lambda) of the per-leaf quadratic.
double leaf_weight(double g_sum, double h_sum, double lambda, bool* warned = nullptr);

struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
};

/// Exhaustive scan over sorted unique values per feature; empty when no
/// split has positive gain with both children meeting min_child_hessian.
std::optional<Split> best_split_exact(const Matrix& rows, const std::vector<double>& g,
                                      const std::vector<double>& h, const Hyperparams& hp);

/// Same contract with candidate thresholds restricted to the per-feature
/// bin upper bounds (the last bound of each feature is not a candidate).
std::optional<Split> best_split_histogram(const Matrix& rows, const std::vector<double>& g,
                                          const std::vector<double>& h,
                                          const std::vector<std::vector<double>>& bin_upper_bounds,
                                          const Hyperparams& hp);

struct GossSample {
    std::vector<std::size_t> indices;
    std::vector<double> weights;
};

/// Keeps the ceil(a*n) rows with the largest gradient magnitude at weight 1
/// and a seeded ceil(b*n) sample of the rest at weight (1-a)/b.
GossSample goss_sample(const std::vector<double>& g_norms, double a, double b,
                       std::uint64_t seed);

/// Greedy bundling in descending nonzero-count order; a feature joins a
/// bundle iff the added pairwise co-nonzero conflicts keep the bundle total
/// <= conflict_max. Zero is the exclusive value.
std::vector<FeatureBundle> efb_bundle(const Matrix& features, std::size_t conflict_max);

Matrix efb_encode(const std::vector<FeatureBundle>& bundles, const Matrix& rows);
/// Inverse of efb_encode for values seen at bundling time.
Matrix efb_decode(const std::vector<FeatureBundle>& bundles, const Matrix& encoded,
                  std::size_t original_cols);

struct TrainLog {
    std::vector<double> round_train_loss;  // [0] = before boosting, then per round
};

GbdtModel train(const DataTable& table, const Hyperparams& hp, LearnerKind kind,
                std::uint64_t seed, TrainLog* log = nullptr);

std::string serialize(const GbdtModel& model);
GbdtModel deserialize(const std::string& bytes);

}  // namespace mooids
