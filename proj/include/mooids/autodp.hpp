#pragma once

#include <set>
#include <string>
#include <vector>

#include "mooids/dataset.hpp"

namespace mooids {

enum class NormMethod { ZScore, MinMax, Constant };

const char* norm_method_name(NormMethod m);
NormMethod norm_method_from_name(const std::string& name);

struct FeatureNorm {
    NormMethod method = NormMethod::MinMax;
    double mu = 0.0;
    double sigma = 0.0;  // population standard deviation
    double min = 0.0;
    double max = 0.0;
    double sw_p_value = 0.0;
};

struct NormalizationPlan {
    std::vector<std::string> feature_names;
    std::vector<FeatureNorm> per_feature;
};

struct BalancePlan {
    double threshold = 0.0;  // mean class count / 2
    std::set<int> minority_classes;
    std::size_t target_count = 0;  // floor(threshold), shared by all minorities
};

struct ShapiroResult {
    double w = 0.0;
    double p_value = 0.0;
    bool degenerate = false;  // all values identical
};

/// Royston's approximation for 3 <= n <= 5000. Larger inputs are tested on a
/// seeded uniform subsample of 5000.
ShapiroResult shapiro_wilk(const std::vector<double>& values, std::uint64_t seed);

/// Per feature: p > alpha selects z-score, otherwise min-max; constant
/// features get the constant method. Statistics come from this table only.
NormalizationPlan fit_normalization(const DataTable& train, std::uint64_t seed,
                                    double alpha = 0.05);

/// Applies the fitted plan; min-max outputs are not clamped, so unseen data
/// may fall outside [0, 1].
DataTable apply_normalization(const NormalizationPlan& plan, const DataTable& table);

BalancePlan compute_balance_plan(const ClassDistribution& dist);

struct SyntheticRows {
    Matrix rows;
    // provenance for verification: base row, partner row (indices into the
    // generator's input matrix) and interpolation factor per synthetic row
    std::vector<std::size_t> base;
    std::vector<std::size_t> partner;
    std::vector<double> t;
    std::vector<std::string> warnings;
};

/// Interpolates n_new rows between seeded-random minority rows and one of
/// their k nearest minority neighbors. Single-row classes fall back to
/// duplication with a warning.
SyntheticRows smote_generate(const Matrix& minority_rows, int k, std::size_t n_new,
                             std::uint64_t seed);

struct AdasynRows {
    Matrix rows;
    std::vector<double> difficulty;          // r_i per minority row
    std::vector<std::size_t> allocation;     // n_i per minority row
    std::vector<std::size_t> base;
    std::vector<std::size_t> partner;
    std::vector<double> t;
    std::vector<std::string> warnings;
};

/// Allocates n_new rows over minority rows by neighborhood difficulty
/// (share of non-minority rows among the k nearest over the whole table),
/// largest-remainder apportionment, then interpolates within the minority
/// class. Pure neighborhoods fall back to the SMOTE allocation.
AdasynRows adasyn_generate(const Matrix& minority_rows, const DataTable& full_table,
                           int minority_class, int k, std::size_t n_new,
                           std::uint64_t seed);

struct BalanceResult {
    DataTable table;
    std::vector<std::string> warnings;
};

/// Brings every minority class up to the plan target: a smote_ratio share of
/// the deficit from SMOTE first (rounded up), the remainder from ADASYN run
/// on the SMOTE-augmented table.
BalanceResult balance(const DataTable& train, const BalancePlan& plan, int k,
                      std::uint64_t seed, double smote_ratio = 0.5);

}  // namespace mooids
