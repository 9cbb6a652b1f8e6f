#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mooids/core.hpp"

namespace mooids {

/// Immutable numeric feature matrix with an encoded label column.
///
/// Label reads through the public accessors are counted so that tests can
/// assert that hold-out labels are never consulted before evaluation.
/// Tables derived via with_features() share the counter of their source;
/// row-level operations (splits, sampling) start a fresh one.
class DataTable {
public:
    DataTable() = default;
    DataTable(std::vector<std::string> feature_names, Matrix features,
              std::vector<int> labels, std::vector<std::string> label_names);

    std::size_t n_rows() const { return features_.rows(); }
    std::size_t n_features() const { return features_.cols(); }
    std::size_t n_classes() const { return label_names_.size(); }

    const Matrix& features() const { return features_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }
    const std::vector<std::string>& label_names() const { return label_names_; }

    /// Counted accessors (see class comment).
    const std::vector<int>& labels() const;
    int label(std::size_t row) const;
    std::uint64_t label_read_count() const { return label_reads_->load(); }

    /// Same rows and labels, new feature matrix (normalization, masking).
    /// Shares the label-read counter with *this.
    DataTable with_features(Matrix features, std::vector<std::string> names) const;

    /// Row subset in the given order; fresh label-read counter.
    DataTable subset_rows(const std::vector<std::size_t>& rows) const;

    /// Appends rows of a single class (synthetic oversampling output).
    DataTable append_rows(const Matrix& rows, int label) const;

private:
    std::vector<std::string> feature_names_;
    Matrix features_;
    std::vector<int> labels_;
    std::vector<std::string> label_names_;
    std::shared_ptr<std::atomic<std::uint64_t>> label_reads_ =
        std::make_shared<std::atomic<std::uint64_t>>(0);
};

struct ClassDistribution {
    std::map<int, std::size_t> counts;
    std::size_t total = 0;
};

struct FoldAssignment {
    std::vector<int> fold_of_row;
    int k = 0;
    std::vector<std::string> warnings;  // classes smaller than k
};

/// Loads a comma-delimited CSV with a header row. All non-label columns are
/// parsed as reals; labels are factorized in first-appearance order.
/// Non-finite repair: +/-inf become the column's finite max/min, NaN (and
/// unparseable cells) become the column median of finite values.
DataTable load_csv(const std::string& path, const std::string& label_column);

ClassDistribution class_distribution(const DataTable& table);

/// Class-stratified subsample: per-class count = round-half-up of
/// fraction * class count (at least 1), then the totals are trued up to
/// round(fraction * n) by +/-1 adjustments on the most mis-allocated classes.
DataTable stratified_sample(const DataTable& table, double fraction, std::uint64_t seed);

/// Stratified hold-out split; per-class test size is round(test_fraction *
/// class size) clamped to [1, size-1]. Classes of a single row are an error.
std::pair<DataTable, DataTable> train_test_split(const DataTable& table,
                                                 double test_fraction,
                                                 std::uint64_t seed);

/// Stratified K folds; classes smaller than k are dealt round-robin and
/// recorded as warnings.
FoldAssignment kfold_indices(const DataTable& table, int k, std::uint64_t seed);

}  // namespace mooids
