#include "mooids/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace mooids {

DataTable::DataTable(std::vector<std::string> feature_names, Matrix features,
                     std::vector<int> labels, std::vector<std::string> label_names)
    : feature_names_(std::move(feature_names)),
      features_(std::move(features)),
      labels_(std::move(labels)),
      label_names_(std::move(label_names)) {
    if (features_.rows() != labels_.size()) {
        throw DataError("feature row count does not match label count");
    }
    if (features_.cols() != feature_names_.size()) {
        throw DataError("feature column count does not match feature names");
    }
    std::vector<bool> seen(label_names_.size(), false);
    for (int y : labels_) {
        if (y < 0 || std::size_t(y) >= label_names_.size()) {
            throw DataError("label id out of range");
        }
        seen[std::size_t(y)] = true;
    }
    for (std::size_t c = 0; c < seen.size(); ++c) {
        if (!seen[c] && !labels_.empty()) {
            throw DataError("label id " + std::to_string(c) + " has no rows");
        }
    }
}

const std::vector<int>& DataTable::labels() const {
    label_reads_->fetch_add(1, std::memory_order_relaxed);
    return labels_;
}

int DataTable::label(std::size_t row) const {
    label_reads_->fetch_add(1, std::memory_order_relaxed);
    return labels_[row];
}

DataTable DataTable::with_features(Matrix features, std::vector<std::string> names) const {
    if (features.rows() != labels_.size()) {
        throw DataError("with_features: row count changed");
    }
    DataTable out;
    out.feature_names_ = std::move(names);
    out.features_ = std::move(features);
    out.labels_ = labels_;
    out.label_names_ = label_names_;
    out.label_reads_ = label_reads_;
    return out;
}

DataTable DataTable::subset_rows(const std::vector<std::size_t>& rows) const {
    Matrix m(rows.size(), features_.cols());
    std::vector<int> y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::size_t r = rows[i];
        for (std::size_t c = 0; c < features_.cols(); ++c) m.at(i, c) = features_.at(r, c);
        y[i] = labels_[r];
    }
    // keep the full label vocabulary so ids stay stable across subsets
    DataTable out;
    out.feature_names_ = feature_names_;
    out.features_ = std::move(m);
    out.labels_ = std::move(y);
    out.label_names_ = label_names_;
    return out;
}

DataTable DataTable::append_rows(const Matrix& rows, int label) const {
    if (rows.cols() != features_.cols()) {
        throw DataError("append_rows: column count mismatch");
    }
    Matrix m(features_.rows() + rows.rows(), features_.cols());
    std::copy(features_.data().begin(), features_.data().end(), m.data().begin());
    std::copy(rows.data().begin(), rows.data().end(),
              m.data().begin() + std::ptrdiff_t(features_.data().size()));
    std::vector<int> y = labels_;
    y.insert(y.end(), rows.rows(), label);
    DataTable out;
    out.feature_names_ = feature_names_;
    out.features_ = std::move(m);
    out.labels_ = std::move(y);
    out.label_names_ = label_names_;
    return out;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

// Unparseable cells become NaN so the median repair covers them.
double parse_cell(const std::string& cell) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) return std::numeric_limits<double>::quiet_NaN();
    while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
    if (*end != '\0') return std::numeric_limits<double>::quiet_NaN();
    return v;
}

double median_of(std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::size_t round_half_up(double x) {
    return std::size_t(std::floor(x + 0.5));
}

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        std::size_t j = rng.index(i);
        std::swap(idx[i - 1], idx[j]);
    }
}

std::vector<std::vector<std::size_t>> rows_by_class(const DataTable& table) {
    std::vector<std::vector<std::size_t>> out(table.n_classes());
    const auto& y = table.labels();
    for (std::size_t r = 0; r < y.size(); ++r) out[std::size_t(y[r])].push_back(r);
    return out;
}

// Per-class round-half-up counts trued up to the exact global target by
// +/-1 steps on the most mis-allocated classes, within [min_c, max_c].
std::vector<std::size_t> apportion_counts(const std::vector<std::size_t>& class_sizes,
                                          double fraction,
                                          std::size_t min_per_class,
                                          bool cap_below_size) {
    std::size_t n_classes = class_sizes.size();
    std::vector<double> quota(n_classes);
    std::vector<std::size_t> take(n_classes);
    std::size_t total = 0;
    for (std::size_t c = 0; c < n_classes; ++c) total += class_sizes[c];
    for (std::size_t c = 0; c < n_classes; ++c) {
        quota[c] = fraction * double(class_sizes[c]);
        std::size_t hi = cap_below_size ? class_sizes[c] - 1 : class_sizes[c];
        take[c] = std::clamp(round_half_up(quota[c]), min_per_class, std::max(min_per_class, hi));
    }
    std::size_t target = round_half_up(fraction * double(total));
    auto sum_take = [&] {
        std::size_t s = 0;
        for (auto t : take) s += t;
        return s;
    };
    std::size_t guard = 4 * n_classes + 4;
    while (sum_take() != target && guard-- > 0) {
        bool need_more = sum_take() < target;
        std::ptrdiff_t best = -1;
        double best_resid = 0.0;
        for (std::size_t c = 0; c < n_classes; ++c) {
            double resid = quota[c] - double(take[c]);
            std::size_t hi = cap_below_size ? class_sizes[c] - 1 : class_sizes[c];
            if (need_more) {
                if (take[c] >= hi) continue;
                if (best < 0 || resid > best_resid) { best = std::ptrdiff_t(c); best_resid = resid; }
            } else {
                if (take[c] <= min_per_class) continue;
                if (best < 0 || resid < best_resid) { best = std::ptrdiff_t(c); best_resid = resid; }
            }
        }
        if (best < 0) break;  // clamped everywhere; accept the closest total
        take[std::size_t(best)] += need_more ? 1 : std::size_t(-1);
    }
    return take;
}

}  // namespace

DataTable load_csv(const std::string& path, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError("empty file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> header = split_csv_line(line);
    for (auto& h : header) h = trim(h);

    std::ptrdiff_t label_idx = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == label_column) { label_idx = std::ptrdiff_t(i); break; }
    }
    if (label_idx < 0) throw DataError("label column not found in header: " + label_column);

    std::vector<std::string> feature_names;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (std::ptrdiff_t(i) != label_idx) feature_names.push_back(header[i]);
    }

    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::vector<std::string> label_names;
    std::unordered_map<std::string, int> label_ids;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw DataError("ragged row at line " + std::to_string(line_no) + " in " + path);
        }
        std::vector<double> row;
        row.reserve(feature_names.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (std::ptrdiff_t(i) == label_idx) continue;
            row.push_back(parse_cell(cells[i]));
        }
        std::string lab = trim(cells[std::size_t(label_idx)]);
        auto it = label_ids.find(lab);
        if (it == label_ids.end()) {
            it = label_ids.emplace(lab, int(label_names.size())).first;
            label_names.push_back(lab);
        }
        labels.push_back(it->second);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("no data rows in " + path);

    std::size_t n = rows.size(), f = feature_names.size();
    Matrix m(n, f);
    for (std::size_t c = 0; c < f; ++c) {
        double fin_min = std::numeric_limits<double>::infinity();
        double fin_max = -std::numeric_limits<double>::infinity();
        std::vector<double> finite;
        finite.reserve(n);
        for (std::size_t r = 0; r < n; ++r) {
            double v = rows[r][c];
            if (std::isfinite(v)) {
                finite.push_back(v);
                fin_min = std::min(fin_min, v);
                fin_max = std::max(fin_max, v);
            }
        }
        if (finite.empty()) {
            throw DataError("column '" + feature_names[c] + "' has no finite values");
        }
        double med = median_of(finite);
        for (std::size_t r = 0; r < n; ++r) {
            double v = rows[r][c];
            if (std::isnan(v)) v = med;
            else if (std::isinf(v)) v = v > 0 ? fin_max : fin_min;
            m.at(r, c) = v;
        }
    }
    return DataTable(std::move(feature_names), std::move(m), std::move(labels),
                     std::move(label_names));
}

ClassDistribution class_distribution(const DataTable& table) {
    if (table.n_rows() == 0) throw DataError("class_distribution: empty table");
    ClassDistribution d;
    for (int y : table.labels()) ++d.counts[y];
    d.total = table.n_rows();
    return d;
}

DataTable stratified_sample(const DataTable& table, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0) || fraction > 1.0) {
        throw ConfigError("sample fraction must be in (0, 1]");
    }
    auto by_class = rows_by_class(table);
    std::vector<std::size_t> sizes(by_class.size());
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        if (by_class[c].empty()) throw DataError("class without samples");
        sizes[c] = by_class[c].size();
    }
    auto take = apportion_counts(sizes, fraction, 1, /*cap_below_size=*/false);

    std::vector<std::size_t> picked;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        Rng rng(derive_seed(seed, c));
        auto idx = by_class[c];
        shuffle_indices(idx, rng);
        picked.insert(picked.end(), idx.begin(), idx.begin() + std::ptrdiff_t(take[c]));
    }
    std::sort(picked.begin(), picked.end());
    return table.subset_rows(picked);
}

std::pair<DataTable, DataTable> train_test_split(const DataTable& table,
                                                 double test_fraction,
                                                 std::uint64_t seed) {
    if (!(test_fraction > 0.0) || !(test_fraction < 1.0)) {
        throw ConfigError("test fraction must be in (0, 1)");
    }
    auto by_class = rows_by_class(table);
    std::vector<std::size_t> sizes(by_class.size());
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        if (by_class[c].size() < 2) {
            throw DataError("class '" + table.label_names()[c] +
                            "' has fewer than 2 samples; cannot split");
        }
        sizes[c] = by_class[c].size();
    }
    auto test_take = apportion_counts(sizes, test_fraction, 1, /*cap_below_size=*/true);

    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        Rng rng(derive_seed(seed, c));
        auto idx = by_class[c];
        shuffle_indices(idx, rng);
        test_rows.insert(test_rows.end(), idx.begin(), idx.begin() + std::ptrdiff_t(test_take[c]));
        train_rows.insert(train_rows.end(), idx.begin() + std::ptrdiff_t(test_take[c]), idx.end());
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(test_rows.begin(), test_rows.end());
    return {table.subset_rows(train_rows), table.subset_rows(test_rows)};
}

FoldAssignment kfold_indices(const DataTable& table, int k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("k must be >= 2");
    FoldAssignment fa;
    fa.k = k;
    fa.fold_of_row.assign(table.n_rows(), -1);
    auto by_class = rows_by_class(table);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        Rng rng(derive_seed(seed, c));
        auto idx = by_class[c];
        if (idx.size() < std::size_t(k)) {
            fa.warnings.push_back("class '" + table.label_names()[c] + "' has " +
                                  std::to_string(idx.size()) + " rows, fewer than k=" +
                                  std::to_string(k) + "; assigned round-robin");
        }
        shuffle_indices(idx, rng);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            fa.fold_of_row[idx[i]] = int(i % std::size_t(k));
        }
    }
    return fa;
}

}  // namespace mooids
