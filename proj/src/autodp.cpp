#include "mooids/autodp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace mooids {

const char* norm_method_name(NormMethod m) {
    switch (m) {
        case NormMethod::ZScore: return "z_score";
        case NormMethod::MinMax: return "min_max";
        case NormMethod::Constant: return "constant";
    }
    return "unknown";
}

NormMethod norm_method_from_name(const std::string& name) {
    if (name == "z_score") return NormMethod::ZScore;
    if (name == "min_max") return NormMethod::MinMax;
    if (name == "constant") return NormMethod::Constant;
    throw DataError("unknown normalization method: " + name);
}

NormalizationPlan fit_normalization(const DataTable& train, std::uint64_t seed,
                                    double alpha) {
    if (train.n_rows() == 0) throw DataError("fit_normalization: empty table");
    NormalizationPlan plan;
    plan.feature_names = train.feature_names();
    plan.per_feature.resize(train.n_features());
    for (std::size_t f = 0; f < train.n_features(); ++f) {
        std::vector<double> col = train.features().column(f);
        FeatureNorm fn;
        fn.min = *std::min_element(col.begin(), col.end());
        fn.max = *std::max_element(col.begin(), col.end());
        double mean = 0.0;
        for (double v : col) mean += v;
        mean /= double(col.size());
        double var = 0.0;
        for (double v : col) var += (v - mean) * (v - mean);
        var /= double(col.size());
        fn.mu = mean;
        fn.sigma = std::sqrt(var);
        if (fn.min == fn.max) {
            fn.method = NormMethod::Constant;
            fn.sw_p_value = 0.0;
        } else {
            ShapiroResult sw = shapiro_wilk(col, derive_seed(seed, f));
            fn.sw_p_value = sw.p_value;
            fn.method = (sw.p_value > alpha && fn.sigma > 0.0) ? NormMethod::ZScore
                                                               : NormMethod::MinMax;
        }
        plan.per_feature[f] = fn;
    }
    return plan;
}

DataTable apply_normalization(const NormalizationPlan& plan, const DataTable& table) {
    if (plan.feature_names != table.feature_names()) {
        throw DataError("normalization plan does not match table schema");
    }
    Matrix out(table.n_rows(), table.n_features());
    for (std::size_t f = 0; f < table.n_features(); ++f) {
        const FeatureNorm& fn = plan.per_feature[f];
        for (std::size_t r = 0; r < table.n_rows(); ++r) {
            double v = table.features().at(r, f);
            switch (fn.method) {
                case NormMethod::ZScore: out.at(r, f) = (v - fn.mu) / fn.sigma; break;
                case NormMethod::MinMax: out.at(r, f) = (v - fn.min) / (fn.max - fn.min); break;
                case NormMethod::Constant: out.at(r, f) = 0.0; break;
            }
        }
    }
    return table.with_features(std::move(out), plan.feature_names);
}

BalancePlan compute_balance_plan(const ClassDistribution& dist) {
    if (dist.counts.size() < 2) throw DataError("balance plan needs at least 2 classes");
    BalancePlan plan;
    double mean = double(dist.total) / double(dist.counts.size());
    plan.threshold = mean / 2.0;
    plan.target_count = std::size_t(std::floor(plan.threshold));
    for (const auto& [cls, count] : dist.counts) {
        if (double(count) < plan.threshold) plan.minority_classes.insert(cls);
    }
    return plan;
}

namespace {

// k nearest candidates per query (euclidean), self excluded by row index.
// Candidates are scanned outward from the query's position in first-feature
// order, pruning once the projected gap exceeds the current kth distance.
std::vector<std::vector<std::size_t>> knn_indices(const Matrix& m,
                                                  const std::vector<std::size_t>& queries,
                                                  const std::vector<std::size_t>& candidates,
                                                  int k) {
    std::vector<std::size_t> order = candidates;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        double va = m.at(a, 0), vb = m.at(b, 0);
        if (va != vb) return va < vb;
        return a < b;
    });
    std::size_t cols = m.cols();
    auto dist2 = [&](std::size_t a, std::size_t b) {
        double s = 0.0;
        auto ra = m.row(a), rb = m.row(b);
        for (std::size_t c = 0; c < cols; ++c) {
            double d = ra[c] - rb[c];
            s += d * d;
        }
        return s;
    };

    std::vector<std::vector<std::size_t>> result(queries.size());
    parallel_for(0, queries.size(), [&](std::size_t qi) {
        std::size_t q = queries[qi];
        double q0 = m.at(q, 0);
        auto it = std::lower_bound(order.begin(), order.end(), q0,
                                   [&](std::size_t row, double v) { return m.at(row, 0) < v; });
        std::ptrdiff_t left = (it - order.begin()) - 1;
        std::ptrdiff_t right = it - order.begin();
        // max-heap of (distance^2, candidate)
        std::priority_queue<std::pair<double, std::size_t>> best;
        auto consider = [&](std::size_t cand) {
            if (cand == q) return;
            double d2 = dist2(q, cand);
            if (best.size() < std::size_t(k)) {
                best.emplace(d2, cand);
            } else if (d2 < best.top().first) {
                best.pop();
                best.emplace(d2, cand);
            }
        };
        while (left >= 0 || right < std::ptrdiff_t(order.size())) {
            double gl = left >= 0 ? q0 - m.at(order[std::size_t(left)], 0)
                                  : std::numeric_limits<double>::infinity();
            double gr = right < std::ptrdiff_t(order.size())
                            ? m.at(order[std::size_t(right)], 0) - q0
                            : std::numeric_limits<double>::infinity();
            bool take_left = gl <= gr;
            double gap = take_left ? gl : gr;
            if (best.size() == std::size_t(k) && gap * gap > best.top().first) {
                if (take_left) { left = -1; continue; }
                right = std::ptrdiff_t(order.size());
                continue;
            }
            if (take_left) consider(order[std::size_t(left--)]);
            else consider(order[std::size_t(right++)]);
        }
        std::vector<std::size_t> nn(best.size());
        for (std::size_t i = best.size(); i-- > 0;) {
            nn[i] = best.top().second;
            best.pop();
        }
        result[qi] = std::move(nn);
    });
    return result;
}

Matrix duplicate_rows(const Matrix& src, std::size_t row, std::size_t n_new) {
    Matrix out(n_new, src.cols());
    for (std::size_t i = 0; i < n_new; ++i) {
        for (std::size_t c = 0; c < src.cols(); ++c) out.at(i, c) = src.at(row, c);
    }
    return out;
}

std::vector<std::size_t> largest_remainder(const std::vector<double>& weights,
                                           std::size_t n_new) {
    std::size_t n = weights.size();
    std::vector<std::size_t> alloc(n, 0);
    std::vector<std::pair<double, std::size_t>> frac(n);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double quota = double(n_new) * weights[i];
        alloc[i] = std::size_t(std::floor(quota));
        assigned += alloc[i];
        frac[i] = {quota - std::floor(quota), i};
    }
    std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t i = 0; assigned < n_new; ++i, ++assigned) {
        alloc[frac[i % n].second] += 1;
    }
    return alloc;
}

}  // namespace

SyntheticRows smote_generate(const Matrix& minority_rows, int k, std::size_t n_new,
                             std::uint64_t seed) {
    SyntheticRows out;
    std::size_t m = minority_rows.rows();
    if (m == 0) throw DataError("smote_generate: no minority rows");
    Rng rng(seed);
    if (m == 1) {
        out.warnings.push_back("smote: class of size 1, falling back to duplication");
        out.rows = duplicate_rows(minority_rows, 0, n_new);
        out.base.assign(n_new, 0);
        out.partner.assign(n_new, 0);
        out.t.assign(n_new, 0.0);
        return out;
    }
    int k_eff = std::min<std::size_t>(std::size_t(k), m - 1);
    std::vector<std::size_t> all(m);
    for (std::size_t i = 0; i < m; ++i) all[i] = i;
    auto knn = knn_indices(minority_rows, all, all, k_eff);

    out.rows = Matrix(n_new, minority_rows.cols());
    out.base.resize(n_new);
    out.partner.resize(n_new);
    out.t.resize(n_new);
    for (std::size_t s = 0; s < n_new; ++s) {
        std::size_t base = rng.index(m);
        std::size_t nb = knn[base][rng.index(knn[base].size())];
        double t = rng.uniform01();
        for (std::size_t c = 0; c < minority_rows.cols(); ++c) {
            double x = minority_rows.at(base, c);
            out.rows.at(s, c) = x + t * (minority_rows.at(nb, c) - x);
        }
        out.base[s] = base;
        out.partner[s] = nb;
        out.t[s] = t;
    }
    return out;
}

AdasynRows adasyn_generate(const Matrix& minority_rows, const DataTable& full_table,
                           int minority_class, int k, std::size_t n_new,
                           std::uint64_t seed) {
    AdasynRows out;
    std::size_t m = minority_rows.rows();
    if (m == 0) throw DataError("adasyn_generate: no minority rows");
    Rng rng(seed);
    if (m == 1) {
        out.warnings.push_back("adasyn: class of size 1, falling back to duplication");
        out.rows = duplicate_rows(minority_rows, 0, n_new);
        out.difficulty.assign(1, 0.0);
        out.allocation.assign(1, n_new);
        out.base.assign(n_new, 0);
        out.partner.assign(n_new, 0);
        out.t.assign(n_new, 0.0);
        return out;
    }

    // locate this class's rows inside the full table; difficulty is judged
    // against all rows, interpolation partners stay within the class
    const std::vector<int>& labels = full_table.labels();
    std::vector<std::size_t> class_rows;
    std::vector<std::size_t> all_rows(full_table.n_rows());
    for (std::size_t r = 0; r < full_table.n_rows(); ++r) {
        all_rows[r] = r;
        if (labels[r] == minority_class) class_rows.push_back(r);
    }
    if (class_rows.size() != m) {
        throw DataError("adasyn_generate: minority_rows do not match full table class rows");
    }

    int k_eff = std::min<std::size_t>(std::size_t(k), full_table.n_rows() - 1);
    auto neighborhood = knn_indices(full_table.features(), class_rows, all_rows, k_eff);
    out.difficulty.resize(m);
    double r_sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t foreign = 0;
        for (std::size_t nb : neighborhood[i]) {
            if (labels[nb] != minority_class) ++foreign;
        }
        out.difficulty[i] = double(foreign) / double(neighborhood[i].size());
        r_sum += out.difficulty[i];
    }

    std::vector<double> weights(m);
    if (r_sum <= 0.0) {
        out.warnings.push_back("adasyn: all neighborhoods pure, falling back to uniform allocation");
        for (auto& w : weights) w = 1.0 / double(m);
    } else {
        for (std::size_t i = 0; i < m; ++i) weights[i] = out.difficulty[i] / r_sum;
    }
    out.allocation = largest_remainder(weights, n_new);

    int k_part = std::min<std::size_t>(std::size_t(k), m - 1);
    std::vector<std::size_t> minority_idx(m);
    for (std::size_t i = 0; i < m; ++i) minority_idx[i] = i;
    auto partners = knn_indices(minority_rows, minority_idx, minority_idx, k_part);

    out.rows = Matrix(n_new, minority_rows.cols());
    out.base.resize(n_new);
    out.partner.resize(n_new);
    out.t.resize(n_new);
    std::size_t s = 0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < out.allocation[i]; ++j, ++s) {
            std::size_t nb = partners[i][rng.index(partners[i].size())];
            double t = rng.uniform01();
            for (std::size_t c = 0; c < minority_rows.cols(); ++c) {
                double x = minority_rows.at(i, c);
                out.rows.at(s, c) = x + t * (minority_rows.at(nb, c) - x);
            }
            out.base[s] = i;
            out.partner[s] = nb;
            out.t[s] = t;
        }
    }
    return out;
}

BalanceResult balance(const DataTable& train, const BalancePlan& plan, int k,
                      std::uint64_t seed, double smote_ratio) {
    if (smote_ratio < 0.0 || smote_ratio > 1.0) {
        throw ConfigError("smote ratio must be in [0, 1]");
    }
    BalanceResult result;
    ClassDistribution dist = class_distribution(train);

    auto class_matrix = [](const DataTable& t, int cls) {
        const auto& y = t.labels();
        std::vector<std::size_t> rows;
        for (std::size_t r = 0; r < y.size(); ++r) {
            if (y[r] == cls) rows.push_back(r);
        }
        Matrix m(rows.size(), t.n_features());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t c = 0; c < t.n_features(); ++c) {
                m.at(i, c) = t.features().at(rows[i], c);
            }
        }
        return m;
    };

    struct Deficit {
        int cls;
        std::size_t n_smote;
        std::size_t n_adasyn;
    };
    std::vector<Deficit> deficits;
    for (int cls : plan.minority_classes) {
        std::size_t count = dist.counts.at(cls);
        if (count >= plan.target_count) continue;
        std::size_t d = plan.target_count - count;
        std::size_t n_smote = std::size_t(std::ceil(double(d) * smote_ratio));
        deficits.push_back({cls, n_smote, d - n_smote});
    }

    // SMOTE pass for all minority classes, then ADASYN on the augmented table
    DataTable current = train;
    for (const auto& d : deficits) {
        if (d.n_smote == 0) continue;
        auto synth = smote_generate(class_matrix(train, d.cls), k, d.n_smote,
                                    derive_seed(seed, std::uint64_t(d.cls)));
        for (auto& w : synth.warnings) result.warnings.push_back(w);
        current = current.append_rows(synth.rows, d.cls);
    }
    DataTable after_smote = current;
    for (const auto& d : deficits) {
        if (d.n_adasyn == 0) continue;
        auto synth = adasyn_generate(class_matrix(after_smote, d.cls), after_smote, d.cls, k,
                                     d.n_adasyn,
                                     derive_seed(derive_seed(seed, std::uint64_t(d.cls)), 1));
        for (auto& w : synth.warnings) result.warnings.push_back(w);
        current = current.append_rows(synth.rows, d.cls);
    }
    result.table = std::move(current);
    return result;
}

}  // namespace mooids
