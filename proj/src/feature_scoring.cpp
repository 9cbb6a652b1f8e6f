#include "mooids/feature_scoring.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

namespace mooids {

double entropy(const std::vector<int>& labels) {
    if (labels.empty()) throw DataError("entropy: empty label vector");
    std::unordered_map<int, std::size_t> counts;
    for (int y : labels) ++counts[y];
    double n = double(labels.size());
    double h = 0.0;
    for (const auto& [cls, count] : counts) {
        double p = double(count) / n;
        h -= p * std::log2(p);
    }
    return h;
}

std::vector<int> discretize(const std::vector<double>& feature, int bins) {
    if (bins < 2) throw ConfigError("discretize: bins must be >= 2");
    std::size_t n = feature.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (feature[a] != feature[b]) return feature[a] < feature[b];
        return a < b;
    });

    // bin of a value = bin of its first sorted occurrence, then remap to
    // contiguous ids
    std::map<double, int> value_bin;
    for (std::size_t rank = 0; rank < n; ++rank) {
        double v = feature[order[rank]];
        if (!value_bin.count(v)) {
            value_bin[v] = int(rank * std::size_t(bins) / n);
        }
    }
    std::map<int, int> remap;
    for (const auto& [v, b] : value_bin) {
        if (!remap.count(b)) {
            int id = int(remap.size());
            remap[b] = id;
        }
    }
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = remap[value_bin[feature[i]]];
    return out;
}

FeatureImportance information_gain(const DataTable& table, int bins) {
    if (table.n_classes() < 2) throw DataError("information_gain: need at least 2 classes");
    const std::vector<int>& y = table.labels();
    double h_y = entropy(y);
    double n = double(table.n_rows());

    FeatureImportance imp;
    imp.raw_ig.resize(table.n_features());
    parallel_for(0, table.n_features(), [&](std::size_t f) {
        std::vector<int> binned = discretize(table.features().column(f), bins);
        std::size_t n_bins = std::size_t(*std::max_element(binned.begin(), binned.end())) + 1;
        std::vector<std::unordered_map<int, std::size_t>> counts(n_bins);
        std::vector<std::size_t> bin_totals(n_bins, 0);
        for (std::size_t r = 0; r < y.size(); ++r) {
            ++counts[std::size_t(binned[r])][y[r]];
            ++bin_totals[std::size_t(binned[r])];
        }
        double h_cond = 0.0;
        for (std::size_t b = 0; b < n_bins; ++b) {
            double nb = double(bin_totals[b]);
            if (nb == 0.0) continue;
            double h_b = 0.0;
            for (const auto& [cls, count] : counts[b]) {
                double p = double(count) / nb;
                h_b -= p * std::log2(p);
            }
            h_cond += (nb / n) * h_b;
        }
        imp.raw_ig[f] = std::max(0.0, h_y - h_cond);
    });

    double sum = 0.0;
    for (double v : imp.raw_ig) sum += v;
    imp.normalized.resize(imp.raw_ig.size());
    if (sum <= 0.0) {
        double u = 1.0 / double(imp.raw_ig.size());
        std::fill(imp.normalized.begin(), imp.normalized.end(), u);
    } else {
        for (std::size_t f = 0; f < imp.raw_ig.size(); ++f) {
            imp.normalized[f] = imp.raw_ig[f] / sum;
        }
    }
    return imp;
}

}  // namespace mooids
