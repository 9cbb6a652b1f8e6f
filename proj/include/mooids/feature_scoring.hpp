#pragma once

#include <vector>

#include "mooids/dataset.hpp"

namespace mooids {

struct FeatureImportance {
    std::vector<double> raw_ig;      // bits, >= 0
    std::vector<double> normalized;  // sums to 1 (uniform if all raw are 0)
};

/// Shannon entropy of the label distribution, in bits.
double entropy(const std::vector<int>& labels);

/// Equal-frequency binning into at most `bins` bins. Tied values share the
/// bin of their first occurrence in sorted order, so heavy ties collapse
/// bins. Returned ids are contiguous from 0.
std::vector<int> discretize(const std::vector<double>& feature, int bins);

/// Information gain of each feature w.r.t. the labels, conditioning on the
/// discretized feature.
FeatureImportance information_gain(const DataTable& table, int bins = 10);

}  // namespace mooids
