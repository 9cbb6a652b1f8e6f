#pragma once

#include "mooids/feature_scoring.hpp"
#include "mooids/mopso.hpp"

namespace mooids {

struct FeatureMask {
    std::vector<bool> bits;

    std::size_t selected_count() const {
        std::size_t n = 0;
        for (bool b : bits) n += b;
        return n;
    }
};

/// (accumulated normalized importance [maximize], selected fraction
/// [minimize]); both in [0, 1].
std::vector<double> autofs_fitness(const FeatureMask& mask, const FeatureImportance& importance);

struct AutofsResult {
    FeatureMask mask;
    Archive archive;
};

/// Binary MOPSO over feature masks. All-zero masks are repaired to the
/// single highest-importance feature before scoring.
AutofsResult run_oip_autofs(const DataTable& table, const FeatureImportance& importance,
                            const SwarmConfig& config, const TraceFn& trace = nullptr);

/// Keeps exactly the selected columns, order preserved.
DataTable apply_mask(const DataTable& table, const FeatureMask& mask);

}  // namespace mooids
