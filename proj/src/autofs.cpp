#include "mooids/autofs.hpp"

#include <algorithm>

namespace mooids {

std::vector<double> autofs_fitness(const FeatureMask& mask,
                                   const FeatureImportance& importance) {
    if (mask.bits.size() != importance.normalized.size()) {
        throw DataError("autofs_fitness: mask and importance length mismatch");
    }
    double score_importance = 0.0;
    std::size_t selected = 0;
    for (std::size_t f = 0; f < mask.bits.size(); ++f) {
        if (mask.bits[f]) {
            score_importance += importance.normalized[f];
            ++selected;
        }
    }
    double score_percentage = double(selected) / double(mask.bits.size());
    return {score_importance, score_percentage};
}

AutofsResult run_oip_autofs(const DataTable& table, const FeatureImportance& importance,
                            const SwarmConfig& config, const TraceFn& trace) {
    if (table.n_features() < 2) throw DataError("run_oip_autofs: need at least 2 features");
    if (importance.normalized.size() != table.n_features()) {
        throw DataError("run_oip_autofs: importance does not match table");
    }

    std::size_t top_feature = std::size_t(
        std::max_element(importance.normalized.begin(), importance.normalized.end()) -
        importance.normalized.begin());

    SwarmConfig cfg = config;
    if (cfg.bounds.empty()) {
        cfg.bounds.assign(table.n_features(), {-6.0, 6.0});
    }
    if (cfg.bounds.size() != table.n_features()) {
        throw ConfigError("run_oip_autofs: bounds dimension mismatch");
    }

    ObjectiveSpec spec;
    spec.objectives = {{Direction::Maximize, 1.0}, {Direction::Minimize, 1.0}};

    FitnessFn fn = [&](const std::vector<double>& position, Rng& rng) {
        FeatureMask mask{binarize(position, rng)};
        if (mask.selected_count() == 0) mask.bits[top_feature] = true;
        Evaluation ev;
        ev.fitness = autofs_fitness(mask, importance);
        ev.solution.resize(mask.bits.size());
        for (std::size_t f = 0; f < mask.bits.size(); ++f) {
            ev.solution[f] = mask.bits[f] ? 1.0 : 0.0;
        }
        return ev;
    };

    Archive archive = run_mopso(cfg, spec, fn, trace);
    ArchiveEntry winner = select_final(archive, spec);

    AutofsResult result;
    result.mask.bits.resize(winner.solution.size());
    for (std::size_t f = 0; f < winner.solution.size(); ++f) {
        result.mask.bits[f] = winner.solution[f] > 0.5;
    }
    result.archive = std::move(archive);
    return result;
}

DataTable apply_mask(const DataTable& table, const FeatureMask& mask) {
    if (mask.bits.size() != table.n_features()) {
        throw DataError("apply_mask: mask length does not match table");
    }
    std::vector<std::size_t> keep;
    for (std::size_t f = 0; f < mask.bits.size(); ++f) {
        if (mask.bits[f]) keep.push_back(f);
    }
    if (keep.empty()) throw DataError("apply_mask: empty mask");
    Matrix m(table.n_rows(), keep.size());
    std::vector<std::string> names(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        names[i] = table.feature_names()[keep[i]];
        for (std::size_t r = 0; r < table.n_rows(); ++r) {
            m.at(r, i) = table.features().at(r, keep[i]);
        }
    }
    return table.with_features(std::move(m), std::move(names));
}

}  // namespace mooids
