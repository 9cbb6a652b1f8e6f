#include "mooids/mopso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mooids {

std::vector<double> ObjectiveSpec::normalized_weights() const {
    std::vector<double> w(objectives.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < objectives.size(); ++i) {
        if (objectives[i].weight < 0.0) throw ConfigError("objective weight must be >= 0");
        w[i] = objectives[i].weight;
        sum += w[i];
    }
    if (sum <= 0.0) {
        std::fill(w.begin(), w.end(), 1.0 / double(w.size()));
    } else {
        for (auto& v : w) v /= sum;
    }
    return w;
}

namespace {

double adjusted(double value, Direction d) {
    return d == Direction::Maximize ? value : -value;
}

double weighted_scalar(const std::vector<double>& fitness, const ObjectiveSpec& spec,
                       const std::vector<double>& weights) {
    double s = 0.0;
    for (std::size_t i = 0; i < fitness.size(); ++i) {
        s += weights[i] * adjusted(fitness[i], spec.objectives[i].direction);
    }
    return s;
}

bool lex_greater_adjusted(const std::vector<double>& a, const std::vector<double>& b,
                          const ObjectiveSpec& spec) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        double av = adjusted(a[i], spec.objectives[i].direction);
        double bv = adjusted(b[i], spec.objectives[i].direction);
        if (av != bv) return av > bv;
    }
    return false;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

bool dominates(const std::vector<double>& a, const std::vector<double>& b,
               const ObjectiveSpec& spec) {
    if (a.size() != b.size() || a.size() != spec.size()) {
        throw InternalError("dominates: fitness length mismatch");
    }
    bool better_somewhere = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double av = adjusted(a[i], spec.objectives[i].direction);
        double bv = adjusted(b[i], spec.objectives[i].direction);
        if (av < bv) return false;
        if (av > bv) better_somewhere = true;
    }
    return better_somewhere;
}

std::vector<double> crowding_distances(const Archive& archive) {
    std::size_t n = archive.entries.size();
    std::vector<double> dist(n, 0.0);
    if (n == 0) return dist;
    std::size_t n_obj = archive.entries[0].fitness.size();
    for (std::size_t o = 0; o < n_obj; ++o) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return archive.entries[a].fitness[o] < archive.entries[b].fitness[o];
        });
        double lo = archive.entries[idx.front()].fitness[o];
        double hi = archive.entries[idx.back()].fitness[o];
        dist[idx.front()] = std::numeric_limits<double>::infinity();
        dist[idx.back()] = std::numeric_limits<double>::infinity();
        if (hi <= lo) continue;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            double gap = archive.entries[idx[i + 1]].fitness[o] -
                         archive.entries[idx[i - 1]].fitness[o];
            dist[idx[i]] += gap / (hi - lo);
        }
    }
    return dist;
}

void update_archive(Archive& archive, const ArchiveEntry& candidate,
                    const ObjectiveSpec& spec) {
    for (const auto& entry : archive.entries) {
        if (dominates(entry.fitness, candidate.fitness, spec)) return;
        if (entry.fitness == candidate.fitness) return;  // exact duplicate
    }
    std::erase_if(archive.entries, [&](const ArchiveEntry& entry) {
        return dominates(candidate.fitness, entry.fitness, spec);
    });
    archive.entries.push_back(candidate);
    if (archive.entries.size() > archive.capacity) {
        auto dist = crowding_distances(archive);
        std::size_t evict = 0;
        for (std::size_t i = 1; i < dist.size(); ++i) {
            if (dist[i] < dist[evict]) evict = i;
        }
        archive.entries.erase(archive.entries.begin() + std::ptrdiff_t(evict));
    }
}

std::vector<std::vector<double>> initial_positions(const SwarmConfig& config) {
    if (config.bounds.empty()) throw ConfigError("swarm bounds must be set");
    Rng rng(derive_seed(config.seed, 0x1717));
    std::vector<std::vector<double>> out(config.n_particles);
    for (auto& pos : out) {
        pos.resize(config.bounds.size());
        for (std::size_t d = 0; d < pos.size(); ++d) {
            auto [lo, hi] = config.bounds[d];
            pos[d] = rng.uniform(lo, hi);
        }
    }
    return out;
}

std::vector<bool> binarize(const std::vector<double>& position, Rng& rng) {
    std::vector<bool> bits(position.size());
    for (std::size_t d = 0; d < position.size(); ++d) {
        bits[d] = rng.uniform01() < sigmoid(position[d]);
    }
    return bits;
}

namespace {

// Binary tournament toward less crowded archive regions.
const ArchiveEntry& pick_leader(const Archive& archive, const std::vector<double>& crowding,
                                Rng& rng) {
    std::size_t a = rng.index(archive.entries.size());
    std::size_t b = rng.index(archive.entries.size());
    return crowding[a] >= crowding[b] ? archive.entries[a] : archive.entries[b];
}

void maybe_adopt_personal_best(Particle& p, const std::vector<double>& position,
                               const std::vector<double>& fitness, const ObjectiveSpec& spec,
                               const std::vector<double>& weights) {
    if (p.best_fitness.empty() || dominates(fitness, p.best_fitness, spec)) {
        p.best_position = position;
        p.best_fitness = fitness;
        return;
    }
    if (dominates(p.best_fitness, fitness, spec)) return;
    if (weighted_scalar(fitness, spec, weights) > weighted_scalar(p.best_fitness, spec, weights)) {
        p.best_position = position;
        p.best_fitness = fitness;
    }
}

Evaluation evaluate_guarded(const FitnessFn& fn, const std::vector<double>& position,
                            Rng& rng, std::size_t particle_idx, const ObjectiveSpec& spec) {
    Evaluation ev;
    try {
        ev = fn(position, rng);
    } catch (const std::exception& e) {
        throw InternalError("fitness evaluation failed for particle " +
                            std::to_string(particle_idx) + ": " + e.what());
    }
    if (ev.fitness.size() != spec.size()) {
        throw InternalError("fitness evaluation returned wrong arity for particle " +
                            std::to_string(particle_idx));
    }
    return ev;
}

}  // namespace

void step(SwarmState& swarm, Archive& archive, const SwarmConfig& config,
          const ObjectiveSpec& spec, const FitnessFn& fitness_fn) {
    const std::size_t dims = config.bounds.size();
    const auto weights = spec.normalized_weights();
    swarm.iteration += 1;

    // leaders come from the iteration-start archive snapshot
    Archive snapshot = archive;
    auto crowding = crowding_distances(snapshot);

    std::vector<Evaluation> evals(swarm.particles.size());
    for (std::size_t i = 0; i < swarm.particles.size(); ++i) {
        Particle& p = swarm.particles[i];
        Rng rng(derive_seed(derive_seed(config.seed, swarm.iteration), i));
        const std::vector<double>& leader =
            snapshot.entries.empty() ? p.best_position
                                     : pick_leader(snapshot, crowding, rng).solution;
        for (std::size_t d = 0; d < dims; ++d) {
            auto [lo, hi] = config.bounds[d];
            double span = hi - lo;
            double v_max = config.v_max_fraction * span;
            double r1 = rng.uniform01();
            double r2 = rng.uniform01();
            double leader_d = d < leader.size() ? leader[d] : p.best_position[d];
            double v = config.inertia * p.velocity[d] +
                       config.cognitive * r1 * (p.best_position[d] - p.position[d]) +
                       config.social * r2 * (leader_d - p.position[d]);
            v = std::clamp(v, -v_max, v_max);
            p.velocity[d] = v;
            p.position[d] = std::clamp(p.position[d] + v, lo, hi);
        }
        evals[i] = evaluate_guarded(fitness_fn, p.position, rng, i, spec);
        maybe_adopt_personal_best(p, p.position, evals[i].fitness, spec, weights);
    }
    for (auto& ev : evals) {
        update_archive(archive, {std::move(ev.solution), std::move(ev.fitness)}, spec);
    }
}

ArchiveEntry select_final(const Archive& archive, const ObjectiveSpec& spec) {
    if (archive.entries.empty()) throw InternalError("select_final: empty archive");
    const std::size_t n = archive.entries.size();
    const std::size_t n_obj = spec.size();
    const auto weights = spec.normalized_weights();

    std::vector<double> lo(n_obj, std::numeric_limits<double>::infinity());
    std::vector<double> hi(n_obj, -std::numeric_limits<double>::infinity());
    for (const auto& entry : archive.entries) {
        for (std::size_t o = 0; o < n_obj; ++o) {
            double v = adjusted(entry.fitness[o], spec.objectives[o].direction);
            lo[o] = std::min(lo[o], v);
            hi[o] = std::max(hi[o], v);
        }
    }
    auto score_of = [&](const ArchiveEntry& entry) {
        double s = 0.0;
        for (std::size_t o = 0; o < n_obj; ++o) {
            if (hi[o] <= lo[o]) continue;
            double v = adjusted(entry.fitness[o], spec.objectives[o].direction);
            s += weights[o] * (v - lo[o]) / (hi[o] - lo[o]);
        }
        return s;
    };

    std::size_t best = 0;
    double best_score = score_of(archive.entries[0]);
    for (std::size_t i = 1; i < n; ++i) {
        double s = score_of(archive.entries[i]);
        if (s > best_score + 1e-12) {
            best = i;
            best_score = s;
        } else if (std::abs(s - best_score) <= 1e-12 &&
                   lex_greater_adjusted(archive.entries[i].fitness,
                                        archive.entries[best].fitness, spec)) {
            best = i;
        }
    }
    return archive.entries[best];
}

Archive run_mopso(const SwarmConfig& config, const ObjectiveSpec& spec,
                  const FitnessFn& fitness_fn, const TraceFn& trace) {
    if (config.n_particles < 2) throw ConfigError("need at least 2 particles");
    if (config.iterations < 1) throw ConfigError("need at least 1 iteration");
    if (!(config.v_max_fraction > 0.0) || config.v_max_fraction > 1.0) {
        throw ConfigError("v_max_fraction must be in (0, 1]");
    }
    for (auto [lo, hi] : config.bounds) {
        if (!(lo <= hi)) throw ConfigError("invalid bound: lo > hi");
    }
    const auto weights = spec.normalized_weights();

    SwarmState swarm;
    swarm.particles.resize(config.n_particles);
    Archive archive;
    archive.capacity = config.archive_capacity;

    auto positions = initial_positions(config);
    std::vector<Evaluation> evals(config.n_particles);
    for (std::size_t i = 0; i < config.n_particles; ++i) {
        Particle& p = swarm.particles[i];
        p.position = positions[i];
        p.velocity.assign(config.bounds.size(), 0.0);
        Rng rng(derive_seed(derive_seed(config.seed, 0), i));
        evals[i] = evaluate_guarded(fitness_fn, p.position, rng, i, spec);
        p.best_position = p.position;
        p.best_fitness = evals[i].fitness;
    }
    for (auto& ev : evals) {
        update_archive(archive, {std::move(ev.solution), std::move(ev.fitness)}, spec);
    }
    if (trace) trace(0, archive);

    for (std::size_t it = 1; it <= config.iterations; ++it) {
        step(swarm, archive, config, spec, fitness_fn);
        if (trace) trace(it, archive);
    }
    return archive;
}

}  // namespace mooids
