#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mooids/core.hpp"

namespace mooids {

enum class Direction { Maximize, Minimize };

struct Objective {
    Direction direction = Direction::Maximize;
    double weight = 1.0;
};

struct ObjectiveSpec {
    std::vector<Objective> objectives;

    std::size_t size() const { return objectives.size(); }
    /// Weights scaled to sum to 1 for scalarization.
    std::vector<double> normalized_weights() const;
};

struct Particle {
    std::vector<double> position;
    std::vector<double> velocity;
    std::vector<double> best_position;
    std::vector<double> best_fitness;
};

struct SwarmConfig {
    std::size_t n_particles = 30;
    std::size_t iterations = 50;
    double inertia = 0.7;
    double cognitive = 1.5;
    double social = 1.5;
    std::vector<std::pair<double, double>> bounds;  // per-dimension [lo, hi]
    double v_max_fraction = 0.2;
    std::size_t archive_capacity = 50;
    std::uint64_t seed = 0;
};

struct ArchiveEntry {
    std::vector<double> solution;  // decoded solution (equals position for
                                   // continuous problems, the bit mask for
                                   // binary ones)
    std::vector<double> fitness;
};

struct Archive {
    std::vector<ArchiveEntry> entries;
    std::size_t capacity = 50;
};

/// One fitness evaluation: the decoded solution that produced the fitness,
/// plus the fitness vector itself.
struct Evaluation {
    std::vector<double> solution;
    std::vector<double> fitness;
};

/// Evaluators may consume randomness (e.g. mask binarization) from the
/// particle's own stream so runs stay reproducible.
using FitnessFn = std::function<Evaluation(const std::vector<double>& position, Rng& rng)>;

/// True iff `a` is no worse than `b` on every objective and strictly better
/// on at least one (directions honored).
bool dominates(const std::vector<double>& a, const std::vector<double>& b,
               const ObjectiveSpec& spec);

/// Inserts the candidate unless dominated; drops entries it dominates;
/// evicts the most crowded entry when over capacity. Exact-duplicate fitness
/// vectors are kept once.
void update_archive(Archive& archive, const ArchiveEntry& candidate,
                    const ObjectiveSpec& spec);

/// NSGA-style crowding distances over the archive's fitness vectors.
std::vector<double> crowding_distances(const Archive& archive);

struct SwarmState {
    std::vector<Particle> particles;
    std::size_t iteration = 0;
};

/// Deterministic initial positions for a config (shared with callers that
/// need to pre-inspect the first generation, e.g. latency calibration).
std::vector<std::vector<double>> initial_positions(const SwarmConfig& config);

/// One synchronized velocity/position/evaluation sweep. Archive updates are
/// applied in particle-index order.
void step(SwarmState& swarm, Archive& archive, const SwarmConfig& config,
          const ObjectiveSpec& spec, const FitnessFn& fitness_fn);

/// Bernoulli bit per dimension with probability sigmoid(x_d).
std::vector<bool> binarize(const std::vector<double>& position, Rng& rng);

/// Equal-weight scalarization over the archive with per-objective min-max
/// normalization; ties break toward the lexicographically largest
/// direction-adjusted fitness.
ArchiveEntry select_final(const Archive& archive, const ObjectiveSpec& spec);

/// Per-iteration archive snapshot hook (iteration, archive).
using TraceFn = std::function<void(std::size_t, const Archive&)>;

/// Full MOPSO run: init, evaluate, iterate `config.iterations` times.
Archive run_mopso(const SwarmConfig& config, const ObjectiveSpec& spec,
                  const FitnessFn& fitness_fn, const TraceFn& trace = nullptr);

}  // namespace mooids
