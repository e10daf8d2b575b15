#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "espine/grid.hpp"

namespace espine::swarm {

// Binary cluster-to-tile assignment; exactly one tile per cluster.
struct Mapping {
    std::size_t n_tiles = 0;
    std::vector<int> tile_of; // per cluster

    std::size_t n_clusters() const { return tile_of.size(); }
    // matrix view m[x][y]
    bool entry(std::size_t cluster, std::size_t tile) const
    {
        return tile_of[cluster] == static_cast<int>(tile);
    }
    bool one_hot() const;
    bool operator==(const Mapping&) const = default;
};

enum class FitnessKind { lifetime, energy };

// standard: a bit becomes 1 with probability sigmoid(position + velocity).
// as_printed inverts the comparison as in the source formulation.
enum class Binarization { standard, as_printed };

struct SwarmConfig {
    std::size_t n_particles = 20;
    std::size_t iterations = 100;
    double phi1 = 1.5;
    double phi2 = 1.5;
    double v_clamp = 4.0;
    std::uint64_t seed = 0;
    FitnessKind fitness = FitnessKind::lifetime;
    bool stochastic_phi = true; // fresh uniforms scale the phi terms
    Binarization binarization = Binarization::standard;
    unsigned threads = 1;

    void validate() const;
};

struct EvalResult {
    double energy_j = 0.0;
    double min_lifetime = 0.0;
};

// Pure function of the mapping; evaluated concurrently across particles.
class MappingEvaluator {
public:
    virtual ~MappingEvaluator() = default;
    virtual EvalResult evaluate(const Mapping& mapping) const = 0;
};

struct EvalRecord {
    std::size_t iter = 0; // 0 = initialization
    std::size_t particle = 0;
    Mapping mapping;
    EvalResult result;
    bool accepted_as_gbest = false;
};

struct Particle {
    Mapping position;
    Grid<double> velocity; // clusters x tiles
    Mapping best_position;
    EvalResult best_result;
};

// Synchronous binary PSO over one-hot cluster-to-tile mappings.
class Swarm {
public:
    Swarm(const SwarmConfig& cfg, std::size_t n_clusters, std::size_t n_tiles);

    // Evaluate initial positions and set bests.
    void initialize(const MappingEvaluator& evaluator);
    // One velocity/position/binarization/best update round.
    void step(const MappingEvaluator& evaluator);

    const std::vector<Particle>& particles() const { return particles_; }
    const Mapping& best_mapping() const { return gbest_position_; }
    const EvalResult& best_result() const { return gbest_result_; }
    double best_fitness() const;
    const std::vector<EvalRecord>& eval_log() const { return log_; }
    std::size_t iterations_run() const { return iter_; }

private:
    double fitness_of(const EvalResult& r) const;
    bool better(const EvalResult& a, const EvalResult& b) const;
    void evaluate_all(const MappingEvaluator& evaluator);

    SwarmConfig cfg_;
    std::size_t n_clusters_;
    std::size_t n_tiles_;
    std::vector<Particle> particles_;
    std::vector<std::mt19937_64> rngs_; // one stream per particle
    Mapping gbest_position_;
    EvalResult gbest_result_;
    bool gbest_set_ = false;
    std::size_t iter_ = 0;
    std::vector<EvalRecord> log_;
};

struct RunResult {
    Mapping best_mapping;
    EvalResult best_result;
    double best_fitness = 0.0;
    std::vector<double> gbest_history; // after init, then per iteration
    std::vector<EvalRecord> eval_log;
};

RunResult run(const SwarmConfig& cfg, const MappingEvaluator& evaluator,
        std::size_t n_clusters, std::size_t n_tiles);

struct ParetoPoint {
    double energy_j = 0.0;
    double lifetime = 0.0;
    std::size_t eval_index = 0;
};

// Maximal points under (lower energy, higher lifetime), energy ascending.
std::vector<ParetoPoint> pareto_front(const std::vector<ParetoPoint>& points);

// JSON-lines, one record per evaluation.
void write_run_log_jsonl(const std::vector<EvalRecord>& log,
        const std::filesystem::path& path);

} // namespace espine::swarm
