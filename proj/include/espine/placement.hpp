#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "espine/grid.hpp"
#include "espine/partition.hpp"
#include "espine/thermal.hpp"

namespace espine::placement {

struct CellLoad {
    std::size_t row = 0;
    std::size_t col = 0;
    std::uint64_t activations = 0;
};

struct Placement {
    int cluster_id = 0;
    std::map<int, std::size_t> row_of; // pre neuron -> row
    std::map<int, std::size_t> col_of; // post neuron -> column
    std::vector<CellLoad> cells;       // occupied cells, activations accumulated
    std::size_t rows_used = 0;
    std::size_t cols_used = 0;
};

// Activation-sorted assignment: pre-synaptic neurons in descending
// activation order take rows in descending row-endurance order (row rank =
// endurance of the row's farthest-column cell), then post-synaptic neurons
// take columns the same way. The sort key of a neuron is the maximum
// activation over its cluster synapses; ties break toward the lower id.
Placement place_sorted(const partition::Cluster& cluster,
        const thermal::EnduranceMap& endurance);

// Seeded random injective assignment, the baseline placement.
Placement place_arbitrary(const partition::Cluster& cluster, std::size_t rows,
        std::size_t cols, std::uint64_t seed);

// Neurons in listed order onto rows/cols 0,1,2,... (property-test baseline).
Placement place_identity(const partition::Cluster& cluster, std::size_t rows,
        std::size_t cols);

// How co-located clusters combine on shared cells. shared_writes divides
// the cell endurance by the total accumulated activations; per_cluster_sum
// adds each cluster's endurance/activation quotient as written in the
// source algorithm.
enum class LifetimeAccumulation { shared_writes, per_cluster_sum };

struct TileLifetime {
    int tile = 0;
    double min_lifetime = 0.0;
    std::size_t argmin_row = 0;
    std::size_t argmin_col = 0;
    Grid<double> lifetime; // workload repetitions; +inf where unoccupied
    bool occupied = false;
};

struct LifetimeReport {
    std::vector<TileLifetime> tiles;
    double min_lifetime = 0.0;
    int argmin_tile = -1;
};

// Per-tile placement of every assigned cluster, activation accumulation
// across co-located clusters, and the min over occupied cells and tiles.
// tile_of_cluster[x] is the tile index of cluster x; placements are indexed
// by cluster id. Throws InfeasibleError when a placement exceeds its tile
// or no cell carries activations.
LifetimeReport min_eff_life(const std::vector<int>& tile_of_cluster,
        const std::vector<Placement>& placements,
        const std::vector<const thermal::EnduranceMap*>& tile_maps,
        LifetimeAccumulation accumulation = LifetimeAccumulation::shared_writes);

// {"tile":t,"rows":{neuron:row},"cols":{neuron:col}} per tile entry.
void write_placements_json(const std::vector<int>& tile_of_cluster,
        const std::vector<Placement>& placements, const std::filesystem::path& path);

void write_lifetime_csv(const TileLifetime& tile, const std::filesystem::path& path);

} // namespace espine::placement
