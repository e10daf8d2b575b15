#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "espine/workload.hpp"

namespace espine::partition {

struct ClusterSynapse {
    std::size_t pre_index = 0;  // into Cluster::pre_neurons
    std::size_t post_index = 0; // into Cluster::post_neurons
    std::uint64_t activations = 0;
    double weight = 0.0;
};

// A crossbar-sized subgraph. pre_neurons contains every spike source whose
// synapse is implemented here, including replicas of neurons homed in other
// clusters; post_neurons are the sinks owning a column.
struct Cluster {
    int id = 0;
    std::vector<int> pre_neurons;
    std::vector<int> post_neurons;
    std::vector<ClusterSynapse> synapses;

    std::uint64_t total_activations() const;
};

// One entry per synapse whose source neuron is homed in another cluster.
struct CutEdge {
    int pre_cluster = 0;
    int post_cluster = 0;
    std::uint64_t activations = 0;
};

struct Clustering {
    std::vector<Cluster> clusters;
    std::vector<CutEdge> cut_edges;
    std::uint64_t cut_cost = 0; // sum of cut-edge activations
    std::size_t crossbar_rows = 0;
    std::size_t crossbar_cols = 0;

    // Activations of synapses whose source is homed in the same cluster.
    std::uint64_t in_cluster_activations() const;
    void validate(const workload::SnnGraph& graph) const; // throws on broken invariants
};

struct BipartitionResult {
    std::vector<int> part_a;
    std::vector<int> part_b;
    std::uint64_t cut_cost = 0;
};

// Classic Kernighan-Lin bipartition over neurons, edge weight = synapse
// activations (directions merged). Starts from a seeded balanced split and
// applies swap passes while a pass improves the cut.
BipartitionResult kl_bipartition(const workload::SnnGraph& graph,
        double balance_tolerance = 0.1, std::uint64_t seed = 0);

struct PartitionOptions {
    double balance_tolerance = 0.1;
    std::uint64_t seed = 0;
    // Split the fan-in of neurons wider than the crossbar across clusters.
    // When disabled such a neuron is an InfeasibleError.
    bool allow_fan_in_slicing = true;
};

// Recursive KL bisection until every cluster fits rows x cols.
Clustering partition_workload(const workload::SnnGraph& graph, std::size_t rows,
        std::size_t cols, const PartitionOptions& opts = {});

// {"clusters":[{"id","pre":[...],"post":[...]}],"cut_cost":N}
void write_clustering_json(const Clustering& clustering, const std::filesystem::path& path);

} // namespace espine::partition
