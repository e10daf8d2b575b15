#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace espine::workload {

enum class NeuronKind { input, hidden, output };

std::string kind_name(NeuronKind k);
NeuronKind kind_from_name(const std::string& name); // throws ConfigError

struct Neuron {
    int id = 0;
    NeuronKind kind = NeuronKind::hidden;
};

struct Synapse {
    int pre = 0;
    int post = 0;
    double weight = 0.0;        // carried, functionally inert
    std::uint64_t activations = 0; // spikes per workload execution
};

struct SnnGraph {
    std::vector<Neuron> neurons;
    std::vector<Synapse> synapses;

    void validate() const; // throws ConfigError naming the offending field
};

struct Stats {
    std::size_t neuron_count = 0;
    std::size_t synapse_count = 0;
    std::uint64_t total_activations = 0;
    std::size_t max_fan_in = 0;
    std::size_t max_fan_out = 0;
};

Stats stats(const SnnGraph& graph);

// Generator topologies mirror the evaluated workload classes: dense
// feedforward stacks and sparse recurrent reservoirs.
struct Feedforward {
    std::vector<std::size_t> layer_sizes;
};
struct Reservoir {
    std::size_t neurons = 0;
    double connectivity = 0.0; // (0, 1]
};

struct UniformActivations {
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;
};
struct ZipfActivations {
    double s = 1.0;
    std::uint64_t max = 1;
};

struct GeneratorSpec {
    std::variant<Feedforward, Reservoir> topology;
    std::variant<UniformActivations, ZipfActivations> activations;
    std::uint64_t seed = 0;

    void validate() const;
};

// Deterministic in the spec (same spec + seed => identical graph).
SnnGraph generate(const GeneratorSpec& spec);

SnnGraph load(const std::filesystem::path& path);
void save(const SnnGraph& graph, const std::filesystem::path& path);

} // namespace espine::workload
