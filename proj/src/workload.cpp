#include "espine/workload.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "espine/errors.hpp"

namespace espine::workload {

std::string kind_name(NeuronKind k)
{
    switch (k)
    {
    case NeuronKind::input:
        return "input";
    case NeuronKind::hidden:
        return "hidden";
    case NeuronKind::output:
        return "output";
    }
    return "hidden";
}

NeuronKind kind_from_name(const std::string& name)
{
    if (name == "input")
        return NeuronKind::input;
    if (name == "hidden")
        return NeuronKind::hidden;
    if (name == "output")
        return NeuronKind::output;
    throw ConfigError("unknown neuron kind '" + name + "'");
}

void SnnGraph::validate() const
{
    std::unordered_set<int> ids;
    ids.reserve(neurons.size());
    for (std::size_t i = 0; i < neurons.size(); ++i)
    {
        if (!ids.insert(neurons[i].id).second)
        {
            std::ostringstream oss;
            oss << "neurons[" << i << "].id: duplicate id " << neurons[i].id;
            throw ConfigError(oss.str());
        }
    }
    for (std::size_t i = 0; i < synapses.size(); ++i)
    {
        const auto& s = synapses[i];
        if (!ids.count(s.pre))
        {
            std::ostringstream oss;
            oss << "synapses[" << i << "].pre: unknown neuron id " << s.pre;
            throw ConfigError(oss.str());
        }
        if (!ids.count(s.post))
        {
            std::ostringstream oss;
            oss << "synapses[" << i << "].post: unknown neuron id " << s.post;
            throw ConfigError(oss.str());
        }
    }
}

Stats stats(const SnnGraph& graph)
{
    Stats st;
    st.neuron_count = graph.neurons.size();
    st.synapse_count = graph.synapses.size();
    std::unordered_map<int, std::size_t> fan_in, fan_out;
    for (const auto& s : graph.synapses)
    {
        st.total_activations += s.activations;
        ++fan_in[s.post];
        ++fan_out[s.pre];
    }
    for (const auto& [id, c] : fan_in)
        st.max_fan_in = std::max(st.max_fan_in, c);
    for (const auto& [id, c] : fan_out)
        st.max_fan_out = std::max(st.max_fan_out, c);
    return st;
}

void GeneratorSpec::validate() const
{
    if (const auto* ff = std::get_if<Feedforward>(&topology))
    {
        if (ff->layer_sizes.size() < 2)
            throw ConfigError("generator: feedforward needs at least two layers");
        for (std::size_t s : ff->layer_sizes)
            if (s < 1)
                throw ConfigError("generator: layer sizes must be >= 1");
    }
    else
    {
        const auto& r = std::get<Reservoir>(topology);
        if (r.neurons < 1)
            throw ConfigError("generator: reservoir needs >= 1 neuron");
        if (r.connectivity <= 0.0 || r.connectivity > 1.0)
            throw ConfigError("generator: connectivity must lie in (0, 1]");
    }
    if (const auto* u = std::get_if<UniformActivations>(&activations))
    {
        if (u->lo > u->hi)
            throw ConfigError("generator: uniform activation range is empty");
    }
    else
    {
        const auto& z = std::get<ZipfActivations>(activations);
        if (z.s <= 0.0 || z.max < 1)
            throw ConfigError("generator: zipf needs s > 0 and max >= 1");
    }
}

namespace {

class ActivationSampler {
public:
    ActivationSampler(const GeneratorSpec& spec, std::mt19937_64& rng) : rng_(rng)
    {
        if (const auto* u = std::get_if<UniformActivations>(&spec.activations))
        {
            uniform_ = true;
            lo_ = u->lo;
            hi_ = u->hi;
        }
        else
        {
            const auto& z = std::get<ZipfActivations>(spec.activations);
            cdf_.resize(z.max);
            double acc = 0.0;
            for (std::uint64_t k = 1; k <= z.max; ++k)
            {
                acc += std::pow(static_cast<double>(k), -z.s);
                cdf_[k - 1] = acc;
            }
            for (double& c : cdf_)
                c /= acc;
        }
    }

    std::uint64_t operator()()
    {
        if (uniform_)
        {
            std::uniform_int_distribution<std::uint64_t> d(lo_, hi_);
            return d(rng_);
        }
        std::uniform_real_distribution<double> d(0.0, 1.0);
        const double u = d(rng_);
        const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        return static_cast<std::uint64_t>(it - cdf_.begin()) + 1;
    }

private:
    std::mt19937_64& rng_;
    bool uniform_ = false;
    std::uint64_t lo_ = 0;
    std::uint64_t hi_ = 0;
    std::vector<double> cdf_;
};

} // namespace

SnnGraph generate(const GeneratorSpec& spec)
{
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    ActivationSampler sample_act(spec, rng);
    std::uniform_real_distribution<double> weight(-1.0, 1.0);

    SnnGraph g;
    if (const auto* ff = std::get_if<Feedforward>(&spec.topology))
    {
        const auto& layers = ff->layer_sizes;
        std::vector<int> first_id(layers.size());
        int next = 0;
        for (std::size_t l = 0; l < layers.size(); ++l)
        {
            first_id[l] = next;
            const NeuronKind kind = l == 0 ? NeuronKind::input
                    : l + 1 == layers.size() ? NeuronKind::output
                                             : NeuronKind::hidden;
            for (std::size_t i = 0; i < layers[l]; ++i)
                g.neurons.push_back({next++, kind});
        }
        for (std::size_t l = 0; l + 1 < layers.size(); ++l)
            for (std::size_t a = 0; a < layers[l]; ++a)
                for (std::size_t b = 0; b < layers[l + 1]; ++b)
                    g.synapses.push_back({first_id[l] + static_cast<int>(a),
                            first_id[l + 1] + static_cast<int>(b), weight(rng),
                            sample_act()});
    }
    else
    {
        const auto& r = std::get<Reservoir>(spec.topology);
        for (std::size_t i = 0; i < r.neurons; ++i)
            g.neurons.push_back({static_cast<int>(i), NeuronKind::hidden});
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        for (std::size_t a = 0; a < r.neurons; ++a)
            for (std::size_t b = 0; b < r.neurons; ++b)
            {
                if (a == b)
                    continue;
                if (coin(rng) < r.connectivity)
                    g.synapses.push_back({static_cast<int>(a), static_cast<int>(b),
                            weight(rng), sample_act()});
            }
    }
    return g;
}

namespace {

const nlohmann::json& require(const nlohmann::json& j, const char* key,
        const std::string& path)
{
    const auto it = j.find(key);
    if (it == j.end())
        throw ConfigError(path + "." + key + ": missing field");
    return *it;
}

} // namespace

SnnGraph load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open workload file " + path.string());
    nlohmann::json j;
    try
    {
        in >> j;
    }
    catch (const nlohmann::json::exception& ex)
    {
        throw ConfigError("workload " + path.string() + ": " + ex.what());
    }

    SnnGraph g;
    const auto& neurons = require(j, "neurons", "workload");
    if (!neurons.is_array())
        throw ConfigError("workload.neurons: expected an array");
    for (std::size_t i = 0; i < neurons.size(); ++i)
    {
        const auto& n = neurons[i];
        const std::string p = "neurons[" + std::to_string(i) + "]";
        if (!n.is_object())
            throw ConfigError(p + ": expected an object");
        Neuron out;
        if (!require(n, "id", p).is_number_integer())
            throw ConfigError(p + ".id: expected an integer");
        out.id = n["id"].get<int>();
        if (!require(n, "kind", p).is_string())
            throw ConfigError(p + ".kind: expected a string");
        out.kind = kind_from_name(n["kind"].get<std::string>());
        g.neurons.push_back(out);
    }

    const auto& synapses = require(j, "synapses", "workload");
    if (!synapses.is_array())
        throw ConfigError("workload.synapses: expected an array");
    for (std::size_t i = 0; i < synapses.size(); ++i)
    {
        const auto& s = synapses[i];
        const std::string p = "synapses[" + std::to_string(i) + "]";
        if (!s.is_object())
            throw ConfigError(p + ": expected an object");
        Synapse out;
        if (!require(s, "pre", p).is_number_integer())
            throw ConfigError(p + ".pre: expected an integer");
        out.pre = s["pre"].get<int>();
        if (!require(s, "post", p).is_number_integer())
            throw ConfigError(p + ".post: expected an integer");
        out.post = s["post"].get<int>();
        if (!require(s, "weight", p).is_number())
            throw ConfigError(p + ".weight: expected a number");
        out.weight = s["weight"].get<double>();
        const auto& act = require(s, "activations", p);
        if (!act.is_number_integer() || act.is_number_float()
                || (act.is_number_integer() && act.get<long long>() < 0))
            throw ConfigError(p + ".activations: expected a non-negative integer");
        out.activations = act.get<std::uint64_t>();
        g.synapses.push_back(out);
    }

    g.validate();
    return g;
}

void save(const SnnGraph& graph, const std::filesystem::path& path)
{
    nlohmann::json neurons = nlohmann::json::array();
    for (const auto& n : graph.neurons)
        neurons.push_back({{"id", n.id}, {"kind", kind_name(n.kind)}});
    nlohmann::json synapses = nlohmann::json::array();
    for (const auto& s : graph.synapses)
        synapses.push_back({{"pre", s.pre}, {"post", s.post}, {"weight", s.weight},
                {"activations", s.activations}});
    nlohmann::json j = {{"neurons", neurons}, {"synapses", synapses}};

    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

} // namespace espine::workload
