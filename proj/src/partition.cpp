#include "espine/partition.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "espine/errors.hpp"

namespace espine::partition {

namespace {

// Symmetric weighted graph over dense node indices for the KL core.
struct KlGraph {
    std::size_t n = 0;
    std::vector<std::unordered_map<std::size_t, double>> adj;

    void add_edge(std::size_t a, std::size_t b, double w)
    {
        if (a == b || w == 0.0)
            return;
        adj[a][b] += w;
        adj[b][a] += w;
    }
};

double cut_weight(const KlGraph& g, const std::vector<char>& side)
{
    double cut = 0.0;
    for (std::size_t u = 0; u < g.n; ++u)
        for (const auto& [v, w] : g.adj[u])
            if (u < v && side[u] != side[v])
                cut += w;
    return cut;
}

// One KL run: seeded balanced start, swap passes until no improvement.
// Returns side flags (0 = A, 1 = B).
std::vector<char> kl_run(const KlGraph& g, std::uint64_t seed)
{
    const std::size_t n = g.n;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<char> side(n, 1);
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i)
        side[order[i]] = 0;

    if (n < 2)
        return side;

    std::vector<double> d(n);
    const auto recompute_d = [&]() {
        for (std::size_t u = 0; u < n; ++u)
        {
            double ext = 0.0, in = 0.0;
            for (const auto& [v, w] : g.adj[u])
                (side[u] != side[v] ? ext : in) += w;
            d[u] = ext - in;
        }
    };

    for (;;)
    {
        recompute_d();
        std::vector<char> locked(n, 0);
        std::vector<std::pair<std::size_t, std::size_t>> swaps;
        std::vector<double> gains;

        const std::size_t max_swaps
                = std::min(std::count(side.begin(), side.end(), 0),
                        std::count(side.begin(), side.end(), 1));
        for (std::size_t s = 0; s < static_cast<std::size_t>(max_swaps); ++s)
        {
            double best = -std::numeric_limits<double>::infinity();
            std::size_t ba = n, bb = n;
            for (std::size_t a = 0; a < n; ++a)
            {
                if (locked[a] || side[a] != 0)
                    continue;
                for (std::size_t b = 0; b < n; ++b)
                {
                    if (locked[b] || side[b] != 1)
                        continue;
                    double w_ab = 0.0;
                    const auto it = g.adj[a].find(b);
                    if (it != g.adj[a].end())
                        w_ab = it->second;
                    const double gain = d[a] + d[b] - 2.0 * w_ab;
                    if (gain > best)
                    {
                        best = gain;
                        ba = a;
                        bb = b;
                    }
                }
            }
            if (ba == n)
                break;
            swaps.emplace_back(ba, bb);
            gains.push_back(best);
            locked[ba] = locked[bb] = 1;
            // tentative swap for subsequent D updates
            for (const auto& [v, w] : g.adj[ba])
                if (!locked[v])
                    d[v] += (side[v] == side[ba] ? 2.0 : -2.0) * w;
            for (const auto& [v, w] : g.adj[bb])
                if (!locked[v])
                    d[v] += (side[v] == side[bb] ? 2.0 : -2.0) * w;
            side[ba] = 1;
            side[bb] = 0;
        }

        // best positive prefix of the tentative swap sequence
        double acc = 0.0, best_acc = 0.0;
        std::size_t best_len = 0;
        for (std::size_t i = 0; i < gains.size(); ++i)
        {
            acc += gains[i];
            if (acc > best_acc)
            {
                best_acc = acc;
                best_len = i + 1;
            }
        }

        // undo swaps beyond the chosen prefix
        for (std::size_t i = swaps.size(); i-- > best_len;)
        {
            side[swaps[i].first] = 0;
            side[swaps[i].second] = 1;
        }
        if (best_len == 0 || best_acc <= 0.0)
            break;
    }
    return side;
}

} // namespace

std::uint64_t Cluster::total_activations() const
{
    std::uint64_t total = 0;
    for (const auto& s : synapses)
        total += s.activations;
    return total;
}

std::uint64_t Clustering::in_cluster_activations() const
{
    std::uint64_t total = 0;
    for (const auto& c : clusters)
        total += c.total_activations();
    return total - cut_cost;
}

void Clustering::validate(const workload::SnnGraph& graph) const
{
    std::uint64_t listed_cut = 0;
    for (const auto& e : cut_edges)
        listed_cut += e.activations;
    if (listed_cut != cut_cost)
        throw InfeasibleError("clustering: cut_cost does not match cut edge list");

    std::uint64_t implemented = 0;
    for (const auto& c : clusters)
    {
        if (c.pre_neurons.size() > crossbar_rows || c.post_neurons.size() > crossbar_cols)
        {
            std::ostringstream oss;
            oss << "clustering: cluster " << c.id << " exceeds crossbar capacity ("
                << c.pre_neurons.size() << "x" << c.post_neurons.size() << ")";
            throw InfeasibleError(oss.str());
        }
        for (const auto& s : c.synapses)
        {
            if (s.pre_index >= c.pre_neurons.size() || s.post_index >= c.post_neurons.size())
                throw InfeasibleError("clustering: synapse references out-of-cluster index");
            implemented += s.activations;
        }
    }

    std::uint64_t total = 0;
    for (const auto& s : graph.synapses)
        total += s.activations;
    if (implemented != total)
        throw InfeasibleError("clustering: implemented activations do not cover the workload");
}

BipartitionResult kl_bipartition(const workload::SnnGraph& graph, double balance_tolerance,
        std::uint64_t seed)
{
    graph.validate();
    if (graph.neurons.size() < 2)
        throw ConfigError("kl_bipartition: need at least two neurons");
    (void)balance_tolerance; // pairwise swaps keep the seeded split balanced

    std::unordered_map<int, std::size_t> index;
    for (std::size_t i = 0; i < graph.neurons.size(); ++i)
        index[graph.neurons[i].id] = i;

    KlGraph g;
    g.n = graph.neurons.size();
    g.adj.resize(g.n);
    for (const auto& s : graph.synapses)
        g.add_edge(index.at(s.pre), index.at(s.post), static_cast<double>(s.activations));

    const std::vector<char> side = kl_run(g, seed);

    BipartitionResult res;
    std::uint64_t cut = 0;
    for (const auto& s : graph.synapses)
        if (side[index.at(s.pre)] != side[index.at(s.post)])
            cut += s.activations;
    res.cut_cost = cut;
    for (std::size_t i = 0; i < g.n; ++i)
        (side[i] == 0 ? res.part_a : res.part_b).push_back(graph.neurons[i].id);
    return res;
}

namespace {

// A unit is the placement atom: slice 0 carries the neuron's soma (spike
// origin) plus its first chunk of incoming synapses; further slices carry
// the fan-in overflow of wide neurons.
struct Unit {
    int neuron = 0;
    std::size_t slice = 0;
    std::vector<std::size_t> synapse_ids; // into graph.synapses
};

struct CapacityNeed {
    std::size_t rows = 0;
    std::size_t cols = 0;
};

CapacityNeed capacity_need(const workload::SnnGraph& graph, const std::vector<Unit>& units,
        const std::vector<std::size_t>& members)
{
    std::unordered_set<int> pres, posts;
    for (std::size_t u : members)
    {
        if (!units[u].synapse_ids.empty())
            posts.insert(units[u].neuron);
        for (std::size_t sid : units[u].synapse_ids)
            pres.insert(graph.synapses[sid].pre);
    }
    return {pres.size(), posts.size()};
}

} // namespace

Clustering partition_workload(const workload::SnnGraph& graph, std::size_t rows,
        std::size_t cols, const PartitionOptions& opts)
{
    graph.validate();
    if (rows < 1 || cols < 1)
        throw ConfigError("partition_workload: crossbar must be at least 1x1");

    // incoming synapses per neuron, ordered by pre id for determinism
    std::map<int, std::vector<std::size_t>> incoming;
    for (const auto& n : graph.neurons)
        incoming[n.id];
    for (std::size_t i = 0; i < graph.synapses.size(); ++i)
        incoming[graph.synapses[i].post].push_back(i);
    for (auto& [id, list] : incoming)
        std::sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) {
            return graph.synapses[a].pre < graph.synapses[b].pre;
        });

    std::vector<Unit> units;
    std::unordered_map<int, std::size_t> home_unit; // neuron -> slice-0 unit
    for (const auto& [id, list] : incoming)
    {
        // chunk the fan-in so each unit stays within the row budget
        std::vector<std::vector<std::size_t>> chunks;
        chunks.emplace_back();
        std::unordered_set<int> chunk_pres;
        for (std::size_t sid : list)
        {
            const int pre = graph.synapses[sid].pre;
            if (!chunk_pres.count(pre) && chunk_pres.size() == rows)
            {
                if (!opts.allow_fan_in_slicing)
                {
                    std::ostringstream oss;
                    oss << "neuron " << id << " has fan-in " << incoming[id].size()
                        << " wider than the crossbar (" << rows << " rows)";
                    throw InfeasibleError(oss.str());
                }
                chunks.emplace_back();
                chunk_pres.clear();
            }
            chunk_pres.insert(pre);
            chunks.back().push_back(sid);
        }
        for (std::size_t c = 0; c < chunks.size(); ++c)
        {
            if (c == 0)
                home_unit[id] = units.size();
            units.push_back({id, c, std::move(chunks[c])});
        }
    }

    // recursive KL bisection until every group fits the crossbar
    std::vector<std::vector<std::size_t>> groups;
    std::vector<std::size_t> all(units.size());
    std::iota(all.begin(), all.end(), 0);

    struct Frame {
        std::vector<std::size_t> members;
        std::uint64_t seed;
    };
    std::vector<Frame> stack;
    stack.push_back({std::move(all), opts.seed});
    while (!stack.empty())
    {
        Frame f = std::move(stack.back());
        stack.pop_back();
        const auto need = capacity_need(graph, units, f.members);
        if ((need.rows <= rows && need.cols <= cols) || f.members.size() <= 1)
        {
            if (need.rows > rows || need.cols > cols)
            {
                std::ostringstream oss;
                oss << "neuron " << units[f.members[0]].neuron << " has fan-in "
                    << need.rows << " wider than the crossbar (" << rows << " rows)";
                throw InfeasibleError(oss.str());
            }
            if (need.cols > 0) // soma-only groups hold no synapses
                groups.push_back(std::move(f.members));
            continue;
        }

        KlGraph g;
        g.n = f.members.size();
        g.adj.resize(g.n);
        std::unordered_map<std::size_t, std::size_t> local;
        for (std::size_t i = 0; i < f.members.size(); ++i)
            local[f.members[i]] = i;
        for (std::size_t i = 0; i < f.members.size(); ++i)
        {
            for (std::size_t sid : units[f.members[i]].synapse_ids)
            {
                const auto src = local.find(home_unit.at(graph.synapses[sid].pre));
                if (src != local.end())
                    g.add_edge(src->second, i, static_cast<double>(graph.synapses[sid].activations));
            }
        }
        const std::vector<char> side = kl_run(g, f.seed);
        Frame a{{}, f.seed * 2 + 1}, b{{}, f.seed * 2 + 2};
        for (std::size_t i = 0; i < f.members.size(); ++i)
            (side[i] == 0 ? a : b).members.push_back(f.members[i]);
        if (a.members.empty() || b.members.empty())
        {
            // degenerate split; force halves to guarantee progress
            Frame& src = a.members.empty() ? b : a;
            Frame& dst = a.members.empty() ? a : b;
            const std::size_t take = src.members.size() / 2;
            dst.members.assign(src.members.end() - take, src.members.end());
            src.members.resize(src.members.size() - take);
        }
        stack.push_back(std::move(b));
        stack.push_back(std::move(a));
    }

    // materialize clusters; units of a neuron may share a cluster and column
    Clustering out;
    out.crossbar_rows = rows;
    out.crossbar_cols = cols;

    std::unordered_map<std::size_t, int> cluster_of_unit;
    int next_id = 0;
    std::vector<std::vector<std::size_t>> kept;
    std::vector<std::size_t> soma_only_units;
    for (auto& g : groups)
    {
        bool has_synapses = false;
        for (std::size_t u : g)
            has_synapses |= !units[u].synapse_ids.empty();
        if (!has_synapses)
        {
            // pure spike sources (e.g. an input layer split off whole);
            // they occupy no cells and get homed with their consumers below
            soma_only_units.insert(soma_only_units.end(), g.begin(), g.end());
            continue;
        }
        for (std::size_t u : g)
            cluster_of_unit[u] = next_id;
        kept.push_back(std::move(g));
        ++next_id;
    }

    // implementing cluster of every synapse
    std::vector<int> synapse_cluster(graph.synapses.size(), -1);
    for (std::size_t gi = 0; gi < kept.size(); ++gi)
        for (std::size_t u : kept[gi])
            for (std::size_t sid : units[u].synapse_ids)
                synapse_cluster[sid] = static_cast<int>(gi);

    // home cluster per neuron: where its slice-0 unit landed, or for a
    // displaced soma the cluster receiving most of its outgoing activations
    std::unordered_map<int, int> home_cluster;
    for (const auto& [neuron, unit] : home_unit)
    {
        const auto it = cluster_of_unit.find(unit);
        if (it != cluster_of_unit.end())
            home_cluster[neuron] = it->second;
    }
    std::unordered_map<int, std::map<int, std::uint64_t>> soma_targets;
    for (std::size_t sid = 0; sid < graph.synapses.size(); ++sid)
    {
        const int pre = graph.synapses[sid].pre;
        if (!home_cluster.count(pre))
            soma_targets[pre][synapse_cluster[sid]] += graph.synapses[sid].activations;
    }
    for (std::size_t u : soma_only_units)
    {
        const int neuron = units[u].neuron;
        if (units[u].slice != 0 || home_cluster.count(neuron))
            continue;
        int best = 0;
        std::uint64_t best_act = 0;
        for (const auto& [cl, act] : soma_targets[neuron])
            if (act > best_act)
            {
                best = cl;
                best_act = act;
            }
        home_cluster[neuron] = best;
    }

    for (std::size_t gi = 0; gi < kept.size(); ++gi)
    {
        Cluster c;
        c.id = static_cast<int>(gi);
        std::map<int, std::size_t> pre_index, post_index;
        for (std::size_t u : kept[gi])
        {
            if (!units[u].synapse_ids.empty())
                post_index.emplace(units[u].neuron, 0);
            for (std::size_t sid : units[u].synapse_ids)
                pre_index.emplace(graph.synapses[sid].pre, 0);
        }
        for (auto& [id, idx] : pre_index)
        {
            idx = c.pre_neurons.size();
            c.pre_neurons.push_back(id);
        }
        for (auto& [id, idx] : post_index)
        {
            idx = c.post_neurons.size();
            c.post_neurons.push_back(id);
        }
        for (std::size_t u : kept[gi])
            for (std::size_t sid : units[u].synapse_ids)
            {
                const auto& s = graph.synapses[sid];
                c.synapses.push_back({pre_index.at(s.pre), post_index.at(s.post),
                        s.activations, s.weight});
                const int src_cluster = home_cluster.at(s.pre);
                if (src_cluster != c.id)
                {
                    out.cut_edges.push_back({src_cluster, c.id, s.activations});
                    out.cut_cost += s.activations;
                }
            }
        out.clusters.push_back(std::move(c));
    }

    out.validate(graph);
    return out;
}

void write_clustering_json(const Clustering& clustering, const std::filesystem::path& path)
{
    nlohmann::json clusters = nlohmann::json::array();
    for (const auto& c : clustering.clusters)
        clusters.push_back({{"id", c.id}, {"pre", c.pre_neurons}, {"post", c.post_neurons}});
    const nlohmann::json j = {{"clusters", clusters}, {"cut_cost", clustering.cut_cost}};
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

} // namespace espine::partition
