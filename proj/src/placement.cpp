#include "espine/placement.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "espine/errors.hpp"

namespace espine::placement {

namespace {

// neuron -> max activation over the given synapse role
std::vector<std::pair<int, std::uint64_t>> sort_keys(const partition::Cluster& cluster,
        bool pre_side)
{
    std::map<int, std::uint64_t> key;
    for (const auto& s : cluster.synapses)
    {
        const int id = pre_side ? cluster.pre_neurons[s.pre_index]
                                : cluster.post_neurons[s.post_index];
        auto [it, inserted] = key.try_emplace(id, s.activations);
        if (!inserted)
            it->second = std::max(it->second, s.activations);
    }
    const auto& order = pre_side ? cluster.pre_neurons : cluster.post_neurons;
    std::vector<std::pair<int, std::uint64_t>> out;
    out.reserve(order.size());
    for (int id : order)
        out.emplace_back(id, key.count(id) ? key.at(id) : 0);
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second)
            return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

void fill_cells(Placement& p, const partition::Cluster& cluster)
{
    std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> acc;
    for (const auto& s : cluster.synapses)
    {
        const std::size_t r = p.row_of.at(cluster.pre_neurons[s.pre_index]);
        const std::size_t c = p.col_of.at(cluster.post_neurons[s.post_index]);
        acc[{r, c}] += s.activations;
    }
    p.cells.reserve(acc.size());
    for (const auto& [rc, act] : acc)
        p.cells.push_back({rc.first, rc.second, act});
}

void check_fit(const partition::Cluster& cluster, std::size_t rows, std::size_t cols)
{
    if (cluster.pre_neurons.size() > rows || cluster.post_neurons.size() > cols)
    {
        std::ostringstream oss;
        oss << "cluster " << cluster.id << " (" << cluster.pre_neurons.size() << "x"
            << cluster.post_neurons.size() << ") does not fit a " << rows << "x" << cols
            << " crossbar";
        throw InfeasibleError(oss.str());
    }
}

} // namespace

Placement place_sorted(const partition::Cluster& cluster,
        const thermal::EnduranceMap& endurance)
{
    const std::size_t rows = endurance.endurance.rows();
    const std::size_t cols = endurance.endurance.cols();
    check_fit(cluster, rows, cols);

    // rank rows by the endurance of their farthest-column cell, best first
    std::vector<std::size_t> row_rank(rows), col_rank(cols);
    std::iota(row_rank.begin(), row_rank.end(), 0);
    std::iota(col_rank.begin(), col_rank.end(), 0);
    std::stable_sort(row_rank.begin(), row_rank.end(), [&](std::size_t a, std::size_t b) {
        return endurance.endurance(a, cols - 1) > endurance.endurance(b, cols - 1);
    });
    std::stable_sort(col_rank.begin(), col_rank.end(), [&](std::size_t a, std::size_t b) {
        return endurance.endurance(0, a) > endurance.endurance(0, b);
    });

    Placement p;
    p.cluster_id = cluster.id;
    const auto pres = sort_keys(cluster, true);
    const auto posts = sort_keys(cluster, false);
    for (std::size_t i = 0; i < pres.size(); ++i)
        p.row_of[pres[i].first] = row_rank[i];
    for (std::size_t i = 0; i < posts.size(); ++i)
        p.col_of[posts[i].first] = col_rank[i];
    p.rows_used = pres.size();
    p.cols_used = posts.size();
    fill_cells(p, cluster);
    return p;
}

Placement place_arbitrary(const partition::Cluster& cluster, std::size_t rows,
        std::size_t cols, std::uint64_t seed)
{
    check_fit(cluster, rows, cols);
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> row_perm(rows), col_perm(cols);
    std::iota(row_perm.begin(), row_perm.end(), 0);
    std::iota(col_perm.begin(), col_perm.end(), 0);
    std::shuffle(row_perm.begin(), row_perm.end(), rng);
    std::shuffle(col_perm.begin(), col_perm.end(), rng);

    Placement p;
    p.cluster_id = cluster.id;
    for (std::size_t i = 0; i < cluster.pre_neurons.size(); ++i)
        p.row_of[cluster.pre_neurons[i]] = row_perm[i];
    for (std::size_t i = 0; i < cluster.post_neurons.size(); ++i)
        p.col_of[cluster.post_neurons[i]] = col_perm[i];
    p.rows_used = cluster.pre_neurons.size();
    p.cols_used = cluster.post_neurons.size();
    fill_cells(p, cluster);
    return p;
}

Placement place_identity(const partition::Cluster& cluster, std::size_t rows,
        std::size_t cols)
{
    check_fit(cluster, rows, cols);
    Placement p;
    p.cluster_id = cluster.id;
    for (std::size_t i = 0; i < cluster.pre_neurons.size(); ++i)
        p.row_of[cluster.pre_neurons[i]] = i;
    for (std::size_t i = 0; i < cluster.post_neurons.size(); ++i)
        p.col_of[cluster.post_neurons[i]] = i;
    p.rows_used = cluster.pre_neurons.size();
    p.cols_used = cluster.post_neurons.size();
    fill_cells(p, cluster);
    return p;
}

LifetimeReport min_eff_life(const std::vector<int>& tile_of_cluster,
        const std::vector<Placement>& placements,
        const std::vector<const thermal::EnduranceMap*>& tile_maps,
        LifetimeAccumulation accumulation)
{
    if (tile_of_cluster.size() != placements.size())
        throw ConfigError("min_eff_life: one placement per cluster required");
    const std::size_t n_tiles = tile_maps.size();
    for (int t : tile_of_cluster)
        if (t < 0 || static_cast<std::size_t>(t) >= n_tiles)
            throw ConfigError("min_eff_life: cluster assigned to a tile outside the mesh");

    constexpr double inf = std::numeric_limits<double>::infinity();
    LifetimeReport report;
    report.min_lifetime = inf;

    for (std::size_t tile = 0; tile < n_tiles; ++tile)
    {
        const auto& emap = tile_maps[tile]->endurance;
        const std::size_t rows = emap.rows(), cols = emap.cols();

        TileLifetime tl;
        tl.tile = static_cast<int>(tile);
        tl.lifetime = Grid<double>(rows, cols, inf);

        Grid<std::uint64_t> acts(rows, cols, 0);
        Grid<double> quotient_sum(rows, cols, 0.0); // per_cluster_sum mode
        Grid<char> touched(rows, cols, 0);

        for (std::size_t x = 0; x < placements.size(); ++x)
        {
            if (static_cast<std::size_t>(tile_of_cluster[x]) != tile)
                continue;
            const Placement& p = placements[x];
            if (p.rows_used > rows || p.cols_used > cols)
            {
                std::ostringstream oss;
                oss << "tile " << tile << " overflow: cluster " << p.cluster_id
                    << " needs " << p.rows_used << "x" << p.cols_used << " on a " << rows
                    << "x" << cols << " crossbar";
                throw InfeasibleError(oss.str());
            }
            for (const auto& cell : p.cells)
            {
                if (cell.activations == 0)
                    continue;
                acts(cell.row, cell.col) += cell.activations;
                quotient_sum(cell.row, cell.col) += emap(cell.row, cell.col)
                        / static_cast<double>(cell.activations);
                touched(cell.row, cell.col) = 1;
            }
        }

        for (std::size_t r = 0; r < rows; ++r)
        {
            for (std::size_t c = 0; c < cols; ++c)
            {
                if (!touched(r, c))
                    continue;
                const double life = accumulation == LifetimeAccumulation::shared_writes
                        ? emap(r, c) / static_cast<double>(acts(r, c))
                        : quotient_sum(r, c);
                tl.lifetime(r, c) = life;
                if (!tl.occupied || life < tl.min_lifetime)
                {
                    tl.min_lifetime = life;
                    tl.argmin_row = r;
                    tl.argmin_col = c;
                }
                tl.occupied = true;
            }
        }

        if (tl.occupied && tl.min_lifetime < report.min_lifetime)
        {
            report.min_lifetime = tl.min_lifetime;
            report.argmin_tile = tl.tile;
        }
        report.tiles.push_back(std::move(tl));
    }

    if (report.argmin_tile < 0)
        throw InfeasibleError("min_eff_life: no cell carries activations");
    return report;
}

void write_placements_json(const std::vector<int>& tile_of_cluster,
        const std::vector<Placement>& placements, const std::filesystem::path& path)
{
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t x = 0; x < placements.size(); ++x)
    {
        nlohmann::json rows = nlohmann::json::object();
        nlohmann::json cols = nlohmann::json::object();
        for (const auto& [id, r] : placements[x].row_of)
            rows[std::to_string(id)] = r;
        for (const auto& [id, c] : placements[x].col_of)
            cols[std::to_string(id)] = c;
        arr.push_back({{"tile", tile_of_cluster[x]}, {"cluster", placements[x].cluster_id},
                {"rows", rows}, {"cols", cols}});
    }
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot open " + path.string() + " for writing");
    out << arr.dump(2) << '\n';
}

void write_lifetime_csv(const TileLifetime& tile, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot open " + path.string() + " for writing");
    char buf[32];
    for (std::size_t r = 0; r < tile.lifetime.rows(); ++r)
    {
        for (std::size_t c = 0; c < tile.lifetime.cols(); ++c)
        {
            std::snprintf(buf, sizeof buf, "%.17g", tile.lifetime(r, c));
            out << buf << (c + 1 < tile.lifetime.cols() ? "," : "");
        }
        out << '\n';
    }
}

} // namespace espine::placement
