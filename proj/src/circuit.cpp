#include "espine/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "espine/errors.hpp"
#include "espine/kernels.hpp"

namespace espine::circuit {

namespace {

constexpr double kNode65Rw = 2.5;
constexpr double kNode65Rb = 1.0;
constexpr double kNode16Rw = 10.0;
constexpr double kNode16Rb = 3.8;

// Full-network conductance system over wordline nodes w[i*m+j] and bitline
// nodes b[i*m+j]. Wordline i forms a chain driver-(gw)-w[i,0]-(gw)-...-w[i,m-1];
// bitline j a chain b[0,j]-(gb)-...-b[n-1,j]-(gb)-ground. Each cell couples
// w and b with its branch conductance. A zero unit resistance collapses that
// side's nodes onto the source (v_in) or ground rail and the system shrinks
// to the remaining side.
class NetworkSystem {
public:
    NetworkSystem(const CrossbarConfig& cfg, const CellStateGrid& states)
            : n_(cfg.rows)
            , m_(cfg.cols)
            , word_shorted_(cfg.r_word_unit == 0.0)
            , bit_shorted_(cfg.r_bit_unit == 0.0)
            , gw_(word_shorted_ ? 0.0 : 1.0 / cfg.r_word_unit)
            , gb_(bit_shorted_ ? 0.0 : 1.0 / cfg.r_bit_unit)
    {
        const std::size_t cells = n_ * m_;
        const double g_leak = cfg.leak_conductance();
        g_series_.resize(cells);
        g_cell_.resize(cells);
        for (std::size_t i = 0; i < n_; ++i)
        {
            for (std::size_t j = 0; j < m_; ++j)
            {
                const double gs = 1.0 / (states(i, j) + cfg.r_access_on);
                g_series_[i * m_ + j] = gs;
                g_cell_[i * m_ + j] = gs + g_leak;
            }
        }

        if (!word_shorted_)
        {
            diag_w_.assign(cells, 0.0);
            for (std::size_t i = 0; i < n_; ++i)
            {
                for (std::size_t j = 0; j < m_; ++j)
                {
                    double d = g_cell_[i * m_ + j];
                    d += gw_;              // left neighbor or driver tap
                    if (j + 1 < m_)
                        d += gw_;
                    diag_w_[i * m_ + j] = d;
                }
            }
        }
        if (!bit_shorted_)
        {
            diag_b_.assign(cells, 0.0);
            for (std::size_t i = 0; i < n_; ++i)
            {
                for (std::size_t j = 0; j < m_; ++j)
                {
                    double d = g_cell_[i * m_ + j];
                    d += gb_;              // downward neighbor or ground tap
                    if (i > 0)
                        d += gb_;
                    diag_b_[i * m_ + j] = d;
                }
            }
        }

        unknowns_ = 0;
        if (!word_shorted_)
            unknowns_ += cells;
        if (!bit_shorted_)
            unknowns_ += cells;

        inv_diag_.resize(unknowns_);
        std::size_t off = 0;
        if (!word_shorted_)
        {
            for (std::size_t k = 0; k < cells; ++k)
                inv_diag_[off + k] = 1.0 / diag_w_[k];
            off += cells;
        }
        if (!bit_shorted_)
        {
            for (std::size_t k = 0; k < cells; ++k)
                inv_diag_[off + k] = 1.0 / diag_b_[k];
        }
    }

    std::size_t unknowns() const { return unknowns_; }
    bool word_shorted() const { return word_shorted_; }
    bool bit_shorted() const { return bit_shorted_; }
    const std::vector<double>& g_series() const { return g_series_; }
    const std::vector<double>& g_cell() const { return g_cell_; }

    // rhs for drive voltage v_in.
    std::vector<double> rhs(double v_in) const
    {
        const std::size_t cells = n_ * m_;
        std::vector<double> r(unknowns_, 0.0);
        std::size_t off = 0;
        if (!word_shorted_)
        {
            for (std::size_t i = 0; i < n_; ++i)
                r[off + i * m_] = gw_ * v_in;
            off += cells;
        }
        else if (!bit_shorted_)
        {
            // wordline rail at v_in feeds every cell branch directly
            for (std::size_t k = 0; k < cells; ++k)
                r[off + k] = g_cell_[k] * v_in;
        }
        return r;
    }

    // y = A x
    void apply(const double* x, double* y) const
    {
        namespace ker = espine::kernels;
        const std::size_t cells = n_ * m_;
        const double* xw = word_shorted_ ? nullptr : x;
        const double* xb = bit_shorted_ ? nullptr : (word_shorted_ ? x : x + cells);
        double* yw = word_shorted_ ? nullptr : y;
        double* yb = bit_shorted_ ? nullptr : (word_shorted_ ? y : y + cells);

        if (xw)
        {
            ker::vmul(diag_w_.data(), xw, yw, cells);
            if (m_ > 1)
            {
                for (std::size_t i = 0; i < n_; ++i)
                {
                    double* row_y = yw + i * m_;
                    const double* row_x = xw + i * m_;
                    ker::axpy(-gw_, row_x + 1, row_y, m_ - 1);
                    ker::axpy(-gw_, row_x, row_y + 1, m_ - 1);
                }
            }
            if (xb)
                ker::vmulsub(g_cell_.data(), xb, yw, cells);
        }
        if (xb)
        {
            ker::vmul(diag_b_.data(), xb, yb, cells);
            if (n_ > 1)
            {
                // downward neighbor sits one full row ahead in memory
                ker::axpy(-gb_, xb + m_, yb, cells - m_);
                ker::axpy(-gb_, xb, yb + m_, cells - m_);
            }
            if (xw)
                ker::vmulsub(g_cell_.data(), xw, yb, cells);
        }
    }

    // z = M^-1 r (Jacobi)
    void precondition(const double* r, double* z) const
    {
        espine::kernels::vmul(inv_diag_.data(), r, z, unknowns_);
    }

    // Extract per-cell series-branch currents from a solution vector.
    Grid<double> cell_currents(const std::vector<double>& x, double v_in) const
    {
        const std::size_t cells = n_ * m_;
        Grid<double> out(n_, m_);
        const double* w = nullptr;
        const double* b = nullptr;
        if (!word_shorted_)
        {
            w = x.data();
            if (!bit_shorted_)
                b = x.data() + cells;
        }
        else if (!bit_shorted_)
        {
            b = x.data();
        }
        for (std::size_t k = 0; k < cells; ++k)
        {
            const double vw = w ? w[k] : v_in;
            const double vb = b ? b[k] : 0.0;
            out.data()[k] = (vw - vb) * g_series_[k];
        }
        return out;
    }

private:
    std::size_t n_;
    std::size_t m_;
    bool word_shorted_;
    bool bit_shorted_;
    double gw_;
    double gb_;
    std::size_t unknowns_ = 0;
    std::vector<double> g_series_;
    std::vector<double> g_cell_;
    std::vector<double> diag_w_;
    std::vector<double> diag_b_;
    std::vector<double> inv_diag_;
};

double norm2(const std::vector<double>& v)
{
    return std::sqrt(espine::kernels::dot(v.data(), v.data(), v.size()));
}

// Jacobi-preconditioned CG. `x` doubles as the warm start.
void pcg_solve(const NetworkSystem& sys, const std::vector<double>& rhs,
        std::vector<double>& x, const SolveOptions& opts)
{
    namespace ker = espine::kernels;
    const std::size_t n = sys.unknowns();
    if (n == 0)
        return;
    x.resize(n, 0.0);

    const double rhs_norm = norm2(rhs);
    if (rhs_norm == 0.0)
    {
        std::fill(x.begin(), x.end(), 0.0);
        return;
    }

    std::vector<double> r(n), z(n), p(n), q(n);
    sys.apply(x.data(), r.data());
    for (std::size_t i = 0; i < n; ++i)
        r[i] = rhs[i] - r[i];
    sys.precondition(r.data(), z.data());
    p = z;
    double rz = ker::dot(r.data(), z.data(), n);

    double rel = norm2(r) / rhs_norm;
    std::size_t it = 0;
    while (rel > opts.rel_tolerance && it < opts.max_iterations)
    {
        sys.apply(p.data(), q.data());
        const double pq = ker::dot(p.data(), q.data(), n);
        if (pq <= 0.0)
            throw SolverError("pcg: operator lost positive definiteness (singular system?)");
        const double alpha = rz / pq;
        ker::axpy(alpha, p.data(), x.data(), n);
        ker::axpy(-alpha, q.data(), r.data(), n);
        ++it;
        if (it % 64 == 0)
        {
            // refresh the residual from scratch to cancel drift
            sys.apply(x.data(), r.data());
            for (std::size_t i = 0; i < n; ++i)
                r[i] = rhs[i] - r[i];
        }
        sys.precondition(r.data(), z.data());
        const double rz_next = ker::dot(r.data(), z.data(), n);
        ker::xpay(z.data(), rz_next / rz, p.data(), n);
        rz = rz_next;
        rel = norm2(r) / rhs_norm;
    }

    // true residual gate; the spec bound is 1e-10 relative
    sys.apply(x.data(), r.data());
    for (std::size_t i = 0; i < n; ++i)
        r[i] = rhs[i] - r[i];
    rel = norm2(r) / rhs_norm;
    if (rel > 1e-10)
    {
        std::ostringstream oss;
        oss << "pcg: no convergence after " << it << " iterations, relative residual "
            << rel;
        throw SolverError(oss.str());
    }
}

Grid<double> isolated_currents(const CrossbarConfig& cfg, const CellStateGrid& states,
        double v_in)
{
    Grid<double> out(cfg.rows, cfg.cols);
    for (std::size_t i = 0; i < cfg.rows; ++i)
    {
        for (std::size_t j = 0; j < cfg.cols; ++j)
        {
            const double dist_w = static_cast<double>(j + 1);
            const double dist_b = static_cast<double>(cfg.rows - i);
            const double r_path = cfg.r_word_unit * dist_w + states(i, j)
                    + cfg.r_access_on + cfg.r_bit_unit * dist_b;
            out(i, j) = v_in / r_path;
        }
    }
    return out;
}

} // namespace

double CrossbarConfig::leak_conductance() const
{
    return g_leak_ref * std::exp2((t_ambient - 298.0) / leak_doubling_K);
}

void CrossbarConfig::validate() const
{
    if (rows < 1 || cols < 1)
        throw ConfigError("crossbar: rows and cols must be >= 1");
    if (r_word_unit < 0.0 || r_bit_unit < 0.0)
        throw ConfigError("crossbar: unit parasitic resistances must be >= 0");
    if (r_set <= 0.0 || r_reset <= 0.0 || r_access_on <= 0.0)
        throw ConfigError("crossbar: cell and access resistances must be > 0");
    if (r_reset <= r_set)
        throw ConfigError("crossbar: r_reset must exceed r_set");
    if (g_leak_ref < 0.0 || leak_doubling_K <= 0.0)
        throw ConfigError("crossbar: bad leakage parameters");
    if (t_ambient < 200.0)
        throw ConfigError("crossbar: t_ambient must be >= 200 K");
}

std::vector<int> supported_nodes()
{
    return {65, 45, 32, 16};
}

CrossbarConfig corner_params(int node_nm, double t_ambient)
{
    const auto nodes = supported_nodes();
    if (std::find(nodes.begin(), nodes.end(), node_nm) == nodes.end())
    {
        std::ostringstream oss;
        oss << "unsupported technology node " << node_nm << " nm; supported:";
        for (int n : nodes)
            oss << ' ' << n;
        throw ConfigError(oss.str());
    }

    // geometric interpolation in node size between the published endpoints
    const double t = std::log(node_nm / 65.0) / std::log(16.0 / 65.0);
    CrossbarConfig cfg;
    cfg.node_nm = node_nm;
    cfg.r_word_unit = kNode65Rw * std::pow(kNode16Rw / kNode65Rw, t);
    cfg.r_bit_unit = kNode65Rb * std::pow(kNode16Rb / kNode65Rb, t);
    cfg.t_ambient = t_ambient;
    cfg.validate();
    return cfg;
}

void CellStateGrid::validate(const CrossbarConfig& cfg) const
{
    if (rows() != cfg.rows || cols() != cfg.cols)
        throw ConfigError("cell states: dimensions do not match crossbar config");
    for (std::size_t i = 0; i < rows(); ++i)
        for (std::size_t j = 0; j < cols(); ++j)
            if (values_(i, j) < cfg.r_set || values_(i, j) > cfg.r_reset)
            {
                std::ostringstream oss;
                oss << "cell states: value at (" << i << "," << j
                    << ") outside [r_set, r_reset]";
                throw ConfigError(oss.str());
            }
}

CellStateGrid all_set_states(const CrossbarConfig& cfg)
{
    return CellStateGrid(cfg.rows, cfg.cols, cfg.r_set);
}

std::string solver_mode_name(SolverMode mode)
{
    return mode == SolverMode::full_network ? "full-network" : "isolated-cell";
}

std::pair<std::size_t, std::size_t> CurrentMap::shortest_path_cell() const
{
    return {currents.rows() - 1, 0};
}

std::pair<std::size_t, std::size_t> CurrentMap::longest_path_cell() const
{
    return {0, currents.cols() - 1};
}

double CurrentMap::shortest_path_current() const
{
    auto [r, c] = shortest_path_cell();
    return currents(r, c);
}

double CurrentMap::longest_path_current() const
{
    auto [r, c] = longest_path_cell();
    return currents(r, c);
}

CurrentMap solve_currents(const CrossbarConfig& cfg, const CellStateGrid& states,
        double v_in, SolverMode mode, const SolveOptions& opts)
{
    cfg.validate();
    states.validate(cfg);
    if (v_in <= 0.0)
        throw ConfigError("solve_currents: v_in must be > 0");

    CurrentMap out;
    out.drive_voltage = v_in;
    out.mode = mode;
    if (mode == SolverMode::isolated_cell)
    {
        out.currents = isolated_currents(cfg, states, v_in);
        return out;
    }

    NetworkSystem sys(cfg, states);
    std::vector<double> x(sys.unknowns(), 0.0);
    pcg_solve(sys, sys.rhs(v_in), x, opts);
    out.currents = sys.cell_currents(x, v_in);
    return out;
}

CalibrationResult calibrate_drive(const CrossbarConfig& cfg, const CellStateGrid& states,
        double target_a, SolverMode mode, double v_max, double rel_tol)
{
    cfg.validate();
    states.validate(cfg);
    if (target_a <= 0.0)
        throw ConfigError("calibrate_drive: target current must be > 0");

    const auto long_current = [&](const CurrentMap& map) {
        return map.longest_path_current();
    };

    if (mode == SolverMode::isolated_cell)
    {
        // still bisected for uniformity with the network mode
        double lo = 0.0, hi = v_max;
        CurrentMap at_max = solve_currents(cfg, states, v_max, mode);
        if (long_current(at_max) < target_a * (1.0 - rel_tol))
        {
            std::ostringstream oss;
            oss << "calibration failed: max reachable longest-path current "
                << long_current(at_max) << " A at " << v_max << " V, target " << target_a;
            throw SolverError(oss.str());
        }
        CalibrationResult res;
        CurrentMap cur;
        for (std::size_t it = 0; it < 200; ++it)
        {
            const double mid = 0.5 * (lo + hi);
            cur = solve_currents(cfg, states, mid, mode);
            ++res.bisection_steps;
            const double i_long = long_current(cur);
            if (std::abs(i_long - target_a) <= rel_tol * target_a)
            {
                res.v_in = mid;
                res.map = cur;
                return res;
            }
            (i_long < target_a ? lo : hi) = mid;
        }
        throw SolverError("calibration failed: bisection did not converge");
    }

    NetworkSystem sys(cfg, states);
    std::vector<double> x(sys.unknowns(), 0.0);
    SolveOptions opts;
    double prev_v = 0.0;

    const auto solve_at = [&](double v) {
        if (prev_v > 0.0 && !x.empty())
        {
            const double s = v / prev_v;
            for (double& xi : x)
                xi *= s;
        }
        pcg_solve(sys, sys.rhs(v), x, opts);
        prev_v = v;
        CurrentMap map;
        map.drive_voltage = v;
        map.mode = SolverMode::full_network;
        map.currents = sys.cell_currents(x, v);
        return map;
    };

    CurrentMap at_max = solve_at(v_max);
    if (long_current(at_max) < target_a * (1.0 - rel_tol))
    {
        std::ostringstream oss;
        oss << "calibration failed: max reachable longest-path current "
            << long_current(at_max) << " A at " << v_max << " V, target " << target_a;
        throw SolverError(oss.str());
    }

    CalibrationResult res;
    double lo = 0.0, hi = v_max;
    for (std::size_t it = 0; it < 200; ++it)
    {
        const double mid = 0.5 * (lo + hi);
        CurrentMap cur = solve_at(mid);
        ++res.bisection_steps;
        const double i_long = long_current(cur);
        if (std::abs(i_long - target_a) <= rel_tol * target_a)
        {
            res.v_in = mid;
            res.map = std::move(cur);
            return res;
        }
        (i_long < target_a ? lo : hi) = mid;
    }
    throw SolverError("calibration failed: bisection did not converge");
}

AsymmetryReport current_asymmetry(const CurrentMap& map)
{
    AsymmetryReport rep;
    rep.shortest_cell = map.shortest_path_cell();
    rep.longest_cell = map.longest_path_cell();
    const double i_short = map.shortest_path_current();
    const double i_long = map.longest_path_current();
    rep.fraction = i_short == 0.0 ? 0.0 : (i_short - i_long) / i_short;
    return rep;
}

void write_current_csv(const CurrentMap& map, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot open " + path.string() + " for writing");
    char buf[32];
    for (std::size_t i = 0; i < map.currents.rows(); ++i)
    {
        for (std::size_t j = 0; j < map.currents.cols(); ++j)
        {
            std::snprintf(buf, sizeof buf, "%.17g", map.currents(i, j));
            out << buf << (j + 1 < map.currents.cols() ? "," : "");
        }
        out << '\n';
    }
}

void write_calibration_json(const CalibrationResult& cal, const std::filesystem::path& path)
{
    const auto rep = current_asymmetry(cal.map);
    nlohmann::json j = {
            {"v_in", cal.v_in},
            {"i_short", cal.map.shortest_path_current()},
            {"i_long", cal.map.longest_path_current()},
            {"asymmetry", rep.fraction},
            {"mode", solver_mode_name(cal.map.mode)},
    };
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

} // namespace espine::circuit
