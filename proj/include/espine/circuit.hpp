#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "espine/grid.hpp"

namespace espine::circuit {

// 1T1R crossbar geometry and electrical parameters. Wordlines are driven
// from the left edge, bitlines are grounded at the bottom edge, so the
// shortest current path ends at cell (rows-1, 0) and the longest at
// (0, cols-1).
struct CrossbarConfig {
    std::size_t rows = 128;
    std::size_t cols = 128;
    int node_nm = 65;
    double r_word_unit = 2.5;    // ohm per wordline segment
    double r_bit_unit = 1.0;     // ohm per bitline segment
    double r_set = 10e3;         // ohm, crystalline cell
    double r_reset = 200e3;      // ohm, amorphous cell
    double r_access_on = 36e3;   // ohm, access transistor in series
    double g_leak_ref = 10e-9;   // S per cell at 298 K
    double leak_doubling_K = 20.0;
    double t_ambient = 298.0;    // K

    // Per-cell leakage conductance at the configured ambient temperature:
    // g_leak_ref * 2^((T - 298K) / leak_doubling_K).
    double leak_conductance() const;

    void validate() const; // throws ConfigError
};

// Technology corners with published wordline/bitline unit resistances at
// the 65 nm and 16 nm endpoints; 45/32 nm are geometric interpolations in
// node size between the endpoints.
CrossbarConfig corner_params(int node_nm, double t_ambient);

std::vector<int> supported_nodes();

// Per-cell resistance state, each value in [r_set, r_reset].
class CellStateGrid {
public:
    CellStateGrid(std::size_t rows, std::size_t cols, double value)
            : values_(rows, cols, value)
    {
    }
    explicit CellStateGrid(Grid<double> values) : values_(std::move(values)) {}

    const Grid<double>& values() const { return values_; }
    double operator()(std::size_t r, std::size_t c) const { return values_(r, c); }
    double& operator()(std::size_t r, std::size_t c) { return values_(r, c); }
    std::size_t rows() const { return values_.rows(); }
    std::size_t cols() const { return values_.cols(); }

    void validate(const CrossbarConfig& cfg) const; // throws ConfigError

private:
    Grid<double> values_;
};

// All cells crystalline, the state used for endurance maps.
CellStateGrid all_set_states(const CrossbarConfig& cfg);

enum class SolverMode {
    full_network,  // every cell conducts; sneak loading included
    isolated_cell, // analytic series path per cell, rest of array open
};

std::string solver_mode_name(SolverMode mode);

struct CurrentMap {
    Grid<double> currents; // A, per cell
    double drive_voltage = 0.0;
    SolverMode mode = SolverMode::full_network;

    std::pair<std::size_t, std::size_t> shortest_path_cell() const;
    std::pair<std::size_t, std::size_t> longest_path_cell() const;
    double shortest_path_current() const;
    double longest_path_current() const;
};

struct SolveOptions {
    double rel_tolerance = 1e-11; // PCG target; final residual must be <= 1e-10
    std::size_t max_iterations = 200000;
};

// Solve per-cell currents at drive voltage v_in.
//
// full_network assembles the conductance system over the 2*rows*cols
// wordline/bitline nodes (cell branch = series r_cell + r_access_on with
// the leakage conductance in parallel) and solves it with Jacobi-
// preconditioned conjugate gradients; the reported cell current is the
// one through the series branch. isolated_cell returns
// v_in / (r_word_unit*dist_w + r_cell + r_access_on + r_bit_unit*dist_b)
// with distances in segment counts along the drive and sense paths.
CurrentMap solve_currents(const CrossbarConfig& cfg, const CellStateGrid& states,
        double v_in, SolverMode mode = SolverMode::full_network,
        const SolveOptions& opts = {});

struct CalibrationResult {
    double v_in = 0.0;
    CurrentMap map;
    std::size_t bisection_steps = 0;
};

// Bisect the drive voltage until the longest-path cell current matches
// `target_a` to relative tolerance 1e-6. Throws SolverError when the
// target is unreachable below `v_max`.
CalibrationResult calibrate_drive(const CrossbarConfig& cfg, const CellStateGrid& states,
        double target_a, SolverMode mode = SolverMode::full_network, double v_max = 20.0,
        double rel_tol = 1e-6);

struct AsymmetryReport {
    double fraction = 0.0; // (i_short - i_long) / i_short
    std::pair<std::size_t, std::size_t> shortest_cell;
    std::pair<std::size_t, std::size_t> longest_cell;
};

AsymmetryReport current_asymmetry(const CurrentMap& map);

// Row-major CSV, amperes, full precision.
void write_current_csv(const CurrentMap& map, const std::filesystem::path& path);

// {v_in, i_short, i_long, asymmetry, mode}
void write_calibration_json(const CalibrationResult& cal, const std::filesystem::path& path);

} // namespace espine::circuit
