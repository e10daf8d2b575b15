#include "espine/thermal.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "espine/errors.hpp"
#include "espine/parallel.hpp"

namespace espine::thermal {

namespace {

struct StepState {
    double t = 0.0;
    double v_c = 1.0;
    double t_sh = 0.0;
    double k = 0.0;
    double r_pcm = 0.0;
    double w_j = 0.0;
    double w_d = 0.0;
};

double mix_conductivity(double v_c, const PcmParams& p)
{
    if (p.conductivity_form == ConductivityForm::as_printed)
        return (p.k_amorphous - p.k_crystalline) * v_c + p.k_amorphous;
    return (p.k_crystalline - p.k_amorphous) * v_c + p.k_amorphous;
}

void eval_modules(StepState& s, double i_prog, double v_cell, double t_amb,
        const PcmParams& p)
{
    s.k = mix_conductivity(s.v_c, p);
    s.r_pcm = p.r_set + (1.0 - s.v_c) * (p.r_reset - p.r_set);
    s.w_j = p.joule_mode == JouleMode::constant_voltage
            ? v_cell * v_cell / s.r_pcm
            : i_prog * i_prog * s.r_pcm;
    const double l2 = p.thickness_cm * p.thickness_cm;
    s.w_d = s.k * p.volume_cm3 / l2 * (s.t_sh - t_amb);
}

template <bool Record>
AmorphizationTrace run_reset(double i_prog, double t_amb, const PcmParams& p)
{
    if (i_prog <= 0.0)
        throw ConfigError("simulate_reset: i_prog must be > 0");
    p.validate();

    const double l2 = p.thickness_cm * p.thickness_cm;
    const double v_cell = i_prog * p.r_set; // cell voltage at the solved operating point

    AmorphizationTrace trace;
    trace.i_prog = i_prog;
    trace.t_amb = t_amb;

    StepState s;
    s.t_sh = t_amb;
    eval_modules(s, i_prog, v_cell, t_amb, p);
    double peak = s.t_sh;
    if constexpr (Record)
        trace.samples.push_back({s.t, s.v_c, s.k, s.r_pcm, s.w_d, s.w_j, s.t_sh});

    for (std::size_t step = 0; step < p.max_steps; ++step)
    {
        // constant-coefficient solution of the heat ODE across this step
        const double t_target = s.w_j * l2 / (s.k * p.volume_cm3) + t_amb;
        const double decay = std::exp(-s.k * p.dt_s / (l2 * p.heat_capacity));
        const double t_sh_next = t_target - (t_target - s.t_sh) * decay;
        const double t_next = s.t + p.dt_s;
        const double v_c_next = std::exp(-p.jma_alpha * (t_sh_next - t_amb) / p.t_melt
                * (t_next / p.jma_time_scale));

        if (v_c_next < p.vc_threshold)
        {
            // interpolate the threshold crossing inside the step
            double f = 1.0;
            if (s.v_c > p.vc_threshold && v_c_next > 0.0)
                f = (std::log(s.v_c) - std::log(p.vc_threshold))
                        / (std::log(s.v_c) - std::log(v_c_next));
            const double t_cross = s.t + f * p.dt_s;
            const double t_sh_cross = s.t_sh + f * (t_sh_next - s.t_sh);
            peak = std::max(peak, t_sh_cross);
            trace.amorphization_time = t_cross;
            trace.t_sh_peak = peak;
            if constexpr (Record)
            {
                StepState e = s;
                e.t = t_cross;
                e.v_c = p.vc_threshold;
                e.t_sh = t_sh_cross;
                eval_modules(e, i_prog, v_cell, t_amb, p);
                trace.samples.push_back({e.t, e.v_c, e.k, e.r_pcm, e.w_d, e.w_j, e.t_sh});
            }
            return trace;
        }

        s.t = t_next;
        s.t_sh = t_sh_next;
        s.v_c = v_c_next;
        eval_modules(s, i_prog, v_cell, t_amb, p);
        peak = std::max(peak, s.t_sh);
        if constexpr (Record)
            trace.samples.push_back({s.t, s.v_c, s.k, s.r_pcm, s.w_d, s.w_j, s.t_sh});
    }

    std::ostringstream oss;
    oss << "simulate_reset: no amorphization after " << p.max_steps
        << " steps (V_c = " << s.v_c << ", i_prog = " << i_prog << " A)";
    throw SolverError(oss.str());
}

} // namespace

void PcmParams::validate() const
{
    if (u_fail_ev <= u_switch_ev)
        throw ConfigError("pcm: u_fail_ev must exceed u_switch_ev");
    if (vc_threshold <= 0.0 || vc_threshold >= 1.0)
        throw ConfigError("pcm: vc_threshold must lie in (0, 1)");
    if (dt_s <= 0.0)
        throw ConfigError("pcm: dt_s must be > 0");
    if (jma_time_scale <= 0.0)
        throw ConfigError("pcm: jma_time_scale must be > 0");
    if (t_melt <= 0.0 || jma_alpha <= 0.0 || k_amorphous <= 0.0 || k_crystalline <= 0.0
            || r_set <= 0.0 || r_reset <= r_set || thickness_cm <= 0.0
            || volume_cm3 <= 0.0 || heat_capacity <= 0.0 || hop_distance_cm <= 0.0
            || hop_length_cm <= 0.0 || attempt_freq <= 0.0 || boltzmann_ev <= 0.0
            || gamma_fit <= 0.0)
        throw ConfigError("pcm: physical constants must be > 0");
}

AmorphizationTrace simulate_reset(double i_prog, double t_amb, const PcmParams& params)
{
    return run_reset<true>(i_prog, t_amb, params);
}

ResetSummary simulate_reset_summary(double i_prog, double t_amb, const PcmParams& params)
{
    const AmorphizationTrace t = run_reset<false>(i_prog, t_amb, params);
    return {t.t_sh_peak, t.amorphization_time};
}

double endurance_from_temp(double t_sh_peak, const PcmParams& params, EnduranceModel model)
{
    if (t_sh_peak <= 0.0)
        throw ConfigError("endurance_from_temp: temperature must be > 0");
    if (model == EnduranceModel::gamma_fit)
        return std::exp(params.gamma_fit / t_sh_peak);
    return std::exp((params.u_fail_ev - params.u_switch_ev)
            / (params.boltzmann_ev * t_sh_peak));
}

double endurance_from_temp(double t_sh_peak, const PcmParams& params)
{
    return endurance_from_temp(t_sh_peak, params, params.endurance_model);
}

namespace {

double hop_time(double t_sh, double v_write, double u_ev, const PcmParams& p)
{
    // q*V expressed in eV cancels the elementary charge against kB in eV/K
    const double prefactor = 2.0 * p.hop_distance_cm / (p.attempt_freq * p.hop_length_cm);
    const double barrier = u_ev / (p.boltzmann_ev * t_sh);
    const double drift = v_write * p.hop_length_cm
            / (2.0 * p.boltzmann_ev * t_sh * p.hop_distance_cm);
    return prefactor * std::exp(barrier) * std::exp(-drift);
}

} // namespace

double switching_time(double t_sh, double v_write, const PcmParams& params)
{
    return hop_time(t_sh, v_write, params.u_switch_ev, params);
}

double failure_time(double t_sh, double v_write, const PcmParams& params)
{
    return hop_time(t_sh, v_write, params.u_fail_ev, params);
}

EnduranceMap endurance_map(const circuit::CurrentMap& currents, double t_amb,
        const PcmParams& params, const EnduranceMapOptions& opts)
{
    params.validate();
    const auto& grid = currents.currents;
    const std::size_t cells = grid.size();

    // quantize currents so equal (or near-equal) cells share one simulation
    const auto bucket_of = [&](double i) -> long long {
        if (opts.memo_rel_tol <= 0.0)
        {
            long long bits;
            static_assert(sizeof bits == sizeof i);
            std::memcpy(&bits, &i, sizeof bits);
            return bits;
        }
        return std::llround(std::log(i) / std::log1p(opts.memo_rel_tol));
    };

    std::unordered_map<long long, std::size_t> bucket_index;
    std::vector<double> rep_current;
    std::vector<std::size_t> cell_bucket(cells);
    for (std::size_t k = 0; k < cells; ++k)
    {
        const double i = grid.data()[k];
        if (i <= 0.0)
            throw SolverError("endurance_map: non-positive cell current at index "
                    + std::to_string(k));
        const long long key = bucket_of(i);
        auto [it, inserted] = bucket_index.try_emplace(key, rep_current.size());
        if (inserted)
            rep_current.push_back(i); // first-seen current represents the bucket
        cell_bucket[k] = it->second;
    }

    std::vector<ResetSummary> sims(rep_current.size());
    std::vector<std::string> errors(rep_current.size());
    parallel_for(rep_current.size(), opts.threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t u = b; u < e; ++u)
        {
            try
            {
                sims[u] = simulate_reset_summary(rep_current[u], t_amb, params);
            }
            catch (const std::exception& ex)
            {
                errors[u] = ex.what();
            }
        }
    });
    for (std::size_t u = 0; u < rep_current.size(); ++u)
    {
        if (!errors[u].empty())
        {
            for (std::size_t k = 0; k < cells; ++k)
                if (cell_bucket[k] == u)
                {
                    std::ostringstream oss;
                    oss << "endurance_map: cell (" << k / grid.cols() << ","
                        << k % grid.cols() << "): " << errors[u];
                    throw SolverError(oss.str());
                }
        }
    }

    EnduranceMap out;
    out.t_sh_peak = Grid<double>(grid.rows(), grid.cols());
    out.endurance = Grid<double>(grid.rows(), grid.cols());
    out.drive_voltage = currents.drive_voltage;
    out.t_amb = t_amb;
    for (std::size_t k = 0; k < cells; ++k)
    {
        const double peak = sims[cell_bucket[k]].t_sh_peak;
        out.t_sh_peak.data()[k] = peak;
        out.endurance.data()[k] = endurance_from_temp(peak, params);
    }
    return out;
}

void write_grid_csv(const Grid<double>& grid, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot open " + path.string() + " for writing");
    char buf[32];
    for (std::size_t i = 0; i < grid.rows(); ++i)
    {
        for (std::size_t j = 0; j < grid.cols(); ++j)
        {
            std::snprintf(buf, sizeof buf, "%.17g", grid(i, j));
            out << buf << (j + 1 < grid.cols() ? "," : "");
        }
        out << '\n';
    }
}

void write_trace_csv(const AmorphizationTrace& trace, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot open " + path.string() + " for writing");
    out << "t,v_c,r_pcm,t_sh\n";
    char buf[160];
    for (const auto& s : trace.samples)
    {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", s.t, s.v_c, s.r_pcm,
                s.t_sh);
        out << buf;
    }
}

} // namespace espine::thermal
