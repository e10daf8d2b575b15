#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "espine/circuit.hpp"
#include "espine/grid.hpp"

namespace espine::thermal {

// How the Joule term tracks the cell during amorphization. The programming
// current is extracted from the crystalline-state network solve; as the
// cell resistance rises the crossbar holds the cell voltage rather than
// the current, so the default keeps v = i_prog * r_set fixed and dissipates
// v^2 / r_pcm. constant_current keeps i_prog^2 * r_pcm as printed in the
// source model (it overshoots badly once r_pcm grows).
enum class JouleMode { constant_voltage, constant_current };

// k(V_c) mix. `corrected` is (k_c - k_a)*V_c + k_a so the crystalline end
// maps to k_c; `as_printed` is the literal (k_a - k_c)*V_c + k_a form,
// kept only for comparison runs (it goes negative at V_c = 1).
enum class ConductivityForm { corrected, as_printed };

enum class EnduranceModel { ratio, gamma_fit };

struct PcmParams {
    double t_melt = 810.0;            // K
    double jma_alpha = 2.25;          // JMA fitting constant
    double jma_time_scale = 3e-6;     // s; time normalization of the JMA exponent
    double k_amorphous = 0.002;       // W K^-1 cm^-1
    double k_crystalline = 0.005;     // W K^-1 cm^-1
    double r_set = 10e3;              // ohm
    double r_reset = 200e3;           // ohm
    double thickness_cm = 120e-7;     // 120 nm
    double volume_cm3 = 4e-14;
    double heat_capacity = 1.25;      // J K^-1 cm^-3
    double hop_distance_cm = 10e-7;   // 10 nm
    double hop_length_cm = 0.2e-7;    // 0.2 nm
    double attempt_freq = 1e13;       // Hz
    double u_switch_ev = 2.0;
    double u_fail_ev = 3.0;
    double gamma_fit = 1000.0;
    double boltzmann_ev = 8.617e-5;   // eV/K
    double charge_q = 1.602176634e-19;
    double dt_s = 1e-9;
    double vc_threshold = 0.01;       // amorphization declared below this
    std::size_t max_steps = 1000000;
    JouleMode joule_mode = JouleMode::constant_voltage;
    ConductivityForm conductivity_form = ConductivityForm::corrected;
    EnduranceModel endurance_model = EnduranceModel::ratio;

    void validate() const; // throws ConfigError
};

struct TraceSample {
    double t = 0.0;     // s
    double v_c = 1.0;   // crystalline fraction
    double k = 0.0;     // W K^-1 cm^-1
    double r_pcm = 0.0; // ohm
    double w_d = 0.0;   // W, heat dissipated
    double w_j = 0.0;   // W, Joule heating
    double t_sh = 0.0;  // K
};

struct AmorphizationTrace {
    std::vector<TraceSample> samples;
    double i_prog = 0.0;
    double t_amb = 0.0;
    double amorphization_time = 0.0; // s, threshold crossing
    double t_sh_peak = 0.0;          // K, max over the trace
};

// Step the CF/TC/PCMR/HD/JH/SH loop until the crystalline fraction falls
// below vc_threshold. Within a step the coefficients are frozen and the
// temperature advances by the constant-coefficient solution of the heat
// ODE; the threshold crossing is interpolated inside the final step.
// Throws SolverError when max_steps elapse first.
AmorphizationTrace simulate_reset(double i_prog, double t_amb, const PcmParams& params);

// Peak temperature and amorphization time only, no trace storage.
struct ResetSummary {
    double t_sh_peak = 0.0;
    double amorphization_time = 0.0;
};
ResetSummary simulate_reset_summary(double i_prog, double t_amb, const PcmParams& params);

// ratio: exp((U_f - U_s) / (kB T)); gamma_fit: exp(gamma / T).
double endurance_from_temp(double t_sh_peak, const PcmParams& params);
double endurance_from_temp(double t_sh_peak, const PcmParams& params, EnduranceModel model);

// Switching and failure times at a given temperature and cell write
// voltage. Their ratio is the ratio-model endurance and is independent of
// the voltage term.
double switching_time(double t_sh, double v_write, const PcmParams& params);
double failure_time(double t_sh, double v_write, const PcmParams& params);

struct EnduranceMap {
    Grid<double> t_sh_peak;  // K
    Grid<double> endurance;  // cycles
    double drive_voltage = 0.0;  // provenance: calibrated v_in of the current map
    double t_amb = 0.0;
};

struct EnduranceMapOptions {
    // Cells whose currents agree to this relative tolerance share one
    // thermal simulation.
    double memo_rel_tol = 1e-3;
    unsigned threads = 0; // 0 = hardware concurrency
};

EnduranceMap endurance_map(const circuit::CurrentMap& currents, double t_amb,
        const PcmParams& params, const EnduranceMapOptions& opts = {});

void write_grid_csv(const Grid<double>& grid, const std::filesystem::path& path);
// CSV columns t, v_c, r_pcm, t_sh.
void write_trace_csv(const AmorphizationTrace& trace, const std::filesystem::path& path);

} // namespace espine::thermal
