#pragma once

#include <string>
#include <vector>

#include "mzlock/config.hpp"
#include "mzlock/experiments.hpp"
#include "mzlock/io.hpp"

namespace mzlock {

inline const std::vector<std::string>& sweep_names() {
    static const std::vector<std::string> names = {"fig2", "fig3", "fig5",
                                                   "fig7", "fig8", "fig9"};
    return names;
}

namespace detail {

inline std::vector<double> step_grid(double start, double stop, double step) {
    if (step <= 0.0 || stop < start) throw ConfigError("sweep grid: need step > 0 and stop >= start");
    const int n = static_cast<int>(std::llround((stop - start) / step));
    std::vector<double> g;
    g.reserve(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) g.push_back(start + i * step);
    return g;
}

inline SynthSweepParams synth_params(const RunConfig& cfg, std::uint64_t sweep_id, int jobs) {
    SynthSweepParams p;
    p.config = cfg.build_mzi();
    p.base_source = cfg.laser();
    p.drive = cfg.build_drive();
    p.noise = cfg.build_noise();
    p.duration_s = cfg.synth.duration_s;
    p.sample_rate_hz = cfg.synth.sample_rate_hz;
    p.fft_length = cfg.dsp.fft_length;
    p.window = cfg.window_type();
    p.jobs = jobs;
    p.sweep_id = sweep_id;
    return p;
}

inline void stamp_provenance(SweepResult& r, const RunConfig& cfg) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%llu", static_cast<unsigned long long>(cfg.noise.seed));
    r.set_meta("seed", buf);
    r.set_meta("config_hash", config_hash(cfg));
}

/// Closed-form polarization response: detector-1 intensity at the drive
/// extremes plus balanced depth, for the single-modulator setup and the dual
/// setup at a set of phase fractions, merged on a shared angle grid.
inline SweepResult recipe_polarization_model(const RunConfig& cfg,
                                             const std::vector<double>& fractions) {
    const auto grid =
        step_grid(cfg.sweep.theta_start_deg, cfg.sweep.theta_stop_deg, cfg.sweep.theta_step_deg);
    const MziConfig dual = cfg.build_mzi();
    if (!dual.modulator_b)
        throw ConfigError("mzi.dual_modulator must be true for the polarization model sweep");
    MziConfig single = dual;
    single.modulator_b.reset();
    const LaserSource src = cfg.laser();
    const double amp = cfg.drive.amplitude_volts;

    SweepResult merged;
    merged.columns = {"theta_deg"};
    const auto append = [&](const SweepResult& part, const std::string& suffix) {
        for (std::size_t c = 1; c < part.columns.size(); ++c)
            merged.columns.push_back(part.columns[c] + suffix);
        if (merged.rows.empty()) {
            for (const auto& row : part.rows) merged.rows.push_back({row[0]});
        }
        for (std::size_t i = 0; i < part.rows.size(); ++i)
            merged.rows[i].insert(merged.rows[i].end(), part.rows[i].begin() + 1,
                                  part.rows[i].end());
    };
    append(sweep_polarization_model(single, src, amp, 0.0, grid), "_single");
    for (double f : fractions) {
        char suffix[32];
        std::snprintf(suffix, sizeof suffix, "_dual_f%g", f);
        append(sweep_polarization_model(dual, src, amp, f, grid), suffix);
    }
    return merged;
}

inline SweepResult recipe_sensitivity(const RunConfig& cfg, int jobs) {
    SynthSweepParams p = synth_params(cfg, 9, jobs);
    p.drive.mode = DriveMode::digital;
    SweepResult r = sensitivity_sweep(p, cfg.sweep.powers_w, cfg.sweep.freqs_hz,
                                      cfg.sweep.integrations_s, cfg.sweep.trials);

    // Report both the measured S:N = 1 crossings and, for the longer
    // integrations, the K^(-1/4) prediction from the shortest one.
    std::vector<double> integrations = cfg.sweep.integrations_s;
    std::sort(integrations.begin(), integrations.end());
    const double fs = p.sample_rate_hz;
    const auto frames = [&](double T) {
        return std::max(1, static_cast<int>(std::llround(T * fs) /
                                            static_cast<long long>(p.fft_length)));
    };
    for (double f : cfg.sweep.freqs_hz) {
        const double base_T = integrations.front();
        const double base_cross = sensitivity_crossing_power(r, f, base_T);
        for (double T : integrations) {
            char key[64], value[40];
            const double measured = sensitivity_crossing_power(r, f, T);
            std::snprintf(key, sizeof key, "crossing_w_%ghz_%gs", f, T);
            std::snprintf(value, sizeof value, "%.17g", measured);
            r.set_meta(key, value);
            if (T > base_T) {
                const double predicted =
                    base_cross * std::pow(static_cast<double>(frames(T)) / frames(base_T), -0.25);
                std::snprintf(key, sizeof key, "predicted_w_%ghz_%gs", f, T);
                std::snprintf(value, sizeof value, "%.17g", predicted);
                r.set_meta(key, value);
            }
        }
    }
    return r;
}

}  // namespace detail

/// Run one named sweep recipe. Names map to the experiment operations:
/// fig2/fig3 closed-form polarization response, fig5 modulator frequency
/// response, fig7 amplitude response per wavelength, fig8 synthesized
/// polarization response, fig9 Monte-Carlo sensitivity grid.
inline SweepResult run_sweep(const std::string& name, const RunConfig& cfg, int jobs = 1) {
    SweepResult r;
    if (name == "fig2") {
        r = detail::recipe_polarization_model(cfg, {0.0, 0.5, 1.0});
    } else if (name == "fig3") {
        r = detail::recipe_polarization_model(cfg, cfg.sweep.phase_fractions);
        // fig3 is the modulation-depth story; drop the intensity columns
        SweepResult depths;
        depths.columns = {"theta_deg"};
        std::vector<std::size_t> keep;
        for (std::size_t c = 1; c < r.columns.size(); ++c)
            if (r.columns[c].rfind("balanced_depth_norm_dual_", 0) == 0) {
                keep.push_back(c);
                depths.columns.push_back("depth" + r.columns[c].substr(24));
            }
        for (const auto& row : r.rows) {
            std::vector<double> out{row[0]};
            for (std::size_t c : keep) out.push_back(row[c]);
            depths.rows.push_back(std::move(out));
        }
        r = std::move(depths);
    } else if (name == "fig5") {
        r = sweep_frequency(cfg.build_mzi().modulator_a, cfg.sweep.freqs_hz);
    } else if (name == "fig7") {
        SynthSweepParams p = detail::synth_params(cfg, 7, jobs);
        p.drive.mode = DriveMode::analog;
        r = sweep_amplitude(p,
                            detail::step_grid(cfg.sweep.amplitude_start_v, cfg.sweep.amplitude_stop_v,
                                              cfg.sweep.amplitude_step_v),
                            cfg.sweep.wavelengths_nm);
    } else if (name == "fig8") {
        SynthSweepParams p = detail::synth_params(cfg, 8, jobs);
        p.drive.mode = DriveMode::analog;
        r = sweep_polarization_synth(p, detail::step_grid(cfg.sweep.theta_start_deg,
                                                          cfg.sweep.theta_stop_deg,
                                                          cfg.sweep.theta_step_deg));
    } else if (name == "fig9") {
        r = detail::recipe_sensitivity(cfg, jobs);
    } else {
        std::string known;
        for (const auto& n : sweep_names()) known += (known.empty() ? "" : ", ") + n;
        throw ConfigError("unknown sweep name: " + name + " (valid: " + known + ")");
    }
    r.name = name;
    detail::stamp_provenance(r, cfg);
    return r;
}

}  // namespace mzlock
