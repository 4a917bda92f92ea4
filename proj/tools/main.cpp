#include <cstdio>
#include <ctime>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "mzlock/io.hpp"
#include "mzlock/recipes.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

std::string config_key_reference() {
    // Descriptions keyed by full path; the key list itself is generated from
    // the canonical serializer so the reference cannot drift out of sync.
    static const std::map<std::string, std::string> notes = {
        {"scene.wavelength_nm", "laser wavelength"},
        {"scene.power_w", "laser optical power at the instrument"},
        {"scene.polarization_angle_deg", "laser linear polarization angle"},
        {"scene.coherence_length_m", "laser coherence length"},
        {"scene.background_power_w", "broadband background power (0 disables)"},
        {"scene.background_coherence_length_m", "background coherence length"},
        {"mzi.split_ratio", "beamsplitter intensity split (0..1)"},
        {"mzi.path_difference_m", "arm path-length difference"},
        {"mzi.detector_responsivity", "detector output per watt"},
        {"mzi.visibility_profile", "fringe visibility model: gaussian | lorentzian"},
        {"mzi.allow_non_orthogonal", "permit modulator axes that are not 90 deg apart"},
        {"mzi.dual_modulator", "install the second modulator"},
        {"mzi.modulator_a.axis_angle_deg", "modulator a optical axis angle"},
        {"mzi.modulator_a.v_pi_volts", "half-wave voltage at the reference wavelength"},
        {"mzi.modulator_a.v_pi_reference_wavelength_nm", "wavelength where v_pi applies"},
        {"mzi.modulator_a.degradation_factor", "response scale for an aged device (0..1)"},
        {"mzi.modulator_a.min_wavelength_nm", "lower edge of the operating band"},
        {"mzi.modulator_a.max_wavelength_nm", "upper edge of the operating band"},
        {"mzi.modulator_a.rolloff_coeffs", "quartic frequency-response coefficients c0..c4"},
        {"mzi.modulator_b.axis_angle_deg", "modulator b optical axis angle"},
        {"mzi.modulator_b.v_pi_volts", "half-wave voltage at the reference wavelength"},
        {"mzi.modulator_b.v_pi_reference_wavelength_nm", "wavelength where v_pi applies"},
        {"mzi.modulator_b.degradation_factor", "response scale for an aged device (0..1)"},
        {"mzi.modulator_b.min_wavelength_nm", "lower edge of the operating band"},
        {"mzi.modulator_b.max_wavelength_nm", "upper edge of the operating band"},
        {"mzi.modulator_b.rolloff_coeffs", "quartic frequency-response coefficients c0..c4"},
        {"drive.mode", "drive waveform family: digital | analog"},
        {"drive.carrier_freq_hz", "polarity-reversal carrier frequency"},
        {"drive.modulation_freq_hz", "optical modulation frequency"},
        {"drive.amplitude_volts", "analog modulation amplitude"},
        {"drive.phase_offset_fraction", "modulator b phase offset, fraction of pi"},
        {"drive.duty_low_v", "digital drive low level"},
        {"drive.duty_high_v", "digital drive high level"},
        {"noise.rms_w", "additive detector noise rms per sample"},
        {"noise.seed", "master random seed"},
        {"noise.scintillation_enabled", "enable slow multiplicative intensity fading"},
        {"noise.scintillation_cutoff_hz", "scintillation low-pass cutoff"},
        {"noise.scintillation_rms", "scintillation relative rms"},
        {"dsp.fft_length", "FFT frame length (power of two)"},
        {"dsp.window", "analysis window: hann | rect"},
        {"dsp.guard_bins", "search half-width around the target bin"},
        {"dsp.noise_estimator", "floor estimator: median | mean_excluding"},
        {"dsp.threshold", "snr threshold for the detected flag"},
        {"dsp.target_freq_hz", "detection target frequency"},
        {"dsp.integration_s", "spectral integration time"},
        {"synth.duration_s", "synthesized record length"},
        {"synth.sample_rate_hz", "synthesized sample rate"},
        {"sweep.trials", "Monte-Carlo trials per sensitivity grid point"},
        {"sweep.theta_start_deg", "polarization grid start"},
        {"sweep.theta_stop_deg", "polarization grid stop (inclusive)"},
        {"sweep.theta_step_deg", "polarization grid step"},
        {"sweep.amplitude_start_v", "amplitude grid start"},
        {"sweep.amplitude_stop_v", "amplitude grid stop (inclusive)"},
        {"sweep.amplitude_step_v", "amplitude grid step"},
        {"sweep.wavelengths_nm", "wavelengths for the amplitude sweep"},
        {"sweep.freqs_hz", "modulation frequency grid"},
        {"sweep.powers_w", "laser power grid for sensitivity"},
        {"sweep.integrations_s", "integration times for sensitivity"},
        {"sweep.phase_fractions", "phase fractions for the depth sweep"},
    };

    const auto doc = mzlock::to_json(mzlock::RunConfig{});
    std::string out = "Config keys (JSON file sections; override with --set section.key=value):\n";
    const std::function<void(const mzlock::detail::ordered_json&, const std::string&)> walk =
        [&](const mzlock::detail::ordered_json& node, const std::string& prefix) {
            for (const auto& item : node.items()) {
                const std::string path = prefix.empty() ? item.key() : prefix + "." + item.key();
                if (item.value().is_object()) {
                    walk(item.value(), path);
                    continue;
                }
                const auto note = notes.find(path);
                out += "  " + path + " = " + item.value().dump();
                if (note != notes.end()) out += "  (" + note->second + ")";
                out += "\n";
            }
        };
    walk(doc, "");
    return out;
}

mzlock::RunConfig make_config(const std::string& path, const std::vector<std::string>& sets) {
    mzlock::RunConfig cfg;
    if (!path.empty()) cfg = mzlock::load_config(path);
    for (const auto& s : sets) mzlock::apply_override(cfg, s);
    mzlock::apply_env_seed(cfg);
    return cfg;
}

std::string default_stamp() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
    return buf;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interferometric laser detection simulator: synthesize two-channel "
                 "interferograms, run spectral detection, and batch experiment sweeps."};
    app.require_subcommand(1);
    app.footer(config_key_reference());

    std::string config_path;
    std::vector<std::string> sets;
    int jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs < 1) jobs = 1;
    app.add_option("-c,--config", config_path, "JSON config file (defaults used when omitted)");
    app.add_option("--set", sets, "override a config key, section.key=value (repeatable)");
    app.add_option("-j,--jobs", jobs, "worker threads for sweeps")->capture_default_str();

    auto* synth_cmd = app.add_subcommand("synth", "synthesize an interferogram file");
    synth_cmd->fallthrough();
    std::string synth_out;
    std::string synth_format = "csv";
    synth_cmd->add_option("-o,--out", synth_out, "output path")->required();
    synth_cmd->add_option("--format", synth_format, "file format")
        ->check(CLI::IsMember({"csv", "bin"}))
        ->capture_default_str();
    synth_cmd->footer(config_key_reference());

    auto* detect_cmd =
        app.add_subcommand("detect", "run detection on an interferogram file, print the result row");
    detect_cmd->fallthrough();
    std::string detect_in;
    double detect_target = -1.0, detect_threshold = -1.0, detect_integration = -1.0;
    detect_cmd->add_option("input", detect_in, "interferogram file (csv or bin)")->required();
    detect_cmd->add_option("-t,--target", detect_target, "target frequency, Hz (default dsp.target_freq_hz)");
    detect_cmd->add_option("--threshold", detect_threshold, "snr threshold (default dsp.threshold)");
    detect_cmd->add_option("-T,--integration", detect_integration,
                           "integration time, s (default dsp.integration_s)");
    detect_cmd->footer(config_key_reference());

    auto* sweep_cmd = app.add_subcommand("sweep", "run named experiment sweeps, write CSV files");
    sweep_cmd->fallthrough();
    std::vector<std::string> sweep_names_arg;
    std::string out_dir = ".";
    std::string stamp;
    sweep_cmd->add_option("names", sweep_names_arg, "sweep names (fig2 fig3 fig5 fig7 fig8 fig9)")
        ->required();
    sweep_cmd->add_option("-d,--out-dir", out_dir, "output directory")->capture_default_str();
    sweep_cmd->add_option("--stamp", stamp, "filename stamp (default: current UTC time)");
    sweep_cmd->footer(config_key_reference());

    auto* cal_cmd = app.add_subcommand(
        "calibrate", "derive the noise rms and rolloff constants, write them as JSON");
    cal_cmd->fallthrough();
    std::string cal_out = "calibration.json";
    int cal_trials = 40;
    cal_cmd->add_option("-o,--out", cal_out, "constants output path")->capture_default_str();
    cal_cmd->add_option("--trials", cal_trials, "Monte-Carlo trials per probe point")
        ->capture_default_str();
    cal_cmd->footer(config_key_reference());

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        const mzlock::RunConfig cfg = make_config(config_path, sets);

        if (*synth_cmd) {
            const auto ifg =
                mzlock::synthesize(cfg.build_scene(), cfg.build_mzi(), cfg.build_drive(),
                                   cfg.synth.duration_s, cfg.synth.sample_rate_hz, cfg.build_noise());
            for (const auto& w : ifg.meta.warnings) std::cerr << "warning: " << w << "\n";
            if (synth_format == "bin")
                mzlock::write_interferogram_bin(synth_out, ifg);
            else
                mzlock::write_interferogram_csv(synth_out, ifg);
            std::cout << synth_out << "\n";
        } else if (*detect_cmd) {
            const auto ifg = mzlock::read_interferogram(detect_in);
            const double target = detect_target > 0 ? detect_target : cfg.dsp.target_freq_hz;
            const double threshold = detect_threshold >= 0 ? detect_threshold : cfg.dsp.threshold;
            const double integration =
                detect_integration > 0 ? detect_integration : cfg.dsp.integration_s;
            const auto result =
                mzlock::detect(ifg, target, threshold, integration, cfg.dsp.fft_length,
                               cfg.window_type(), cfg.dsp.guard_bins, cfg.estimator_type());
            std::cout << mzlock::detection_result_header() << "\n"
                      << mzlock::detection_result_row(result) << "\n";
        } else if (*sweep_cmd) {
            const std::string tag = stamp.empty() ? default_stamp() : stamp;
            for (const auto& name : sweep_names_arg) {
                const auto result = mzlock::run_sweep(name, cfg, jobs);
                const std::string path = out_dir + "/" + name + "_" + tag + ".csv";
                mzlock::write_sweep_csv(path, result);
                std::cout << path << "\n";
            }
        } else if (*cal_cmd) {
            const auto coeffs =
                mzlock::calibrate_rolloff(cfg.synth.sample_rate_hz, cfg.dsp.fft_length);
            mzlock::MziConfig mzi = cfg.build_mzi();
            mzi.modulator_a.rolloff_coeffs = coeffs;
            if (mzi.modulator_b) mzi.modulator_b->rolloff_coeffs = coeffs;
            mzlock::DriveWaveform drive = cfg.build_drive();
            drive.mode = mzlock::DriveMode::digital;
            const double rms = mzlock::calibrate_noise_rms(mzi, cfg.laser(), drive, cal_trials,
                                                           cfg.noise.seed);
            mzlock::detail::ordered_json doc;
            doc["noise_rms_w"] = rms;
            doc["rolloff_coeffs"] = coeffs;
            doc["anchor_power_w"] = mzlock::kCalibrationPowerW;
            doc["anchor_freq_hz"] = mzlock::kCalibrationFreqHz;
            doc["trials"] = cal_trials;
            doc["seed"] = cfg.noise.seed;
            std::ofstream out(cal_out);
            if (!out) throw mzlock::IoError("cannot open for writing: " + cal_out);
            out << doc.dump(2) << "\n";
            if (!out) throw mzlock::IoError("write failed: " + cal_out);
            std::cout << doc.dump(2) << "\n";
        }
    } catch (const mzlock::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
