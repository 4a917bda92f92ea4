#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mzlock/dsp.hpp"
#include "mzlock/synth.hpp"

namespace mzlock {

/// Raised for malformed configuration input; the message names the offending
/// key so the CLI can report it and exit with the config-error status.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Full run configuration. Angles are degrees in the document and converted
/// when the physics objects are built; every other unit is spelled out in
/// the key name.
struct RunConfig {
    struct SceneSection {
        double wavelength_nm = 635.0;
        double power_w = 1e-6;
        double polarization_angle_deg = 45.0;
        double coherence_length_m = 0.01;
        double background_power_w = 0.0;
        double background_coherence_length_m = 1e-6;
    } scene;

    struct ModulatorSection {
        double axis_angle_deg = 0.0;
        double v_pi_volts = 2.5;
        double v_pi_reference_wavelength_nm = 635.0;
        double degradation_factor = 1.0;
        double min_wavelength_nm = 420.0;
        double max_wavelength_nm = 700.0;
        std::array<double, 5> rolloff_coeffs = kDefaultRolloffCoeffs;
    };

    struct MziSection {
        double split_ratio = 0.5;
        double path_difference_m = 5e-6;
        double detector_responsivity = 1.0;
        std::string visibility_profile = "gaussian";
        bool allow_non_orthogonal = false;
        bool dual_modulator = true;
        ModulatorSection modulator_a{};
        ModulatorSection modulator_b{.axis_angle_deg = 90.0};
    } mzi;

    struct DriveSection {
        std::string mode = "digital";
        double carrier_freq_hz = 2000.0;
        double modulation_freq_hz = 20.0;
        double amplitude_volts = 2.5;
        double phase_offset_fraction = 0.0;
        double duty_low_v = 0.0;
        double duty_high_v = 5.0;
    } drive;

    struct NoiseSection {
        double rms_w = kDefaultNoiseRmsW;
        std::uint64_t seed = 12345;
        bool scintillation_enabled = false;
        double scintillation_cutoff_hz = 5.0;
        double scintillation_rms = 0.1;
    } noise;

    struct DspSection {
        std::uint64_t fft_length = 16384;
        std::string window = "hann";
        int guard_bins = 2;
        std::string noise_estimator = "median";
        double threshold = 1.0;
        double target_freq_hz = 20.0;
        double integration_s = 1.0;
    } dsp;

    struct SynthSection {
        double duration_s = 1.0;
        double sample_rate_hz = 20000.0;
    } synth;

    struct SweepSection {
        int trials = 10;
        double theta_start_deg = 0.0;
        double theta_stop_deg = 360.0;
        double theta_step_deg = 5.0;
        double amplitude_start_v = 0.0;
        double amplitude_stop_v = 5.0;
        double amplitude_step_v = 0.25;
        std::vector<double> wavelengths_nm = {635.0, 532.0, 405.0};
        std::vector<double> freqs_hz = {16.0, 20.0, 32.0, 48.0, 72.0};
        std::vector<double> powers_w = {1e-9, 1e-8, 1e-7, 1e-6};
        std::vector<double> integrations_s = {1.0, 5.0, 10.0};
        std::vector<double> phase_fractions = {0.0, 0.25, 0.5, 0.75, 1.0};
    } sweep;

    LaserSource laser() const {
        LaserSource s;
        s.wavelength_nm = scene.wavelength_nm;
        s.power_w = scene.power_w;
        s.polarization_angle_rad = scene.polarization_angle_deg * kPi / 180.0;
        s.coherence_length_m = scene.coherence_length_m;
        return s;
    }

    Scene build_scene() const {
        Scene sc;
        sc.lasers.push_back(laser());
        if (scene.background_power_w > 0.0)
            sc.background = BackgroundSource{.power_w = scene.background_power_w,
                                             .coherence_length_m = scene.background_coherence_length_m};
        return sc;
    }

    MziConfig build_mzi() const {
        const auto device = [](const ModulatorSection& m) {
            LcmDevice d;
            d.axis_angle_rad = m.axis_angle_deg * kPi / 180.0;
            d.v_pi_volts = m.v_pi_volts;
            d.v_pi_reference_wavelength_nm = m.v_pi_reference_wavelength_nm;
            d.degradation_factor = m.degradation_factor;
            d.min_wavelength_nm = m.min_wavelength_nm;
            d.max_wavelength_nm = m.max_wavelength_nm;
            d.rolloff_coeffs = m.rolloff_coeffs;
            return d;
        };
        MziConfig c;
        c.split_ratio = mzi.split_ratio;
        c.path_difference_m = mzi.path_difference_m;
        c.detector_responsivity = mzi.detector_responsivity;
        c.allow_non_orthogonal = mzi.allow_non_orthogonal;
        if (mzi.visibility_profile == "gaussian")
            c.visibility_profile = VisibilityProfile::gaussian;
        else if (mzi.visibility_profile == "lorentzian")
            c.visibility_profile = VisibilityProfile::lorentzian;
        else
            throw ConfigError("mzi.visibility_profile: expected \"gaussian\" or \"lorentzian\"");
        c.modulator_a = device(mzi.modulator_a);
        if (mzi.dual_modulator)
            c.modulator_b = device(mzi.modulator_b);
        else
            c.modulator_b.reset();
        return c;
    }

    DriveWaveform build_drive() const {
        DriveWaveform d;
        if (drive.mode == "digital")
            d.mode = DriveMode::digital;
        else if (drive.mode == "analog")
            d.mode = DriveMode::analog;
        else
            throw ConfigError("drive.mode: expected \"digital\" or \"analog\"");
        d.carrier_freq_hz = drive.carrier_freq_hz;
        d.modulation_freq_hz = drive.modulation_freq_hz;
        d.amplitude_volts = drive.amplitude_volts;
        d.phase_offset_fraction = drive.phase_offset_fraction;
        d.duty_low_v = drive.duty_low_v;
        d.duty_high_v = drive.duty_high_v;
        return d;
    }

    NoiseModel build_noise() const {
        NoiseModel n;
        n.rms_w = noise.rms_w;
        n.seed = noise.seed;
        n.scintillation_enabled = noise.scintillation_enabled;
        n.scintillation_cutoff_hz = noise.scintillation_cutoff_hz;
        n.scintillation_rms = noise.scintillation_rms;
        return n;
    }

    WindowType window_type() const {
        if (dsp.window == "hann") return WindowType::hann;
        if (dsp.window == "rect") return WindowType::rect;
        throw ConfigError("dsp.window: expected \"hann\" or \"rect\"");
    }

    NoiseEstimator estimator_type() const {
        if (dsp.noise_estimator == "median") return NoiseEstimator::median;
        if (dsp.noise_estimator == "mean_excluding") return NoiseEstimator::mean_excluding;
        throw ConfigError("dsp.noise_estimator: expected \"median\" or \"mean_excluding\"");
    }
};

namespace detail {

using ordered_json = nlohmann::ordered_json;

template <typename T>
inline T fetch(const ordered_json& obj, const char* path, const char* key, const T& fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string(path) + "." + key + ": wrong value type");
    }
}

inline void reject_unknown(const ordered_json& obj, const char* path,
                           std::initializer_list<const char*> known) {
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* k : known)
            if (item.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError("unknown config key: " + std::string(path) + "." + item.key());
    }
}

inline void parse_modulator(const ordered_json& obj, const char* path,
                            RunConfig::ModulatorSection& m) {
    reject_unknown(obj, path,
                   {"axis_angle_deg", "v_pi_volts", "v_pi_reference_wavelength_nm",
                    "degradation_factor", "min_wavelength_nm", "max_wavelength_nm",
                    "rolloff_coeffs"});
    m.axis_angle_deg = fetch(obj, path, "axis_angle_deg", m.axis_angle_deg);
    m.v_pi_volts = fetch(obj, path, "v_pi_volts", m.v_pi_volts);
    m.v_pi_reference_wavelength_nm =
        fetch(obj, path, "v_pi_reference_wavelength_nm", m.v_pi_reference_wavelength_nm);
    m.degradation_factor = fetch(obj, path, "degradation_factor", m.degradation_factor);
    m.min_wavelength_nm = fetch(obj, path, "min_wavelength_nm", m.min_wavelength_nm);
    m.max_wavelength_nm = fetch(obj, path, "max_wavelength_nm", m.max_wavelength_nm);
    if (obj.contains("rolloff_coeffs")) {
        const auto v = fetch(obj, path, "rolloff_coeffs", std::vector<double>{});
        if (v.size() != m.rolloff_coeffs.size())
            throw ConfigError(std::string(path) + ".rolloff_coeffs: expected 5 values");
        std::copy(v.begin(), v.end(), m.rolloff_coeffs.begin());
    }
}

}  // namespace detail

/// Apply a parsed JSON document on top of cfg. Unknown keys anywhere in the
/// document are rejected by full path.
inline void apply_json(RunConfig& cfg, const detail::ordered_json& doc) {
    using detail::fetch;
    using detail::reject_unknown;
    if (!doc.is_object()) throw ConfigError("config root must be an object");
    reject_unknown(doc, "<root>", {"scene", "mzi", "drive", "noise", "dsp", "synth", "sweep"});

    if (doc.contains("scene")) {
        const auto& o = doc.at("scene");
        auto& s = cfg.scene;
        reject_unknown(o, "scene",
                       {"wavelength_nm", "power_w", "polarization_angle_deg", "coherence_length_m",
                        "background_power_w", "background_coherence_length_m"});
        s.wavelength_nm = fetch(o, "scene", "wavelength_nm", s.wavelength_nm);
        s.power_w = fetch(o, "scene", "power_w", s.power_w);
        s.polarization_angle_deg = fetch(o, "scene", "polarization_angle_deg", s.polarization_angle_deg);
        s.coherence_length_m = fetch(o, "scene", "coherence_length_m", s.coherence_length_m);
        s.background_power_w = fetch(o, "scene", "background_power_w", s.background_power_w);
        s.background_coherence_length_m =
            fetch(o, "scene", "background_coherence_length_m", s.background_coherence_length_m);
    }
    if (doc.contains("mzi")) {
        const auto& o = doc.at("mzi");
        auto& m = cfg.mzi;
        reject_unknown(o, "mzi",
                       {"split_ratio", "path_difference_m", "detector_responsivity",
                        "visibility_profile", "allow_non_orthogonal", "dual_modulator",
                        "modulator_a", "modulator_b"});
        m.split_ratio = fetch(o, "mzi", "split_ratio", m.split_ratio);
        m.path_difference_m = fetch(o, "mzi", "path_difference_m", m.path_difference_m);
        m.detector_responsivity = fetch(o, "mzi", "detector_responsivity", m.detector_responsivity);
        m.visibility_profile = fetch(o, "mzi", "visibility_profile", m.visibility_profile);
        m.allow_non_orthogonal = fetch(o, "mzi", "allow_non_orthogonal", m.allow_non_orthogonal);
        m.dual_modulator = fetch(o, "mzi", "dual_modulator", m.dual_modulator);
        if (o.contains("modulator_a"))
            detail::parse_modulator(o.at("modulator_a"), "mzi.modulator_a", m.modulator_a);
        if (o.contains("modulator_b"))
            detail::parse_modulator(o.at("modulator_b"), "mzi.modulator_b", m.modulator_b);
    }
    if (doc.contains("drive")) {
        const auto& o = doc.at("drive");
        auto& d = cfg.drive;
        reject_unknown(o, "drive",
                       {"mode", "carrier_freq_hz", "modulation_freq_hz", "amplitude_volts",
                        "phase_offset_fraction", "duty_low_v", "duty_high_v"});
        d.mode = fetch(o, "drive", "mode", d.mode);
        d.carrier_freq_hz = fetch(o, "drive", "carrier_freq_hz", d.carrier_freq_hz);
        d.modulation_freq_hz = fetch(o, "drive", "modulation_freq_hz", d.modulation_freq_hz);
        d.amplitude_volts = fetch(o, "drive", "amplitude_volts", d.amplitude_volts);
        d.phase_offset_fraction = fetch(o, "drive", "phase_offset_fraction", d.phase_offset_fraction);
        d.duty_low_v = fetch(o, "drive", "duty_low_v", d.duty_low_v);
        d.duty_high_v = fetch(o, "drive", "duty_high_v", d.duty_high_v);
    }
    if (doc.contains("noise")) {
        const auto& o = doc.at("noise");
        auto& n = cfg.noise;
        reject_unknown(o, "noise",
                       {"rms_w", "seed", "scintillation_enabled", "scintillation_cutoff_hz",
                        "scintillation_rms"});
        n.rms_w = fetch(o, "noise", "rms_w", n.rms_w);
        n.seed = fetch(o, "noise", "seed", n.seed);
        n.scintillation_enabled = fetch(o, "noise", "scintillation_enabled", n.scintillation_enabled);
        n.scintillation_cutoff_hz =
            fetch(o, "noise", "scintillation_cutoff_hz", n.scintillation_cutoff_hz);
        n.scintillation_rms = fetch(o, "noise", "scintillation_rms", n.scintillation_rms);
    }
    if (doc.contains("dsp")) {
        const auto& o = doc.at("dsp");
        auto& d = cfg.dsp;
        reject_unknown(o, "dsp",
                       {"fft_length", "window", "guard_bins", "noise_estimator", "threshold",
                        "target_freq_hz", "integration_s"});
        d.fft_length = fetch(o, "dsp", "fft_length", d.fft_length);
        d.window = fetch(o, "dsp", "window", d.window);
        d.guard_bins = fetch(o, "dsp", "guard_bins", d.guard_bins);
        d.noise_estimator = fetch(o, "dsp", "noise_estimator", d.noise_estimator);
        d.threshold = fetch(o, "dsp", "threshold", d.threshold);
        d.target_freq_hz = fetch(o, "dsp", "target_freq_hz", d.target_freq_hz);
        d.integration_s = fetch(o, "dsp", "integration_s", d.integration_s);
    }
    if (doc.contains("synth")) {
        const auto& o = doc.at("synth");
        auto& s = cfg.synth;
        reject_unknown(o, "synth", {"duration_s", "sample_rate_hz"});
        s.duration_s = fetch(o, "synth", "duration_s", s.duration_s);
        s.sample_rate_hz = fetch(o, "synth", "sample_rate_hz", s.sample_rate_hz);
    }
    if (doc.contains("sweep")) {
        const auto& o = doc.at("sweep");
        auto& s = cfg.sweep;
        reject_unknown(o, "sweep",
                       {"trials", "theta_start_deg", "theta_stop_deg", "theta_step_deg",
                        "amplitude_start_v", "amplitude_stop_v", "amplitude_step_v",
                        "wavelengths_nm", "freqs_hz", "powers_w", "integrations_s",
                        "phase_fractions"});
        s.trials = fetch(o, "sweep", "trials", s.trials);
        s.theta_start_deg = fetch(o, "sweep", "theta_start_deg", s.theta_start_deg);
        s.theta_stop_deg = fetch(o, "sweep", "theta_stop_deg", s.theta_stop_deg);
        s.theta_step_deg = fetch(o, "sweep", "theta_step_deg", s.theta_step_deg);
        s.amplitude_start_v = fetch(o, "sweep", "amplitude_start_v", s.amplitude_start_v);
        s.amplitude_stop_v = fetch(o, "sweep", "amplitude_stop_v", s.amplitude_stop_v);
        s.amplitude_step_v = fetch(o, "sweep", "amplitude_step_v", s.amplitude_step_v);
        s.wavelengths_nm = fetch(o, "sweep", "wavelengths_nm", s.wavelengths_nm);
        s.freqs_hz = fetch(o, "sweep", "freqs_hz", s.freqs_hz);
        s.powers_w = fetch(o, "sweep", "powers_w", s.powers_w);
        s.integrations_s = fetch(o, "sweep", "integrations_s", s.integrations_s);
        s.phase_fractions = fetch(o, "sweep", "phase_fractions", s.phase_fractions);
    }
}

inline RunConfig parse_config_text(const std::string& text) {
    detail::ordered_json doc;
    try {
        doc = detail::ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    RunConfig cfg;
    apply_json(cfg, doc);
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

/// Apply one `section.key=value` override (value parsed as JSON, with bare
/// words accepted as strings). Unknown keys are rejected like file input.
inline void apply_override(RunConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must look like section.key=value: " + assignment);
    const std::string path = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);

    detail::ordered_json leaf;
    try {
        leaf = detail::ordered_json::parse(value);
    } catch (const nlohmann::json::exception&) {
        leaf = value;  // unquoted string such as mode=analog
    }
    detail::ordered_json doc = leaf;
    std::size_t end = path.size();
    while (true) {
        const auto dot = path.rfind('.', end - 1);
        const std::string key =
            dot == std::string::npos ? path.substr(0, end) : path.substr(dot + 1, end - dot - 1);
        if (key.empty()) throw ConfigError("bad override path: " + path);
        detail::ordered_json wrapped;
        wrapped[key] = std::move(doc);
        doc = std::move(wrapped);
        if (dot == std::string::npos) break;
        end = dot;
    }
    apply_json(cfg, doc);
}

/// MZLOCK_SEED, when set, wins over the config seed.
inline void apply_env_seed(RunConfig& cfg) {
    if (const char* env = std::getenv("MZLOCK_SEED")) {
        char* tail = nullptr;
        const unsigned long long v = std::strtoull(env, &tail, 10);
        if (tail == env || *tail != '\0') throw ConfigError("MZLOCK_SEED must be an integer");
        cfg.noise.seed = static_cast<std::uint64_t>(v);
    }
}

/// Canonical serialization: fixed section and key order, full precision.
inline detail::ordered_json to_json(const RunConfig& cfg) {
    using detail::ordered_json;
    const auto modulator = [](const RunConfig::ModulatorSection& m) {
        ordered_json o;
        o["axis_angle_deg"] = m.axis_angle_deg;
        o["v_pi_volts"] = m.v_pi_volts;
        o["v_pi_reference_wavelength_nm"] = m.v_pi_reference_wavelength_nm;
        o["degradation_factor"] = m.degradation_factor;
        o["min_wavelength_nm"] = m.min_wavelength_nm;
        o["max_wavelength_nm"] = m.max_wavelength_nm;
        o["rolloff_coeffs"] = m.rolloff_coeffs;
        return o;
    };
    ordered_json doc;
    auto& sc = doc["scene"];
    sc["wavelength_nm"] = cfg.scene.wavelength_nm;
    sc["power_w"] = cfg.scene.power_w;
    sc["polarization_angle_deg"] = cfg.scene.polarization_angle_deg;
    sc["coherence_length_m"] = cfg.scene.coherence_length_m;
    sc["background_power_w"] = cfg.scene.background_power_w;
    sc["background_coherence_length_m"] = cfg.scene.background_coherence_length_m;
    auto& mz = doc["mzi"];
    mz["split_ratio"] = cfg.mzi.split_ratio;
    mz["path_difference_m"] = cfg.mzi.path_difference_m;
    mz["detector_responsivity"] = cfg.mzi.detector_responsivity;
    mz["visibility_profile"] = cfg.mzi.visibility_profile;
    mz["allow_non_orthogonal"] = cfg.mzi.allow_non_orthogonal;
    mz["dual_modulator"] = cfg.mzi.dual_modulator;
    mz["modulator_a"] = modulator(cfg.mzi.modulator_a);
    mz["modulator_b"] = modulator(cfg.mzi.modulator_b);
    auto& dr = doc["drive"];
    dr["mode"] = cfg.drive.mode;
    dr["carrier_freq_hz"] = cfg.drive.carrier_freq_hz;
    dr["modulation_freq_hz"] = cfg.drive.modulation_freq_hz;
    dr["amplitude_volts"] = cfg.drive.amplitude_volts;
    dr["phase_offset_fraction"] = cfg.drive.phase_offset_fraction;
    dr["duty_low_v"] = cfg.drive.duty_low_v;
    dr["duty_high_v"] = cfg.drive.duty_high_v;
    auto& no = doc["noise"];
    no["rms_w"] = cfg.noise.rms_w;
    no["seed"] = cfg.noise.seed;
    no["scintillation_enabled"] = cfg.noise.scintillation_enabled;
    no["scintillation_cutoff_hz"] = cfg.noise.scintillation_cutoff_hz;
    no["scintillation_rms"] = cfg.noise.scintillation_rms;
    auto& ds = doc["dsp"];
    ds["fft_length"] = cfg.dsp.fft_length;
    ds["window"] = cfg.dsp.window;
    ds["guard_bins"] = cfg.dsp.guard_bins;
    ds["noise_estimator"] = cfg.dsp.noise_estimator;
    ds["threshold"] = cfg.dsp.threshold;
    ds["target_freq_hz"] = cfg.dsp.target_freq_hz;
    ds["integration_s"] = cfg.dsp.integration_s;
    auto& sy = doc["synth"];
    sy["duration_s"] = cfg.synth.duration_s;
    sy["sample_rate_hz"] = cfg.synth.sample_rate_hz;
    auto& sw = doc["sweep"];
    sw["trials"] = cfg.sweep.trials;
    sw["theta_start_deg"] = cfg.sweep.theta_start_deg;
    sw["theta_stop_deg"] = cfg.sweep.theta_stop_deg;
    sw["theta_step_deg"] = cfg.sweep.theta_step_deg;
    sw["amplitude_start_v"] = cfg.sweep.amplitude_start_v;
    sw["amplitude_stop_v"] = cfg.sweep.amplitude_stop_v;
    sw["amplitude_step_v"] = cfg.sweep.amplitude_step_v;
    sw["wavelengths_nm"] = cfg.sweep.wavelengths_nm;
    sw["freqs_hz"] = cfg.sweep.freqs_hz;
    sw["powers_w"] = cfg.sweep.powers_w;
    sw["integrations_s"] = cfg.sweep.integrations_s;
    sw["phase_fractions"] = cfg.sweep.phase_fractions;
    return doc;
}

inline std::string dump_config(const RunConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

/// FNV-1a 64 over the canonical dump; stable provenance tag for outputs.
inline std::string config_hash(const RunConfig& cfg) {
    const std::string text = to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace mzlock
