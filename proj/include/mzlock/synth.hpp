#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mzlock/drive.hpp"
#include "mzlock/model.hpp"
#include "mzlock/random.hpp"

namespace mzlock {

/// Detector noise rms in detected-power units, frozen by calibrate_noise_rms()
/// so a 10 nW source modulated at 20 Hz reaches S:N = 1 with 1 s integration
/// under the default instrument configuration.
inline constexpr double kDefaultNoiseRmsW = 3.9686750027639068e-07;

struct Scene {
    std::vector<LaserSource> lasers;
    std::optional<BackgroundSource> background;

    void validate() const {
        for (const auto& l : lasers) l.validate();
        if (background) background->validate();
    }
};

struct NoiseModel {
    double rms_w = kDefaultNoiseRmsW;  // additive white Gaussian, per sample, per channel
    std::uint64_t seed = 12345;
    bool scintillation_enabled = false;  // low-frequency multiplicative hook
    double scintillation_cutoff_hz = 5.0;
    double scintillation_rms = 0.1;  // relative intensity fluctuation

    void validate() const {
        if (!(rms_w >= 0.0) || !std::isfinite(rms_w))
            throw std::invalid_argument("noise: rms_w must be finite and >= 0");
        if (!(scintillation_cutoff_hz > 0.0))
            throw std::invalid_argument("noise: scintillation_cutoff_hz must be > 0");
        if (!(scintillation_rms >= 0.0) || !std::isfinite(scintillation_rms))
            throw std::invalid_argument("noise: scintillation_rms must be >= 0");
    }
};

/// Sampled two-detector record.
struct Interferogram {
    double sample_rate_hz = 0.0;
    std::vector<double> ch1;
    std::vector<double> ch2;

    struct Meta {
        std::uint64_t seed = 0;
        std::uint64_t config_hash = 0;
        std::string description;
        std::vector<std::string> warnings;  // e.g. out-of-band wavelength diagnostics
    } meta;

    double duration_s() const {
        return sample_rate_hz > 0.0 ? static_cast<double>(ch1.size()) / sample_rate_hz : 0.0;
    }
};

namespace detail {

/// Core synthesis loop; modulators a and b may carry distinct waveforms
/// (dual-frequency discrimination). The drive's effective retardance is
/// converted to an equivalent instantaneous voltage and pushed through
/// detector_intensities so the synthesized record and the closed-form model
/// share one evaluation path.
inline Interferogram synthesize_with_drives(const Scene& scene, const MziConfig& config,
                                            const DriveWaveform& wa, const DriveWaveform& wb,
                                            double duration_s, double sample_rate_hz,
                                            const NoiseModel& noise) {
    scene.validate();
    config.validate();
    wa.validate();
    wb.validate();
    noise.validate();
    if (!(duration_s > 0.0)) throw std::invalid_argument("synthesize: duration_s must be > 0");
    const double carrier = std::max(wa.carrier_freq_hz, wb.carrier_freq_hz);
    if (!(sample_rate_hz > 2.0 * carrier))
        throw std::invalid_argument("synthesize: sample_rate_hz must exceed twice the carrier frequency");

    const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
    if (n == 0) throw std::invalid_argument("synthesize: duration too short for sample rate");

    Interferogram out;
    out.sample_rate_hz = sample_rate_hz;
    out.ch1.assign(n, 0.0);
    out.ch2.assign(n, 0.0);
    out.meta.seed = noise.seed;

    // out-of-band diagnostics, one probe per laser
    for (std::size_t li = 0; li < scene.lasers.size(); ++li) {
        const auto& l = scene.lasers[li];
        const auto probe = detector_intensities(config, l, 0.0, 0.0);
        if (probe.out_of_band_a)
            out.meta.warnings.push_back("laser " + std::to_string(li) + " (" +
                                        std::to_string(l.wavelength_nm) +
                                        " nm) outside modulator_a band; response forced to zero");
        if (probe.out_of_band_b)
            out.meta.warnings.push_back("laser " + std::to_string(li) + " (" +
                                        std::to_string(l.wavelength_nm) +
                                        " nm) outside modulator_b band; response forced to zero");
    }

    // background folded through the same model path as an unpolarized source:
    // 45 degrees off modulator a's axis splits its power evenly across modes
    std::optional<LaserSource> bg_src;
    if (scene.background && scene.background->power_w > 0.0) {
        bg_src = LaserSource{.wavelength_nm = config.modulator_a.v_pi_reference_wavelength_nm,
                             .power_w = scene.background->power_w,
                             .polarization_angle_rad = config.modulator_a.axis_angle_rad + kPi / 4,
                             .coherence_length_m = scene.background->coherence_length_m};
    }

    GaussianRng rng(noise.seed);
    const double resp = config.detector_responsivity;
    const bool has_b = config.modulator_b.has_value();
    const double alpha =
        noise.scintillation_enabled
            ? std::exp(-2.0 * kPi * noise.scintillation_cutoff_hz / sample_rate_hz)
            : 0.0;
    const double scint_gain = noise.scintillation_enabled ? std::sqrt(1.0 - alpha * alpha) : 0.0;
    double scint_state = 0.0;

    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sample_rate_hz;
        double p1 = 0.0, p2 = 0.0;

        auto add_source = [&](const LaserSource& src) {
            const double veq_a = effective_retardance(config.modulator_a, wa, src.wavelength_nm, t,
                                                      ModulatorIndex::a) /
                                 kPi * v_pi_at(config.modulator_a, src.wavelength_nm);
            double veq_b = 0.0;
            if (has_b)
                veq_b = effective_retardance(*config.modulator_b, wb, src.wavelength_nm, t,
                                             ModulatorIndex::b) /
                        kPi * v_pi_at(*config.modulator_b, src.wavelength_nm);
            const auto di = detector_intensities(config, src, veq_a, veq_b);
            p1 += di.i1;
            p2 += di.i2;
        };

        for (const auto& l : scene.lasers) add_source(l);
        if (bg_src) add_source(*bg_src);

        if (noise.scintillation_enabled) {
            scint_state = alpha * scint_state + scint_gain * rng.next_normal();
            const double factor = std::max(0.0, 1.0 + noise.scintillation_rms * scint_state);
            p1 *= factor;
            p2 *= factor;
        }
        out.ch1[i] = resp * p1 + noise.rms_w * rng.next_normal();
        out.ch2[i] = resp * p2 + noise.rms_w * rng.next_normal();
    }
    return out;
}

}  // namespace detail

/// Synthesize the two detector channels for a scene under a common drive.
inline Interferogram synthesize(const Scene& scene, const MziConfig& config,
                                const DriveWaveform& drive, double duration_s,
                                double sample_rate_hz, const NoiseModel& noise) {
    auto out = detail::synthesize_with_drives(scene, config, drive, drive, duration_s,
                                              sample_rate_hz, noise);
    out.meta.description = "synth mode=" + std::string(drive.mode == DriveMode::analog ? "analog" : "digital") +
                           " fmod=" + std::to_string(drive.modulation_freq_hz) + "Hz";
    return out;
}

/// Drive the two modulators at distinct frequencies so their spectral peaks
/// can be separated; requires the frequencies to be resolvable within the
/// record length.
inline Interferogram dual_frequency_synthesize(const Scene& scene, const MziConfig& config,
                                               double drive_a_freq_hz, double drive_b_freq_hz,
                                               double duration_s, double sample_rate_hz,
                                               const NoiseModel& noise,
                                               DriveWaveform base = DriveWaveform{}) {
    if (!config.modulator_b)
        throw std::invalid_argument("dual_frequency_synthesize: requires both modulators");
    if (!(duration_s > 0.0)) throw std::invalid_argument("dual_frequency_synthesize: duration_s must be > 0");
    if (!(std::fabs(drive_a_freq_hz - drive_b_freq_hz) > 2.0 / duration_s))
        throw std::invalid_argument(
            "dual_frequency_synthesize: drive frequencies not resolvable within the record");
    DriveWaveform wa = base;
    wa.modulation_freq_hz = drive_a_freq_hz;
    wa.phase_offset_fraction = 0.0;
    DriveWaveform wb = base;
    wb.modulation_freq_hz = drive_b_freq_hz;
    wb.phase_offset_fraction = 0.0;
    auto out = detail::synthesize_with_drives(scene, config, wa, wb, duration_s, sample_rate_hz, noise);
    out.meta.description = "dual-frequency synth fa=" + std::to_string(drive_a_freq_hz) +
                           "Hz fb=" + std::to_string(drive_b_freq_hz) + "Hz";
    return out;
}

}  // namespace mzlock
