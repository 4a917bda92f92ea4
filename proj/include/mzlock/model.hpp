#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace mzlock {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

/// Liquid-crystal modulator rolloff defaults, frozen from calibrate_rolloff():
/// R(f) = (1 - (f/f0)^2)^2 with f0 chosen so the detection-threshold ratio
/// between 20 Hz and 72 Hz modulation matches the two reference sensitivity
/// observations (60 nW at 1 s and 20 nW at 5 s, against 10 nW at 20 Hz / 1 s).
inline constexpr double kDefaultRolloffF0Hz = 108.93097069908589;
inline constexpr std::array<double, 5> kDefaultRolloffCoeffs = {
    1.0, 0.0, -1.6854941450835043e-4, 0.0, 7.102226282776933e-9};

/// Monochromatic CW source entering the interferometer.
struct LaserSource {
    double wavelength_nm = 635.0;
    double power_w = 1e-6;                  // optical power at the input
    double polarization_angle_rad = kPi / 4;  // linear polarization vs system x axis
    double coherence_length_m = 0.01;

    void validate() const {
        if (!(wavelength_nm > 0.0)) throw std::invalid_argument("laser: wavelength_nm must be > 0");
        if (!(power_w >= 0.0) || !std::isfinite(power_w))
            throw std::invalid_argument("laser: power_w must be finite and >= 0");
        if (!std::isfinite(polarization_angle_rad))
            throw std::invalid_argument("laser: polarization_angle_rad must be finite");
        if (!(coherence_length_m > 0.0))
            throw std::invalid_argument("laser: coherence_length_m must be > 0");
    }
};

/// Broadband ambient light; coherence length far below the path imbalance,
/// so its interference term is suppressed and it lands as a DC split.
struct BackgroundSource {
    double power_w = 0.0;
    double coherence_length_m = 1e-6;

    void validate() const {
        if (!(power_w >= 0.0) || !std::isfinite(power_w))
            throw std::invalid_argument("background: power_w must be finite and >= 0");
        if (!(coherence_length_m > 0.0))
            throw std::invalid_argument("background: coherence_length_m must be > 0");
    }
};

/// One liquid-crystal polarization modulator (phase retarder) in an arm.
struct LcmDevice {
    double axis_angle_rad = 0.0;      // modulation axis vs system x axis
    double v_pi_volts = 2.5;          // voltage for a pi phase shift at the reference wavelength
    double v_pi_reference_wavelength_nm = 635.0;
    std::array<double, 5> rolloff_coeffs = kDefaultRolloffCoeffs;  // c0..c4 in f [Hz]
    double degradation_factor = 1.0;  // aging: scales the frequency response
    double min_wavelength_nm = 420.0;  // operating band; outside it the device does not modulate
    double max_wavelength_nm = 700.0;

    void validate() const {
        if (!std::isfinite(axis_angle_rad)) throw std::invalid_argument("lcm: axis_angle_rad must be finite");
        if (!(v_pi_volts > 0.0)) throw std::invalid_argument("lcm: v_pi_volts must be > 0");
        if (!(v_pi_reference_wavelength_nm > 0.0))
            throw std::invalid_argument("lcm: v_pi_reference_wavelength_nm must be > 0");
        for (double c : rolloff_coeffs)
            if (!std::isfinite(c)) throw std::invalid_argument("lcm: rolloff_coeffs must be finite");
        if (!(degradation_factor >= 0.0 && degradation_factor <= 1.0))
            throw std::invalid_argument("lcm: degradation_factor must be in [0,1]");
        if (!(min_wavelength_nm > 0.0) || !(max_wavelength_nm > min_wavelength_nm))
            throw std::invalid_argument("lcm: wavelength band must satisfy 0 < min < max");
    }
};

enum class VisibilityProfile { gaussian, lorentzian };

/// Mach-Zehnder interferometer with one or two polarization modulators.
struct MziConfig {
    double split_ratio = 0.5;        // B: amplitude split factor of each coupler
    double path_difference_m = 5e-6;  // arm length imbalance (coherence gate)
    double detector_responsivity = 1.0;  // W -> detected signal units
    LcmDevice modulator_a{};
    std::optional<LcmDevice> modulator_b = LcmDevice{.axis_angle_rad = kPi / 2};
    bool allow_non_orthogonal = false;
    VisibilityProfile visibility_profile = VisibilityProfile::gaussian;

    void validate() const {
        if (!(split_ratio > 0.0 && split_ratio < 1.0))
            throw std::invalid_argument("mzi: split_ratio must be in (0,1)");
        if (!(path_difference_m >= 0.0) || !std::isfinite(path_difference_m))
            throw std::invalid_argument("mzi: path_difference_m must be finite and >= 0");
        if (!(detector_responsivity > 0.0))
            throw std::invalid_argument("mzi: detector_responsivity must be > 0");
        modulator_a.validate();
        if (modulator_b) {
            modulator_b->validate();
            if (!allow_non_orthogonal) {
                const double d = std::fabs(
                    std::remainder(modulator_a.axis_angle_rad - modulator_b->axis_angle_rad, kPi));
                if (std::fabs(d - kPi / 2) > 1e-9)
                    throw std::invalid_argument(
                        "mzi: dual modulator axes must differ by pi/2 (set allow_non_orthogonal to override)");
            }
        }
    }
};

/// Fringe visibility of an interferometer with arm imbalance path_difference_m
/// for a source of the given coherence length. Gaussian profile by default.
inline double fringe_visibility(double path_difference_m, double coherence_length_m,
                                VisibilityProfile profile = VisibilityProfile::gaussian) {
    if (!(coherence_length_m > 0.0))
        throw std::invalid_argument("fringe_visibility: coherence_length_m must be > 0");
    if (!(path_difference_m >= 0.0) || !std::isfinite(path_difference_m))
        throw std::invalid_argument("fringe_visibility: path_difference_m must be finite and >= 0");
    const double r = path_difference_m / coherence_length_m;
    if (profile == VisibilityProfile::lorentzian) return 1.0 / (1.0 + r * r);
    return std::exp(-r * r);
}

/// V_pi scaled to the source wavelength (retardance in waves falls as 1/lambda
/// for a fixed birefringence path, so the pi-shift voltage scales with lambda).
inline double v_pi_at(const LcmDevice& device, double wavelength_nm) {
    return device.v_pi_volts * (wavelength_nm / device.v_pi_reference_wavelength_nm);
}

/// Modulator amplitude response R(f) at modulation frequency f: quartic in f,
/// clamped to [0,1], scaled by the aging factor. R(0) = degradation_factor
/// with the default coefficients.
inline double lcm_frequency_response(const LcmDevice& device, double freq_hz) {
    if (!(freq_hz >= 0.0) || !std::isfinite(freq_hz))
        throw std::invalid_argument("lcm_frequency_response: freq_hz must be finite and >= 0");
    const auto& c = device.rolloff_coeffs;
    const double p = c[0] + freq_hz * (c[1] + freq_hz * (c[2] + freq_hz * (c[3] + freq_hz * c[4])));
    const double clamped = p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
    return clamped * device.degradation_factor;
}

inline bool wavelength_in_band(const LcmDevice& device, double wavelength_nm) {
    return wavelength_nm >= device.min_wavelength_nm && wavelength_nm <= device.max_wavelength_nm;
}

/// Per-detector intensities split into polarization components.
struct DetectorIntensities {
    double i1 = 0.0;  // total at detector 1 [W]
    double i2 = 0.0;  // total at detector 2 [W]
    double i1x = 0.0, i1y = 0.0, i2x = 0.0, i2y = 0.0;
    bool out_of_band_a = false;  // source wavelength outside modulator a's band
    bool out_of_band_b = false;
};

/// Detector intensities for one source at instantaneous drive voltages v_a, v_b.
///
/// The x mode is the polarization component modulated by modulator a
/// (projection weight sin^2 of the angle measured from a's axis); the y mode
/// carries the orthogonal component, modulated by modulator b when present.
/// With modulator b absent the y mode has no voltage dependence and splits
/// equally between the detectors. Out-of-band wavelengths zero the affected
/// modulator's retardance and set a diagnostic flag instead of failing.
inline DetectorIntensities detector_intensities(const MziConfig& config, const LaserSource& source,
                                                double v_a, double v_b = 0.0) {
    config.validate();
    source.validate();
    if (!std::isfinite(v_a)) throw std::invalid_argument("detector_intensities: v_a must be finite");
    if (config.modulator_b && !std::isfinite(v_b))
        throw std::invalid_argument("detector_intensities: v_b must be finite");

    const double theta =
        std::remainder(source.polarization_angle_rad - config.modulator_a.axis_angle_rad, kPi);
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    const double b2 = config.split_ratio * config.split_ratio;
    const double sx = 2.0 * source.power_w * (s * s) * b2;
    const double sy = 2.0 * source.power_w * (c * c) * b2;
    const double vis = fringe_visibility(config.path_difference_m, source.coherence_length_m,
                                         config.visibility_profile);

    DetectorIntensities out;
    out.out_of_band_a = !wavelength_in_band(config.modulator_a, source.wavelength_nm);
    const double phi_a =
        out.out_of_band_a ? 0.0 : kPi * v_a / v_pi_at(config.modulator_a, source.wavelength_nm);
    const double ca = std::cos(phi_a);
    out.i1x = sx * (1.0 + vis * ca);
    out.i2x = sx * (1.0 - vis * ca);

    if (config.modulator_b) {
        out.out_of_band_b = !wavelength_in_band(*config.modulator_b, source.wavelength_nm);
        const double phi_b =
            out.out_of_band_b ? 0.0 : kPi * v_b / v_pi_at(*config.modulator_b, source.wavelength_nm);
        const double cb = std::cos(phi_b);
        out.i1y = sy * (1.0 + vis * cb);
        out.i2y = sy * (1.0 - vis * cb);
    } else {
        out.i1y = sy;
        out.i2y = sy;
    }
    out.i1 = out.i1x + out.i1y;
    out.i2 = out.i2x + out.i2y;
    return out;
}

/// Peak-to-peak excursion of the balanced signal (i1 - i2) over one full
/// modulation cycle with sinusoidal drive envelopes 0..amplitude_volts and a
/// phase offset of phase_fraction_f * pi on modulator b. Pure model quantity:
/// no frequency rolloff, no noise.
inline double balanced_modulation_depth(const MziConfig& config, const LaserSource& source,
                                        double amplitude_volts, double phase_fraction_f,
                                        int cycle_points = 2048) {
    if (!(amplitude_volts >= 0.0) || !std::isfinite(amplitude_volts))
        throw std::invalid_argument("balanced_modulation_depth: amplitude_volts must be finite and >= 0");
    if (!(phase_fraction_f >= 0.0 && phase_fraction_f <= 1.0))
        throw std::invalid_argument("balanced_modulation_depth: phase_fraction_f must be in [0,1]");
    if (cycle_points < 2) throw std::invalid_argument("balanced_modulation_depth: cycle_points < 2");

    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (int k = 0; k < cycle_points; ++k) {
        const double psi = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(cycle_points);
        const double va = amplitude_volts * 0.5 * (1.0 - std::cos(psi));
        const double vb = amplitude_volts * 0.5 * (1.0 - std::cos(psi - phase_fraction_f * kPi));
        const DetectorIntensities r = detector_intensities(config, source, va, vb);
        const double d = r.i1 - r.i2;
        if (first || d < lo) lo = d;
        if (first || d > hi) hi = d;
        first = false;
    }
    return hi - lo;
}

}  // namespace mzlock
