#pragma once

#include <cmath>
#include <stdexcept>

#include "mzlock/model.hpp"

namespace mzlock {

enum class DriveMode { analog, digital };
enum class ModulatorIndex { a, b };

/// Drive applied to the modulator pair. The kHz square-wave carrier prevents
/// electrochemical damage to the LC cells; the cells respond to its envelope,
/// not its polarity. Analog mode shapes the envelope sinusoidally; digital
/// mode flips the carrier phase every half modulation period, which toggles
/// the electrode pair between in-phase (0 V effective) and anti-phase
/// (full-span effective) states.
struct DriveWaveform {
    DriveMode mode = DriveMode::digital;
    double carrier_freq_hz = 2000.0;
    double modulation_freq_hz = 20.0;
    double amplitude_volts = 2.5;        // analog: half peak-to-peak of the envelope
    double phase_offset_fraction = 0.0;  // modulator b lags a by this fraction of pi
    double duty_low_v = 0.0;             // digital line levels
    double duty_high_v = 5.0;

    void validate() const {
        if (!(carrier_freq_hz > 0.0)) throw std::invalid_argument("drive: carrier_freq_hz must be > 0");
        if (!(modulation_freq_hz > 0.0))
            throw std::invalid_argument("drive: modulation_freq_hz must be > 0");
        if (!(modulation_freq_hz < carrier_freq_hz / 2.0))
            throw std::invalid_argument("drive: modulation_freq_hz must be below carrier_freq_hz/2");
        if (!(amplitude_volts >= 0.0) || !std::isfinite(amplitude_volts))
            throw std::invalid_argument("drive: amplitude_volts must be finite and >= 0");
        if (!(phase_offset_fraction >= 0.0 && phase_offset_fraction <= 1.0))
            throw std::invalid_argument("drive: phase_offset_fraction must be in [0,1]");
        if (!std::isfinite(duty_low_v) || !std::isfinite(duty_high_v) || duty_low_v == duty_high_v)
            throw std::invalid_argument("drive: duty levels must be finite and distinct");
    }
};

namespace detail {

inline void check_time(double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("drive: t must be finite and >= 0");
}

/// Modulation phase for a modulator, with b lagging a by phase_offset_fraction*pi.
inline double modulation_phase(const DriveWaveform& w, ModulatorIndex idx, double t) {
    double psi = 2.0 * kPi * w.modulation_freq_hz * t;
    if (idx == ModulatorIndex::b) psi -= w.phase_offset_fraction * kPi;
    return psi;
}

/// Digital flip state: anti-phase (driven) during odd half modulation periods.
inline bool digital_flip_state(const DriveWaveform& w, ModulatorIndex idx, double t) {
    const double psi = modulation_phase(w, idx, t);
    const double half_periods = std::floor(psi / kPi);
    return std::fmod(std::fmod(half_periods, 2.0) + 2.0, 2.0) >= 1.0;
}

inline double carrier_frac(const DriveWaveform& w, double t, bool phase_flip) {
    double x = std::fmod(w.carrier_freq_hz * t, 1.0);
    if (phase_flip) x += 0.5;
    if (x >= 1.0) x -= 1.0;
    return x;
}

}  // namespace detail

/// Instantaneous drive-envelope amplitude the LC cell responds to, in volts.
/// Analog: sinusoidal 0..amplitude_volts at the modulation frequency.
/// Digital: square 0..(|high-low|/2) at the modulation frequency.
inline double drive_envelope(const DriveWaveform& w, ModulatorIndex idx, double t) {
    w.validate();
    detail::check_time(t);
    if (w.mode == DriveMode::analog) {
        return w.amplitude_volts * 0.5 * (1.0 - std::cos(detail::modulation_phase(w, idx, t)));
    }
    return detail::digital_flip_state(w, idx, t) ? std::fabs(w.duty_high_v - w.duty_low_v) * 0.5
                                                 : 0.0;
}

/// Analog line voltage: square-wave carrier scaled by the sinusoidal envelope.
inline double analog_drive(const DriveWaveform& w, ModulatorIndex idx, double t) {
    w.validate();
    detail::check_time(t);
    const double env = w.amplitude_volts * 0.5 * (1.0 - std::cos(detail::modulation_phase(w, idx, t)));
    return detail::carrier_frac(w, t, false) < 0.5 ? env : -env;
}

/// Digital line voltage: carrier square between duty levels whose phase flips
/// by pi at every half modulation period.
inline double digital_drive(const DriveWaveform& w, ModulatorIndex idx, double t) {
    w.validate();
    detail::check_time(t);
    const bool flip = detail::digital_flip_state(w, idx, t);
    return detail::carrier_frac(w, t, flip) < 0.5 ? w.duty_high_v : w.duty_low_v;
}

/// Line voltage in the waveform's configured mode.
inline double drive_voltage(const DriveWaveform& w, ModulatorIndex idx, double t) {
    return w.mode == DriveMode::analog ? analog_drive(w, idx, t) : digital_drive(w, idx, t);
}

/// Retardance the device produces at time t for a source wavelength:
/// phi(t) = pi * env(t) / V_pi(lambda) * R(f_mod). The carrier polarity never
/// enters: the LC integrates over the kHz carrier and sees only the envelope.
inline double effective_retardance(const LcmDevice& device, const DriveWaveform& w,
                                   double source_wavelength_nm, double t,
                                   ModulatorIndex idx = ModulatorIndex::a) {
    device.validate();
    if (!(source_wavelength_nm > 0.0))
        throw std::invalid_argument("effective_retardance: source_wavelength_nm must be > 0");
    const double env = drive_envelope(w, idx, t);
    return kPi * env / v_pi_at(device, source_wavelength_nm) *
           lcm_frequency_response(device, w.modulation_freq_hz);
}

}  // namespace mzlock
