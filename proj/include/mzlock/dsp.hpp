#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mzlock/fft.hpp"
#include "mzlock/synth.hpp"

namespace mzlock {

enum class WindowType { rect, hann };
enum class NoiseEstimator { median, mean_excluding };

/// Bins below this index never enter the noise floor (window-spread DC).
inline constexpr int kDcGuardBins = 3;

/// Numerical floor protecting SNR ratios against all-zero spectra.
inline constexpr double kPowerEpsilon = 1e-30;

/// Decision threshold sized for ~1% per-trial false alarm under the default
/// statistic (max over a 5-bin window against the median floor, one frame):
/// P(max of 5 exponential bins >= T * median) = 1 - (1 - 2^-T)^5 = 0.01.
/// The operational default threshold stays 1 (the S:N = 1 sensitivity
/// convention); use this one when false-alarm control matters.
inline constexpr double kFalseAlarmThreshold = 8.96;

/// One-sided power spectrum. Bin powers are normalized so their sum equals
/// the windowed time-sequence energy (Parseval).
struct PowerSpectrum {
    double bin_width_hz = 0.0;
    int frames_accumulated = 1;
    std::vector<double> bins;

    double nyquist_hz() const {
        return bins.empty() ? 0.0 : bin_width_hz * static_cast<double>(bins.size() - 1);
    }
    std::size_t fft_length() const { return bins.empty() ? 0 : 2 * (bins.size() - 1); }
};

struct DetectionResult {
    double target_freq_hz = 0.0;
    double located_freq_hz = 0.0;
    double signal_power = 0.0;
    double noise_floor = 0.0;
    double snr = 0.0;
    bool detected = false;
};

namespace detail {

/// Regularized lower incomplete gamma P(a, x), series + continued fraction.
inline double gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p: bad arguments");
    if (x == 0.0) return 0.0;
    const double gln = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
        }
        return sum * std::exp(-x + a * std::log(x) - gln);
    }
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::fabs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return 1.0 - std::exp(-x + a * std::log(x) - gln) * h;
}

/// Median of a Gamma(k, scale 1) variate via bisection on P(k, x) = 1/2.
inline double gamma_median(double k) {
    double lo = 0.0, hi = k + 10.0 * std::sqrt(k) + 10.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (gamma_p(k, mid) < 0.5 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline double window_value(WindowType w, std::size_t n, std::size_t length) {
    if (w == WindowType::rect) return 1.0;
    return 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(n) / static_cast<double>(length)));
}

}  // namespace detail

/// Expected SNR reading of a pure-noise bin at the target (guard 0) for a
/// K-frame accumulated spectrum: mean bin over the bias-corrected floor.
/// Sensitivity crossings subtract this baseline so "S:N = 1" means the
/// signal's own power equals the noise floor.
inline double noise_snr_baseline(int frames_accumulated) {
    if (frames_accumulated < 1) throw std::invalid_argument("noise_snr_baseline: frames < 1");
    const double k = static_cast<double>(frames_accumulated);
    return std::sqrt(k) / 0.69314718055994530942;
}

/// Windowed one-sided power spectrum of the first fft_length samples.
inline PowerSpectrum power_spectrum(const std::vector<double>& samples, double sample_rate_hz,
                                    std::size_t fft_length, WindowType window = WindowType::hann) {
    if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("power_spectrum: sample_rate_hz must be > 0");
    if (!is_power_of_two(fft_length) || fft_length < 4)
        throw std::invalid_argument("power_spectrum: fft_length must be a power of two >= 4");
    if (samples.size() < fft_length)
        throw std::invalid_argument("power_spectrum: input shorter than fft_length");

    std::vector<std::complex<double>> x(fft_length);
    for (std::size_t i = 0; i < fft_length; ++i)
        x[i] = std::complex<double>(samples[i] * detail::window_value(window, i, fft_length), 0.0);
    fft_inplace(x);

    PowerSpectrum out;
    out.bin_width_hz = sample_rate_hz / static_cast<double>(fft_length);
    out.frames_accumulated = 1;
    out.bins.resize(fft_length / 2 + 1);
    const double scale = 1.0 / static_cast<double>(fft_length);
    for (std::size_t k = 0; k < out.bins.size(); ++k) {
        const double p = std::norm(x[k]) * scale;
        out.bins[k] = (k == 0 || k == fft_length / 2) ? p : 2.0 * p;
    }
    return out;
}

/// Spectrum of the balanced (ch1 - ch2) signal; common-mode light cancels.
inline PowerSpectrum balanced_spectrum(const Interferogram& ifg, std::size_t fft_length,
                                       WindowType window = WindowType::hann) {
    if (ifg.ch1.size() != ifg.ch2.size())
        throw std::invalid_argument("balanced_spectrum: channel length mismatch");
    std::vector<double> diff(ifg.ch1.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = ifg.ch1[i] - ifg.ch2[i];
    return power_spectrum(diff, ifg.sample_rate_hz, fft_length, window);
}

/// Bin-wise sum of compatible spectra; frames_accumulated adds.
inline PowerSpectrum accumulate(const std::vector<PowerSpectrum>& spectra) {
    if (spectra.empty()) throw std::invalid_argument("accumulate: no spectra");
    PowerSpectrum out = spectra.front();
    for (std::size_t i = 1; i < spectra.size(); ++i) {
        const auto& s = spectra[i];
        if (s.bins.size() != out.bins.size() || s.bin_width_hz != out.bin_width_hz)
            throw std::invalid_argument("accumulate: incompatible spectra");
        for (std::size_t k = 0; k < out.bins.size(); ++k) out.bins[k] += s.bins[k];
        out.frames_accumulated += s.frames_accumulated;
    }
    return out;
}

/// SNR of the spectral peak nearest target_freq_hz.
///
/// signal_power: max bin within target +/- guard_bins.
/// noise_floor: median (or mean) of bins outside the DC region and outside
/// target +/- 3*guard_bins, corrected for accumulation so that K summed
/// frames report the sqrt(K)-scaled single-frame floor (the accumulated
/// noise fluctuation scale). For one frame this is exactly the plain
/// median/mean of the excluded-region complement.
/// An all-zero spectrum yields snr = 0 and detected = false (not an error).
inline DetectionResult snr_at(const PowerSpectrum& spectrum, double target_freq_hz,
                              int guard_bins = 2, NoiseEstimator estimator = NoiseEstimator::median,
                              double threshold = 1.0) {
    if (spectrum.bins.size() < 16) throw std::invalid_argument("snr_at: spectrum too short");
    if (guard_bins < 0) throw std::invalid_argument("snr_at: guard_bins must be >= 0");
    const double nyq = spectrum.nyquist_hz();
    if (!(target_freq_hz >= spectrum.bin_width_hz && target_freq_hz < nyq))
        throw std::invalid_argument("snr_at: target frequency outside (bin_width, nyquist)");

    const auto n = static_cast<long>(spectrum.bins.size());
    const long target = std::lround(target_freq_hz / spectrum.bin_width_hz);
    const long w_lo = std::max<long>(0, target - guard_bins);
    const long w_hi = std::min<long>(n - 1, target + guard_bins);

    long peak = w_lo;
    for (long k = w_lo; k <= w_hi; ++k)
        if (spectrum.bins[k] > spectrum.bins[peak]) peak = k;
    const double signal = spectrum.bins[peak];

    const long x_lo = target - 3l * std::max(1, guard_bins);
    const long x_hi = target + 3l * std::max(1, guard_bins);
    std::vector<double> rest;
    rest.reserve(spectrum.bins.size());
    for (long k = kDcGuardBins; k < n; ++k) {
        if (k >= x_lo && k <= x_hi) continue;
        rest.push_back(spectrum.bins[k]);
    }
    if (rest.size() < 8) throw std::invalid_argument("snr_at: too few bins for a noise estimate");

    const double kf = static_cast<double>(spectrum.frames_accumulated);
    double floor_raw;
    if (estimator == NoiseEstimator::median) {
        const auto mid = rest.begin() + static_cast<long>(rest.size() / 2);
        std::nth_element(rest.begin(), mid, rest.end());
        double med = *mid;
        if (rest.size() % 2 == 0) med = 0.5 * (med + *std::max_element(rest.begin(), mid));
        // estimate the sqrt(K)-scaled one-frame floor from the K-frame median
        floor_raw = med * (std::sqrt(kf) * 0.69314718055994530942 / detail::gamma_median(kf));
    } else {
        double sum = 0.0;
        for (double v : rest) sum += v;
        floor_raw = (sum / static_cast<double>(rest.size())) / std::sqrt(kf);
    }

    DetectionResult r;
    r.target_freq_hz = target_freq_hz;
    r.signal_power = signal;
    r.noise_floor = floor_raw;
    r.snr = signal / (floor_raw + kPowerEpsilon);
    r.detected = r.snr >= threshold;

    // parabolic peak interpolation in log power
    r.located_freq_hz = static_cast<double>(peak) * spectrum.bin_width_hz;
    if (peak > 0 && peak < n - 1) {
        const double yl = std::log(spectrum.bins[peak - 1] + kPowerEpsilon);
        const double yc = std::log(spectrum.bins[peak] + kPowerEpsilon);
        const double yr = std::log(spectrum.bins[peak + 1] + kPowerEpsilon);
        const double denom = yl - 2.0 * yc + yr;
        if (std::fabs(denom) > 1e-12) {
            double delta = 0.5 * (yl - yr) / denom;
            if (std::isfinite(delta) && std::fabs(delta) <= 1.0)
                r.located_freq_hz = (static_cast<double>(peak) + delta) * spectrum.bin_width_hz;
        }
    }
    return r;
}

/// Frame-split detection: consecutive non-overlapping balanced spectra over
/// the integration window, accumulated, then tested at the target frequency.
inline DetectionResult detect(const Interferogram& ifg, double target_freq_hz,
                              double threshold = 1.0, double integration_s = 1.0,
                              std::size_t fft_length = 16384, WindowType window = WindowType::hann,
                              int guard_bins = 2, NoiseEstimator estimator = NoiseEstimator::median) {
    if (ifg.ch1.size() != ifg.ch2.size())
        throw std::invalid_argument("detect: channel length mismatch");
    if (!(integration_s > 0.0)) throw std::invalid_argument("detect: integration_s must be > 0");
    if (integration_s > ifg.duration_s() + 0.5 / ifg.sample_rate_hz)
        throw std::invalid_argument("detect: integration_s exceeds record duration");

    const auto avail = static_cast<std::size_t>(std::llround(integration_s * ifg.sample_rate_hz));
    const std::size_t frames = std::min(avail, ifg.ch1.size()) / fft_length;
    if (frames == 0)
        throw std::invalid_argument("detect: integration window shorter than one FFT frame");

    std::vector<double> diff(fft_length);
    std::vector<PowerSpectrum> spectra;
    spectra.reserve(frames);
    for (std::size_t f = 0; f < frames; ++f) {
        const std::size_t off = f * fft_length;
        for (std::size_t i = 0; i < fft_length; ++i) diff[i] = ifg.ch1[off + i] - ifg.ch2[off + i];
        spectra.push_back(power_spectrum(diff, ifg.sample_rate_hz, fft_length, window));
    }
    return snr_at(accumulate(spectra), target_freq_hz, guard_bins, estimator, threshold);
}

}  // namespace mzlock
