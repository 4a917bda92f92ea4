#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "mzlock/dsp.hpp"
#include "mzlock/random.hpp"

using namespace mzlock;

namespace {

// Brute-force DFT as the transform oracle.
std::vector<std::complex<double>> dft(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const double ang = -2.0 * kPi * static_cast<double>(k * j) / static_cast<double>(n);
            acc += x[j] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

std::vector<double> noise_frame(GaussianRng& rng, std::size_t n, double sigma) {
    std::vector<double> x(n);
    for (auto& v : x) v = sigma * rng.next_normal();
    return x;
}

}  // namespace

TEST_CASE("fft matches a brute-force dft") {
    GaussianRng rng(31);
    std::vector<double> x(64);
    for (auto& v : x) v = rng.next_normal();
    const auto fast = fft_real(x);
    const auto slow = dft(x);
    double scale = 0.0;
    for (const auto& c : slow) scale = std::max(scale, std::abs(c));
    for (std::size_t k = 0; k < x.size(); ++k)
        REQUIRE(std::abs(fast[k] - slow[k]) < 1e-9 * scale);
}

TEST_CASE("fft rejects non power-of-two lengths") {
    REQUIRE_FALSE(is_power_of_two(0));
    REQUIRE_FALSE(is_power_of_two(48));
    REQUIRE(is_power_of_two(64));
    std::vector<std::complex<double>> x(48);
    REQUIRE_THROWS_AS(fft_inplace(x), std::invalid_argument);
}

TEST_CASE("power spectrum satisfies parseval") {
    GaussianRng rng(77);
    const std::size_t n = 1024;
    std::vector<double> x(n);
    for (auto& v : x) v = rng.next_normal();

    for (WindowType w : {WindowType::rect, WindowType::hann}) {
        const auto spectrum = power_spectrum(x, 1000.0, n, w);
        double windowed_energy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double wi =
                w == WindowType::rect
                    ? 1.0
                    : 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) / n));
            windowed_energy += (x[i] * wi) * (x[i] * wi);
        }
        double sum = 0.0;
        for (double p : spectrum.bins) sum += p;
        REQUIRE(sum == Catch::Approx(windowed_energy).epsilon(1e-9));
        REQUIRE(spectrum.bins.size() == n / 2 + 1);
        REQUIRE(spectrum.bin_width_hz == Catch::Approx(1000.0 / n));
    }
}

TEST_CASE("bin-centered sinusoid concentrates in one rectangular-window bin") {
    const std::size_t n = 1024;
    const std::size_t k0 = 100;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = std::sin(2.0 * kPi * static_cast<double>(k0 * i) / n);
    const auto spectrum = power_spectrum(x, 1024.0, n, WindowType::rect);
    REQUIRE(spectrum.bins[k0] == Catch::Approx(static_cast<double>(n) / 2.0).epsilon(1e-12));
    for (std::size_t k = 0; k < spectrum.bins.size(); ++k) {
        if (k == k0) continue;
        REQUIRE(spectrum.bins[k] < 1e-20 * spectrum.bins[k0]);
    }
}

TEST_CASE("peak location interpolates between bins") {
    const std::size_t n = 4096;
    const double fs = 4096.0;
    const double f0 = 700.37;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(2.0 * kPi * f0 * i / fs);
    const auto spectrum = power_spectrum(x, fs, n, WindowType::hann);
    const auto det = snr_at(spectrum, 700.0, 2, NoiseEstimator::median, 1.0);
    REQUIRE(det.located_freq_hz == Catch::Approx(f0).margin(0.1));
    REQUIRE(det.snr > 100.0);
    REQUIRE(det.detected);
}

TEST_CASE("synthetic spike yields its power ratio against a flat floor") {
    PowerSpectrum spectrum;
    spectrum.bin_width_hz = 1.0;
    spectrum.frames_accumulated = 1;
    spectrum.bins.assign(512, 1.0);
    spectrum.bins[100] = 100.0;
    const auto det = snr_at(spectrum, 100.0, 2, NoiseEstimator::median, 1.0);
    REQUIRE(det.signal_power == Catch::Approx(100.0));
    REQUIRE(det.noise_floor == Catch::Approx(1.0).epsilon(1e-12));
    REQUIRE(det.snr == Catch::Approx(100.0).epsilon(1e-9));
    REQUIRE(det.located_freq_hz == Catch::Approx(100.0).margin(1e-9));

    const auto mean_det = snr_at(spectrum, 100.0, 2, NoiseEstimator::mean_excluding, 1.0);
    // the spike sits inside the excluded zone, so the mean floor is exact
    REQUIRE(mean_det.noise_floor == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("snr is invariant under spectrum scaling") {
    PowerSpectrum spectrum;
    spectrum.bin_width_hz = 2.0;
    spectrum.bins.assign(256, 0.5);
    spectrum.bins[40] = 37.0;
    spectrum.bins[41] = 12.0;
    const auto a = snr_at(spectrum, 80.0, 2, NoiseEstimator::median, 1.0);
    for (auto& b : spectrum.bins) b *= 3.5e6;
    const auto b = snr_at(spectrum, 80.0, 2, NoiseEstimator::median, 1.0);
    REQUIRE(b.snr == Catch::Approx(a.snr).epsilon(1e-12));
    REQUIRE(b.noise_floor == Catch::Approx(a.noise_floor * 3.5e6).epsilon(1e-12));
    REQUIRE(b.signal_power == Catch::Approx(a.signal_power * 3.5e6).epsilon(1e-12));
}

TEST_CASE("all-zero spectrum reports zero snr instead of failing") {
    PowerSpectrum spectrum;
    spectrum.bin_width_hz = 1.0;
    spectrum.bins.assign(64, 0.0);
    const auto det = snr_at(spectrum, 20.0, 2, NoiseEstimator::median, 1.0);
    REQUIRE(det.snr == 0.0);
    REQUIRE_FALSE(det.detected);
}

TEST_CASE("accumulate sums bins and frame counts") {
    PowerSpectrum one;
    one.bin_width_hz = 1.0;
    one.frames_accumulated = 1;
    one.bins.assign(64, 2.0);
    const auto sum = accumulate({one, one, one, one});
    REQUIRE(sum.frames_accumulated == 4);
    for (double b : sum.bins) REQUIRE(b == Catch::Approx(8.0));

    PowerSpectrum other = one;
    other.bin_width_hz = 2.0;
    REQUIRE_THROWS_AS(accumulate({one, other}), std::invalid_argument);
    other = one;
    other.bins.resize(32);
    REQUIRE_THROWS_AS(accumulate({one, other}), std::invalid_argument);
    REQUIRE_THROWS_AS(accumulate({}), std::invalid_argument);
}

TEST_CASE("gamma medians match reference values") {
    struct Ref {
        double k, median;
    };
    // scipy.stats.gamma.median(k), frozen
    const Ref refs[] = {
        {1, 0.6931471805599455},  {2, 1.6783469900166612},  {3, 2.674060313723559},
        {4, 3.672060748850897},   {6, 5.67016118871207},    {8, 7.669249442500804},
        {12, 11.668363153044767}, {16, 15.667929544317243}, {24, 23.667502275226315},
        {32, 31.667291011765982}, {64, 63.66697707166383},  {128, 127.66682142811251},
    };
    for (const auto& r : refs)
        REQUIRE(detail::gamma_median(r.k) == Catch::Approx(r.median).epsilon(1e-12));
}

TEST_CASE("noise baseline follows sqrt(frames) over log 2") {
    REQUIRE(noise_snr_baseline(1) == Catch::Approx(1.0 / std::log(2.0)).epsilon(1e-14));
    REQUIRE(noise_snr_baseline(4) == Catch::Approx(2.0 / std::log(2.0)).epsilon(1e-14));
    REQUIRE(noise_snr_baseline(16) == Catch::Approx(4.0 / std::log(2.0)).epsilon(1e-14));
    REQUIRE_THROWS_AS(noise_snr_baseline(0), std::invalid_argument);
}

TEST_CASE("pure-noise snr at a fixed bin averages to the baseline") {
    GaussianRng rng(2024);
    const std::size_t n = 1024;
    double sum = 0.0;
    const int trials = 1000;
    for (int trial = 0; trial < trials; ++trial) {
        const auto x = noise_frame(rng, n, 1.0);
        const auto spectrum = power_spectrum(x, 1024.0, n, WindowType::hann);
        sum += snr_at(spectrum, 100.0, 0, NoiseEstimator::median, 1.0).snr;
    }
    const double mean = sum / trials;
    REQUIRE(mean > noise_snr_baseline(1) - 0.15);
    REQUIRE(mean < noise_snr_baseline(1) + 0.15);
}

TEST_CASE("accumulating frames raises strong-signal snr as sqrt(frames)") {
    GaussianRng rng(555);
    const std::size_t n = 4096;
    const double fs = 4096.0;
    const std::size_t k0 = 512;
    const double amp = 4.0;

    const auto trial_snr = [&](int frames) {
        std::vector<PowerSpectrum> spectra;
        for (int f = 0; f < frames; ++f) {
            auto x = noise_frame(rng, n, 1.0);
            for (std::size_t i = 0; i < n; ++i)
                x[i] += amp * std::sin(2.0 * kPi * static_cast<double>(k0 * i) / n);
            spectra.push_back(power_spectrum(x, fs, n, WindowType::hann));
        }
        return snr_at(accumulate(spectra), static_cast<double>(k0), 0, NoiseEstimator::median, 1.0)
            .snr;
    };

    const int trials = 50;
    double base = 0.0;
    for (int t = 0; t < trials; ++t) base += trial_snr(1);
    base /= trials;
    for (int k : {4, 16}) {
        double mean = 0.0;
        for (int t = 0; t < trials; ++t) mean += trial_snr(k);
        mean /= trials;
        const double ratio = mean / base;
        REQUIRE(ratio > 0.8 * std::sqrt(static_cast<double>(k)));
        REQUIRE(ratio < 1.2 * std::sqrt(static_cast<double>(k)));
    }
}

TEST_CASE("detect splits the record into frames and reports the target") {
    GaussianRng rng(808);
    const double fs = 8192.0;
    const std::size_t fft_n = 4096;
    Interferogram ifg;
    ifg.sample_rate_hz = fs;
    const std::size_t n = 16384;
    ifg.ch1.resize(n);
    ifg.ch2.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = 3.0 * std::sin(2.0 * kPi * 1024.0 * i / fs);
        ifg.ch1[i] = 0.5 * s + rng.next_normal();
        ifg.ch2[i] = -0.5 * s + rng.next_normal();
    }
    const auto det = detect(ifg, 1024.0, 1.0, 2.0, fft_n, WindowType::hann, 2);
    REQUIRE(det.detected);
    REQUIRE(det.snr > 50.0);
    REQUIRE(det.located_freq_hz == Catch::Approx(1024.0).margin(2.1));

    REQUIRE_THROWS_AS(detect(ifg, 1024.0, 1.0, 10.0, fft_n), std::invalid_argument);
    REQUIRE_THROWS_AS(detect(ifg, 1024.0, 1.0, 0.1, fft_n), std::invalid_argument);
}

TEST_CASE("spectrum and snr argument validation") {
    std::vector<double> x(100, 0.0);
    REQUIRE_THROWS_AS(power_spectrum(x, 1000.0, 100), std::invalid_argument);
    REQUIRE_THROWS_AS(power_spectrum(x, 1000.0, 128), std::invalid_argument);
    REQUIRE_THROWS_AS(power_spectrum(x, 0.0, 64), std::invalid_argument);

    PowerSpectrum spectrum;
    spectrum.bin_width_hz = 1.0;
    spectrum.bins.assign(64, 1.0);
    REQUIRE_THROWS_AS(snr_at(spectrum, 0.5, 2), std::invalid_argument);   // below first bin
    REQUIRE_THROWS_AS(snr_at(spectrum, 90.0, 2), std::invalid_argument);  // beyond nyquist
    REQUIRE_THROWS_AS(snr_at(spectrum, 20.0, -1), std::invalid_argument);
}
