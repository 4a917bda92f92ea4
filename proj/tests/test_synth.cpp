#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mzlock/dsp.hpp"
#include "mzlock/synth.hpp"

using namespace mzlock;

namespace {

Scene one_laser(double power_w = 1e-6, double theta_rad = kPi / 4) {
    LaserSource src;
    src.power_w = power_w;
    src.polarization_angle_rad = theta_rad;
    return Scene{.lasers = {src}};
}

NoiseModel quiet(std::uint64_t seed = 1) {
    NoiseModel n;
    n.rms_w = 0.0;
    n.seed = seed;
    return n;
}

DriveWaveform analog(double fmod_hz, double amp_v = 2.5) {
    DriveWaveform w;
    w.mode = DriveMode::analog;
    w.modulation_freq_hz = fmod_hz;
    w.amplitude_volts = amp_v;
    return w;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= a.size();
    mb /= b.size();
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

std::size_t strongest_bin(const PowerSpectrum& spectrum) {
    std::size_t best = kDcGuardBins;
    for (std::size_t k = kDcGuardBins; k < spectrum.bins.size(); ++k)
        if (spectrum.bins[k] > spectrum.bins[best]) best = k;
    return best;
}

}  // namespace

TEST_CASE("channels move in antiphase with a spectral peak at the drive frequency") {
    const MziConfig config;
    const auto ifg = synthesize(one_laser(), config, analog(32.0), 1.0, 20000.0, quiet());
    REQUIRE(ifg.ch1.size() == 20000);
    REQUIRE(pearson(ifg.ch1, ifg.ch2) < -0.99);

    const auto spectrum = balanced_spectrum(ifg, 16384);
    const auto peak = strongest_bin(spectrum);
    REQUIRE(std::fabs(static_cast<double>(peak) * spectrum.bin_width_hz - 32.0) <= spectrum.bin_width_hz);
}

TEST_CASE("channel sum stays constant without noise") {
    const MziConfig config;
    for (DriveMode mode : {DriveMode::analog, DriveMode::digital}) {
        DriveWaveform w = analog(20.0);
        w.mode = mode;
        const auto ifg = synthesize(one_laser(), config, w, 0.5, 20000.0, quiet());
        double lo = 1e300, hi = -1e300;
        for (std::size_t i = 0; i < ifg.ch1.size(); ++i) {
            const double s = ifg.ch1[i] + ifg.ch2[i];
            lo = std::min(lo, s);
            hi = std::max(hi, s);
        }
        REQUIRE(hi - lo < 1e-9 * hi);
        REQUIRE(hi == Catch::Approx(1e-6).epsilon(1e-9));  // 4 B^2 P with B = 0.5
    }
}

TEST_CASE("identical seeds reproduce the record bit for bit") {
    const MziConfig config;
    NoiseModel noise;
    noise.seed = 424242;
    const auto a = synthesize(one_laser(), config, analog(20.0), 0.2, 20000.0, noise);
    const auto b = synthesize(one_laser(), config, analog(20.0), 0.2, 20000.0, noise);
    REQUIRE(a.ch1 == b.ch1);
    REQUIRE(a.ch2 == b.ch2);

    noise.seed = 424243;
    const auto c = synthesize(one_laser(), config, analog(20.0), 0.2, 20000.0, noise);
    REQUIRE(a.ch1 != c.ch1);
}

TEST_CASE("modulation power scales as laser power squared") {
    const MziConfig config;
    const auto spec_at = [&](double power) {
        const auto ifg = synthesize(one_laser(power), config, analog(32.0), 1.0, 20000.0, quiet());
        const auto spectrum = balanced_spectrum(ifg, 16384);
        return spectrum.bins[std::lround(32.0 / spectrum.bin_width_hz)];
    };
    const double p1 = spec_at(1e-8);
    const double p4 = spec_at(4e-8);
    REQUIRE(p4 == Catch::Approx(16.0 * p1).epsilon(1e-9));
}

TEST_CASE("empty scene synthesizes silence, plus noise when enabled") {
    const MziConfig config;
    const auto silent = synthesize(Scene{}, config, analog(20.0), 0.1, 20000.0, quiet());
    for (double v : silent.ch1) REQUIRE(v == 0.0);
    for (double v : silent.ch2) REQUIRE(v == 0.0);

    NoiseModel noise;
    noise.rms_w = 1e-7;
    const auto noisy = synthesize(Scene{}, config, analog(20.0), 0.1, 20000.0, noise);
    double energy = 0.0;
    for (double v : noisy.ch1) energy += v * v;
    REQUIRE(energy > 0.0);
}

TEST_CASE("incoherent background splits evenly and cancels in the balanced signal") {
    const MziConfig config;
    Scene scene;
    scene.background = BackgroundSource{.power_w = 1e-3, .coherence_length_m = 1e-6};
    const auto ifg = synthesize(scene, config, analog(20.0), 0.1, 20000.0, quiet());
    for (std::size_t i = 0; i < ifg.ch1.size(); ++i) {
        REQUIRE(std::fabs(ifg.ch1[i] - ifg.ch2[i]) < 1e-10 * 1e-3);
        REQUIRE(ifg.ch1[i] == Catch::Approx(0.5e-3).epsilon(1e-6));
    }
}

TEST_CASE("dual-frequency drive separates the two modulators spectrally") {
    const MziConfig config;
    const double fs = 20000.0;

    SECTION("both peaks present at 45 degrees") {
        const auto ifg =
            dual_frequency_synthesize(one_laser(), config, 20.0, 32.0, 1.0, fs, quiet());
        const auto spectrum = balanced_spectrum(ifg, 16384);
        std::vector<double> sorted = spectrum.bins;
        std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
        const double med = sorted[sorted.size() / 2];
        const double p20 = spectrum.bins[std::lround(20.0 / spectrum.bin_width_hz)];
        const double p32 = spectrum.bins[std::lround(32.0 / spectrum.bin_width_hz)];
        REQUIRE(p20 > 1e3 * (med + 1e-30));
        REQUIRE(p32 > 1e3 * (med + 1e-30));
    }

    SECTION("polarization along modulator a's axis silences its drive tone") {
        const auto ifg =
            dual_frequency_synthesize(one_laser(1e-6, 0.0), config, 20.0, 32.0, 1.0, fs, quiet());
        const auto spectrum = balanced_spectrum(ifg, 16384);
        const double p20 = spectrum.bins[std::lround(20.0 / spectrum.bin_width_hz)];
        const double p32 = spectrum.bins[std::lround(32.0 / spectrum.bin_width_hz)];
        REQUIRE(p32 > 0.0);
        REQUIRE(p20 < 1e-4 * p32);
    }

    SECTION("aged second modulator attenuates its tone by the predicted ratio") {
        MziConfig aged = config;
        aged.modulator_b->degradation_factor = 0.5;
        const auto fresh_ifg =
            dual_frequency_synthesize(one_laser(), config, 20.0, 32.0, 1.0, fs, quiet());
        const auto aged_ifg =
            dual_frequency_synthesize(one_laser(), aged, 20.0, 32.0, 1.0, fs, quiet());
        const auto fresh = balanced_spectrum(fresh_ifg, 16384);
        const auto old = balanced_spectrum(aged_ifg, 16384);
        const auto k32 = std::lround(32.0 / fresh.bin_width_hz);

        const double phi_fresh = kPi * lcm_frequency_response(*config.modulator_b, 32.0);
        const double phi_aged = kPi * lcm_frequency_response(*aged.modulator_b, 32.0);
        const double expected = std::pow((1.0 - std::cos(phi_aged)) / (1.0 - std::cos(phi_fresh)), 2);
        REQUIRE(old.bins[k32] / fresh.bins[k32] == Catch::Approx(expected).epsilon(5e-3));
    }

    SECTION("unresolvable frequency pairs are rejected") {
        REQUIRE_THROWS_AS(
            dual_frequency_synthesize(one_laser(), config, 20.0, 20.5, 1.0, fs, quiet()),
            std::invalid_argument);
        MziConfig single = config;
        single.modulator_b.reset();
        REQUIRE_THROWS_AS(
            dual_frequency_synthesize(one_laser(), single, 20.0, 32.0, 1.0, fs, quiet()),
            std::invalid_argument);
    }
}

TEST_CASE("out-of-band sources synthesize with a diagnostic warning") {
    const MziConfig config;
    LaserSource violet;
    violet.wavelength_nm = 405.0;
    const auto ifg =
        synthesize(Scene{.lasers = {violet}}, config, analog(20.0), 0.5, 20000.0, quiet());
    REQUIRE_FALSE(ifg.meta.warnings.empty());
    bool mentions_a = false;
    for (const auto& w : ifg.meta.warnings)
        if (w.find("modulator_a") != std::string::npos) mentions_a = true;
    REQUIRE(mentions_a);

    // the record itself is static at the drive frequency: no modulation
    const auto spectrum = balanced_spectrum(ifg, 8192);
    REQUIRE(spectrum.bins[std::lround(20.0 / spectrum.bin_width_hz)] < 1e-30);
}

TEST_CASE("scintillation fades both channels together") {
    const MziConfig config;
    NoiseModel noise = quiet(9);
    noise.scintillation_enabled = true;
    noise.scintillation_rms = 0.1;
    const auto ifg = synthesize(one_laser(), config, analog(20.0, 0.0), 0.2, 20000.0, noise);

    // the fade multiplies both channels alike, so their ratio never moves
    const double ratio0 = ifg.ch1[0] / ifg.ch2[0];
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < ifg.ch1.size(); ++i) {
        REQUIRE(ifg.ch1[i] / ifg.ch2[i] == Catch::Approx(ratio0).epsilon(1e-9));
        lo = std::min(lo, ifg.ch1[i]);
        hi = std::max(hi, ifg.ch1[i]);
    }
    REQUIRE(hi - lo > 0.01 * hi);  // while the level itself visibly moves

    const auto steady = synthesize(one_laser(), config, analog(20.0, 0.0), 0.2, 20000.0, quiet());
    for (std::size_t i = 1; i < steady.ch1.size(); ++i) REQUIRE(steady.ch1[i] == steady.ch1[0]);
}

TEST_CASE("synthesis argument validation") {
    const MziConfig config;
    REQUIRE_THROWS_AS(synthesize(one_laser(), config, analog(20.0), 1.0, 3500.0, quiet()),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(synthesize(one_laser(), config, analog(20.0), 0.0, 20000.0, quiet()),
                      std::invalid_argument);
    NoiseModel bad;
    bad.rms_w = -1.0;
    REQUIRE_THROWS_AS(synthesize(one_laser(), config, analog(20.0), 1.0, 20000.0, bad),
                      std::invalid_argument);
}
