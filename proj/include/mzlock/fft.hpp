#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace mzlock {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// In-place iterative radix-2 Cooley-Tukey FFT (decimation in time).
/// Length must be a power of two. Forward transform, no normalization.
inline void fft_inplace(std::vector<std::complex<double>>& x) {
    const std::size_t n = x.size();
    if (!is_power_of_two(n)) throw std::invalid_argument("fft: length must be a power of two");
    if (n < 2) return;

    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -6.283185307179586476925286766559 / static_cast<double>(len);
        const std::complex<double> wstep(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = x[i + k];
                const std::complex<double> v = x[i + k + len / 2] * w;
                x[i + k] = u + v;
                x[i + k + len / 2] = u - v;
                w *= wstep;
            }
        }
    }
}

/// Forward FFT of a real sequence; returns the full complex spectrum.
inline std::vector<std::complex<double>> fft_real(const std::vector<double>& in) {
    std::vector<std::complex<double>> x(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) x[i] = std::complex<double>(in[i], 0.0);
    fft_inplace(x);
    return x;
}

}  // namespace mzlock
