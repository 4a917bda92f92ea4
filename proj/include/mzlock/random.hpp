#pragma once

#include <cmath>
#include <cstdint>

namespace mzlock {

/// splitmix64 stream; used to derive independent child seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Mix a master seed with stream identifiers (sweep id, grid index, trial index).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = master;
    splitmix64(s);
    s ^= 0x632be59bd9b4e019ull * (a + 1);
    splitmix64(s);
    s ^= 0x9e6c63d0876a9a35ull * (b + 1);
    splitmix64(s);
    s ^= 0xc6ef372fe94f82bfull * (c + 1);
    return splitmix64(s);
}

/// Deterministic Gaussian generator: xoshiro-free, fully pinned algorithm
/// (splitmix64 core + Box-Muller) so identical seeds give bit-identical
/// streams on every platform and standard library.
class GaussianRng {
  public:
    explicit GaussianRng(std::uint64_t seed) : state_(seed) {
        // decorrelate trivially related seeds
        splitmix64(state_);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform double in (0, 1].
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Standard normal deviate, Box-Muller with cached spare.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    std::uint64_t state_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace mzlock
