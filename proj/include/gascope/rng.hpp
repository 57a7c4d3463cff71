#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

namespace gascope {

// All randomness in the project flows through this generator so that runs are
// reproducible bit-for-bit across platforms. std::mt19937 distributions are
// not portable across standard libraries; these are.
//
// Algorithm identifier written into outputs that carry a seed.
inline constexpr const char* RNG_ALGORITHM = "xoshiro256ss/splitmix64";

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Stage/replication sub-seed: mixes (root, index) so serial and parallel
// schedules of indexed work draw identical streams.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
    std::uint64_t s = root ^ (0xD1B54A32D192ED03ULL * (index + 1));
    return splitmix64(s);
}

class Xoshiro256ss {
public:
    explicit Xoshiro256ss(std::uint64_t seed = 0) {
        std::uint64_t sm = seed;
        for (auto& w : state_) w = splitmix64(sm);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, n). Modulo bias is ~n/2^64, irrelevant at our n.
    std::uint64_t below(std::uint64_t n) { return next() % n; }

    int uniform_hour() { return static_cast<int>(below(24)); }

    // Uniform double in [0, 1) from the top 53 bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Knuth multiplication method; exact given uniform01 stream. Fine for the
    // per-block arrival rates this project uses (lambda well under ~700).
    int poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        const double limit = std::exp(-lambda);
        double prod = 1.0;
        int k = 0;
        do {
            prod *= uniform01();
            ++k;
        } while (prod > limit);
        return k - 1;
    }

    // Marsaglia polar method, deterministic on the uniform01 stream.
    double normal(double mean, double sd) {
        if (have_spare_) {
            have_spare_ = false;
            return mean + sd * spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return mean + sd * u * m;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace gascope
