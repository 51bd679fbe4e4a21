#pragma once
//
// Seeded RNG with self-contained draw methods. std::uniform_*_distribution
// is implementation-defined, so sequences would differ across standard
// libraries; these draws keep generated worlds byte-identical everywhere.
//

#include <cstdint>
#include <random>

namespace mobman {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, n). Modulo bias is negligible for the small ranges used.
    std::uint64_t uniform_index(std::uint64_t n) {
        return n == 0 ? 0 : next_u64() % n;
    }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(uniform_index(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    // Uniform in [0, 1) with 53 bits of mantissa.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; one value per call keeps the stream layout simple.
    double gaussian(double mean = 0.0, double stddev = 1.0) {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
        return mean + stddev * z;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace mobman
