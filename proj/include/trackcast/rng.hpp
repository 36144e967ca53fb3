#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace trackcast {

// Deterministic random stream: mt19937_64 with explicit transforms instead of
// std distributions, so identical seeds give identical streams on every
// platform. Gaussians come from the Box-Muller transform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // uniform in [0, 1), 53-bit resolution
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // integer in [0, n), n >= 1
    std::uint64_t uniform_int(std::uint64_t n) {
        const auto v = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
        return v >= n ? n - 1 : v;
    }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double gaussian(double mean, double std) { return mean + std * gaussian(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        // Fisher-Yates with our own index draws; std::shuffle is
        // implementation-defined.
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace trackcast
