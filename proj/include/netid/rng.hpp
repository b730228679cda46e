#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace netid {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Deterministic per-run seed: hash of (master, set, run). Streams derived this
/// way are independent of the parallelization degree.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t set, std::uint64_t run) {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ (0xA24BAED4963EE407ULL + set));
    h = splitmix64(h ^ (0x9FB21C651E98DF25ULL + run));
    return h;
}

/// Standard-normal stream on top of mt19937_64 with an explicit Box-Muller so
/// that draws are reproducible independent of the standard library.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : eng_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        if (u1 <= 0.0) u1 = 5e-324;
        const double u2 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

inline Eigen::MatrixXd gaussian_matrix(int rows, int cols, std::uint64_t seed) {
    GaussianStream g(seed);
    Eigen::MatrixXd out(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) out(r, c) = g.next();
    return out;
}

} // namespace netid
