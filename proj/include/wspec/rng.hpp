#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "wspec/core.hpp"

namespace wspec {

/// Deterministic random stream: mt19937_64 (bit-exact by standard) plus a
/// Box-Muller transform, so the draw sequence depends only on the seed and
/// never on library-specific distribution internals. Always passed by
/// reference as an explicit value; there is no ambient generator state.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed) : gen_(seed) {}

    /// Uniform on the open interval (0, 1).
    double uniform() {
        return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1p-53;
    }

    /// Standard normal draw (Box-Muller pair, one value cached).
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * kPi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace wspec
