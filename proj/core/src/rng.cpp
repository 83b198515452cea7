#include "fockctl/rng.hpp"

#include <cmath>

namespace fockctl {

// Box-Muller rather than std::normal_distribution: the stdlib mapping is
// implementation-defined, this one is pinned so checkpoints and logs are
// reproducible across compilers.
double standard_normal(std::mt19937_64& rng) {
    // uniform in (0,1]
    const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace fockctl
