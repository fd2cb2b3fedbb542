#include "rankprior/rng.hpp"

#include <cmath>

#include "rankprior/numeric.hpp"

namespace rankprior {

double Rng::normal() noexcept {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * numeric::kPi * u2);
}

double Rng::exponential(double rate) noexcept { return -std::log(uniform()) / rate; }

}  // namespace rankprior
