#include "rankprior/numeric.hpp"

#include <cmath>
#include <cstdint>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "rankprior/errors.hpp"

namespace rankprior::numeric {

double normal_pdf(double z) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / kSqrt2); }

double normal_sf(double z) noexcept { return 0.5 * std::erfc(z / kSqrt2); }

namespace {

// Q(z)/phi(z) by the Laplace continued fraction; converges fast for z >= 5.
double mills_ratio_cf(double z) noexcept {
    double tail = 0.0;
    for (int k = 60; k >= 1; --k) tail = k / (z + tail);
    return 1.0 / (z + tail);
}

}  // namespace

double inverse_mills(double z) noexcept {
    if (z < 8.0) return normal_pdf(z) / normal_sf(z);
    return 1.0 / mills_ratio_cf(z);
}

double inverse_mills_excess(double z) noexcept {
    if (z < 8.0) return inverse_mills(z) - z;
    // 1/R - z where R = 1/(z + t) and t is the continued-fraction tail.
    double tail = 0.0;
    for (int k = 60; k >= 2; --k) tail = k / (z + tail);
    return 1.0 / (z + tail);
}

double log_normal_sf(double z) noexcept {
    if (z < 8.0) return std::log(normal_sf(z));
    return -0.5 * z * z + std::log(kInvSqrt2Pi) + std::log(mills_ratio_cf(z));
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ArgumentError("normal_quantile: p must lie in (0, 1)");
    return -kSqrt2 * boost::math::erfc_inv(2.0 * p);
}

QuadratureResult integrate(const std::function<double(double)>& f, double lower, double upper,
                           QuadratureOptions options) {
    if (lower == upper) return {};
    QuadratureResult out;
    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    try {
        out.value = GK::integrate(f, lower, upper, options.max_depth, options.rel_tol, &out.error, &out.l1);
    } catch (const std::exception& e) {
        throw NumericalError(std::string("quadrature failed: ") + e.what());
    }
    if (!std::isfinite(out.value)) throw NumericalError("quadrature produced a non-finite value");
    // The GK15 error estimate is pessimistic by several orders; allow slack
    // before declaring failure.
    const double allowed = 1e3 * options.rel_tol * out.l1;
    if (out.error > allowed && out.error > 1e-290)
        throw NumericalError("quadrature did not converge: error " + std::to_string(out.error) +
                             " vs L1 " + std::to_string(out.l1));
    return out;
}

double integral(const std::function<double(double)>& f, double lower, double upper, double rel_tol) {
    return integrate(f, lower, upper, {rel_tol, 18}).value;
}

double find_root(const std::function<double(double)>& f, double lower, double upper, int max_iter) {
    double fa = f(lower);
    double fb = f(upper);
    if (fa == 0.0) return lower;
    if (fb == 0.0) return upper;
    if (!std::isfinite(fa) || !std::isfinite(fb) || std::signbit(fa) == std::signbit(fb))
        throw NumericalError("find_root: no sign change on bracket");
    std::uintmax_t iters = static_cast<std::uintmax_t>(max_iter);
    boost::math::tools::eps_tolerance<double> tol(std::numeric_limits<double>::digits - 3);
    auto r = boost::math::tools::toms748_solve(f, lower, upper, fa, fb, tol, iters);
    return 0.5 * (r.first + r.second);
}

double minimize(const std::function<double(double)>& f, double lower, double upper) {
    auto r = boost::math::tools::brent_find_minima(f, lower, upper, std::numeric_limits<double>::digits / 2);
    return r.first;
}

}  // namespace rankprior::numeric
