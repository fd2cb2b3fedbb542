#pragma once

// Scalar numerics shared by every module: normal distribution helpers,
// adaptive quadrature, bracketed root finding.

#include <functional>
#include <limits>

namespace rankprior::numeric {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_pdf(double z) noexcept;
double normal_cdf(double z) noexcept;
// Upper tail 1 - Phi(z), accurate for large z.
double normal_sf(double z) noexcept;
double log_normal_sf(double z) noexcept;
double normal_quantile(double p);
// phi(z) / (1 - Phi(z)), stable for all z.
double inverse_mills(double z) noexcept;
// inverse_mills(z) - z without cancellation for large z.
double inverse_mills_excess(double z) noexcept;

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    double l1 = 0.0;
};

struct QuadratureOptions {
    double rel_tol = 1e-10;
    unsigned max_depth = 18;
};

// Adaptive Gauss-Kronrod (15 point) on [lower, upper]; either bound may be
// infinite. Throws NumericalError if the error estimate exceeds
// rel_tol * L1 by more than a small slack factor.
QuadratureResult integrate(const std::function<double(double)>& f, double lower, double upper,
                           QuadratureOptions options = {});

// Convenience: value only.
double integral(const std::function<double(double)>& f, double lower, double upper,
                double rel_tol = 1e-10);

// Root of f on [lower, upper] where f(lower) and f(upper) differ in sign.
// Throws NumericalError when the bracket is invalid.
double find_root(const std::function<double(double)>& f, double lower, double upper,
                 int max_iter = 200);

// Minimizer of a unimodal f on [lower, upper] (Brent).
double minimize(const std::function<double(double)>& f, double lower, double upper);

}  // namespace rankprior::numeric
