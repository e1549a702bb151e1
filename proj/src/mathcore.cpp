#include "arbp/mathcore.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numbers>

#include "arbp/errors.hpp"

namespace arbp {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kSqrt2Pi = 2.50662827463100050242;

// Rational approximation of Phi^-1 (P. J. Acklam), relative error ~1.2e-9.
double acklam(double p) noexcept {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - p_low) {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

UnitInterval::UnitInterval(double p) {
    if (!std::isfinite(p)) throw DomainError("UnitInterval: non-finite value");
    value_ = clamp_unit(p);
}

Correlation::Correlation(double rho) {
    if (!std::isfinite(rho) || rho < 0.0) throw DomainError("Correlation: value must be finite and >= 0");
    value_ = clamp_rho(rho);
}

double clamp_unit(double p) noexcept { return std::clamp(p, kUnitEps, 1.0 - kUnitEps); }

double clamp_rho(double rho) noexcept { return std::clamp(rho, DBL_MIN, kRhoMax); }

double std_normal_pdf(double x) noexcept { return std::exp(-0.5 * x * x) / kSqrt2Pi; }

double std_normal_log_pdf(double x) noexcept { return -0.5 * x * x - kLogSqrt2Pi; }

namespace detail {

double cdf(double x) noexcept { return 0.5 * std::erfc(-x * kInvSqrt2); }

double quantile(double p) noexcept {
    double x = acklam(p);
    // One Halley step against the erfc-based CDF. The residual is formed on
    // the side of the median where it does not cancel.
    const double e = p < 0.5 ? cdf(x) - p : (1.0 - p) - cdf(-x);
    const double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

}  // namespace detail

double std_normal_cdf(double x) {
    if (!std::isfinite(x)) throw DomainError("std_normal_cdf: non-finite input");
    return detail::cdf(x);
}

double std_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("std_normal_quantile: p must lie in (0, 1)");
    return detail::quantile(p);
}

double log_copula_density_scores(double qu, double qv, double rho) noexcept {
    const double one_m = 1.0 - rho * rho;
    return -0.5 * std::log(one_m) -
           (rho * rho * (qu * qu + qv * qv) - 2.0 * rho * qu * qv) / (2.0 * one_m);
}

double copula_conditional_cdf_scores(double qu, double qv, double rho) noexcept {
    return detail::cdf((qu - rho * qv) / std::sqrt(1.0 - rho * rho));
}

double log_copula_density(UnitInterval u, UnitInterval v, Correlation rho) {
    return log_copula_density_scores(detail::quantile(u), detail::quantile(v), rho);
}

double copula_density(UnitInterval u, UnitInterval v, Correlation rho) {
    return std::exp(log_copula_density(u, v, rho));
}

UnitInterval copula_conditional_cdf(UnitInterval u, UnitInterval v, Correlation rho) {
    return UnitInterval(copula_conditional_cdf_scores(detail::quantile(u), detail::quantile(v), rho));
}

double alpha(std::size_t i) {
    if (i == 0) throw DomainError("alpha: step index must be >= 1");
    const double di = static_cast<double>(i);
    return (2.0 - 1.0 / di) / (di + 1.0);
}

double softplus(double t) noexcept {
    return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double sigmoid(double t) noexcept {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

}  // namespace arbp
