#pragma once

#include <cstddef>

namespace arbp {

/// Probabilities are kept away from 0 and 1 so that Phi^-1 stays finite.
inline constexpr double kUnitEps = 1e-10;
/// Largest copula correlation; keeps sqrt(1 - rho^2) away from zero.
inline constexpr double kRhoMax = 0.999;

/// A probability clamped into [kUnitEps, 1 - kUnitEps].
class UnitInterval {
public:
    /// Throws DomainError for NaN or infinite input.
    explicit UnitInterval(double p);

    double value() const noexcept { return value_; }
    operator double() const noexcept { return value_; }

private:
    double value_;
};

/// A copula correlation in (0, kRhoMax]. Values above kRhoMax are clamped,
/// values that underflow to zero are lifted to the smallest normal double.
class Correlation {
public:
    /// Throws DomainError for NaN, infinite or negative input.
    explicit Correlation(double rho);

    double value() const noexcept { return value_; }
    operator double() const noexcept { return value_; }

private:
    double value_;
};

double clamp_unit(double p) noexcept;
double clamp_rho(double rho) noexcept;

double std_normal_pdf(double x) noexcept;
double std_normal_log_pdf(double x) noexcept;

/// Phi(x). Throws DomainError for non-finite x.
double std_normal_cdf(double x);

/// Phi^-1(p) for p strictly inside (0, 1). Throws DomainError otherwise.
double std_normal_quantile(double p);

// Unchecked variants used inside the recursions, where inputs are already clamped.
namespace detail {
double cdf(double x) noexcept;
double quantile(double p) noexcept;
}  // namespace detail

/// log c(u, v; rho) for the bivariate Gaussian copula, given normal scores
/// qu = Phi^-1(u) and qv = Phi^-1(v).
double log_copula_density_scores(double qu, double qv, double rho) noexcept;

/// H(u | v; rho) = Phi((qu - rho qv) / sqrt(1 - rho^2)) from normal scores.
double copula_conditional_cdf_scores(double qu, double qv, double rho) noexcept;

double log_copula_density(UnitInterval u, UnitInterval v, Correlation rho);
double copula_density(UnitInterval u, UnitInterval v, Correlation rho);
UnitInterval copula_conditional_cdf(UnitInterval u, UnitInterval v, Correlation rho);

/// Update weight alpha_i = (2 - 1/i) / (i + 1). Throws DomainError for i == 0.
double alpha(std::size_t i);

/// Numerically stable log(1 + exp(t)).
double softplus(double t) noexcept;
/// 1 / (1 + exp(-t)).
double sigmoid(double t) noexcept;

}  // namespace arbp
