#pragma once

// Shared inner loops of the density recursion. Internal to the library.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "arbp/bandwidth.hpp"
#include "arbp/data.hpp"
#include "arbp/engine.hpp"
#include "arbp/errors.hpp"
#include "arbp/mathcore.hpp"

namespace arbp::detail {

/// Rows reordered by sample order, columns by feature order.
Matrix permute_matrix(const Matrix& x, const PermutationPair& perm);

/// Bandwidth features of every row, n x feature_size.
std::vector<double> all_features(const BandwidthEvaluator& ev, const Matrix& xp);

struct StepWeights {
    double logit_alpha;
    double log1m_alpha;

    explicit StepWeights(double alpha_i) : logit_alpha(std::log(alpha_i) - std::log1p(-alpha_i)),
                                           log1m_alpha(std::log1p(-alpha_i)) {}
};

/// Gaussian copula terms in normal scores and their partial derivatives.
struct CopulaPartials {
    double lc, h;
    double dh_dqa, dh_dqv, dh_drho;
    double dlc_dqa, dlc_dqv, dlc_drho;
};

inline CopulaPartials copula_partials(double qa, double qb, double p) noexcept {
    CopulaPartials c;
    const double one_m = 1.0 - p * p;
    const double s = std::sqrt(one_m);
    const double phi_z = std_normal_pdf((qa - p * qb) / s);
    c.lc = log_copula_density_scores(qa, qb, p);
    c.h = copula_conditional_cdf_scores(qa, qb, p);
    c.dh_dqa = phi_z / s;
    c.dh_dqv = -p * phi_z / s;
    c.dh_drho = phi_z * (p * qa - qb) / (one_m * s);
    c.dlc_dqa = -p * (p * qa - qb) / one_m;
    c.dlc_dqv = -p * (p * qb - qa) / one_m;
    const double sq = qa * qa + qb * qb, pr = qa * qb;
    c.dlc_drho = p / one_m - (p * sq - pr) / one_m - p * (p * p * sq - 2.0 * p * pr) / (one_m * one_m);
    return c;
}

/// u and rho in permuted order, qv = Phi^-1(v_row). Returns the log density
/// increment; u is updated in place.
inline double step_scores(std::span<double> u, std::span<const double> qv, std::span<const double> rho,
                          const StepWeights& sw, std::size_t step) {
    double cum = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        const double qa = quantile(u[j]);
        const double r = rho[j];
        const double lc = log_copula_density_scores(qa, qv[j], r);
        const double h = copula_conditional_cdf_scores(qa, qv[j], r);
        const double w = sigmoid(sw.logit_alpha + cum);
        const double next = (1.0 - w) * u[j] + w * h;
        if (!std::isfinite(next)) throw NumericFault("non-finite conditional CDF update", step);
        u[j] = clamp_unit(next);
        cum += lc;
    }
    const double delta = sw.log1m_alpha + softplus(sw.logit_alpha + cum);
    if (!std::isfinite(delta)) throw NumericFault("non-finite log density update", step);
    return delta;
}

}  // namespace arbp::detail
