#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>
#include <vector>

#include "arbp/engine.hpp"

namespace testing {

inline double integrate(auto f, double a, double b, double tol = 1e-10, unsigned depth = 15) {
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, depth, tol);
}

inline double integrate2(auto f, double a, double b, double tol = 1e-9) {
    return integrate([&](double y1) { return integrate([&](double y2) { return f(y1, y2); }, a, b, tol, 10); }, a, b,
                     tol, 10);
}

inline arbp::FitConfig identity_config() {
    arbp::FitConfig c;
    c.permutations = 1;
    c.shuffle_samples = false;
    c.shuffle_features = false;
    return c;
}

/// log p_steps(x) for a single-permutation identity-order fit on `rows`.
inline double log_density_after(const std::vector<std::vector<double>>& rows, const arbp::BandwidthModel& bw,
                                const std::vector<double>& x, std::size_t steps) {
    const auto model = arbp::fit(arbp::Matrix::from_rows(rows), bw, identity_config());
    return arbp::eval_log_density(model, arbp::Matrix::from_rows({x}), steps)[0];
}

inline arbp::Matrix normal_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    arbp::Matrix m(n, d);
    for (auto& x : m.data) x = nd(rng);
    return m;
}

}  // namespace testing
