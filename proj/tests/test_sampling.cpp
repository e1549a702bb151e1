#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "arbp/errors.hpp"
#include "arbp/sampling.hpp"
#include "arbp/train.hpp"
#include "helpers.hpp"

using namespace arbp;

namespace {

FittedDensityModel empty_model(std::size_t d) {
    return FittedDensityModel(BandwidthModel::constant(0.9, d), Matrix(0, d), {PermutationPair::identity(0, d)},
                              {std::vector<double>{}}, 0);
}

Matrix gmm_1d(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::bernoulli_distribution pick(0.3);
    Matrix x(n, 1);
    for (std::size_t i = 0; i < n; ++i) x(i, 0) = pick(rng) ? -2.0 + 0.5 * nd(rng) : 1.5 + 0.5 * nd(rng);
    return x;
}

Matrix gmm_2d(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Matrix x(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const double c = i % 2 == 0 ? -1.5 : 1.5;
        x(i, 0) = c + 0.4 * nd(rng);
        x(i, 1) = c + 0.4 * nd(rng);
    }
    return x;
}

double model_cdf_1d(const FittedDensityModel& model, double x) {
    double s = 0.0;
    for (std::size_t m = 0; m < model.permutation_count(); ++m)
        s += PermutationView(model, m).run(std::vector<double>{x}, model.n()).u[0];
    return s / static_cast<double>(model.permutation_count());
}

FittedDensityModel fitted_1d(std::size_t n, std::size_t perms) {
    FitConfig cfg;
    cfg.permutations = perms;
    cfg.seed = 3;
    return fit(gmm_1d(n, 17), BandwidthModel::constant(0.8, 1), cfg);
}

}  // namespace

TEST_CASE("effective sample size examples") {
    const std::vector<double> equal(7, 0.3);
    CHECK(effective_sample_size(equal) == doctest::Approx(7.0).epsilon(1e-14));
    const std::vector<double> one{0.0, 0.0, 2.5, 0.0};
    CHECK(effective_sample_size(one) == doctest::Approx(1.0).epsilon(1e-14));
    const std::vector<double> w{1.0, 2.0, 3.0};
    CHECK(effective_sample_size(w) == doctest::Approx(36.0 / 14.0).epsilon(1e-14));
    const std::vector<double> zero(3, 0.0);
    CHECK_THROWS_AS(effective_sample_size(zero), NumericFault);
    const std::vector<double> negative{1.0, -0.1};
    CHECK_THROWS_AS(effective_sample_size(negative), ContractViolation);
}

TEST_CASE("effective sample size is bounded and scale invariant") {
    std::mt19937_64 rng(1);
    std::exponential_distribution<double> ed(1.0);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> w(1 + t % 40);
        for (auto& v : w) v = std::pow(ed(rng), 3.0);
        const double e = effective_sample_size(w);
        CHECK(e >= 1.0 - 1e-12);
        CHECK(e <= static_cast<double>(w.size()) + 1e-12);
        for (auto& v : w) v *= 1e-7;
        CHECK(effective_sample_size(w) == doctest::Approx(e).epsilon(1e-12));
    }
}

TEST_CASE("resampling follows the weights") {
    const std::vector<double> w{0.0, 1.0, 3.0};
    for (bool systematic : {false, true}) {
        const auto idx = resample_indices(w, 4000, 9, systematic);
        const auto ones = std::count(idx.begin(), idx.end(), 1u);
        const auto twos = std::count(idx.begin(), idx.end(), 2u);
        CHECK(std::count(idx.begin(), idx.end(), 0u) == 0);
        CHECK(static_cast<double>(twos) / static_cast<double>(ones + twos) == doctest::Approx(0.75).epsilon(0.03));
    }
}

TEST_CASE("inverse sampling of the initial predictive is the normal quantile") {
    const auto m1 = empty_model(1);
    for (double u : {0.01, 0.3, 0.5, 0.97}) CHECK(inverse_sample_1d(m1, u) == doctest::Approx(std_normal_quantile(u)).epsilon(1e-9));
    const auto m2 = empty_model(2);
    const std::vector<double> u{0.2, 0.85};
    const auto x = inverse_sample(m2, u);
    CHECK(x[0] == doctest::Approx(std_normal_quantile(0.2)).epsilon(1e-9));
    CHECK(x[1] == doctest::Approx(std_normal_quantile(0.85)).epsilon(1e-9));
}

TEST_CASE("inverse sampling round trips and is monotone") {
    const auto model = fitted_1d(30, 3);
    for (double x0 : {-2.7, -0.4, 0.9, 2.2}) CHECK(inverse_sample_1d(model, model_cdf_1d(model, x0)) == doctest::Approx(x0).epsilon(1e-5).scale(1.0));
    double prev = -1e300;
    for (double u = 0.02; u < 0.99; u += 0.04) {
        const double x = inverse_sample_1d(model, u);
        CHECK(x > prev);
        CHECK(std::abs(model_cdf_1d(model, x) - u) <= 1e-6);
        prev = x;
    }
}

TEST_CASE("two-point median matches a dense-grid inversion") {
    const auto model = fit(Matrix::from_rows({{0.6}, {-1.4}}), BandwidthModel::constant(0.8, 1), testing::identity_config());
    const double lo = -14.0, h = 1e-3;
    const std::size_t count = 28001;
    Matrix grid(count, 1);
    for (std::size_t k = 0; k < count; ++k) grid(k, 0) = lo + h * static_cast<double>(k);
    const auto lp = eval_log_density(model, grid);
    double cum = 0.0, median = 0.0;
    for (std::size_t k = 1; k < count; ++k) {
        const double step = 0.5 * h * (std::exp(lp[k - 1]) + std::exp(lp[k]));
        if (cum + step >= 0.5) {
            median = grid(k - 1, 0) + h * (0.5 - cum) / step;
            break;
        }
        cum += step;
    }
    CHECK(inverse_sample_1d(model, 0.5) == doctest::Approx(median).epsilon(1e-4).scale(1.0));
}

TEST_CASE("multivariate inverse sampling round trips through conditional CDFs") {
    FitConfig cfg = testing::identity_config();
    const auto model = fit(gmm_2d(20, 5), BandwidthModel::rbf({0.85}, {1.0, 1.0}), cfg);
    const std::vector<double> u{0.3, 0.8};
    const auto x = inverse_sample(model, u);
    const PermutationView view(model, 0);
    const auto state = view.run(x, model.n());
    CHECK(state.u[0] == doctest::Approx(0.3).epsilon(1e-8));
    CHECK(state.u[1] == doctest::Approx(0.8).epsilon(1e-8));
}

TEST_CASE("importance sampling with no data keeps unit weights") {
    const auto model = empty_model(2);
    const auto ps = importance_weights(model, 50, 1);
    for (double w : ps.weights) CHECK(w == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ps.ess == doctest::Approx(50.0));
}

TEST_CASE("importance weights are the density ratio") {
    const auto model = fitted_1d(25, 2);
    const auto ps = importance_weights(model, 200, 4);
    const auto lp = eval_log_density(model, ps.particles);
    const double ref = lp[0] - std_normal_log_pdf(ps.particles(0, 0));
    for (std::size_t k = 0; k < 200; ++k)
        CHECK(std::log(ps.weights[k]) ==
              doctest::Approx(lp[k] - std_normal_log_pdf(ps.particles(k, 0)) - ref + std::log(ps.weights[0])).epsilon(1e-10));
}

TEST_CASE("importance resampling recovers the mixture mean") {
    const auto model = fitted_1d(200, 3);
    const auto ps = importance_sample(model, 2000, 8);
    double mean = 0.0;
    for (double v : ps.particles.data) mean += v;
    mean /= 2000.0;
    CHECK(std::abs(mean - (0.3 * -2.0 + 0.7 * 1.5)) < 0.3);
}

TEST_CASE("smc with no data keeps the proposal") {
    const auto model = empty_model(2);
    SamplingConfig cfg;
    cfg.particles = 64;
    const auto ps = smc_sample(model, cfg);
    CHECK(ps.resample_events == 0);
    CHECK(ps.ess == doctest::Approx(64.0));
}

TEST_CASE("an extreme observation triggers resampling") {
    const auto model = fit(Matrix::from_rows({{2.5}}), BandwidthModel::constant(0.95, 1), testing::identity_config());
    SamplingConfig cfg;
    cfg.particles = 500;
    cfg.seed = 2;
    CHECK(smc_sample(model, cfg).resample_events >= 1);
}

TEST_CASE("smc without resampling reproduces the importance weights") {
    FitConfig fc;
    fc.permutations = 3;
    const auto model = fit(gmm_2d(15, 2), BandwidthModel::rbf({0.8}, {1.0, 1.0}), fc);
    SamplingConfig cfg;
    cfg.particles = 100;
    cfg.seed = 6;
    cfg.resample = false;
    const auto smc = smc_sample(model, cfg);
    const auto is = importance_weights(model, 100, 6);
    CHECK(smc.particles == is.particles);
    for (std::size_t k = 0; k < 100; ++k) CHECK(smc.weights[k] == doctest::Approx(is.weights[k]).epsilon(1e-9));
}

TEST_CASE("smc recovers both mixture component means") {
    FitConfig fc;
    fc.permutations = 10;
    const auto model = fit(gmm_2d(50, 12), BandwidthModel::rbf({0.9}, {1.0, 1.0}), fc);
    SamplingConfig cfg;
    cfg.particles = 1000;
    cfg.seed = 5;
    const auto ps = smc_sample(model, cfg);
    double w[2] = {0, 0}, mx[2] = {0, 0}, my[2] = {0, 0};
    for (std::size_t k = 0; k < cfg.particles; ++k) {
        const int side = ps.particles(k, 0) + ps.particles(k, 1) > 0.0 ? 1 : 0;
        w[side] += ps.weights[k];
        mx[side] += ps.weights[k] * ps.particles(k, 0);
        my[side] += ps.weights[k] * ps.particles(k, 1);
    }
    for (int s = 0; s < 2; ++s) {
        const double c = s == 0 ? -1.5 : 1.5;
        CHECK(std::abs(mx[s] / w[s] - c) < 0.3);
        CHECK(std::abs(my[s] / w[s] - c) < 0.3);
    }
    CHECK(ps.resample_events >= 1);
}

TEST_CASE("smc samples match the quadrature CDF in one dimension") {
    const auto model = fitted_1d(50, 3);
    SamplingConfig cfg;
    cfg.particles = 5000;
    cfg.seed = 10;
    const auto ps = smc_sample(model, cfg);
    std::vector<std::size_t> order(cfg.particles);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return ps.particles(a, 0) < ps.particles(b, 0); });
    // Quadrature CDF on a fine grid (trapezoid rule), linearly interpolated.
    const double lo = -15.0, h = 2e-3;
    const std::size_t count = 15001;
    Matrix grid(count, 1);
    for (std::size_t k = 0; k < count; ++k) grid(k, 0) = lo + h * static_cast<double>(k);
    const auto lp = eval_log_density(model, grid);
    std::vector<double> cdf(count, 0.0);
    for (std::size_t k = 1; k < count; ++k) cdf[k] = cdf[k - 1] + 0.5 * h * (std::exp(lp[k - 1]) + std::exp(lp[k]));
    auto quad_cdf = [&](double x) {
        const double pos = std::clamp((x - lo) / h, 0.0, static_cast<double>(count - 1));
        const auto k = std::min(static_cast<std::size_t>(pos), count - 2);
        return cdf[k] + (pos - static_cast<double>(k)) * (cdf[k + 1] - cdf[k]);
    };
    CHECK(cdf.back() == doctest::Approx(1.0).epsilon(1e-4));
    const double total = std::accumulate(ps.weights.begin(), ps.weights.end(), 0.0);
    double cum = 0.0, ks = 0.0;
    for (std::size_t k : order) {
        const double f = quad_cdf(ps.particles(k, 0));
        ks = std::max(ks, std::abs(cum / total - f));
        cum += ps.weights[k];
        ks = std::max(ks, std::abs(cum / total - f));
    }
    INFO("KS distance " << ks);
    CHECK(ks <= 0.05);
}
