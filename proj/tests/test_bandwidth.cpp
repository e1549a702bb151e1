#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "arbp/bandwidth.hpp"
#include "arbp/errors.hpp"

using namespace arbp;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, double lo = -2.0, double hi = 2.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

BandwidthModel random_model(BandwidthKind kind, std::size_t d, std::mt19937_64& rng) {
    auto rho0 = random_vec(rng, d, 0.3, 0.95);
    auto ls = random_vec(rng, d, 0.5, 2.0);
    switch (kind) {
        case BandwidthKind::Constant: return BandwidthModel::constant(rho0[0], d);
        case BandwidthKind::PerDim: return BandwidthModel::per_dim(rho0);
        case BandwidthKind::Rbf: return BandwidthModel::rbf(rho0, ls);
        case BandwidthKind::RationalQuadratic: return BandwidthModel::rational_quadratic({rho0[0]}, ls, 1.7);
        case BandwidthKind::Net: {
            auto net = ArNetWeights::truncated_normal(d, 3, 5, 2);
            for (auto& b : net.b) b = random_vec(rng, 1)[0];
            return BandwidthModel::net({rho0[0]}, net);
        }
    }
    return BandwidthModel::constant(0.5, d);
}

constexpr BandwidthKind kAllKinds[] = {BandwidthKind::Constant, BandwidthKind::PerDim, BandwidthKind::Rbf,
                                       BandwidthKind::RationalQuadratic, BandwidthKind::Net};

}  // namespace

TEST_CASE("rbf kernel") {
    const std::vector<double> a{0.0}, b{1.0}, l{1.0};
    CHECK(rbf_kernel(a, b, l) == doctest::Approx(0.367879441171442).epsilon(1e-14));
    CHECK(rbf_kernel(a, a, l) == 1.0);
    CHECK(rbf_kernel(a, b, std::vector<double>{1e12}) == doctest::Approx(1.0));
    CHECK(rbf_kernel(b, a, l) == rbf_kernel(a, b, l));
    double prev = 1.0;
    for (double t = 0.1; t < 3.0; t += 0.1) {
        const double k = rbf_kernel(std::vector<double>{0.0, 0.5}, std::vector<double>{t, 0.5}, std::vector<double>{0.7, 1.1});
        CHECK(k < prev);
        prev = k;
    }
    CHECK_THROWS_AS(rbf_kernel(a, std::vector<double>{1.0, 2.0}, l), ContractViolation);
    CHECK_THROWS_AS(rbf_kernel(a, b, std::vector<double>{0.0}), ContractViolation);
}

TEST_CASE("rational quadratic kernel") {
    const std::vector<double> a{0.0}, b{1.0}, l{1.0};
    CHECK(rq_kernel(a, b, l, 1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(rq_kernel(a, a, l, 2.0) == 1.0);
    CHECK(rq_kernel(a, b, l, 0.3) == rq_kernel(b, a, l, 0.3));
    // Large gamma gives exp(-r^2 / 2): the rbf kernel with length scale l * sqrt(2).
    const std::vector<double> a2{0.3, -0.4}, b2{1.1, 0.2}, l2{0.8, 1.3};
    const std::vector<double> l2s{0.8 * std::sqrt(2.0), 1.3 * std::sqrt(2.0)};
    CHECK(rq_kernel(a2, b2, l2, 1e6) == doctest::Approx(rbf_kernel(a2, b2, l2s)).epsilon(1e-3));
    CHECK_THROWS_AS(rq_kernel(a, b, l, 0.0), ContractViolation);
}

TEST_CASE("net latents masking") {
    const auto zero = ArNetWeights::zeros(4);
    for (double z : arnet_latents(zero, std::vector<double>{1, 2, 3, 4})) CHECK(z == 0.0);

    const std::size_t d = 5;
    auto net = ArNetWeights::truncated_normal(d, 11);
    std::mt19937_64 rng(1);
    for (auto& b : net.b) b = random_vec(rng, 1)[0];
    const auto x = random_vec(rng, d);
    const auto z = arnet_latents(net, x);
    for (std::size_t k = 0; k < d; ++k) {
        auto x2 = x;
        x2[k] += 0.7;
        const auto z2 = arnet_latents(net, x2);
        // Row j reads x[0..j), so rows 0..k are unchanged.
        for (std::size_t j = 0; j <= k; ++j)
            for (std::size_t l = 0; l < net.latent; ++l) CHECK(z2[j * net.latent + l] == z[j * net.latent + l]);
        if (k + 1 < d) {
            double diff = 0.0;
            for (std::size_t l = 0; l < net.latent; ++l) diff += std::abs(z2[(k + 1) * net.latent + l] - z[(k + 1) * net.latent + l]);
            CHECK(diff > 0.0);
        }
    }
    // Changing the last coordinate leaves every row unchanged.
    auto x3 = x;
    x3[d - 1] = -5.0;
    CHECK(arnet_latents(net, x3) == z);
}

TEST_CASE("truncated normal init") {
    const auto net = ArNetWeights::truncated_normal(9, 5);
    CHECK(net.w.size() == 16 * 9);
    CHECK(net.v.size() == 9 * 4 * 16);
    for (double b : net.b) CHECK(b == 0.0);
    for (double w : net.w) CHECK(std::abs(w) <= 2.0 / 3.0 + 1e-15);
    for (double v : net.v) CHECK(std::abs(v) <= 2.0 / 4.0 + 1e-15);
    CHECK(ArNetWeights::truncated_normal(9, 5).w == net.w);
    CHECK(ArNetWeights::truncated_normal(9, 6).w != net.w);
}

TEST_CASE("rho examples") {
    const auto m = BandwidthModel::rbf({0.9}, {1.0, 1.0});
    const std::vector<double> p0{0.0}, p1{1.0};
    CHECK(rho(m, 1, p0, p1).value() == doctest::Approx(0.331091497054298).epsilon(1e-14));
    CHECK(rho(m, 1, p0, p0).value() == doctest::Approx(0.9));
    CHECK(rho(m, 0, {}, {}).value() == 0.9);
    CHECK_THROWS_AS(rho(m, 2, p0, p1), ContractViolation);
    CHECK_THROWS_AS(rho(m, 1, {}, {}), ContractViolation);

    std::mt19937_64 rng(4);
    for (auto kind : kAllKinds) {
        const auto model = random_model(kind, 4, rng);
        CHECK(rho(model, 0, {}, {}).value() == model.rho0(0));
        for (int rep = 0; rep < 20; ++rep) {
            const auto a = random_vec(rng, 3), b = random_vec(rng, 3);
            for (std::size_t j = 1; j < 4; ++j) {
                const double r = rho(model, j, std::span(a).first(j), std::span(b).first(j));
                CHECK(r > 0.0);
                CHECK(r <= model.rho0(j));
            }
        }
    }
}

TEST_CASE("zero net weights reduce to constant rho0") {
    const auto m = BandwidthModel::net({0.8}, ArNetWeights::zeros(3));
    std::mt19937_64 rng(2);
    const auto a = random_vec(rng, 2), b = random_vec(rng, 2);
    for (std::size_t j = 0; j < 3; ++j) CHECK(rho(m, j, std::span(a).first(j), std::span(b).first(j)).value() == 0.8);
}

TEST_CASE("net rho ignores coordinates at or after j") {
    std::mt19937_64 rng(9);
    const auto m = random_model(BandwidthKind::Net, 4, rng);
    const BandwidthEvaluator ev(m);
    const auto x = random_vec(rng, 4), y = random_vec(rng, 4);
    std::vector<double> fx(ev.feature_size()), fy(ev.feature_size()), r1(4), r2(4);
    ev.features(x, fx);
    ev.features(y, fy);
    ev.rho(fx, fy, r1);
    for (std::size_t k = 0; k < 4; ++k) {
        auto x2 = x;
        x2[k] += 1.3;
        ev.features(x2, fx);
        ev.rho(fx, fy, r2);
        for (std::size_t j = 0; j <= k; ++j) CHECK(r2[j] == r1[j]);
    }
}

TEST_CASE("model validation") {
    CHECK_THROWS_AS(BandwidthModel::constant(0.0, 2), ContractViolation);
    CHECK_THROWS_AS(BandwidthModel::constant(1.0, 2), ContractViolation);
    CHECK_THROWS_AS(BandwidthModel::rbf({0.5}, {1.0, -1.0}), ContractViolation);
    CHECK_THROWS_AS(BandwidthModel::rbf({0.5, 0.5, 0.5}, {1.0, 1.0}), ContractViolation);
    CHECK_THROWS_AS(BandwidthModel::rational_quadratic({0.5}, {1.0}, 0.0), ContractViolation);
    CHECK_THROWS_AS(BandwidthModel::constant(0.5, 0), ContractViolation);
    CHECK(to_string(bandwidth_kind_from_string("rq")) == "rq");
    CHECK_THROWS_AS(bandwidth_kind_from_string("gp"), ContractViolation);
    const auto init = BandwidthModel::initial(BandwidthKind::Rbf, 3, true);
    CHECK(init.rho0_values() == std::vector<double>{0.9, 0.9, 0.9});
    CHECK(init.lengthscales() == std::vector<double>{1.0, 1.0, 1.0});
}

TEST_CASE("unconstrained round trip") {
    const auto half = BandwidthModel::constant(0.5, 1);
    CHECK(from_unconstrained(to_unconstrained(half), ParameterShape::of(half)).rho0(0) ==
          doctest::Approx(0.5).epsilon(1e-12));
    const auto unit_l = BandwidthModel::rbf({0.9}, {1.0, 1.0});
    CHECK(to_unconstrained(unit_l)[1] == 0.0);

    std::mt19937_64 rng(3);
    for (auto kind : kAllKinds) {
        const auto m = random_model(kind, 4, rng);
        const auto shape = ParameterShape::of(m);
        const auto p = to_unconstrained(m);
        CHECK(p.size() == shape.size());
        CHECK(p.size() == m.parameter_count());
        const auto back = from_unconstrained(p, shape);
        CHECK(back.kind() == m.kind());
        for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(back.rho0(j) - m.rho0(j)) <= 1e-12);
        for (std::size_t j = 0; j < m.lengthscales().size(); ++j)
            CHECK(std::abs(back.lengthscales()[j] - m.lengthscales()[j]) <= 1e-12 * m.lengthscales()[j]);
        CHECK(std::abs(back.gamma() - m.gamma()) <= 1e-12);
        CHECK(back.net_weights().w == m.net_weights().w);
        CHECK(back.net_weights().v == m.net_weights().v);
        auto bad = p;
        bad.push_back(0.0);
        CHECK_THROWS_AS(from_unconstrained(bad, shape), ContractViolation);
    }
    // Extreme unconstrained values still decode into a valid model.
    const auto shape = ParameterShape::of(BandwidthModel::rbf({0.9}, {1.0, 1.0}));
    const auto extreme = from_unconstrained(std::vector<double>{-800.0, 30.0, -30.0}, shape);
    CHECK(extreme.rho0(0) > 0.0);
    CHECK(from_unconstrained(std::vector<double>{800.0, 0.0, 0.0}, shape).rho0(0) <= kRhoMax);
}

TEST_CASE("permuted model and gradient unpermute") {
    const auto m = BandwidthModel::rbf({0.3, 0.5, 0.7}, {1.0, 2.0, 3.0});
    const std::vector<std::size_t> order{2, 0, 1};
    const auto p = m.permuted(order);
    CHECK(p.rho0_values() == std::vector<double>{0.7, 0.3, 0.5});
    CHECK(p.lengthscales() == std::vector<double>{3.0, 1.0, 2.0});
    const auto shape = ParameterShape::of(m);
    const std::vector<double> g{10, 11, 12, 20, 21, 22};
    CHECK(unpermute_gradient(g, shape, order) == std::vector<double>{11, 12, 10, 21, 22, 20});
}

TEST_CASE("evaluator agrees with rho()") {
    std::mt19937_64 rng(5);
    for (auto kind : kAllKinds) {
        const auto m = random_model(kind, 4, rng);
        const BandwidthEvaluator ev(m);
        const auto x = random_vec(rng, 4), y = random_vec(rng, 4);
        std::vector<double> fx(ev.feature_size()), fy(ev.feature_size()), r(4);
        ev.features(x, fx);
        ev.features(y, fy);
        ev.rho(fx, fy, r);
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(r[j] == doctest::Approx(rho(m, j, std::span(x).first(j), std::span(y).first(j)).value()).epsilon(1e-13));
    }
}

TEST_CASE("evaluator backward matches finite differences") {
    std::mt19937_64 rng(6);
    for (auto kind : kAllKinds) {
        const auto m = random_model(kind, 4, rng);
        const auto shape = ParameterShape::of(m);
        const auto params = to_unconstrained(m);
        const auto x = random_vec(rng, 4), y = random_vec(rng, 4);
        const auto weights = random_vec(rng, 4);
        auto loss = [&](const std::vector<double>& p) {
            const auto mm = from_unconstrained(p, shape);
            const BandwidthEvaluator ev(mm);
            std::vector<double> fx(ev.feature_size()), fy(ev.feature_size()), r(4);
            ev.features(x, fx);
            ev.features(y, fy);
            ev.rho(fx, fy, r);
            double s = 0.0;
            for (std::size_t j = 0; j < 4; ++j) s += weights[j] * r[j];
            return s;
        };
        const BandwidthEvaluator ev(m);
        std::vector<double> fx(ev.feature_size()), fy(ev.feature_size()), r(4);
        ev.features(x, fx);
        ev.features(y, fy);
        ev.rho(fx, fy, r);
        std::vector<double> grad(params.size(), 0.0), fxb(fx.size(), 0.0), fyb(fy.size(), 0.0);
        ev.backward(fx, fy, r, weights, grad, fxb, fyb);
        ev.finish_feature_backward(x, fxb, grad);
        ev.finish_feature_backward(y, fyb, grad);
        for (std::size_t k = 0; k < params.size(); ++k) {
            auto pp = params, pm = params;
            pp[k] += 1e-6;
            pm[k] -= 1e-6;
            const double fd = (loss(pp) - loss(pm)) / 2e-6;
            CHECK(grad[k] == doctest::Approx(fd).epsilon(1e-5).scale(1e-3));
        }
    }
}
