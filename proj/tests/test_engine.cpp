#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "arbp/engine.hpp"
#include "arbp/errors.hpp"
#include "helpers.hpp"

using namespace arbp;
using testing::identity_config;
using testing::integrate;

namespace {

// Values from tests/oracles/engine_tensor.py.
const Matrix kX3 = Matrix::from_rows({{0.3, -1.1}, {1.2, 0.4}, {-0.7, 0.9}});
const std::vector<double> kV3{0.6179114221889526, 0.13566606094638267, 0.915065519039367,
                              0.815453443925746,  0.07523428664550266, 0.8856123163243573};
const std::vector<double> kLogp3{-2.4878770664093453, -3.1684007744139273, -3.842596840136564};

double dpmm_first_update(double x, double x1, double rho0) {
    // Normal-normal DPMM with unit kernel variance and base precision tau.
    const double tau = 1.0 / rho0 - 1.0;
    const double s2 = 1.0 + 1.0 / tau;
    auto npdf = [](double z, double mean, double var) {
        return std::exp(-0.5 * (z - mean) * (z - mean) / var) / std::sqrt(2 * std::numbers::pi * var);
    };
    const double joint = integrate(
        [&](double th) { return npdf(x, th, 1.0) * npdf(x1, th, 1.0) * npdf(th, 0.0, 1.0 / tau); }, -40.0, 40.0, 1e-14);
    return 0.5 * npdf(x, 0.0, s2) + 0.5 * joint / npdf(x1, 0.0, s2);
}

}  // namespace

TEST_CASE("permutations are reproducible and valid") {
    const auto a = PermutationPair::make(50, 6, 9, 3);
    CHECK(a.valid());
    CHECK(a == PermutationPair::make(50, 6, 9, 3));
    CHECK(a.sample_order != PermutationPair::make(50, 6, 9, 4).sample_order);
    CHECK(a.sample_order != PermutationPair::make(50, 6, 10, 3).sample_order);
    const auto id = PermutationPair::make(5, 3, 1, 0, false, false);
    CHECK(id == PermutationPair::identity(5, 3));
    FitConfig nested;
    nested.scheme = PermutationScheme::Nested;
    nested.permutations = 6;
    nested.feature_groups = 2;
    const auto perms = make_permutations(10, 7, nested);
    CHECK(perms[0].feature_order == perms[2].feature_order);
    CHECK(perms[1].feature_order == perms[5].feature_order);
    CHECK(perms[0].sample_order != perms[2].sample_order);
}

TEST_CASE("update_step examples") {
    const auto bw = BandwidthModel::constant(0.7, 1);
    QueryState s;
    s.u = {0.5};
    const auto out = update_step(s, std::vector<double>{0.0}, std::vector<double>{0.0}, 4, bw, std::vector<double>{0.5});
    CHECK(out.u[0] == doctest::Approx(0.5).epsilon(1e-15));

    const auto tiny = BandwidthModel::constant(1e-300, 2);
    QueryState t;
    t.u = {0.2, 0.9};
    t.log_p = -1.5;
    const auto o2 = update_step(t, std::vector<double>{0.1, 0.2}, std::vector<double>{1.0, -1.0}, 2, tiny,
                                std::vector<double>{0.7, 0.1});
    CHECK(o2.u[0] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(o2.u[1] == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(o2.log_p == doctest::Approx(-1.5).epsilon(1e-14));

    const auto bw8 = BandwidthModel::constant(0.8, 1);
    const double u = std_normal_cdf(0.3), v = std_normal_cdf(-0.2);
    QueryState q;
    q.u = {u};
    const auto o3 = update_step(q, std::vector<double>{0.3}, std::vector<double>{-0.2}, 1, bw8, std::vector<double>{v});
    const double c = std::exp(log_copula_density_scores(0.3, -0.2, 0.8));
    CHECK(o3.log_p == doctest::Approx(std::log(0.5 + 0.5 * c)).epsilon(1e-12));
    CHECK_THROWS_AS(update_step(q, std::vector<double>{0.3, 1.0}, std::vector<double>{-0.2}, 1, bw8,
                                std::vector<double>{v}),
                    ContractViolation);
}

TEST_CASE("fit matches the straight-line oracle tensor") {
    auto cfg = identity_config();
    cfg.compute_density = true;
    std::vector<std::vector<double>> pre;
    const auto model = fit(kX3, BandwidthModel::constant(0.8, 2), cfg, &pre);
    for (std::size_t k = 0; k < kV3.size(); ++k) CHECK(model.v_tensor()[0][k] == doctest::Approx(kV3[k]).epsilon(1e-11));
    for (std::size_t k = 0; k < 3; ++k) CHECK(pre[0][k] == doctest::Approx(kLogp3[k]).epsilon(1e-11));
    const auto q = eval_log_density(model, Matrix::from_rows({{0.1, 0.2}}));
    CHECK(q[0] == doctest::Approx(-1.6774327011495296).epsilon(1e-11));
}

TEST_CASE("fit with a single point stores the initial CDFs") {
    FitConfig cfg;
    cfg.permutations = 3;
    cfg.compute_density = true;
    std::vector<std::vector<double>> pre;
    const auto model = fit(Matrix::from_rows({{0.4, -1.3, 2.0}}), BandwidthModel::constant(0.9, 3), cfg, &pre);
    for (std::size_t m = 0; m < 3; ++m) {
        const auto& order = model.permutation(m).feature_order;
        const std::vector<double> x{0.4, -1.3, 2.0};
        for (std::size_t j = 0; j < 3; ++j) CHECK(model.v(m, 0, j) == std_normal_cdf(x[order[j]]));
        const double p0 = std_normal_log_pdf(0.4) + std_normal_log_pdf(-1.3) + std_normal_log_pdf(2.0);
        CHECK(pre[m][0] == doctest::Approx(p0).epsilon(1e-14));
    }
    CHECK_THROWS_AS(fit(Matrix(0, 2), BandwidthModel::constant(0.9, 2), cfg), ContractViolation);
}

TEST_CASE("model without observations evaluates p0") {
    const FittedDensityModel model(BandwidthModel::constant(0.9, 2), Matrix(0, 2), {PermutationPair::identity(0, 2)},
                                   {std::vector<double>{}}, 0);
    const auto lp = eval_log_density(model, Matrix::from_rows({{0.5, -0.25}}));
    CHECK(lp[0] == doctest::Approx(std_normal_log_pdf(0.5) + std_normal_log_pdf(-0.25)).epsilon(1e-14));
    CHECK_THROWS_AS(eval_log_density(model, Matrix::from_rows({{0.5}})), ContractViolation);
}

TEST_CASE("prequential nll examples") {
    const auto bw = BandwidthModel::constant(0.7, 1);
    const auto one = Matrix::from_rows({{0.4}});
    CHECK(prequential_nll(one, bw, PermutationPair::identity(1, 1)) == doctest::Approx(-std_normal_log_pdf(0.4)));
    const auto two = Matrix::from_rows({{0.4}, {-0.9}});
    CHECK(prequential_nll(two, bw, PermutationPair::identity(2, 1)) == doctest::Approx(2.586774437039084).epsilon(1e-12));

    const auto c = BandwidthModel::constant(0.85, 3);
    const auto x2 = Matrix::from_rows({{0.3, -1.1, 0.5}, {1.2, 0.4, -0.2}});
    auto perm2 = PermutationPair::identity(2, 3);
    const double base = prequential_nll(x2, c, perm2);
    perm2.feature_order = {2, 0, 1};
    CHECK(prequential_nll(x2, c, perm2) == doctest::Approx(base).epsilon(1e-12));

    // From the second update on the conditional CDFs depend on the feature order.
    const auto x4 = Matrix::from_rows({{0.3, -1.1, 0.5}, {1.2, 0.4, -0.2}, {-0.7, 0.9, 1.4}, {0.1, 0.2, -0.9}});
    auto perm4 = PermutationPair::identity(4, 3);
    CHECK(prequential_nll(x4, c, perm4) == doctest::Approx(18.401519406469852).epsilon(1e-11));
    perm4.feature_order = {2, 0, 1};
    CHECK(prequential_nll(x4, c, perm4) == doctest::Approx(18.22931677319996).epsilon(1e-11));
}

TEST_CASE("eval at a training point reproduces its prequential density") {
    const auto x = testing::normal_matrix(15, 3, 8);
    FitConfig cfg;
    cfg.permutations = 2;
    cfg.seed = 5;
    cfg.compute_density = true;
    std::vector<std::vector<double>> pre;
    const auto model = fit(x, BandwidthModel::rbf({0.9}, {1.2, 0.8, 1.0}), cfg, &pre);
    for (std::size_t m = 0; m < 2; ++m) {
        const auto& order = model.permutation(m).sample_order;
        for (std::size_t t = 0; t < 15; ++t) {
            const std::size_t orig = order[t];
            const auto lp = eval_log_density_permutation(model, m, Matrix::from_rows({{x(orig, 0), x(orig, 1), x(orig, 2)}}), t);
            CHECK(lp[0] == doctest::Approx(pre[m][orig]).epsilon(1e-12));
        }
    }
}

TEST_CASE("reduction identities") {
    const auto x = testing::normal_matrix(30, 3, 12);
    const auto test = testing::normal_matrix(20, 3, 13);
    FitConfig cfg;
    cfg.permutations = 3;
    const auto r = eval_log_density(fit(x, BandwidthModel::constant(0.8, 3), cfg), test);
    const auto a = eval_log_density(fit(x, BandwidthModel::rbf({0.8}, {1e9, 1e9, 1e9}), cfg), test);
    const auto n = eval_log_density(fit(x, BandwidthModel::net({0.8}, ArNetWeights::zeros(3)), cfg), test);
    for (std::size_t t = 0; t < 20; ++t) {
        CHECK(std::abs(a[t] - r[t]) <= 1e-10);
        CHECK(std::abs(n[t] - r[t]) <= 1e-10);
    }
}

TEST_CASE("first update matches the DPMM predictive") {
    for (double rho0 : {0.5, 0.9}) {
        const double sigma = std::sqrt(1.0 / (1.0 - rho0));
        for (double x1 : {-1.0, 0.0, 2.0}) {
            for (double x = -3.0; x <= 3.0; x += 1.0) {
                const double ours = std::exp(testing::log_density_after({{x1 / sigma}}, BandwidthModel::constant(rho0, 1),
                                                                        {x / sigma}, 1)) /
                                    sigma;
                CHECK(ours == doctest::Approx(dpmm_first_update(x, x1, rho0)).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("martingale property in one dimension") {
    const std::vector<std::vector<double>> past{{0.4}, {-1.2}, {0.9}, {2.1}};
    for (auto bw : {BandwidthModel::constant(0.8, 1), BandwidthModel::rbf({0.9}, {0.7})}) {
        for (std::size_t i : {1u, 5u}) {
            std::vector<std::vector<double>> rows(past.begin(), past.begin() + static_cast<std::ptrdiff_t>(i - 1));
            for (double x : {-1.5, 0.2, 1.7}) {
                const double lhs = integrate(
                    [&](double y) {
                        auto r = rows;
                        r.push_back({y});
                        const double pi = std::exp(testing::log_density_after(r, bw, {x}, i));
                        const double pprev = i == 1 ? std::exp(std_normal_log_pdf(y))
                                                    : std::exp(testing::log_density_after(r, bw, {y}, i - 1));
                        return pi * pprev;
                    },
                    -8.0, 8.0, 1e-10);
                const double rhs = i == 1 ? std::exp(std_normal_log_pdf(x))
                                          : std::exp(testing::log_density_after(rows, bw, {x}, i - 1));
                CHECK(lhs == doctest::Approx(rhs).epsilon(1e-4));
            }
        }
    }
}

TEST_CASE("one-dimensional fit: normalization, cdf consistency, monotonicity") {
    auto x = testing::normal_matrix(50, 1, 21);
    for (std::size_t k = 0; k < 25; ++k) x.data[k] = 0.5 * x.data[k] - 1.0;
    const auto model = fit(x, BandwidthModel::constant(0.9, 1), identity_config());
    const PermutationView view(model, 0);
    auto dens = [&](double z) { return std::exp(view.run(std::vector<double>{z}, 50).log_p); };
    CHECK(integrate(dens, -10.0, 10.0, 1e-10) == doctest::Approx(1.0).epsilon(1e-3));
    for (int g = 0; g <= 40; ++g) {
        const double z = -4.0 + 0.2 * g;
        const double cdf = view.run(std::vector<double>{z}, 50).u[0];
        CHECK(std::abs(cdf - integrate(dens, -12.0, z, 1e-11)) <= 1e-4);
    }
    double prev = 0.0;
    for (int g = 0; g < 200; ++g) {
        const double u = view.run(std::vector<double>{-5.0 + 0.05 * g}, 50).u[0];
        CHECK(u >= prev);
        prev = u;
    }
}

TEST_CASE("conditional mean moves toward the observed response") {
    const auto bw = BandwidthModel::rbf({0.9}, {1.0, 1.0});
    for (auto obs : std::vector<std::vector<double>>{{0.5, 1.2}, {-0.3, -0.8}, {1.0, -2.0}}) {
        const double x = obs[0];
        auto joint = [&](double y) { return std::exp(testing::log_density_after({obs}, bw, {x, y}, 1)); };
        const double px = integrate(joint, -10.0, 10.0);
        const double mean = integrate([&](double y) { return y * joint(y); }, -10.0, 10.0) / px;
        CHECK((mean > 0.0) == (obs[1] > 0.0));
    }
}

TEST_CASE("fit is deterministic") {
    const auto x = testing::normal_matrix(40, 3, 2);
    FitConfig cfg;
    cfg.seed = 77;
    const auto a = fit(x, BandwidthModel::rbf({0.9}, {1.0, 1.0, 1.0}), cfg);
    const auto b = fit(x, BandwidthModel::rbf({0.9}, {1.0, 1.0, 1.0}), cfg);
    CHECK(a.v_tensor() == b.v_tensor());
    CHECK(a.permutations() == b.permutations());
    cfg.seed = 78;
    CHECK(fit(x, BandwidthModel::rbf({0.9}, {1.0, 1.0, 1.0}), cfg).v_tensor() != a.v_tensor());
}

TEST_CASE("log_sum_exp") {
    const std::vector<double> v{-1000.0, -1000.0};
    CHECK(log_sum_exp(v) == doctest::Approx(-1000.0 + std::log(2.0)));
    CHECK(std::isinf(log_sum_exp(std::vector<double>{})));
}
