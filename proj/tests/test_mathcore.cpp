#include <doctest.h>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>

#include "arbp/errors.hpp"
#include "arbp/mathcore.hpp"

using namespace arbp;

namespace {

double integrate(auto f, double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-12);
}

}  // namespace

TEST_CASE("normal cdf matches boost within 1e-12") {
    boost::math::normal_distribution<double> nd;
    for (double x = -12.0; x <= 12.0; x += 0.0625) {
        CHECK(std::abs(std_normal_cdf(x) - boost::math::cdf(nd, x)) <= 1e-12);
        CHECK(std::abs(std_normal_cdf(x) + std_normal_cdf(-x) - 1.0) <= 1e-15);
    }
    CHECK(std_normal_cdf(0.0) == 0.5);
    CHECK(std_normal_cdf(1.959964) == doctest::Approx(0.975).epsilon(1e-6));
    CHECK_THROWS_AS(std_normal_cdf(NAN), DomainError);
    CHECK_THROWS_AS(std_normal_cdf(INFINITY), DomainError);
}

TEST_CASE("normal cdf is monotone") {
    double prev = 0.0;
    for (double x = -9.0; x <= 9.0; x += 0.001) {
        const double p = std_normal_cdf(x);
        CHECK(p >= prev);
        prev = p;
    }
}

TEST_CASE("normal quantile round trips") {
    CHECK(std_normal_quantile(0.5) == 0.0);
    CHECK(std::abs(std_normal_quantile(0.975) - 1.959964) <= 1e-6);
    boost::math::normal_distribution<double> nd;
    for (double lp = -10.0; lp <= -0.0; lp += 0.05) {
        const double p = std::pow(10.0, lp);
        if (p >= 1.0) continue;
        for (double pp : {p, 1.0 - p}) {
            if (pp <= 1e-10 || pp >= 1.0 - 1e-10) continue;
            CHECK(std::abs(std_normal_cdf(std_normal_quantile(pp)) - pp) <= 1e-11);
        }
    }
    for (double x = -6.0; x <= 6.0; x += 0.01) {
        const double p = std_normal_cdf(x);
        const double err = std::abs(std_normal_quantile(p) - x);
        if (x <= 5.5) {
            CHECK(err <= 1e-9);
        } else {
            // Beyond 5.5 one ulp of p moves x by more than 1e-9.
            const double ulp = std::nextafter(p, 2.0) - p;
            CHECK(err <= 2.0 * ulp / std_normal_pdf(x));
        }
    }
    for (double p : {0.0, 1.0, -0.1, 1.5}) CHECK_THROWS_AS(std_normal_quantile(p), DomainError);
    CHECK_THROWS_AS(std_normal_quantile(NAN), DomainError);
    CHECK(std::abs(std_normal_quantile(1e-6) - boost::math::quantile(nd, 1e-6)) <= 1e-9);
}

TEST_CASE("unit interval and correlation guards") {
    CHECK(UnitInterval(0.0).value() == kUnitEps);
    CHECK(UnitInterval(1.0).value() == 1.0 - kUnitEps);
    CHECK(UnitInterval(0.3).value() == 0.3);
    CHECK_THROWS_AS(UnitInterval(NAN), DomainError);
    CHECK(Correlation(1.0).value() == kRhoMax);
    CHECK(Correlation(0.0).value() > 0.0);
    CHECK_THROWS_AS(Correlation(-0.1), DomainError);
    CHECK_THROWS_AS(Correlation(NAN), DomainError);
}

TEST_CASE("copula density values") {
    CHECK(copula_density(UnitInterval(0.5), UnitInterval(0.5), Correlation(0.6)) == doctest::Approx(1.25).epsilon(1e-12));
    for (double u : {0.05, 0.3, 0.77}) {
        for (double v : {0.1, 0.5, 0.92}) {
            CHECK(copula_density(UnitInterval(u), UnitInterval(v), Correlation(1e-12)) == doctest::Approx(1.0));
            const double a = copula_density(UnitInterval(u), UnitInterval(v), Correlation(0.7));
            const double b = copula_density(UnitInterval(v), UnitInterval(u), Correlation(0.7));
            CHECK(a > 0.0);
            CHECK(a == doctest::Approx(b).epsilon(1e-14));
        }
    }
}

TEST_CASE("copula density agrees with the bivariate normal ratio") {
    // c(u, v) = phi2(a, b; rho) / (phi(a) phi(b)).
    const double rho = 0.45, a = -0.8, b = 1.3;
    const double phi2 = std::exp(-(a * a - 2 * rho * a * b + b * b) / (2 * (1 - rho * rho))) /
                        (2 * M_PI * std::sqrt(1 - rho * rho));
    const double expected = phi2 / (std_normal_pdf(a) * std_normal_pdf(b));
    CHECK(std::exp(log_copula_density_scores(a, b, rho)) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("conditional copula cdf") {
    for (double u : {0.1, 0.5, 0.8})
        CHECK(copula_conditional_cdf(UnitInterval(u), UnitInterval(0.3), Correlation(1e-12)).value() ==
              doctest::Approx(u).epsilon(1e-10));
    for (double r : {0.1, 0.5, 0.99})
        CHECK(copula_conditional_cdf(UnitInterval(0.5), UnitInterval(0.5), Correlation(r)).value() ==
              doctest::Approx(0.5).epsilon(1e-15));
    const double quad = integrate(
        [](double up) { return copula_density(UnitInterval(up), UnitInterval(0.7), Correlation(0.5)); }, 0.0, 0.9);
    const double h = copula_conditional_cdf(UnitInterval(0.9), UnitInterval(0.7), Correlation(0.5));
    CHECK(std::abs(h - quad) <= 1e-6);
}

TEST_CASE("copula properties on random draws") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> vu(0.01, 0.99), ru(0.01, 0.95);
    for (int rep = 0; rep < 40; ++rep) {
        const double v = vu(rng), r = ru(rng);
        const double total = integrate(
            [&](double up) { return copula_density(UnitInterval(up), UnitInterval(v), Correlation(r)); }, 0.0, 1.0);
        CHECK(std::abs(total - 1.0) <= 1e-6);
        CHECK(copula_conditional_cdf(UnitInterval(kUnitEps), UnitInterval(v), Correlation(r)).value() <= 1e-4);
        CHECK(copula_conditional_cdf(UnitInterval(1 - kUnitEps), UnitInterval(v), Correlation(r)).value() >= 1 - 1e-4);
        const double u = vu(rng), h = 1e-5;
        const double fd = (copula_conditional_cdf_scores(std_normal_quantile(u + h), std_normal_quantile(v), r) -
                           copula_conditional_cdf_scores(std_normal_quantile(u - h), std_normal_quantile(v), r)) /
                          (2 * h);
        CHECK(fd == doctest::Approx(copula_density(UnitInterval(u), UnitInterval(v), Correlation(r))).epsilon(1e-4));
        double prev = 0.0;
        for (double uu = 0.001; uu < 1.0; uu += 0.01) {
            const double hh = copula_conditional_cdf(UnitInterval(uu), UnitInterval(v), Correlation(r));
            CHECK(hh >= prev);
            prev = hh;
        }
    }
}

TEST_CASE("alpha sequence") {
    CHECK(alpha(1) == 0.5);
    CHECK(alpha(2) == 0.5);
    CHECK(alpha(3) == doctest::Approx(5.0 / 12.0).epsilon(1e-15));
    CHECK_THROWS_AS(alpha(0), DomainError);
    for (std::size_t i = 1; i < 1000; ++i) {
        const double di = static_cast<double>(i);
        CHECK(std::abs(alpha(i) * (di + 1) * di - (2 * di - 1)) <= 1e-12);
        CHECK(alpha(i) > 0.0);
    }
    CHECK(alpha(1000000) < 3e-6);
}

TEST_CASE("softplus and sigmoid are stable") {
    CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
    CHECK(softplus(800.0) == 800.0);
    CHECK(softplus(-800.0) == 0.0);
    CHECK(sigmoid(-800.0) == 0.0);
    CHECK(sigmoid(800.0) == 1.0);
    CHECK(sigmoid(0.3) == doctest::Approx(1.0 / (1.0 + std::exp(-0.3))));
}
