// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: arbp_acceptance [criterion ids...]   (default: all; "smoke" is the n=5000 run)

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "arbp/benchmark.hpp"
#include "arbp/engine.hpp"
#include "arbp/errors.hpp"
#include "arbp/io.hpp"
#include "arbp/sampling.hpp"
#include "arbp/supervised.hpp"
#include "arbp/train.hpp"

using namespace arbp;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(const std::string& id, const std::string& name, bool pass, const std::string& detail) {
    if (!pass) ++failures;
    std::printf("[%s] %-6s %s: %s\n", pass ? "PASS" : "FAIL", id.c_str(), name.c_str(), detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol, unsigned depth = 15) {
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, depth, tol);
}

double npdf(double z, double mean, double var) {
    return std::exp(-0.5 * (z - mean) * (z - mean) / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

FitConfig identity_config() {
    FitConfig c;
    c.permutations = 1;
    c.shuffle_samples = false;
    c.shuffle_features = false;
    return c;
}

double density_after(const std::vector<std::vector<double>>& rows, const BandwidthModel& bw,
                     const std::vector<double>& x, std::size_t steps) {
    const auto model = fit(Matrix::from_rows(rows), bw, identity_config());
    return std::exp(eval_log_density(model, Matrix::from_rows({x}), steps)[0]);
}

Matrix normal_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Matrix m(n, d);
    for (auto& v : m.data) v = nd(rng);
    return m;
}

Matrix gmm(std::size_t n, std::size_t d, std::uint64_t seed, double sep = 1.5, double sd = 0.4) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Matrix x(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const double c = i % 2 == 0 ? -sep : sep;
        for (std::size_t j = 0; j < d; ++j) x(i, j) = c + sd * nd(rng);
    }
    return x;
}

double slope(const std::vector<double>& n, const std::vector<double>& t) {
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < n.size(); ++k) {
        lx.push_back(std::log(n[k]));
        ly.push_back(std::log(t[k]));
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sxy += (lx[k] - mx) * (ly[k] - my);
        sxx += (lx[k] - mx) * (lx[k] - mx);
    }
    return sxy / sxx;
}

// 1. One copula update against the normal-normal DPMM predictive by quadrature.
void criterion_1() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (double rho0 : {0.5, 0.9}) {
        const double tau = 1.0 / rho0 - 1.0;
        const double s2 = 1.0 + 1.0 / tau;
        const double sigma = std::sqrt(s2);
        for (double x1 : {-1.0, 0.0, 2.0}) {
            for (int k = -3; k <= 3; ++k) {
                const double x = k;
                const double joint = integrate(
                    [&](double th) { return npdf(x, th, 1.0) * npdf(x1, th, 1.0) * npdf(th, 0.0, 1.0 / tau); }, -40.0,
                    40.0, 1e-14);
                const double dpmm = 0.5 * npdf(x, 0.0, s2) + 0.5 * joint / npdf(x1, 0.0, s2);
                // The recursion works on the p0 = N(0, s2) scale; map to unit scale and back.
                const double ours = density_after({{x1 / sigma}}, BandwidthModel::constant(rho0, 1), {x / sigma}, 1) / sigma;
                worst = std::max(worst, std::abs(ours - dpmm) / dpmm);
            }
        }
    }
    const double secs = seconds_since(t0);
    report("1", "first-update oracle", worst <= 1e-6 && secs < 10.0,
           fmt("max rel err %.2e (tol 1e-6), %.2f s (limit 10 s)", worst, secs));
}

// 2. c.i.d. property: integral of p_i(x) p_{i-1}(x_i) over x_i equals p_{i-1}(x).
void criterion_2() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ls(0.5, 2.0);
    double worst = 0.0;
    for (std::size_t d : {1u, 2u}) {
        std::vector<double> l(d);
        for (auto& v : l) v = ls(rng);
        const auto bw = BandwidthModel::rbf({0.85}, l);
        const auto past_m = normal_matrix(4, d, 7 + d);
        std::vector<std::vector<double>> past;
        for (std::size_t i = 0; i < 4; ++i) past.emplace_back(past_m.row(i).begin(), past_m.row(i).end());
        const auto queries = normal_matrix(3, d, 17 + d);
        for (std::size_t i : {1u, 5u}) {
            const std::vector<std::vector<double>> rows(past.begin(), past.begin() + static_cast<std::ptrdiff_t>(i - 1));
            auto prev = [&](const std::vector<double>& z) {
                if (i > 1) return density_after(rows, bw, z, i - 1);
                double p = 1.0;
                for (double v : z) p *= npdf(v, 0.0, 1.0);
                return p;
            };
            for (std::size_t q = 0; q < queries.rows; ++q) {
                const std::vector<double> x(queries.row(q).begin(), queries.row(q).end());
                auto integrand = [&](const std::vector<double>& y) {
                    auto r = rows;
                    r.push_back(y);
                    return density_after(r, bw, x, i) * prev(y);
                };
                double lhs = 0.0;
                if (d == 1) {
                    lhs = integrate([&](double y) { return integrand({y}); }, -9.0, 9.0, 1e-11);
                } else {
                    lhs = integrate(
                        [&](double y1) {
                            return integrate([&](double y2) { return integrand({y1, y2}); }, -9.0, 9.0, 1e-10, 10);
                        },
                        -9.0, 9.0, 1e-10, 10);
                }
                const double rhs = prev(x);
                worst = std::max(worst, std::abs(lhs - rhs) / rhs);
            }
        }
    }
    const double secs = seconds_since(t0);
    report("2", "martingale property (d=1,2; i=1,5)", worst <= 1e-4 && secs < 120.0,
           fmt("max rel err %.2e (tol 1e-4), %.1f s (limit 120 s)", worst, secs));
}

// 3. Normalization and CDF/density consistency of a fitted 1-D AR-BP.
void criterion_3() {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    Matrix x(50, 1);
    for (std::size_t i = 0; i < 50; ++i) x(i, 0) = i % 3 == 0 ? -1.5 + 0.5 * nd(rng) : 0.8 + 0.7 * nd(rng);
    OptimizerConfig oc;
    oc.maxiter = 50;
    oc.seed = 3;
    const auto bw = optimize(x, BandwidthModel::rbf({0.9}, {1.0}), oc);
    FitConfig fc;
    fc.permutations = 10;
    fc.seed = 3;
    const auto model = fit(x, bw, fc);
    auto dens = [&](double z) { return std::exp(eval_log_density(model, Matrix::from_rows({{z}}))[0]); };
    auto cdf = [&](double z) {
        double s = 0.0;
        for (std::size_t m = 0; m < model.permutation_count(); ++m) {
            const PermutationView view(model, m);
            s += view.run(std::vector<double>{z}, model.n()).u[0];
        }
        return s / static_cast<double>(model.permutation_count());
    };
    const double mass = integrate(dens, -12.0, 12.0, 1e-11);
    double worst = 0.0;
    for (int g = 0; g <= 40; ++g) {
        const double z = -4.0 + 0.2 * g;
        worst = std::max(worst, std::abs(cdf(z) - integrate(dens, -14.0, z, 1e-12)));
    }
    bool monotone = true;
    double prev = 0.0;
    for (int g = 0; g <= 400; ++g) {
        const double u = cdf(-6.0 + 0.03 * g);
        if (u < prev) monotone = false;
        prev = u;
    }
    report("3", "normalization and CDF consistency", std::abs(mass - 1.0) <= 1e-3 && worst <= 1e-4 && monotone,
           fmt("integral %.6f (1 +- 1e-3), max |CDF - int p| %.2e on 41 points (tol 1e-4), monotone %s", mass, worst,
               monotone ? "yes" : "no"));
}

// 4. Reduction identities.
void criterion_4() {
    const auto x = normal_matrix(40, 3, 41);
    const auto test = normal_matrix(30, 3, 42);
    FitConfig cfg;
    cfg.permutations = 4;
    cfg.seed = 4;
    const auto r = eval_log_density(fit(x, BandwidthModel::constant(0.85, 3), cfg), test);
    const auto a = eval_log_density(fit(x, BandwidthModel::rbf({0.85}, {1e9, 1e9, 1e9}), cfg), test);
    const auto n = eval_log_density(fit(x, BandwidthModel::net({0.85}, ArNetWeights::zeros(3)), cfg), test);
    double da = 0.0, dn = 0.0;
    for (std::size_t t = 0; t < r.size(); ++t) {
        da = std::max(da, std::abs(a[t] - r[t]));
        dn = std::max(dn, std::abs(n[t] - r[t]));
    }
    report("4", "reduction identities", da <= 1e-10 && dn <= 1e-10,
           fmt("|AR(l=1e9) - R| %.2e, |ARnet(w=0) - R| %.2e (tol 1e-10)", da, dn));
}

// 5. Exact gradients against central finite differences.
void criterion_5() {
    const auto x = normal_matrix(20, 3, 51);
    auto net = ArNetWeights::truncated_normal(3, 5, 4, 2);
    const std::vector<std::pair<std::string, BandwidthModel>> cases{
        {"R-BP", BandwidthModel::constant(0.8, 3)},
        {"AR_d-BP", BandwidthModel::rbf({0.7, 0.85, 0.95}, {0.8, 1.3, 1.1})},
        {"ARnet-BP", BandwidthModel::net({0.9}, net)},
    };
    std::string detail;
    bool pass = true;
    for (const auto& [name, bw] : cases) {
        const auto shape = ParameterShape::of(bw);
        const auto params = to_unconstrained(bw);
        std::vector<PermutationPair> perms{PermutationPair::make(20, 3, 5, 0), PermutationPair::make(20, 3, 5, 1)};
        std::vector<double> grad;
        objective_and_gradient(params, x, shape, perms, grad);
        const auto fd = finite_difference_gradient(params, x, shape, perms, 1e-5);
        double scale = 0.0, worst = 0.0;
        for (double g : fd) scale = std::max(scale, std::abs(g));
        for (std::size_t k = 0; k < grad.size(); ++k) {
            const double denom = std::max(std::abs(fd[k]), 1e-3 * scale);
            worst = std::max(worst, std::abs(grad[k] - fd[k]) / denom);
        }
        pass = pass && worst <= 1e-3;
        detail += fmt("%s %zu params rel err %.1e; ", name.c_str(), params.size(), worst);
    }
    report("5", "gradient check", pass, detail + "tol 1e-3");
}

std::optional<RawTable> dataset(const std::string& name) {
    const auto path = "data/" + name + ".csv";
    if (!std::filesystem::exists(path)) return std::nullopt;
    return load_csv(path);
}

BenchmarkReport bench(const std::string& name, const RawTable& data, ModelVariant v, BenchmarkTask task,
                      const std::string& target, const OptimizerConfig& opt) {
    BenchmarkConfig cfg;
    cfg.dataset = name;
    cfg.task = task;
    cfg.target = target;
    cfg.run.model = v;
    cfg.run.optimizer = opt;
    cfg.runs = 5;
    return run_benchmark(cfg, data);
}

// 6. Small UCI density estimation.
void criterion_6() {
    const auto t0 = Clock::now();
    struct Target {
        std::string name;
        double ar, ard;
    };
    for (const auto& t : {Target{"wine", 13.45, 13.22}, Target{"breast", 6.18, 6.11}, Target{"parkinsons", 8.29, 7.21}}) {
        const auto data = dataset(t.name);
        for (auto [v, target] : {std::pair{ModelVariant::ArBp, t.ar}, std::pair{ModelVariant::ArdBp, t.ard}}) {
            const std::string id = "6-" + t.name + "-" + to_string(v);
            if (!data) {
                report(id, "small-UCI NLL", false, "data/" + t.name + ".csv not available in this environment");
                continue;
            }
            const auto r = bench(t.name, *data, v, BenchmarkTask::Density, "", OptimizerConfig{});
            report(id, "small-UCI NLL", !r.partial && std::abs(r.mean_nll - target) <= 0.5,
                   fmt("%.3f +- %.3f over 5 runs, d=%zu (target %.2f +- 0.5)", r.mean_nll, r.se_nll, r.runs[0].dim, target));
        }
    }
    const double secs = seconds_since(t0);
    report("6-time", "small-UCI runtime", secs < 1800.0, fmt("%.0f s (limit 1800 s)", secs));
}

// 7. Supervised BOSTON regression and IONO classification.
void criterion_7() {
    const auto t0 = Clock::now();
    OptimizerConfig opt;
    opt.learning_rate = 0.1;
    opt.maxiter = 1500;
    struct Case {
        std::string name, target;
        BenchmarkTask task;
        double limit;
    };
    for (const auto& c : {Case{"boston", "medv", BenchmarkTask::Regression, 0.62},
                          Case{"ionosphere", "label", BenchmarkTask::Classification, 0.30}}) {
        const std::string id = "7-" + c.name;
        const auto data = dataset(c.name);
        if (!data) {
            report(id, "supervised NLL", false, "data/" + c.name + ".csv not available");
            continue;
        }
        const auto r = bench(c.name, *data, ModelVariant::ArdBp, c.task, c.target, opt);
        report(id, "supervised NLL (ard-bp)", !r.partial && r.mean_nll <= c.limit,
               fmt("%s %.3f +- %.3f over 5 runs, d=%zu (limit %.2f)", to_string(c.task).c_str(), r.mean_nll, r.se_nll,
                   r.runs[0].dim, c.limit));
    }
    const double secs = seconds_since(t0);
    report("7-time", "supervised runtime", secs < 1200.0, fmt("%.0f s (limit 1200 s)", secs));
}

// 8. Chessboard: AR-BP beats R-BP in test log-likelihood.
void criterion_8() {
    const auto data = chessboard(1200, 8);
    BenchmarkConfig cfg;
    cfg.dataset = "chessboard";
    cfg.runs = 5;
    cfg.run.seed = 80;
    cfg.run.model = ModelVariant::RBp;
    const auto r = run_benchmark(cfg, data);
    cfg.run.model = ModelVariant::ArBp;
    const auto a = run_benchmark(cfg, data);
    int wins = 0;
    for (std::size_t k = 0; k < 5; ++k) wins += a.runs[k].nll < r.runs[k].nll;
    report("8", "chessboard ordering", !a.partial && !r.partial && -a.mean_nll > -r.mean_nll,
           fmt("mean test log-lik AR-BP %.3f vs R-BP %.3f (600 train rows, 5 runs; AR-BP better in %d/5 runs)",
               -a.mean_nll, -r.mean_nll, wins));
}

// 9. Classification predictive stays normalized.
void criterion_9() {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> nd;
    std::bernoulli_distribution coin(0.5);
    double worst = 0.0;
    for (int s = 0; s < 100; ++s) {
        Matrix x(20, 3);
        std::vector<double> y(20);
        for (auto& v : x.data) v = nd(rng);
        for (auto& v : y) v = coin(rng) ? 1.0 : 0.0;
        const auto bw = supervised_bandwidth(BandwidthKind::Rbf, 3, true, s);
        const auto model = fit_classification(x, y, bw, identity_config());
        const std::vector<double> xq{nd(rng), nd(rng), nd(rng)};
        for (std::size_t i = 0; i <= 20; ++i) {
            const auto [q0, q1] = class_probabilities_unnormalized(model, 0, xq, i);
            worst = std::max(worst, std::abs(q0 + q1 - 1.0));
        }
    }
    report("9", "classification normalization", worst <= 1e-12,
           fmt("max |p(1|x) + p(0|x) - 1| %.2e over 100 sequences of length 20 (tol 1e-12)", worst));
}

// 10. Fit time O(n^2), per-point evaluation time O(n).
void criterion_10() {
    const std::vector<double> sizes{250, 500, 1000, 2000};
    std::vector<double> fit_t, eval_t;
    const auto bw = BandwidthModel::rbf({0.9}, {1.0, 1.0, 1.0, 1.0});
    const auto test = gmm(400, 4, 101);
    for (double n : sizes) {
        const auto x = gmm(static_cast<std::size_t>(n), 4, 100);
        FitConfig fc;
        fc.permutations = 1;
        double best_fit = 1e300, best_eval = 1e300;
        for (int rep = 0; rep < 3; ++rep) {
            auto t0 = Clock::now();
            const auto model = fit(x, bw, fc);
            best_fit = std::min(best_fit, seconds_since(t0));
            t0 = Clock::now();
            const auto lp = eval_log_density(model, test);
            best_eval = std::min(best_eval, seconds_since(t0) / static_cast<double>(test.rows));
            if (!std::isfinite(lp[0])) throw NumericFault("non-finite density in timing run", 0);
        }
        fit_t.push_back(best_fit);
        eval_t.push_back(best_eval);
    }
    const double sf = slope(sizes, fit_t), se = slope(sizes, eval_t);
    report("10-fit", "fit time scaling", sf >= 1.8 && sf <= 2.3,
           fmt("log-log slope %.2f in [1.8, 2.3] (%.3f s .. %.3f s)", sf, fit_t.front(), fit_t.back()));
    report("10-eval", "per-point eval scaling", se >= 0.8 && se <= 1.2,
           fmt("log-log slope %.2f in [0.8, 1.2] (%.1f us .. %.1f us per point)", se, 1e6 * eval_t.front(),
               1e6 * eval_t.back()));
}

// 11. SMC sampling.
void criterion_11() {
    FitConfig fc;
    fc.permutations = 10;
    fc.seed = 11;
    const auto x = gmm(50, 2, 110);
    OptimizerConfig oc;
    oc.seed = 11;
    const auto bw = optimize(x, BandwidthModel::rbf({0.9}, {1.0, 1.0}), oc);
    const auto model = fit(x, bw, fc);
    SamplingConfig sc;
    sc.particles = 1000;
    sc.seed = 111;
    const auto ps = smc_sample(model, sc);
    double w[2] = {0, 0}, m0[2] = {0, 0}, m1[2] = {0, 0};
    for (std::size_t k = 0; k < ps.particles.rows; ++k) {
        const int side = ps.particles(k, 0) + ps.particles(k, 1) > 0.0 ? 1 : 0;
        w[side] += ps.weights[k];
        m0[side] += ps.weights[k] * ps.particles(k, 0);
        m1[side] += ps.weights[k] * ps.particles(k, 1);
    }
    double worst = 0.0;
    for (int s = 0; s < 2; ++s) {
        const double c = s == 0 ? -1.5 : 1.5;
        worst = std::max({worst, std::abs(m0[s] / w[s] - c), std::abs(m1[s] / w[s] - c)});
    }
    report("11-means", "SMC recovers GMM means", worst <= 0.3,
           fmt("max |mean - true| %.3f (tol 0.3), B=1000, n=50", worst));
    report("11-resample", "ESS-triggered resampling", ps.resample_events >= 1,
           fmt("%zu resampling events", ps.resample_events));

    // d = 1: weighted empirical CDF of 5000 particles against a quadrature CDF.
    std::mt19937_64 rng(12);
    std::normal_distribution<double> nd;
    Matrix x1(50, 1);
    for (std::size_t i = 0; i < 50; ++i) x1(i, 0) = i % 3 == 0 ? -2.0 + 0.5 * nd(rng) : 1.0 + 0.6 * nd(rng);
    const auto m1d = fit(x1, BandwidthModel::constant(0.85, 1), fc);
    SamplingConfig s1;
    s1.particles = 5000;
    s1.seed = 112;
    const auto p1 = smc_sample(m1d, s1);
    std::vector<std::size_t> order(p1.particles.rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return p1.particles(a, 0) < p1.particles(b, 0); });
    // Trapezoid CDF of the fitted density on a fine grid, linearly interpolated.
    const double lo = -15.0, h = 2e-3;
    const std::size_t count = 15001;
    Matrix grid(count, 1);
    for (std::size_t k = 0; k < count; ++k) grid(k, 0) = lo + h * static_cast<double>(k);
    const auto lp = eval_log_density(m1d, grid);
    std::vector<double> cdf(count, 0.0);
    for (std::size_t k = 1; k < count; ++k) cdf[k] = cdf[k - 1] + 0.5 * h * (std::exp(lp[k - 1]) + std::exp(lp[k]));
    auto quad_cdf = [&](double z) {
        const double pos = std::clamp((z - lo) / h, 0.0, static_cast<double>(count - 1));
        const auto k = std::min(static_cast<std::size_t>(pos), count - 2);
        return cdf[k] + (pos - static_cast<double>(k)) * (cdf[k + 1] - cdf[k]);
    };
    const double total = std::accumulate(p1.weights.begin(), p1.weights.end(), 0.0);
    double cum = 0.0, ks = 0.0;
    for (std::size_t k : order) {
        const double f = quad_cdf(p1.particles(k, 0));
        ks = std::max(ks, std::abs(cum / total - f));
        cum += p1.weights[k];
        ks = std::max(ks, std::abs(cum / total - f));
    }
    report("11-ks", "SMC KS distance (d=1)", ks <= 0.05, fmt("KS %.4f over 5000 samples (tol 0.05), quadrature mass %.6f", ks, cdf.back()));
}

// Large-n smoke run: no numeric faults at n = 5000.
void smoke() {
    const auto t0 = Clock::now();
    const auto x = gmm(5000, 6, 500, 1.0, 0.8);
    const auto test = gmm(500, 6, 501, 1.0, 0.8);
    OptimizerConfig oc;
    oc.maxiter = 50;
    oc.seed = 5;
    const auto bw = optimize(x, initial_bandwidth(ModelVariant::ArdBp, KernelKind::Rbf, 6, 5), oc);
    FitConfig fc;
    fc.permutations = 2;
    fc.seed = 5;
    const auto model = fit(x, bw, fc);
    const auto lp = eval_log_density(model, test);
    const bool finite = std::all_of(lp.begin(), lp.end(), [](double v) { return std::isfinite(v); });
    const double nll = -std::accumulate(lp.begin(), lp.end(), 0.0) / static_cast<double>(lp.size());
    report("smoke", "n=5000 ard-bp run", finite, fmt("test NLL %.3f, all finite: %s, %.1f s", nll, finite ? "yes" : "no",
                                                     seconds_since(t0)));
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, void (*)()>> all{
        {"1", criterion_1}, {"2", criterion_2}, {"3", criterion_3}, {"4", criterion_4},  {"5", criterion_5},
        {"6", criterion_6}, {"7", criterion_7}, {"8", criterion_8}, {"9", criterion_9},  {"10", criterion_10},
        {"11", criterion_11}, {"smoke", smoke}};
    std::set<std::string> wanted(argv + 1, argv + argc);
    const auto t0 = Clock::now();
    for (const auto& [id, fn] : all) {
        if (!wanted.empty() && !wanted.count(id)) continue;
        try {
            fn();
        } catch (const std::exception& e) {
            report(id, "criterion", false, std::string("exception: ") + e.what());
        }
    }
    std::printf("%d failing line(s), %.0f s total\n", failures, seconds_since(t0));
    return failures == 0 ? 0 : 1;
}
