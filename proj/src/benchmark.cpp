#include "arbp/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "arbp/engine.hpp"
#include "arbp/errors.hpp"
#include "arbp/parallel.hpp"
#include "arbp/supervised.hpp"
#include "arbp/train.hpp"

namespace arbp {

namespace {

struct Split {
    RawTable train, test;
};

Split split_rows(const RawTable& data, double fraction, std::uint64_t seed) {
    const std::size_t n = data.values.rows;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 5u};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    if (n_train < 2 || n_train >= n) throw ContractViolation("benchmark: split leaves fewer than two training rows or no test rows");
    std::vector<std::size_t> tr(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> te(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(tr.begin(), tr.end());
    std::sort(te.begin(), te.end());
    return {select_rows(data, tr), select_rows(data, te)};
}

double mean_nll(const std::vector<double>& lp) {
    return -std::accumulate(lp.begin(), lp.end(), 0.0) / static_cast<double>(lp.size());
}

void write_grid(const std::string& path, const FittedDensityModel& model, const Matrix& test, std::size_t points) {
    const std::size_t d = model.dim();
    if (d > 2 || points < 2) return;
    std::vector<double> lo(d), hi(d);
    for (std::size_t j = 0; j < d; ++j) {
        lo[j] = hi[j] = test(0, j);
        for (std::size_t i = 0; i < test.rows; ++i) {
            lo[j] = std::min(lo[j], test(i, j));
            hi[j] = std::max(hi[j], test(i, j));
        }
        const double pad = 0.1 * (hi[j] - lo[j]) + 1e-9;
        lo[j] -= pad;
        hi[j] += pad;
    }
    auto at = [&](std::size_t j, std::size_t k) {
        return lo[j] + (hi[j] - lo[j]) * static_cast<double>(k) / static_cast<double>(points - 1);
    };
    const std::size_t total = d == 1 ? points : points * points;
    Matrix grid(total, d);
    for (std::size_t t = 0; t < total; ++t) {
        grid(t, 0) = at(0, d == 1 ? t : t / points);
        if (d == 2) grid(t, 1) = at(1, t % points);
    }
    const auto lp = eval_log_density(model, grid);
    std::ofstream out(path);
    if (!out) throw ContractViolation("benchmark: cannot write grid file '" + path + "'");
    out << std::setprecision(17);
    out << (d == 1 ? "x1,log_density\n" : "x1,x2,log_density\n");
    for (std::size_t t = 0; t < total; ++t) {
        for (std::size_t j = 0; j < d; ++j) out << grid(t, j) << ',';
        out << lp[t] << '\n';
    }
}

RunResult run_once(const BenchmarkConfig& cfg, const RawTable& data, const RawTable* fixed_test, std::size_t r) {
    RunResult res;
    res.run = r;
    res.seed = cfg.run.seed + r;
    const auto start = std::chrono::steady_clock::now();
    try {
        Split split = fixed_test ? Split{data, *fixed_test} : split_rows(data, cfg.train_fraction, res.seed);
        std::vector<double> y_train, y_test;
        const bool supervised = cfg.task != BenchmarkTask::Density;
        if (supervised) {
            if (cfg.target.empty()) throw ContractViolation("benchmark: supervised tasks need a target column");
            auto [xtr, ytr] = split_column(split.train, cfg.target);
            auto [xte, yte] = split_column(split.test, cfg.target);
            split = {std::move(xtr), std::move(xte)};
            y_train = std::move(ytr);
            y_test = std::move(yte);
        } else if (!cfg.target.empty()) {
            split = {split_column(split.train, cfg.target).first, split_column(split.test, cfg.target).first};
        }
        PreprocessOptions popt = cfg.preprocess;
        if (supervised) popt.drop_discrete = false;
        const auto train = preprocess(split.train, std::nullopt, popt);
        const auto test = preprocess(split.test, train.stats, popt);
        const std::size_t d = train.values.cols;
        if (d == 0) throw ContractViolation("benchmark: no columns left after preprocessing");
        res.n_train = train.values.rows;
        res.n_test = test.values.rows;
        res.dim = d;

        if (cfg.method == BenchmarkMethod::Kde) {
            if (supervised) throw ContractViolation("benchmark: the KDE baseline is for density tasks only");
            KdeOptions ko = cfg.kde;
            ko.seed = res.seed;
            const auto k = kde_baseline(train.values, test.values, ko);
            res.nll = k.test_nll;
            res.bandwidth = {{"kde_bandwidth", k.bandwidth}, {"leave_one_out", k.leave_one_out}};
        } else {
            OptimizerConfig opt = cfg.run.optimizer;
            opt.seed = res.seed;
            FitConfig fc;
            fc.permutations = cfg.run.permutations;
            fc.seed = res.seed;
            if (!supervised) {
                auto bw = initial_bandwidth(cfg.run.model, cfg.run.kernel, d, res.seed);
                if (cfg.run.tune) bw = optimize(train.values, bw, opt);
                const auto model = fit(train, bw, fc);
                res.nll = mean_nll(eval_log_density(model, test.values));
                res.bandwidth = to_json(model.bandwidth());
                if (r == 0 && !cfg.grid_path.empty()) write_grid(cfg.grid_path, model, test.values, cfg.grid_points);
            } else {
                const auto task = cfg.task == BenchmarkTask::Regression ? SupervisedTask::Regression
                                                                        : SupervisedTask::Classification;
                auto bw = initial_bandwidth(cfg.run.model, cfg.run.kernel, d + 1, res.seed);
                if (task == SupervisedTask::Regression) {
                    const auto [mean, sd] = fit_response_scale(y_train);
                    for (auto& v : y_train) v = (v - mean) / sd;
                    for (auto& v : y_test) v = (v - mean) / sd;
                    if (cfg.run.tune) bw = optimize_supervised(task, train.values, y_train, bw, opt);
                    const auto model = fit_regression(train.values, y_train, bw, fc, train.stats, {mean, sd});
                    res.nll = mean_nll(predict_log_density_standardized(model, test.values, y_test));
                    res.bandwidth = to_json(model.bandwidth());
                } else {
                    if (cfg.run.tune) bw = optimize_supervised(task, train.values, y_train, bw, opt);
                    const auto model = fit_classification(train.values, y_train, bw, fc, train.stats);
                    const auto p1 = predict_proba(model, test.values);
                    std::vector<double> lp(p1.size());
                    for (std::size_t t = 0; t < p1.size(); ++t) lp[t] = std::log(y_test[t] == 1.0 ? p1[t] : 1.0 - p1[t]);
                    res.nll = mean_nll(lp);
                    res.bandwidth = to_json(model.bandwidth());
                }
            }
        }
        if (!std::isfinite(res.nll)) throw NumericFault("non-finite test NLL", 0);
        res.ok = true;
    } catch (const NumericFault& e) {
        res.ok = false;
        res.error = e.what();
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

}  // namespace

std::string to_string(BenchmarkTask task) {
    switch (task) {
        case BenchmarkTask::Density: return "density";
        case BenchmarkTask::Regression: return "regression";
        case BenchmarkTask::Classification: return "classification";
    }
    return "unknown";
}

BenchmarkTask benchmark_task_from_string(const std::string& name) {
    for (auto t : {BenchmarkTask::Density, BenchmarkTask::Regression, BenchmarkTask::Classification})
        if (to_string(t) == name) return t;
    throw ContractViolation("unknown task '" + name + "' (expected density, regression or classification)");
}

std::pair<double, double> mean_and_se(const std::vector<double>& values) {
    if (values.empty()) return {std::nan(""), std::nan("")};
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

BenchmarkReport run_benchmark(const BenchmarkConfig& config, const RawTable& data, const RawTable* test) {
    config.run.validate();
    if (config.runs == 0) throw ContractViolation("benchmark: runs must be >= 1");
    if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0))
        throw ContractViolation("benchmark: train_fraction must lie in (0, 1)");
    if (test && test->names != data.names) throw ContractViolation("benchmark: train and test columns differ");
    const auto start = std::chrono::steady_clock::now();
    BenchmarkReport rep;
    rep.dataset = config.dataset;
    rep.task = to_string(config.task);
    rep.model = config.method == BenchmarkMethod::Kde ? "kde" : to_string(config.run.model);
    rep.kernel = to_string(config.run.kernel);
    rep.permutations = config.run.permutations;
    rep.seed = config.run.seed;
    rep.config = to_json(config.run);
    rep.config["runs"] = config.runs;
    rep.config["train_fraction"] = config.train_fraction;
    rep.config["target"] = config.target;
    rep.runs.resize(config.runs);
    parallel_for(config.runs, [&](std::size_t r) { rep.runs[r] = run_once(config, data, test, r); },
                 std::max<std::size_t>(1, config.parallel_runs));
    std::vector<double> ok;
    for (const auto& r : rep.runs) {
        if (r.ok)
            ok.push_back(r.nll);
        else
            rep.partial = true;
    }
    std::tie(rep.mean_nll, rep.se_nll) = mean_and_se(ok);
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

nlohmann::json to_stable_json(const BenchmarkReport& r) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& x : r.runs) {
        nlohmann::json j{{"run", x.run}, {"seed", x.seed}, {"ok", x.ok}, {"n_train", x.n_train}, {"n_test", x.n_test},
                         {"dim", x.dim}, {"bandwidth", x.bandwidth}};
        j["nll"] = x.ok ? nlohmann::json(x.nll) : nlohmann::json(nullptr);
        if (!x.ok) j["error"] = x.error;
        runs.push_back(j);
    }
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    return {{"dataset", r.dataset}, {"task", r.task},       {"model", r.model},       {"kernel", r.kernel},
            {"M", r.permutations},  {"seed", r.seed},       {"runs", runs},           {"mean_nll", num(r.mean_nll)},
            {"se_nll", num(r.se_nll)}, {"partial", r.partial}, {"config", r.config}};
}

nlohmann::json to_json(const BenchmarkReport& r) {
    auto j = to_stable_json(r);
    for (std::size_t k = 0; k < r.runs.size(); ++k) j["runs"][k]["seconds"] = r.runs[k].seconds;
    j["wall_seconds"] = r.wall_seconds;
    return j;
}

std::string format_table(const BenchmarkReport& r) {
    std::ostringstream os;
    os << std::fixed;
    os << r.dataset << "  task=" << r.task << "  model=" << r.model << "  kernel=" << r.kernel << "  M=" << r.permutations
       << "  seed=" << r.seed << '\n';
    os << "run  seed        n_train  n_test  dim  nll        seconds\n";
    for (const auto& x : r.runs) {
        os << std::setw(3) << x.run << "  " << std::setw(10) << x.seed << "  " << std::setw(7) << x.n_train << "  "
           << std::setw(6) << x.n_test << "  " << std::setw(3) << x.dim << "  ";
        if (x.ok)
            os << std::setw(9) << std::setprecision(4) << x.nll;
        else
            os << "   FAILED";
        os << "  " << std::setw(7) << std::setprecision(2) << x.seconds << '\n';
    }
    os << "mean NLL " << std::setprecision(4) << r.mean_nll << " +- " << r.se_nll << " (se)";
    if (r.partial) os << "  [partial: some runs failed]";
    os << "  wall " << std::setprecision(1) << r.wall_seconds << " s\n";
    return os.str();
}

RawTable chessboard(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    RawTable t{{"x1", "x2"}, Matrix(n, 2)};
    for (std::size_t i = 0; i < n; ++i) {
        const double a = 4.0 * u(rng) - 2.0;
        const double b = u(rng) - (coin(rng) ? 2.0 : 0.0) + static_cast<double>(static_cast<long>(std::floor(a)) & 1L);
        t.values(i, 0) = 2.0 * a;
        t.values(i, 1) = 2.0 * b;
    }
    return t;
}

}  // namespace arbp
