#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>

#include "arbp/benchmark.hpp"
#include "arbp/engine.hpp"
#include "arbp/errors.hpp"
#include "arbp/io.hpp"
#include "arbp/model_io.hpp"
#include "arbp/sampling.hpp"
#include "arbp/supervised.hpp"
#include "arbp/train.hpp"

using namespace arbp;

namespace {

enum Exit { kOk = 0, kUsage = 2, kData = 3, kNumeric = 4 };

/// Thrown for bad flag combinations that CLI11 cannot see.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config_path;
    std::string model;
    std::string kernel;
    std::optional<std::size_t> permutations;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> maxiter;
    bool no_tune = false;
    std::string train, test, out;
    std::string task = "density";
    std::string target;
    std::string model_file;
};

void add_run_flags(CLI::App* app, Common& c) {
    app->add_option("--config", c.config_path, "JSON run configuration");
    app->add_option("--model", c.model, "r-bp, rd-bp, ar-bp, ard-bp or arnet-bp");
    app->add_option("--kernel", c.kernel, "rbf or rq");
    app->add_option("--permutations", c.permutations, "number of permutations M");
    app->add_option("--seed", c.seed, "base seed");
    app->add_option("--maxiter", c.maxiter, "optimizer iterations");
    app->add_flag("--no-tune", c.no_tune, "skip bandwidth optimization");
}

RunConfig resolve(const Common& c) {
    RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_run_config(c.config_path);
    try {
        if (!c.model.empty()) cfg.model = model_variant_from_string(c.model);
        if (!c.kernel.empty()) cfg.kernel = kernel_kind_from_string(c.kernel);
        if (c.permutations) cfg.permutations = *c.permutations;
        if (c.seed) cfg.seed = *c.seed;
        if (c.maxiter) cfg.optimizer.maxiter = *c.maxiter;
        if (c.no_tune) cfg.tune = false;
        if (!c.train.empty()) cfg.train_path = c.train;
        if (!c.test.empty()) cfg.test_path = c.test;
        if (!c.out.empty()) cfg.out_path = c.out;
        cfg.validate();
    } catch (const ContractViolation& e) {
        throw UsageError(e.what());
    }
    return cfg;
}

BenchmarkTask task_of(const Common& c) {
    try {
        const auto t = benchmark_task_from_string(c.task);
        if (t != BenchmarkTask::Density && c.target.empty()) throw UsageError("--task " + c.task + " needs --target");
        return t;
    } catch (const ContractViolation& e) {
        throw UsageError(e.what());
    }
}

std::string require(const std::string& value, const char* flag) {
    if (value.empty()) throw UsageError(std::string(flag) + " is required");
    return value;
}

int cmd_fit(const Common& c) {
    const auto cfg = resolve(c);
    const auto task = task_of(c);
    const auto out = require(cfg.out_path, "--out");
    auto raw = load_csv(require(cfg.train_path, "--train"));
    std::vector<double> y;
    if (!c.target.empty()) std::tie(raw, y) = split_column(raw, c.target);
    PreprocessOptions popt;
    popt.drop_discrete = task == BenchmarkTask::Density;
    const auto data = preprocess(raw, std::nullopt, popt);
    const std::size_t d = data.values.cols;
    FitConfig fc;
    fc.permutations = cfg.permutations;
    fc.seed = cfg.seed;
    OptimizerConfig opt = cfg.optimizer;
    opt.seed = cfg.seed;
    OptimizeTrace trace;

    if (task == BenchmarkTask::Density) {
        auto bw = initial_bandwidth(cfg.model, cfg.kernel, d, cfg.seed);
        if (cfg.tune) bw = optimize(data.values, bw, opt, &trace);
        const auto model = fit(data, bw, fc);
        save_model(model, cfg, out);
    } else {
        const auto kind = task == BenchmarkTask::Regression ? SupervisedTask::Regression : SupervisedTask::Classification;
        ResponseScale scale;
        if (kind == SupervisedTask::Regression) {
            scale = fit_response_scale(y);
            for (auto& v : y) v = (v - scale.mean) / scale.sd;
        }
        auto bw = initial_bandwidth(cfg.model, cfg.kernel, d + 1, cfg.seed);
        if (cfg.tune) bw = optimize_supervised(kind, data.values, y, bw, opt, &trace);
        if (kind == SupervisedTask::Regression)
            save_model(fit_regression(data.values, y, bw, fc, data.stats, scale), cfg, out);
        else
            save_model(fit_classification(data.values, y, bw, fc, data.stats), cfg, out);
    }
    std::cout << "fitted " << to_string(cfg.model) << " on " << data.values.rows << " rows, " << d << " columns";
    if (!data.stats.dropped.empty()) std::cout << " (" << data.stats.dropped.size() << " dropped)";
    if (!trace.objective.empty()) std::cout << "; final objective " << trace.objective.back();
    std::cout << "\nmodel written to " << out << '\n';
    return kOk;
}

std::optional<ModelVariant> expected_variant(const Common& c) {
    if (c.model.empty()) return std::nullopt;
    try {
        return model_variant_from_string(c.model);
    } catch (const ContractViolation& e) {
        throw UsageError(e.what());
    }
}

int cmd_eval_density(const Common& c) {
    const auto loaded = load_model(require(c.model_file, "--model-file"), expected_variant(c));
    if (!loaded.density) throw UsageError("eval-density needs a density model; use predict for " + loaded.task);
    const auto& model = *loaded.density;
    const auto test = preprocess(load_csv(require(c.test, "--test")), model.standardization());
    const auto lp = eval_log_density(model, test.values);
    double log_jac = 0.0;
    for (double s : model.standardization().sds) log_jac += std::log(s);
    if (!c.out.empty()) {
        std::ofstream out(c.out);
        if (!out) throw ContractViolation("cannot write '" + c.out + "'");
        out << std::setprecision(17) << "log_density_standardized,log_density\n";
        for (double v : lp) out << v << ',' << v - log_jac << '\n';
    }
    const double nll = -std::accumulate(lp.begin(), lp.end(), 0.0) / static_cast<double>(lp.size());
    std::cout << std::setprecision(6) << "rows " << lp.size() << "\nmean NLL (standardized) " << nll
              << "\nmean NLL (original units) " << nll + log_jac << '\n';
    return kOk;
}

int cmd_predict(const Common& c) {
    const auto loaded = load_model(require(c.model_file, "--model-file"), expected_variant(c));
    if (!loaded.supervised) throw UsageError("predict needs a regression or classification model");
    const auto& model = *loaded.supervised;
    auto raw = load_csv(require(c.test, "--test"));
    std::vector<double> y;
    if (!c.target.empty()) std::tie(raw, y) = split_column(raw, c.target);
    const auto x = preprocess(raw, model.covariate_stats()).values;
    std::ofstream file;
    if (!c.out.empty()) {
        file.open(c.out);
        if (!file) throw ContractViolation("cannot write '" + c.out + "'");
        file << std::setprecision(17);
    }
    double nll = 0.0;
    if (model.task() == SupervisedTask::Classification) {
        const auto p1 = predict_proba(model, x);
        if (file.is_open()) file << "p1\n";
        for (std::size_t t = 0; t < p1.size(); ++t) {
            if (file.is_open()) file << p1[t] << '\n';
            if (!y.empty()) nll -= std::log(y[t] == 1.0 ? p1[t] : 1.0 - p1[t]);
        }
    } else {
        if (y.empty()) throw UsageError("regression predict needs --target to score the response");
        if (file.is_open()) file << "log_density\n";
        for (std::size_t t = 0; t < x.rows; ++t) {
            const double lp = predict_log_density_regression(model, x.row(t), y[t]);
            if (file.is_open()) file << lp << '\n';
            nll -= lp;
        }
    }
    std::cout << "rows " << x.rows << '\n';
    if (!y.empty()) std::cout << std::setprecision(6) << "mean NLL " << nll / static_cast<double>(x.rows) << '\n';
    return kOk;
}

int cmd_sample(const Common& c, std::size_t count, bool systematic) {
    const auto loaded = load_model(require(c.model_file, "--model-file"), expected_variant(c));
    if (!loaded.density) throw UsageError("sample needs a density model");
    const auto& model = *loaded.density;
    SamplingConfig sc = loaded.config.sampling;
    if (count > 0) sc.particles = count;
    if (c.seed) sc.seed = *c.seed;
    sc.systematic = sc.systematic || systematic;
    const auto set = smc_sample(model, sc);
    const auto& stats = model.standardization();
    std::ofstream file(require(c.out, "--out"));
    if (!file) throw ContractViolation("cannot write '" + c.out + "'");
    file << std::setprecision(17);
    for (std::size_t j = 0; j < model.dim(); ++j) file << (stats.names.empty() ? "x" + std::to_string(j + 1) : stats.names[j]) << ',';
    file << "weight\n";
    for (std::size_t b = 0; b < set.particles.rows; ++b) {
        for (std::size_t j = 0; j < model.dim(); ++j) {
            const double z = set.particles(b, j);
            file << (stats.means.empty() ? z : stats.means[j] + stats.sds[j] * z) << ',';
        }
        file << set.weights[b] << '\n';
    }
    std::cout << "samples " << set.particles.rows << "\nESS " << set.ess << "\nresample events " << set.resample_events
              << '\n';
    return kOk;
}

int cmd_benchmark(const Common& c, BenchmarkConfig bc, bool kde) {
    bc.run = resolve(c);
    bc.task = kde ? BenchmarkTask::Density : task_of(c);
    bc.target = c.target;
    bc.method = kde ? BenchmarkMethod::Kde : BenchmarkMethod::Bp;
    const auto train = load_csv(require(bc.run.train_path, "--train"));
    std::optional<RawTable> test;
    if (!bc.run.test_path.empty()) test = load_csv(bc.run.test_path);
    if (bc.dataset.empty()) bc.dataset = bc.run.train_path;
    const auto report = run_benchmark(bc, train, test ? &*test : nullptr);
    std::cout << format_table(report);
    if (!bc.run.out_path.empty()) {
        std::ofstream out(bc.run.out_path);
        if (!out) throw ContractViolation("cannot write '" + bc.run.out_path + "'");
        out << to_json(report).dump(2) << '\n';
    }
    return report.partial ? kNumeric : kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Autoregressive quasi-Bayesian predictive density estimation"};
    app.require_subcommand(1);
    Common c;
    std::size_t sample_count = 0;
    bool systematic = false;
    BenchmarkConfig bc;
    bc.dataset.clear();

    auto* fit_cmd = app.add_subcommand("fit", "tune the bandwidth and save a fitted model");
    add_run_flags(fit_cmd, c);
    fit_cmd->add_option("--train", c.train, "training CSV")->required();
    fit_cmd->add_option("--out", c.out, "model file to write")->required();
    fit_cmd->add_option("--task", c.task, "density, regression or classification");
    fit_cmd->add_option("--target", c.target, "response column (dropped for density)");

    auto* eval_cmd = app.add_subcommand("eval-density", "log predictive density of test rows");
    eval_cmd->add_option("--model-file", c.model_file, "model file")->required();
    eval_cmd->add_option("--model", c.model, "expected variant");
    eval_cmd->add_option("--test", c.test, "test CSV")->required();
    eval_cmd->add_option("--out", c.out, "CSV of per-row log densities");

    auto* predict_cmd = app.add_subcommand("predict", "conditional predictions of a supervised model");
    predict_cmd->add_option("--model-file", c.model_file, "model file")->required();
    predict_cmd->add_option("--model", c.model, "expected variant");
    predict_cmd->add_option("--test", c.test, "test CSV")->required();
    predict_cmd->add_option("--target", c.target, "response column in the test CSV");
    predict_cmd->add_option("--out", c.out, "CSV of predictions");

    auto* sample_cmd = app.add_subcommand("sample", "draw samples from a fitted density model");
    sample_cmd->add_option("--model-file", c.model_file, "model file")->required();
    sample_cmd->add_option("--model", c.model, "expected variant");
    sample_cmd->add_option("-n,--particles", sample_count, "number of particles");
    sample_cmd->add_option("--seed", c.seed, "sampling seed");
    sample_cmd->add_flag("--systematic", systematic, "systematic instead of multinomial resampling");
    sample_cmd->add_option("--out", c.out, "CSV of samples")->required();

    auto add_bench = [&](CLI::App* cmd) {
        add_run_flags(cmd, c);
        cmd->add_option("--train", c.train, "data CSV (split per run unless --test is given)")->required();
        cmd->add_option("--test", c.test, "fixed test CSV");
        cmd->add_option("--out", c.out, "JSON report");
        cmd->add_option("--dataset", bc.dataset, "dataset label in the report");
        cmd->add_option("--target", c.target, "response column (dropped for density)");
        cmd->add_option("--runs", bc.runs, "number of runs")->check(CLI::PositiveNumber);
        cmd->add_option("--train-fraction", bc.train_fraction, "training share of each split")->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--parallel-runs", bc.parallel_runs, "runs executed concurrently")->check(CLI::PositiveNumber);
    };
    auto* bench_cmd = app.add_subcommand("benchmark", "repeated split, tune, fit and score");
    add_bench(bench_cmd);
    bench_cmd->add_option("--task", c.task, "density, regression or classification");
    bench_cmd->add_option("--grid", bc.grid_path, "density grid CSV for run 0 (d <= 2)");
    bench_cmd->add_option("--grid-points", bc.grid_points, "grid points per axis");
    auto* kde_cmd = app.add_subcommand("baseline-kde", "cross-validated product Gaussian KDE");
    add_bench(kde_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        if (*fit_cmd) return cmd_fit(c);
        if (*eval_cmd) return cmd_eval_density(c);
        if (*predict_cmd) return cmd_predict(c);
        if (*sample_cmd) return cmd_sample(c, sample_count, systematic);
        if (*bench_cmd) return cmd_benchmark(c, bc, false);
        if (*kde_cmd) return cmd_benchmark(c, bc, true);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const NumericFault& e) {
        std::cerr << "numeric fault: " << e.what() << '\n';
        return kNumeric;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    }
    return kUsage;
}
