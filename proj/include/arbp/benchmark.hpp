#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "arbp/io.hpp"
#include "arbp/kde.hpp"

namespace arbp {

enum class BenchmarkTask { Density, Regression, Classification };
enum class BenchmarkMethod { Bp, Kde };

std::string to_string(BenchmarkTask task);
BenchmarkTask benchmark_task_from_string(const std::string& name);

struct BenchmarkConfig {
    std::string dataset = "data";
    BenchmarkTask task = BenchmarkTask::Density;
    BenchmarkMethod method = BenchmarkMethod::Bp;
    RunConfig run;
    /// Response column for supervised tasks; for density it is dropped if set.
    std::string target;
    std::size_t runs = 5;
    double train_fraction = 0.5;
    std::size_t parallel_runs = 1;
    PreprocessOptions preprocess;
    KdeOptions kde;
    /// Density grid over the test split of run 0, written when d <= 2.
    std::string grid_path;
    std::size_t grid_points = 100;
};

struct RunResult {
    std::size_t run = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double nll = 0.0;
    double seconds = 0.0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::size_t dim = 0;
    nlohmann::json bandwidth;  ///< tuned parameters (or the KDE bandwidth)
};

struct BenchmarkReport {
    std::string dataset;
    std::string task;
    std::string model;
    std::string kernel;
    std::size_t permutations = 0;
    std::uint64_t seed = 0;
    std::vector<RunResult> runs;
    double mean_nll = 0.0;
    double se_nll = 0.0;
    double wall_seconds = 0.0;
    bool partial = false;
    nlohmann::json config;
};

/// Mean and standard error (sample sd / sqrt(R)) of the successful runs.
std::pair<double, double> mean_and_se(const std::vector<double>& values);

/// Run r uses seed run.seed + r for the split, the optimizer, the
/// permutations and the net initialization. Without `test`, each run shuffles
/// `data` and splits it by train_fraction; with `test`, every run uses the
/// given split. Standardization is fitted on the training split. NLL is the
/// mean over test rows on the standardized scale.
BenchmarkReport run_benchmark(const BenchmarkConfig& config, const RawTable& data, const RawTable* test = nullptr);

nlohmann::json to_json(const BenchmarkReport& report);
/// Same, without wall-clock fields; stable across identical runs.
nlohmann::json to_stable_json(const BenchmarkReport& report);
std::string format_table(const BenchmarkReport& report);

/// 2-D chessboard toy: x1 uniform on [-4, 4], x2 uniform on the four cells of
/// its column that match the parity of floor(x1 / 2). Columns x1, x2.
RawTable chessboard(std::size_t n, std::uint64_t seed);

}  // namespace arbp
