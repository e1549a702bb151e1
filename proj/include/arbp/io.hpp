#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "arbp/bandwidth.hpp"
#include "arbp/data.hpp"
#include "arbp/sampling.hpp"
#include "arbp/train.hpp"

namespace arbp {

/// Numeric table with named columns, as read from CSV.
struct RawTable {
    std::vector<std::string> names;
    Matrix values;

    friend bool operator==(const RawTable&, const RawTable&) = default;
};

/// Header row plus numeric cells separated by commas. Throws ParseError with
/// 1-based file row and column for malformed or non-finite cells, ragged
/// rows, and empty input.
RawTable parse_csv(std::string_view text);
RawTable load_csv(const std::string& path);

/// The table without the named column, and that column's values.
std::pair<RawTable, std::vector<double>> split_column(const RawTable& table, const std::string& name);

RawTable select_rows(const RawTable& table, std::span<const std::size_t> rows);

struct PreprocessOptions {
    /// Columns with at most this many distinct values count as discrete.
    std::size_t discrete_max_distinct = 10;
    /// Of a pair with |Pearson r| above this, the later column is dropped.
    double correlation_threshold = 0.98;
    /// Supervised tasks keep discrete covariates.
    bool drop_discrete = true;
};

/// Without fit_stats: drops zero-variance, discrete and correlated columns
/// (in that order of checks, scanning left to right) and standardizes the
/// rest to mean 0, sample sd 1. With fit_stats: applies the stored
/// transform only, selecting columns by name.
StandardizedDataset preprocess(const RawTable& raw, const std::optional<Standardization>& fit_stats = std::nullopt,
                               const PreprocessOptions& options = {});

enum class ModelVariant { RBp, RdBp, ArBp, ArdBp, ArnetBp };
enum class KernelKind { Rbf, Rq };

std::string to_string(ModelVariant variant);
std::string to_string(KernelKind kernel);
/// Names as on the command line: r-bp, rd-bp, ar-bp, ard-bp, arnet-bp.
ModelVariant model_variant_from_string(const std::string& name);
/// rbf or rq.
KernelKind kernel_kind_from_string(const std::string& name);

/// Default initial bandwidth of a variant for `dim` dimensions.
BandwidthModel initial_bandwidth(ModelVariant variant, KernelKind kernel, std::size_t dim, std::uint64_t seed = 0);

/// Variant a bandwidth model belongs to.
ModelVariant variant_of(const BandwidthModel& bandwidth);

struct RunConfig {
    ModelVariant model = ModelVariant::ArdBp;
    KernelKind kernel = KernelKind::Rbf;
    std::size_t permutations = 10;
    std::uint64_t seed = 0;
    bool tune = true;
    OptimizerConfig optimizer;
    SamplingConfig sampling;
    /// Only "normal" is implemented; other names are rejected.
    std::string initial_density = "normal";
    std::string train_path;
    std::string test_path;
    std::string out_path;

    void validate() const;
};

nlohmann::json to_json(const RunConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

nlohmann::json to_json(const BandwidthModel& bandwidth);
BandwidthModel bandwidth_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Standardization& stats);
Standardization standardization_from_json(const nlohmann::json& j);

}  // namespace arbp
