#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "arbp/engine.hpp"
#include "arbp/io.hpp"
#include "arbp/supervised.hpp"

namespace arbp {

/// Model file schema version written by save_model.
inline constexpr int kModelSchemaVersion = 1;

/// A loaded model file: exactly one of density / supervised is set.
struct LoadedModel {
    std::string task;  ///< "density", "regression" or "classification"
    ModelVariant variant = ModelVariant::ArdBp;
    RunConfig config;
    std::optional<FittedDensityModel> density;
    std::optional<SupervisedModel> supervised;
};

/// JSON container:
/// {schema: "arbp-model", version: 1, task, variant, config, seed,
///  standardization, bandwidth, train: {rows, cols, data}, permutations:
///  [{sample_order, feature_order}], state: {shape, data}} plus, for
/// supervised models, y and response {mean, sd}. The density state is the
/// flat v tensor with shape [M, n, d]; the supervised state has shape [M, n].
nlohmann::json model_to_json(const FittedDensityModel& model, const RunConfig& config);
nlohmann::json model_to_json(const SupervisedModel& model, const RunConfig& config);

/// Throws SchemaError on a foreign schema, a version mismatch, or a variant
/// other than `expected`.
LoadedModel model_from_json(const nlohmann::json& j, std::optional<ModelVariant> expected = std::nullopt);

void save_model(const FittedDensityModel& model, const RunConfig& config, const std::string& path);
void save_model(const SupervisedModel& model, const RunConfig& config, const std::string& path);

/// Truncated or unparsable files raise ParseError.
LoadedModel load_model(const std::string& path, std::optional<ModelVariant> expected = std::nullopt);

}  // namespace arbp
