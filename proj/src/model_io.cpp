#include "arbp/model_io.hpp"

#include <fstream>

#include "arbp/errors.hpp"

namespace arbp {

namespace {

nlohmann::json matrix_json(const Matrix& m) { return {{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}}; }

Matrix matrix_from_json(const nlohmann::json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    m.data = j.at("data").get<std::vector<double>>();
    if (m.data.size() != m.rows * m.cols) throw SchemaError("model file: matrix data does not match its shape");
    return m;
}

nlohmann::json perms_json(const std::vector<PermutationPair>& perms) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& p : perms) out.push_back({{"sample_order", p.sample_order}, {"feature_order", p.feature_order}});
    return out;
}

std::vector<PermutationPair> perms_from_json(const nlohmann::json& j) {
    std::vector<PermutationPair> out;
    for (const auto& p : j)
        out.push_back({p.at("sample_order").get<std::vector<std::size_t>>(),
                       p.at("feature_order").get<std::vector<std::size_t>>()});
    return out;
}

nlohmann::json header(const std::string& task, const BandwidthModel& bw, const RunConfig& config, std::uint64_t seed) {
    return {{"schema", "arbp-model"},
            {"version", kModelSchemaVersion},
            {"task", task},
            {"variant", to_string(variant_of(bw))},
            {"config", to_json(config)},
            {"seed", seed},
            {"bandwidth", to_json(bw)}};
}

void write(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ContractViolation("cannot write model file '" + path + "'");
    out << j.dump() << '\n';
    if (!out) throw ContractViolation("failed writing model file '" + path + "'");
}

/// Splits a flat tensor into M equal chunks after checking the shape header.
std::vector<std::vector<double>> chunks(const nlohmann::json& state, std::size_t expected_rank) {
    const auto shape = state.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != expected_rank) throw SchemaError("model file: state tensor has the wrong rank");
    const auto data = state.at("data").get<std::vector<double>>();
    std::size_t per = 1;
    for (std::size_t k = 1; k < shape.size(); ++k) per *= shape[k];
    if (data.size() != shape[0] * per) throw SchemaError("model file: state data does not match its shape");
    std::vector<std::vector<double>> out(shape[0]);
    for (std::size_t m = 0; m < shape[0]; ++m)
        out[m].assign(data.begin() + static_cast<std::ptrdiff_t>(m * per),
                      data.begin() + static_cast<std::ptrdiff_t>((m + 1) * per));
    return out;
}

}  // namespace

nlohmann::json model_to_json(const FittedDensityModel& model, const RunConfig& config) {
    auto j = header("density", model.bandwidth(), config, model.seed());
    j["standardization"] = to_json(model.standardization());
    j["train"] = matrix_json(model.train());
    j["permutations"] = perms_json(model.permutations());
    std::vector<double> flat;
    for (const auto& v : model.v_tensor()) flat.insert(flat.end(), v.begin(), v.end());
    j["state"] = {{"shape", {model.permutation_count(), model.n(), model.dim()}}, {"data", flat}};
    return j;
}

nlohmann::json model_to_json(const SupervisedModel& model, const RunConfig& config) {
    auto j = header(to_string(model.task()), model.bandwidth(), config, model.seed());
    j["standardization"] = to_json(model.covariate_stats());
    j["train"] = matrix_json(model.x());
    j["y"] = model.y();
    j["response"] = {{"mean", model.response().mean}, {"sd", model.response().sd}};
    j["permutations"] = perms_json(model.permutations());
    std::vector<double> flat;
    for (const auto& s : model.state()) flat.insert(flat.end(), s.begin(), s.end());
    j["state"] = {{"shape", {model.permutation_count(), model.n()}}, {"data", flat}};
    return j;
}

LoadedModel model_from_json(const nlohmann::json& j, std::optional<ModelVariant> expected) {
    try {
        if (!j.is_object() || j.value("schema", std::string()) != "arbp-model")
            throw SchemaError("model file: not an arbp model file");
        const int version = j.at("version").get<int>();
        if (version != kModelSchemaVersion)
            throw SchemaError("model file: schema version " + std::to_string(version) + " is not supported (expected " +
                              std::to_string(kModelSchemaVersion) + ")");
        LoadedModel out;
        out.task = j.at("task").get<std::string>();
        out.variant = model_variant_from_string(j.at("variant").get<std::string>());
        if (expected && *expected != out.variant)
            throw SchemaError("model file holds a " + to_string(out.variant) + " model, expected " + to_string(*expected));
        out.config = run_config_from_json(j.at("config"));
        const auto seed = j.at("seed").get<std::uint64_t>();
        auto bw = bandwidth_from_json(j.at("bandwidth"));
        if (variant_of(bw) != out.variant) throw SchemaError("model file: variant tag does not match the bandwidth");
        auto stats = standardization_from_json(j.at("standardization"));
        auto train = matrix_from_json(j.at("train"));
        auto perms = perms_from_json(j.at("permutations"));
        if (out.task == "density") {
            out.density.emplace(std::move(bw), std::move(train), std::move(perms), chunks(j.at("state"), 3), seed,
                                std::move(stats));
        } else if (out.task == "regression" || out.task == "classification") {
            const auto task = out.task == "regression" ? SupervisedTask::Regression : SupervisedTask::Classification;
            const ResponseScale scale{j.at("response").at("mean").get<double>(), j.at("response").at("sd").get<double>()};
            out.supervised.emplace(task, std::move(bw), std::move(train), j.at("y").get<std::vector<double>>(),
                                   std::move(perms), chunks(j.at("state"), 2), seed, std::move(stats), scale);
        } else {
            throw SchemaError("model file: unknown task '" + out.task + "'");
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("model file: ") + e.what());
    } catch (const ContractViolation& e) {
        throw SchemaError(std::string("model file: ") + e.what());
    }
}

void save_model(const FittedDensityModel& model, const RunConfig& config, const std::string& path) {
    write(model_to_json(model, config), path);
}

void save_model(const SupervisedModel& model, const RunConfig& config, const std::string& path) {
    write(model_to_json(model, config), path);
}

LoadedModel load_model(const std::string& path, std::optional<ModelVariant> expected) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("model file '" + path + "' is truncated or malformed: " + e.what());
    }
    return model_from_json(j, expected);
}

}  // namespace arbp
