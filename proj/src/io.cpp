#include "arbp/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "arbp/errors.hpp"

namespace arbp {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) return out;
        start = pos + 1;
    }
}

double parse_cell(std::string_view cell, std::size_t row, std::size_t col) {
    if (cell.empty()) throw ParseError("empty cell", row, col);
    if (cell.front() == '+') cell.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw ParseError("malformed numeric cell '" + std::string(cell) + "'", row, col);
    if (!std::isfinite(v)) throw ParseError("non-finite cell '" + std::string(cell) + "'", row, col);
    return v;
}

double pearson(const Matrix& x, std::size_t a, std::size_t b) {
    const std::size_t n = x.rows;
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += x(i, a);
        mb += x(i, b);
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = x(i, a) - ma, db = x(i, b) - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    return sab / std::sqrt(saa * sbb);
}

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

template <class T>
void read_opt(const nlohmann::json& j, const char* key, std::optional<T>& out) {
    if (j.contains(key)) {
        if (j.at(key).is_null())
            out.reset();
        else
            out = j.at(key).get<T>();
    }
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys, const std::string& where) {
    for (const auto& [k, _] : j.items()) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* known) { return k == known; }))
            throw ContractViolation(where + ": unknown key '" + k + "'");
    }
}

template <class T>
nlohmann::json optional_json(const std::optional<T>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

RawTable parse_csv(std::string_view text) {
    std::size_t row = 0;
    std::size_t pos = 0;
    auto next_line = [&](std::string_view& line) {
        while (pos < text.size()) {
            const auto end = text.find('\n', pos);
            line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
            pos = end == std::string_view::npos ? text.size() : end + 1;
            ++row;
            if (!trim(line).empty()) return true;
        }
        return false;
    };

    std::string_view line;
    if (!next_line(line)) throw ParseError("empty CSV input");
    RawTable table;
    std::set<std::string> seen;
    std::size_t col = 0;
    for (auto name : split_line(line)) {
        ++col;
        if (name.size() >= 2 && name.front() == '"' && name.back() == '"') name = name.substr(1, name.size() - 2);
        if (name.empty()) throw ParseError("empty column name", row, col);
        if (!seen.insert(std::string(name)).second) throw ParseError("duplicate column name '" + std::string(name) + "'", row, col);
        table.names.emplace_back(name);
    }
    const std::size_t d = table.names.size();
    std::vector<double> data;
    std::size_t n = 0;
    while (next_line(line)) {
        const auto cells = split_line(line);
        if (cells.size() != d)
            throw ParseError("expected " + std::to_string(d) + " cells, found " + std::to_string(cells.size()), row,
                             std::min(cells.size(), d) + 1);
        for (std::size_t j = 0; j < d; ++j) data.push_back(parse_cell(cells[j], row, j + 1));
        ++n;
    }
    if (n == 0) throw ParseError("CSV input has a header but no data rows");
    table.values = Matrix(n, d);
    table.values.data = std::move(data);
    return table;
}

RawTable load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str());
}

std::pair<RawTable, std::vector<double>> split_column(const RawTable& table, const std::string& name) {
    const auto it = std::find(table.names.begin(), table.names.end(), name);
    if (it == table.names.end()) throw ContractViolation("split_column: no column named '" + name + "'");
    const std::size_t c = static_cast<std::size_t>(it - table.names.begin());
    RawTable rest;
    for (std::size_t j = 0; j < table.names.size(); ++j)
        if (j != c) rest.names.push_back(table.names[j]);
    rest.values = Matrix(table.values.rows, table.names.size() - 1);
    std::vector<double> y(table.values.rows);
    for (std::size_t i = 0; i < table.values.rows; ++i) {
        std::size_t k = 0;
        for (std::size_t j = 0; j < table.names.size(); ++j) {
            if (j == c)
                y[i] = table.values(i, j);
            else
                rest.values(i, k++) = table.values(i, j);
        }
    }
    return {std::move(rest), std::move(y)};
}

RawTable select_rows(const RawTable& table, std::span<const std::size_t> rows) {
    RawTable out{table.names, Matrix(rows.size(), table.values.cols)};
    for (std::size_t t = 0; t < rows.size(); ++t) {
        if (rows[t] >= table.values.rows) throw ContractViolation("select_rows: row index out of range");
        std::copy_n(table.values.row(rows[t]).begin(), table.values.cols, out.values.row(t).begin());
    }
    return out;
}

StandardizedDataset preprocess(const RawTable& raw, const std::optional<Standardization>& fit_stats,
                               const PreprocessOptions& options) {
    const Matrix& x = raw.values;
    if (raw.names.size() != x.cols) throw ContractViolation("preprocess: one name per column");
    StandardizedDataset out;
    if (fit_stats) {
        out.stats = *fit_stats;
        const std::size_t d = out.stats.dim();
        if (out.stats.means.size() != d || out.stats.sds.size() != d || out.stats.source_columns.size() != d)
            throw ContractViolation("preprocess: inconsistent standardization record");
        std::vector<std::size_t> cols(d);
        for (std::size_t k = 0; k < d; ++k) {
            const auto it = std::find(raw.names.begin(), raw.names.end(), out.stats.names[k]);
            if (it == raw.names.end())
                throw ContractViolation("preprocess: column '" + out.stats.names[k] + "' missing from input");
            cols[k] = static_cast<std::size_t>(it - raw.names.begin());
        }
        out.values = Matrix(x.rows, d);
        for (std::size_t i = 0; i < x.rows; ++i)
            for (std::size_t k = 0; k < d; ++k)
                out.values(i, k) = (x(i, cols[k]) - out.stats.means[k]) / out.stats.sds[k];
        return out;
    }

    if (x.rows < 2) throw ContractViolation("preprocess: at least two rows are needed to fit a standardization");
    const double n = static_cast<double>(x.rows);
    std::vector<std::size_t> kept;
    std::vector<double> means, sds;
    for (std::size_t j = 0; j < x.cols; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) mean += x(i, j);
        mean /= n;
        double var = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) var += (x(i, j) - mean) * (x(i, j) - mean);
        const double sd = std::sqrt(var / (n - 1.0));
        if (!(sd > 0.0)) {
            out.stats.dropped.push_back({raw.names[j], "zero variance"});
            continue;
        }
        if (options.drop_discrete) {
            std::set<double> distinct;
            for (std::size_t i = 0; i < x.rows && distinct.size() <= options.discrete_max_distinct; ++i)
                distinct.insert(x(i, j));
            if (distinct.size() <= options.discrete_max_distinct) {
                out.stats.dropped.push_back({raw.names[j], "discrete"});
                continue;
            }
        }
        bool correlated = false;
        for (std::size_t k : kept) {
            if (std::abs(pearson(x, k, j)) > options.correlation_threshold) {
                out.stats.dropped.push_back({raw.names[j], "correlated with " + raw.names[k]});
                correlated = true;
                break;
            }
        }
        if (correlated) continue;
        kept.push_back(j);
        means.push_back(mean);
        sds.push_back(sd);
    }
    for (std::size_t k = 0; k < kept.size(); ++k) out.stats.names.push_back(raw.names[kept[k]]);
    out.stats.source_columns = kept;
    out.stats.means = means;
    out.stats.sds = sds;
    out.values = Matrix(x.rows, kept.size());
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t k = 0; k < kept.size(); ++k) out.values(i, k) = (x(i, kept[k]) - means[k]) / sds[k];
    return out;
}

std::string to_string(ModelVariant variant) {
    switch (variant) {
        case ModelVariant::RBp: return "r-bp";
        case ModelVariant::RdBp: return "rd-bp";
        case ModelVariant::ArBp: return "ar-bp";
        case ModelVariant::ArdBp: return "ard-bp";
        case ModelVariant::ArnetBp: return "arnet-bp";
    }
    return "unknown";
}

std::string to_string(KernelKind kernel) { return kernel == KernelKind::Rbf ? "rbf" : "rq"; }

ModelVariant model_variant_from_string(const std::string& name) {
    for (auto v : {ModelVariant::RBp, ModelVariant::RdBp, ModelVariant::ArBp, ModelVariant::ArdBp, ModelVariant::ArnetBp})
        if (to_string(v) == name) return v;
    throw ContractViolation("unknown model '" + name + "' (expected r-bp, rd-bp, ar-bp, ard-bp or arnet-bp)");
}

KernelKind kernel_kind_from_string(const std::string& name) {
    if (name == "rbf") return KernelKind::Rbf;
    if (name == "rq") return KernelKind::Rq;
    throw ContractViolation("unknown kernel '" + name + "' (expected rbf or rq)");
}

BandwidthModel initial_bandwidth(ModelVariant variant, KernelKind kernel, std::size_t dim, std::uint64_t seed) {
    const auto kernel_kind = kernel == KernelKind::Rbf ? BandwidthKind::Rbf : BandwidthKind::RationalQuadratic;
    switch (variant) {
        case ModelVariant::RBp: return BandwidthModel::initial(BandwidthKind::Constant, dim, false, seed);
        case ModelVariant::RdBp: return BandwidthModel::initial(BandwidthKind::PerDim, dim, true, seed);
        case ModelVariant::ArBp: return BandwidthModel::initial(kernel_kind, dim, false, seed);
        case ModelVariant::ArdBp: return BandwidthModel::initial(kernel_kind, dim, true, seed);
        case ModelVariant::ArnetBp: return BandwidthModel::initial(BandwidthKind::Net, dim, false, seed);
    }
    throw ContractViolation("initial_bandwidth: unknown variant");
}

ModelVariant variant_of(const BandwidthModel& bandwidth) {
    switch (bandwidth.kind()) {
        case BandwidthKind::Constant: return ModelVariant::RBp;
        case BandwidthKind::PerDim: return ModelVariant::RdBp;
        case BandwidthKind::Rbf:
        case BandwidthKind::RationalQuadratic:
            return bandwidth.per_dim_rho0() ? ModelVariant::ArdBp : ModelVariant::ArBp;
        case BandwidthKind::Net: return ModelVariant::ArnetBp;
    }
    throw ContractViolation("variant_of: unknown kind");
}

void RunConfig::validate() const {
    if (permutations == 0) throw ContractViolation("config: permutations must be >= 1");
    if (initial_density != "normal")
        throw ContractViolation("config: initial density '" + initial_density + "' is not implemented (only 'normal')");
    if (sampling.particles == 0) throw ContractViolation("config: sampling.particles must be >= 1");
    if (optimizer.permutations_per_step == 0) throw ContractViolation("config: optimizer.permutations_per_step must be >= 1");
}

nlohmann::json to_json(const RunConfig& c) {
    const auto& o = c.optimizer;
    const auto& s = c.sampling;
    return {
        {"model", to_string(c.model)},
        {"kernel", to_string(c.kernel)},
        {"permutations", c.permutations},
        {"seed", c.seed},
        {"tune", c.tune},
        {"optimizer",
         {{"maxiter", o.maxiter},
          {"n_rho", optional_json(o.n_rho)},
          {"learning_rate", optional_json(o.learning_rate)},
          {"beta1", o.beta1},
          {"beta2", o.beta2},
          {"epsilon", o.epsilon},
          {"seed", o.seed},
          {"permutations_per_step", o.permutations_per_step},
          {"shuffle_features", o.shuffle_features},
          {"best_of_trace", o.best_of_trace},
          {"max_retries", o.max_retries}}},
        {"sampling",
         {{"particles", s.particles},
          {"seed", s.seed},
          {"resample", s.resample},
          {"systematic", s.systematic},
          {"ess_fraction", s.ess_fraction}}},
        {"initial_density", c.initial_density},
        {"train_path", c.train_path},
        {"test_path", c.test_path},
        {"out_path", c.out_path},
    };
}

RunConfig run_config_from_json(const nlohmann::json& j) {
    try {
        reject_unknown(j,
                       {"model", "kernel", "permutations", "seed", "tune", "optimizer", "sampling", "initial_density",
                        "train_path", "test_path", "out_path"},
                       "config");
        RunConfig c;
        if (j.contains("model")) c.model = model_variant_from_string(j.at("model").get<std::string>());
        if (j.contains("kernel")) c.kernel = kernel_kind_from_string(j.at("kernel").get<std::string>());
        read_opt(j, "permutations", c.permutations);
        read_opt(j, "seed", c.seed);
        read_opt(j, "tune", c.tune);
        read_opt(j, "initial_density", c.initial_density);
        read_opt(j, "train_path", c.train_path);
        read_opt(j, "test_path", c.test_path);
        read_opt(j, "out_path", c.out_path);
        if (j.contains("optimizer")) {
            const auto& o = j.at("optimizer");
            reject_unknown(o,
                           {"maxiter", "n_rho", "learning_rate", "beta1", "beta2", "epsilon", "seed",
                            "permutations_per_step", "shuffle_features", "best_of_trace", "max_retries"},
                           "config.optimizer");
            auto& t = c.optimizer;
            read_opt(o, "maxiter", t.maxiter);
            read_opt(o, "n_rho", t.n_rho);
            read_opt(o, "learning_rate", t.learning_rate);
            read_opt(o, "beta1", t.beta1);
            read_opt(o, "beta2", t.beta2);
            read_opt(o, "epsilon", t.epsilon);
            read_opt(o, "seed", t.seed);
            read_opt(o, "permutations_per_step", t.permutations_per_step);
            read_opt(o, "shuffle_features", t.shuffle_features);
            read_opt(o, "best_of_trace", t.best_of_trace);
            read_opt(o, "max_retries", t.max_retries);
        }
        if (j.contains("sampling")) {
            const auto& s = j.at("sampling");
            reject_unknown(s, {"particles", "seed", "resample", "systematic", "ess_fraction"}, "config.sampling");
            read_opt(s, "particles", c.sampling.particles);
            read_opt(s, "seed", c.sampling.seed);
            read_opt(s, "resample", c.sampling.resample);
            read_opt(s, "systematic", c.sampling.systematic);
            read_opt(s, "ess_fraction", c.sampling.ess_fraction);
        }
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ContractViolation(std::string("config: ") + e.what());
    }
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config '" + path + "'");
    try {
        return run_config_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("config '") + path + "': " + e.what());
    }
}

nlohmann::json to_json(const BandwidthModel& b) {
    nlohmann::json j{{"kind", to_string(b.kind())},
                     {"dim", b.dim()},
                     {"rho0", b.rho0_values()},
                     {"lengthscales", b.lengthscales()},
                     {"gamma", b.gamma()}};
    if (b.kind() == BandwidthKind::Net) {
        const auto& n = b.net_weights();
        j["net"] = {{"dim", n.dim}, {"hidden", n.hidden}, {"latent", n.latent}, {"w", n.w}, {"b", n.b}, {"v", n.v}};
    }
    return j;
}

BandwidthModel bandwidth_from_json(const nlohmann::json& j) {
    const auto kind = bandwidth_kind_from_string(j.at("kind").get<std::string>());
    const auto dim = j.at("dim").get<std::size_t>();
    auto rho0 = j.at("rho0").get<std::vector<double>>();
    auto ls = j.at("lengthscales").get<std::vector<double>>();
    const double gamma = j.at("gamma").get<double>();
    switch (kind) {
        case BandwidthKind::Constant:
            if (rho0.size() != 1) throw SchemaError("bandwidth: constant kind needs one rho0");
            return BandwidthModel::constant(rho0[0], dim);
        case BandwidthKind::PerDim: return BandwidthModel::per_dim(std::move(rho0));
        case BandwidthKind::Rbf: return BandwidthModel::rbf(std::move(rho0), std::move(ls));
        case BandwidthKind::RationalQuadratic:
            return BandwidthModel::rational_quadratic(std::move(rho0), std::move(ls), gamma);
        case BandwidthKind::Net: {
            const auto& n = j.at("net");
            ArNetWeights w;
            w.dim = n.at("dim").get<std::size_t>();
            w.hidden = n.at("hidden").get<std::size_t>();
            w.latent = n.at("latent").get<std::size_t>();
            w.w = n.at("w").get<std::vector<double>>();
            w.b = n.at("b").get<std::vector<double>>();
            w.v = n.at("v").get<std::vector<double>>();
            return BandwidthModel::net(std::move(rho0), std::move(w));
        }
    }
    throw SchemaError("bandwidth: unknown kind");
}

nlohmann::json to_json(const Standardization& s) {
    nlohmann::json dropped = nlohmann::json::array();
    for (const auto& d : s.dropped) dropped.push_back({{"name", d.name}, {"reason", d.reason}});
    return {{"names", s.names},
            {"source_columns", s.source_columns},
            {"means", s.means},
            {"sds", s.sds},
            {"dropped", dropped}};
}

Standardization standardization_from_json(const nlohmann::json& j) {
    Standardization s;
    s.names = j.at("names").get<std::vector<std::string>>();
    s.source_columns = j.at("source_columns").get<std::vector<std::size_t>>();
    s.means = j.at("means").get<std::vector<double>>();
    s.sds = j.at("sds").get<std::vector<double>>();
    for (const auto& d : j.at("dropped")) s.dropped.push_back({d.at("name").get<std::string>(), d.at("reason").get<std::string>()});
    return s;
}

}  // namespace arbp
