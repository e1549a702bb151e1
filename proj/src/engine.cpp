#include "arbp/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "arbp/errors.hpp"
#include "arbp/parallel.hpp"
#include "recursion.hpp"

namespace arbp {

namespace {

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed, std::uint64_t key, std::uint64_t tag) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                      static_cast<std::uint32_t>(tag)};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

bool is_permutation_of_iota(const std::vector<std::size_t>& order) {
    std::vector<char> seen(order.size(), 0);
    for (std::size_t k : order) {
        if (k >= order.size() || seen[k]) return false;
        seen[k] = 1;
    }
    return true;
}

}  // namespace

Matrix detail::permute_matrix(const Matrix& x, const PermutationPair& perm) {
    Matrix out(x.rows, x.cols);
    for (std::size_t t = 0; t < x.rows; ++t) {
        const auto src = x.row(perm.sample_order[t]);
        for (std::size_t j = 0; j < x.cols; ++j) out(t, j) = src[perm.feature_order[j]];
    }
    return out;
}

std::vector<double> detail::all_features(const BandwidthEvaluator& ev, const Matrix& xp) {
    const std::size_t fs = ev.feature_size();
    std::vector<double> f(xp.rows * fs);
    for (std::size_t k = 0; k < xp.rows; ++k) ev.features(xp.row(k), std::span(f).subspan(k * fs, fs));
    return f;
}

namespace {

double log_p0(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += std_normal_log_pdf(v);
    return s;
}

/// Prequential pass over permuted rows. Fills v (n x d) and, if requested,
/// log p_{i-1}(x_i) per permuted row.
void prequential_pass(const Matrix& xp, const BandwidthModel& bandwidth, std::vector<double>& v,
                      std::vector<double>* log_dens) {
    const std::size_t n = xp.rows, d = xp.cols;
    const BandwidthEvaluator ev(bandwidth);
    const std::size_t fs = ev.feature_size();
    const auto feats = detail::all_features(ev, xp);

    std::vector<double> u(n * d);
    for (std::size_t k = 0; k < n * d; ++k) u[k] = clamp_unit(detail::cdf(xp.data[k]));
    std::vector<double> lp;
    if (log_dens) {
        lp.resize(n);
        for (std::size_t k = 0; k < n; ++k) lp[k] = log_p0(xp.row(k));
    }
    v.assign(n * d, 0.0);
    std::vector<double> qv(d), rho(d);
    for (std::size_t i = 0; i < n; ++i) {
        std::copy_n(u.begin() + static_cast<std::ptrdiff_t>(i * d), d, v.begin() + static_cast<std::ptrdiff_t>(i * d));
        for (std::size_t j = 0; j < d; ++j) qv[j] = detail::quantile(v[i * d + j]);
        const detail::StepWeights sw(alpha(i + 1));
        const std::span<const double> fi(feats.data() + i * fs, fs);
        for (std::size_t k = i + 1; k < n; ++k) {
            ev.rho(std::span<const double>(feats.data() + k * fs, fs), fi, rho);
            const double delta = detail::step_scores(std::span(u).subspan(k * d, d), qv, rho, sw, i + 1);
            if (log_dens) lp[k] += delta;
        }
    }
    if (log_dens) *log_dens = std::move(lp);
}

}  // namespace

// ---------------------------------------------------------------------------

PermutationPair PermutationPair::make(std::size_t n, std::size_t d, std::uint64_t seed, std::size_t m,
                                      bool shuffle_samples, bool shuffle_features,
                                      std::optional<std::size_t> feature_key) {
    PermutationPair p = identity(n, d);
    if (shuffle_samples) p.sample_order = shuffled(n, seed, m, 1);
    if (shuffle_features) p.feature_order = shuffled(d, seed, feature_key.value_or(m), 2);
    return p;
}

PermutationPair PermutationPair::identity(std::size_t n, std::size_t d) {
    PermutationPair p;
    p.sample_order.resize(n);
    p.feature_order.resize(d);
    std::iota(p.sample_order.begin(), p.sample_order.end(), std::size_t{0});
    std::iota(p.feature_order.begin(), p.feature_order.end(), std::size_t{0});
    return p;
}

bool PermutationPair::valid() const { return is_permutation_of_iota(sample_order) && is_permutation_of_iota(feature_order); }

QueryState QueryState::initial(std::span<const double> x) {
    QueryState s;
    s.u.resize(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (!std::isfinite(x[j])) throw ContractViolation("QueryState: non-finite coordinate");
        s.u[j] = clamp_unit(detail::cdf(x[j]));
    }
    s.log_p = log_p0(x);
    return s;
}

void update_state(std::span<double> u, double& log_p, std::span<const double> v_row, std::span<const double> rho,
                  double alpha_i, std::size_t step) {
    if (v_row.size() != u.size() || rho.size() != u.size())
        throw ContractViolation("update_state: u, v_row and rho must have equal length");
    std::vector<double> qv(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) qv[j] = detail::quantile(clamp_unit(v_row[j]));
    log_p += detail::step_scores(u, qv, rho, detail::StepWeights(alpha_i), step);
}

QueryState update_step(const QueryState& state, std::span<const double> x_query, std::span<const double> x_i,
                       std::size_t i, const BandwidthModel& bandwidth, std::span<const double> v_row) {
    const std::size_t d = bandwidth.dim();
    if (state.u.size() != d || x_query.size() != d || x_i.size() != d || v_row.size() != d)
        throw ContractViolation("update_step: dimension mismatch");
    const BandwidthEvaluator ev(bandwidth);
    std::vector<double> fa(ev.feature_size()), fb(ev.feature_size()), rho(d);
    ev.features(x_query, fa);
    ev.features(x_i, fb);
    ev.rho(fa, fb, rho);
    QueryState out = state;
    update_state(out.u, out.log_p, v_row, rho, alpha(i), i);
    return out;
}

// ---------------------------------------------------------------------------

FittedDensityModel::FittedDensityModel(BandwidthModel bandwidth, Matrix train, std::vector<PermutationPair> permutations,
                                       std::vector<std::vector<double>> v, std::uint64_t seed,
                                       Standardization standardization)
    : bandwidth_(std::move(bandwidth)), train_(std::move(train)), permutations_(std::move(permutations)),
      v_(std::move(v)), seed_(seed), standardization_(std::move(standardization)) {
    const std::size_t d = bandwidth_.dim();
    if (train_.cols != d) throw ContractViolation("FittedDensityModel: training width differs from bandwidth dimension");
    if (permutations_.empty()) throw ContractViolation("FittedDensityModel: at least one permutation is required");
    if (v_.size() != permutations_.size()) throw ContractViolation("FittedDensityModel: one v array per permutation");
    for (std::size_t m = 0; m < permutations_.size(); ++m) {
        const auto& p = permutations_[m];
        if (p.sample_order.size() != train_.rows || p.feature_order.size() != d || !p.valid())
            throw ContractViolation("FittedDensityModel: invalid permutation");
        if (v_[m].size() != train_.rows * d) throw ContractViolation("FittedDensityModel: v array has wrong size");
        for (double x : v_[m])
            if (!(x >= kUnitEps && x <= 1.0 - kUnitEps))
                throw ContractViolation("FittedDensityModel: v entry outside [eps, 1 - eps]");
    }
    for (double x : train_.data)
        if (!std::isfinite(x)) throw ContractViolation("FittedDensityModel: non-finite training value");
}

std::vector<PermutationPair> make_permutations(std::size_t n, std::size_t d, const FitConfig& config) {
    if (config.permutations == 0) throw ContractViolation("FitConfig: permutations must be >= 1");
    std::vector<PermutationPair> out;
    out.reserve(config.permutations);
    for (std::size_t m = 0; m < config.permutations; ++m) {
        std::optional<std::size_t> feature_key;
        if (config.scheme == PermutationScheme::Nested) {
            if (config.feature_groups == 0) throw ContractViolation("FitConfig: feature_groups must be >= 1");
            feature_key = m % config.feature_groups;
        }
        out.push_back(PermutationPair::make(n, d, config.seed, m, config.shuffle_samples, config.shuffle_features,
                                            feature_key));
    }
    return out;
}

FittedDensityModel fit(const Matrix& train, const BandwidthModel& bandwidth, const FitConfig& config,
                       std::vector<std::vector<double>>* prequential) {
    if (train.rows == 0) throw ContractViolation("fit: empty training data");
    if (train.cols != bandwidth.dim()) throw ContractViolation("fit: data width differs from bandwidth dimension");
    for (double x : train.data)
        if (!std::isfinite(x)) throw ContractViolation("fit: non-finite training value");

    auto perms = make_permutations(train.rows, train.cols, config);
    const std::size_t M = perms.size();
    std::vector<std::vector<double>> v(M);
    std::vector<std::vector<double>> dens(config.compute_density ? M : 0);
    parallel_for(M, [&](std::size_t m) {
        const Matrix xp = detail::permute_matrix(train, perms[m]);
        const BandwidthModel bw = bandwidth.permuted(perms[m].feature_order);
        std::vector<double> lp;
        prequential_pass(xp, bw, v[m], config.compute_density ? &lp : nullptr);
        if (config.compute_density) {
            dens[m].resize(train.rows);
            for (std::size_t t = 0; t < train.rows; ++t) dens[m][perms[m].sample_order[t]] = lp[t];
        }
    });
    if (prequential) *prequential = std::move(dens);
    return FittedDensityModel(bandwidth, train, std::move(perms), std::move(v), config.seed);
}

FittedDensityModel fit(const StandardizedDataset& train, const BandwidthModel& bandwidth, const FitConfig& config,
                       std::vector<std::vector<double>>* prequential) {
    auto model = fit(train.values, bandwidth, config, prequential);
    return FittedDensityModel(model.bandwidth(), model.train(), model.permutations(), model.v_tensor(), model.seed(),
                              train.stats);
}

// ---------------------------------------------------------------------------

PermutationView::PermutationView(const FittedDensityModel& model, std::size_t m)
    : model_(&model), m_(m), n_(model.n()), d_(model.dim()),
      feature_order_(&model.permutation(m).feature_order),
      bandwidth_(std::make_unique<BandwidthModel>(model.bandwidth().permuted(model.permutation(m).feature_order))),
      evaluator_(std::make_unique<BandwidthEvaluator>(*bandwidth_)) {
    const Matrix xp = detail::permute_matrix(model.train(), model.permutation(m));
    train_features_ = detail::all_features(*evaluator_, xp);
}

std::vector<double> PermutationView::permute(std::span<const double> x) const {
    if (x.size() != d_) throw ContractViolation("PermutationView: query dimension mismatch");
    std::vector<double> out(d_);
    for (std::size_t j = 0; j < d_; ++j) out[j] = x[(*feature_order_)[j]];
    return out;
}

std::vector<double> PermutationView::query_features(std::span<const double> x_permuted) const {
    std::vector<double> f(evaluator_->feature_size());
    evaluator_->features(x_permuted, f);
    return f;
}

void PermutationView::advance(QueryState& state, std::span<const double> features, std::size_t i) const {
    if (i == 0 || i > n_) throw ContractViolation("PermutationView::advance: step out of range");
    const std::size_t fs = evaluator_->feature_size();
    std::vector<double> rho(d_);
    evaluator_->rho(features, std::span<const double>(train_features_.data() + (i - 1) * fs, fs), rho);
    update_state(state.u, state.log_p, model_->v_row(m_, i - 1), rho, alpha(i), i);
}

QueryState PermutationView::run(std::span<const double> x, std::size_t steps) const {
    if (steps > n_) throw ContractViolation("PermutationView::run: more steps than training points");
    const auto xp = permute(x);
    QueryState state = QueryState::initial(xp);
    if (steps == 0) return state;
    const auto feats = query_features(xp);
    const std::size_t fs = evaluator_->feature_size();
    std::vector<double> rho(d_), qv(d_);
    for (std::size_t i = 1; i <= steps; ++i) {
        const auto v = model_->v_row(m_, i - 1);
        for (std::size_t j = 0; j < d_; ++j) qv[j] = detail::quantile(v[j]);
        evaluator_->rho(feats, std::span<const double>(train_features_.data() + (i - 1) * fs, fs), rho);
        state.log_p += detail::step_scores(state.u, qv, rho, detail::StepWeights(alpha(i)), i);
    }
    return state;
}

double log_sum_exp(std::span<const double> values) {
    if (values.empty()) return -std::numeric_limits<double>::infinity();
    const double mx = *std::max_element(values.begin(), values.end());
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double v : values) s += std::exp(v - mx);
    return mx + std::log(s);
}

std::vector<double> eval_log_density_permutation(const FittedDensityModel& model, std::size_t m, const Matrix& test,
                                                 std::optional<std::size_t> steps) {
    if (test.cols != model.dim()) throw ContractViolation("eval_log_density: test width differs from model dimension");
    const PermutationView view(model, m);
    const std::size_t s = steps.value_or(model.n());
    std::vector<double> out(test.rows);
    parallel_for(test.rows, [&](std::size_t t) { out[t] = view.run(test.row(t), s).log_p; });
    return out;
}

std::vector<double> eval_log_density(const FittedDensityModel& model, const Matrix& test,
                                     std::optional<std::size_t> steps) {
    if (test.cols != model.dim()) throw ContractViolation("eval_log_density: test width differs from model dimension");
    const std::size_t M = model.permutation_count();
    const std::size_t s = steps.value_or(model.n());
    if (s > model.n()) throw ContractViolation("eval_log_density: more steps than training points");
    std::vector<std::unique_ptr<PermutationView>> views(M);
    parallel_for(M, [&](std::size_t m) { views[m] = std::make_unique<PermutationView>(model, m); });
    std::vector<double> out(test.rows);
    const double log_m = std::log(static_cast<double>(M));
    parallel_for(test.rows, [&](std::size_t t) {
        std::vector<double> per(M);
        for (std::size_t m = 0; m < M; ++m) per[m] = views[m]->run(test.row(t), s).log_p;
        out[t] = log_sum_exp(per) - log_m;
    });
    return out;
}

double prequential_nll(const Matrix& data, const BandwidthModel& bandwidth, const PermutationPair& permutation) {
    if (data.rows == 0) throw ContractViolation("prequential_nll: empty data");
    if (data.cols != bandwidth.dim()) throw ContractViolation("prequential_nll: data width differs from bandwidth");
    if (permutation.sample_order.size() != data.rows || permutation.feature_order.size() != data.cols ||
        !permutation.valid())
        throw ContractViolation("prequential_nll: invalid permutation");
    const Matrix xp = detail::permute_matrix(data, permutation);
    std::vector<double> v, lp;
    prequential_pass(xp, bandwidth.permuted(permutation.feature_order), v, &lp);
    double s = 0.0;
    for (double x : lp) s -= x;
    return s;
}

}  // namespace arbp
