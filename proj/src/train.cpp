#include "arbp/train.hpp"

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

struct PairTerms {
    double qa, lc, h, w;
    bool clamped;
};

/// Reverse pass through one pair update (query state a, observation scores
/// qv). ubar holds dL/du_new on entry and dL/da on exit; gbar is dL/d(log
/// density increment).
void pair_backward(std::span<const double> a, std::span<const double> qv, std::span<const double> rho,
                   const detail::StepWeights& sw, double gbar, std::span<double> ubar, std::span<double> vbar,
                   std::span<double> rho_bar, std::vector<PairTerms>& terms) {
    const std::size_t d = a.size();
    double cum = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        auto& t = terms[j];
        t.qa = detail::quantile(a[j]);
        t.lc = log_copula_density_scores(t.qa, qv[j], rho[j]);
        t.h = copula_conditional_cdf_scores(t.qa, qv[j], rho[j]);
        t.w = sigmoid(sw.logit_alpha + cum);
        const double next = (1.0 - t.w) * a[j] + t.w * t.h;
        t.clamped = next < kUnitEps || next > 1.0 - kUnitEps;
        cum += t.lc;
    }
    const double w_all = sigmoid(sw.logit_alpha + cum);

    double suffix = 0.0;  // sum over j > r of dL/du_j * d u_j / d lc_r
    for (std::size_t r = d; r-- > 0;) {
        const auto& t = terms[r];
        const double ub = t.clamped ? 0.0 : ubar[r];
        const double lc_bar = gbar * w_all + suffix;
        suffix += ub * (t.h - a[r]) * t.w * (1.0 - t.w);

        const double qa = t.qa, qb = qv[r];
        const auto c = detail::copula_partials(qa, qb, rho[r]);
        const double h_bar = ub * t.w;

        ubar[r] = ub * (1.0 - t.w) + (h_bar * c.dh_dqa + lc_bar * c.dlc_dqa) / std_normal_pdf(qa);
        vbar[r] += (h_bar * c.dh_dqv + lc_bar * c.dlc_dqv) / std_normal_pdf(qb);
        rho_bar[r] = h_bar * c.dh_drho + lc_bar * c.dlc_drho;
    }
}

/// Negative prequential log likelihood of permuted rows and its gradient
/// with respect to to_unconstrained(bandwidth).
double nll_and_gradient(const Matrix& xp, const BandwidthModel& bandwidth, std::span<double> grad) {
    const std::size_t n = xp.rows, d = xp.cols;
    const BandwidthEvaluator ev(bandwidth);
    const std::size_t fs = ev.feature_size();
    const auto feats = detail::all_features(ev, xp);
    auto feat = [&](std::size_t k) { return std::span<const double>(feats.data() + k * fs, fs); };

    // hist[k] holds the state of point k before step s (row s-1) for
    // s = 1..k, so row k is its final state, i.e. v_k.
    std::vector<std::vector<double>> hist(n);
    std::vector<double> u(n * d);
    for (std::size_t k = 0; k < n * d; ++k) u[k] = clamp_unit(detail::cdf(xp.data[k]));
    double nll = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        hist[k].reserve((k + 1) * d);
        for (double x : xp.row(k)) nll -= std_normal_log_pdf(x);
    }

    std::vector<double> qv(d), rho(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = i; k < n; ++k)
            hist[k].insert(hist[k].end(), u.begin() + static_cast<std::ptrdiff_t>(k * d),
                           u.begin() + static_cast<std::ptrdiff_t>((k + 1) * d));
        for (std::size_t j = 0; j < d; ++j) qv[j] = detail::quantile(u[i * d + j]);
        const detail::StepWeights sw(alpha(i + 1));
        for (std::size_t k = i + 1; k < n; ++k) {
            ev.rho(feat(k), feat(i), rho);
            nll -= detail::step_scores(std::span(u).subspan(k * d, d), qv, rho, sw, i + 1);
        }
    }

    std::vector<double> ubar(n * d, 0.0), vbar(d), rho_bar(d);
    std::vector<double> feat_bar(n * fs, 0.0);
    std::vector<PairTerms> terms(d);
    for (std::size_t i = n; i-- > 0;) {
        if (i + 1 >= n) continue;
        const std::span<const double> v(hist[i].data() + i * d, d);
        for (std::size_t j = 0; j < d; ++j) qv[j] = detail::quantile(v[j]);
        std::fill(vbar.begin(), vbar.end(), 0.0);
        const detail::StepWeights sw(alpha(i + 1));
        for (std::size_t k = i + 1; k < n; ++k) {
            const std::span<const double> a(hist[k].data() + i * d, d);
            ev.rho(feat(k), feat(i), rho);
            pair_backward(a, qv, rho, sw, -1.0, std::span(ubar).subspan(k * d, d), vbar, rho_bar, terms);
            ev.backward(feat(k), feat(i), rho, rho_bar, grad, std::span(feat_bar).subspan(k * fs, fs),
                        std::span(feat_bar).subspan(i * fs, fs));
        }
        std::copy(vbar.begin(), vbar.end(), ubar.begin() + static_cast<std::ptrdiff_t>(i * d));
    }
    if (bandwidth.kind() == BandwidthKind::Net) {
        for (std::size_t k = 0; k < n; ++k)
            ev.finish_feature_backward(xp.row(k), std::span<const double>(feat_bar.data() + k * fs, fs), grad);
    }
    return nll;
}

void check_data(const Matrix& data, const ParameterShape& shape, std::span<const PermutationPair> permutations) {
    if (data.rows == 0) throw ContractViolation("objective: empty data");
    if (data.cols != shape.dim) throw ContractViolation("objective: data width differs from parameter shape");
    if (permutations.empty()) throw ContractViolation("objective: at least one permutation is required");
    for (const auto& p : permutations)
        if (p.sample_order.size() != data.rows || p.feature_order.size() != data.cols || !p.valid())
            throw ContractViolation("objective: invalid permutation");
}

}  // namespace

double OptimizerConfig::resolved_learning_rate(BandwidthKind kind) const {
    if (learning_rate) return *learning_rate;
    return kind == BandwidthKind::Net ? 0.01 : 0.05;
}

std::size_t OptimizerConfig::resolved_n_rho(std::size_t n) const { return std::min(n, n_rho.value_or(256)); }

void AdamState::step(std::span<double> params, std::span<const double> grad, double learning_rate,
                     const OptimizerConfig& config) {
    if (params.size() != m_.size() || grad.size() != m_.size())
        throw ContractViolation("AdamState::step: size mismatch");
    ++t_;
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        m_[k] = config.beta1 * m_[k] + (1.0 - config.beta1) * grad[k];
        v_[k] = config.beta2 * v_[k] + (1.0 - config.beta2) * grad[k] * grad[k];
        params[k] -= learning_rate * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + config.epsilon);
    }
}

double objective(std::span<const double> params, const Matrix& data, const ParameterShape& shape,
                 std::span<const PermutationPair> permutations) {
    check_data(data, shape, permutations);
    const auto model = from_unconstrained(params, shape);
    std::vector<double> parts(permutations.size());
    parallel_for(permutations.size(), [&](std::size_t m) { parts[m] = prequential_nll(data, model, permutations[m]); });
    double total = 0.0;
    for (double p : parts) total += p;
    return total;
}

double objective_and_gradient(std::span<const double> params, const Matrix& data, const ParameterShape& shape,
                              std::span<const PermutationPair> permutations, std::vector<double>& gradient) {
    check_data(data, shape, permutations);
    const auto model = from_unconstrained(params, shape);
    const std::size_t M = permutations.size();
    std::vector<double> parts(M);
    std::vector<std::vector<double>> grads(M);
    parallel_for(M, [&](std::size_t m) {
        const auto& perm = permutations[m];
        std::vector<double> g(shape.size(), 0.0);
        parts[m] = nll_and_gradient(detail::permute_matrix(data, perm), model.permuted(perm.feature_order), g);
        grads[m] = unpermute_gradient(g, shape, perm.feature_order);
    });
    gradient.assign(shape.size(), 0.0);
    double total = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
        total += parts[m];
        for (std::size_t k = 0; k < gradient.size(); ++k) gradient[k] += grads[m][k];
    }
    for (double g : gradient)
        if (!std::isfinite(g)) throw NumericFault("non-finite gradient", 0);
    return total;
}

std::vector<double> finite_difference_gradient(std::span<const double> params, const Matrix& data,
                                               const ParameterShape& shape,
                                               std::span<const PermutationPair> permutations, double h) {
    std::vector<double> p(params.begin(), params.end());
    std::vector<double> g(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double orig = p[k];
        p[k] = orig + h;
        const double fp = objective(p, data, shape, permutations);
        p[k] = orig - h;
        const double fm = objective(p, data, shape, permutations);
        p[k] = orig;
        g[k] = (fp - fm) / (2.0 * h);
    }
    return g;
}

std::vector<std::size_t> subsample_rows(std::size_t n, const OptimizerConfig& config) {
    const std::size_t n_rho = config.resolved_n_rho(n);
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    if (n_rho < n) {
        std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
        std::shuffle(rows.begin(), rows.end(), rng);
        rows.resize(n_rho);
        std::sort(rows.begin(), rows.end());
    }
    return rows;
}

BandwidthModel minimize(const BandwidthModel& initial, std::size_t rows, std::size_t perm_dim,
                        const OptimizerConfig& config, const PermutationObjective& objective, OptimizeTrace* trace) {
    if (config.permutations_per_step == 0) throw ContractViolation("optimize: permutations_per_step must be >= 1");
    if (config.maxiter == 0) return initial;
    const auto shape = ParameterShape::of(initial);
    const double base_lr = config.resolved_learning_rate(initial.kind());
    if (!(base_lr > 0.0) || rows == 0) throw ContractViolation("optimize: learning rate and n_rho must be positive");

    auto params = to_unconstrained(initial);
    AdamState adam(params.size());
    std::vector<double> best = params;
    double best_value = std::numeric_limits<double>::infinity();
    std::vector<double> grad;
    OptimizeTrace local;

    const std::size_t M = config.permutations_per_step;
    for (std::size_t step = 0; step < config.maxiter; ++step) {
        std::vector<PermutationPair> perms;
        perms.reserve(M);
        for (std::size_t r = 0; r < M; ++r)
            perms.push_back(PermutationPair::make(rows, perm_dim, config.seed, step * M + r, true, config.shuffle_features));

        double lr = base_lr;
        for (std::size_t attempt = 0;; ++attempt) {
            const auto snapshot_params = params;
            const auto snapshot_adam = adam;
            try {
                const double value = objective(params, perms, grad);
                if (!std::isfinite(value)) throw NumericFault("non-finite objective", step);
                adam.step(params, grad, lr, config);
                for (double p : params)
                    if (!std::isfinite(p)) throw NumericFault("non-finite parameter after update", step);
                (void)from_unconstrained(params, shape);
                local.objective.push_back(value);
                if (value < best_value) {
                    best_value = value;
                    best = snapshot_params;
                }
                break;
            } catch (const NumericFault&) {
                params = snapshot_params;
                adam = snapshot_adam;
                ++local.retries;
                if (attempt + 1 > config.max_retries)
                    throw NumericFault("optimizer step failed after " + std::to_string(config.max_retries) +
                                           " retries with halved learning rate",
                                       step);
                lr *= 0.5;
            }
        }
    }
    if (trace) {
        local.subsample = std::move(trace->subsample);
        *trace = std::move(local);
    }
    return from_unconstrained(config.best_of_trace ? best : params, shape);
}

BandwidthModel optimize(const Matrix& data, const BandwidthModel& initial, const OptimizerConfig& config,
                        OptimizeTrace* trace) {
    if (data.rows == 0) throw ContractViolation("optimize: empty data");
    if (data.cols != initial.dim()) throw ContractViolation("optimize: data width differs from bandwidth dimension");
    const auto rows = subsample_rows(data.rows, config);
    Matrix sub(rows.size(), data.cols);
    for (std::size_t t = 0; t < rows.size(); ++t) std::copy_n(data.row(rows[t]).begin(), data.cols, sub.row(t).begin());
    if (trace) trace->subsample = rows;
    const auto shape = ParameterShape::of(initial);
    return minimize(initial, rows.size(), data.cols, config,
                    [&](std::span<const double> p, std::span<const PermutationPair> perms, std::vector<double>& g) {
                        return objective_and_gradient(p, sub, shape, perms, g);
                    },
                    trace);
}

}  // namespace arbp
