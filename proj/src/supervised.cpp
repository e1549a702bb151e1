#include "arbp/supervised.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "arbp/errors.hpp"
#include "arbp/parallel.hpp"
#include "recursion.hpp"

namespace arbp {

namespace {

std::vector<std::size_t> response_last(std::span<const std::size_t> order) {
    std::vector<std::size_t> out(order.begin(), order.end());
    out.push_back(order.size());
    return out;
}

void check_labels(std::span<const double> y) {
    for (double v : y)
        if (v != 0.0 && v != 1.0) throw ContractViolation("classification: labels must be 0 or 1");
}

void check_inputs(const Matrix& x, std::span<const double> y, const BandwidthModel& bandwidth) {
    if (y.size() != x.rows) throw ContractViolation("supervised: one response per covariate row");
    if (bandwidth.dim() != x.cols + 1) throw ContractViolation("supervised: bandwidth dimension must be covariates + 1");
    for (double v : x.data)
        if (!std::isfinite(v)) throw ContractViolation("supervised: non-finite covariate");
    for (double v : y)
        if (!std::isfinite(v)) throw ContractViolation("supervised: non-finite response");
}

struct BTerms {
    double b, db_dq, db_dr, db_drho;
};

BTerms b_terms(double q, double r, double p, bool same) {
    BTerms t{};
    if (same) {
        if (q < r) {
            t.b = 1.0 - p + p / r;
            t.db_dr = -p / (r * r);
            t.db_drho = 1.0 / r - 1.0;
        } else {
            t.b = 1.0 - p + p / q;
            t.db_dq = -p / (q * q);
            t.db_drho = 1.0 / q - 1.0;
        }
    } else if (q <= 1.0 - r) {
        t.b = 1.0 - p;
        t.db_drho = -1.0;
    } else {
        const double big_b = (q - (1.0 - r)) / (q * r);
        t.b = 1.0 - p + p * big_b;
        t.db_dq = p * (1.0 - r) / (q * q * r);
        t.db_dr = p * (1.0 - q) / (q * r * r);
        t.db_drho = big_b - 1.0;
    }
    return t;
}

/// Training rows, bandwidth and features in the order of one permutation.
/// Feature vectors are computed from [x, 0]; no rho reads the response slot.
class PermutedProblem {
public:
    PermutedProblem(const Matrix& x, std::span<const double> y, const BandwidthModel& bandwidth,
                    const PermutationPair& perm)
        : d_(x.cols), xp_(detail::permute_matrix(x, perm)),
          bandwidth_(std::make_unique<BandwidthModel>(bandwidth.permuted(response_last(perm.feature_order)))),
          ev_(std::make_unique<BandwidthEvaluator>(*bandwidth_)), fs_(ev_->feature_size()),
          order_(perm.feature_order) {
        yp_.resize(x.rows);
        for (std::size_t t = 0; t < x.rows; ++t) yp_[t] = y[perm.sample_order[t]];
        feats_.resize(x.rows * fs_);
        for (std::size_t t = 0; t < x.rows; ++t) features_into(xp_.row(t), std::span(feats_).subspan(t * fs_, fs_));
    }

    std::size_t n() const noexcept { return xp_.rows; }
    std::size_t d() const noexcept { return d_; }
    std::size_t feature_size() const noexcept { return fs_; }
    const Matrix& x() const noexcept { return xp_; }
    const std::vector<double>& y() const noexcept { return yp_; }
    const BandwidthEvaluator& evaluator() const noexcept { return *ev_; }
    std::span<const double> feat(std::size_t k) const { return {feats_.data() + k * fs_, fs_}; }

    std::vector<double> permute(std::span<const double> x) const {
        std::vector<double> out(d_);
        for (std::size_t j = 0; j < d_; ++j) out[j] = x[order_[j]];
        return out;
    }

    std::vector<double> padded(std::span<const double> xp) const {
        std::vector<double> z(d_ + 1, 0.0);
        std::copy(xp.begin(), xp.end(), z.begin());
        return z;
    }

    void features_into(std::span<const double> xp, std::span<double> out) const { ev_->features(padded(xp), out); }

    /// rho for the pair and the covariate log copula sum C.
    double pair(std::span<const double> fa, std::span<const double> xa, std::size_t i, std::span<double> rho) const {
        ev_->rho(fa, feat(i), rho);
        const auto xi = xp_.row(i);
        double c = 0.0;
        for (std::size_t j = 0; j < d_; ++j) c += log_copula_density_scores(xa[j], xi[j], rho[j]);
        return c;
    }

private:
    std::size_t d_;
    Matrix xp_;
    std::vector<double> yp_;
    std::unique_ptr<BandwidthModel> bandwidth_;
    std::unique_ptr<BandwidthEvaluator> ev_;
    std::size_t fs_;
    std::vector<std::size_t> order_;
    std::vector<double> feats_;
};

/// Regression step on a response CDF; returns the log density increment.
double regression_step(double& u, double qv, double rho_y, double t, std::size_t step) {
    const double qa = detail::quantile(u);
    const double lc = log_copula_density_scores(qa, qv, rho_y);
    const double h = copula_conditional_cdf_scores(qa, qv, rho_y);
    const double beta = sigmoid(t);
    const double next = (1.0 - beta) * u + beta * h;
    if (!std::isfinite(next)) throw NumericFault("non-finite response CDF update", step);
    u = clamp_unit(next);
    const double g = softplus(t + lc) - softplus(t);
    if (!std::isfinite(g)) throw NumericFault("non-finite conditional log density update", step);
    return g;
}

void classification_step(double& q, double r, bool same, double rho_y, double t, std::size_t step) {
    const double beta = sigmoid(t);
    const double next = q * (1.0 - beta + beta * b_terms(q, r, rho_y, same).b);
    if (!std::isfinite(next)) throw NumericFault("non-finite class probability update", step);
    q = clamp_unit(next);
}

double observed_probability(double q, double label) { return label == 1.0 ? q : 1.0 - q; }

/// Prequential pass. Writes the per-sample state (v_y or r) and returns the
/// negative conditional log likelihood. hist[k][s] is the state of sample k
/// before step s, s = 0..k.
double forward_pass(const PermutedProblem& p, SupervisedTask task, std::vector<double>& state,
                    std::vector<std::vector<double>>* hist) {
    const std::size_t n = p.n(), d = p.d();
    const auto& y = p.y();
    std::vector<double> u(n);
    double nll = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (task == SupervisedTask::Regression) {
            u[k] = clamp_unit(detail::cdf(y[k]));
            nll -= std_normal_log_pdf(y[k]);
        } else {
            u[k] = 0.5;
        }
    }
    if (hist) {
        hist->assign(n, {});
        for (std::size_t k = 0; k < n; ++k) (*hist)[k].reserve(k + 1);
    }
    state.assign(n, 0.0);
    std::vector<double> rho(d + 1);
    for (std::size_t i = 0; i < n; ++i) {
        if (hist)
            for (std::size_t k = i; k < n; ++k) (*hist)[k].push_back(u[k]);
        const double logit_alpha = detail::StepWeights(alpha(i + 1)).logit_alpha;
        if (task == SupervisedTask::Regression) {
            state[i] = u[i];
            const double qv = detail::quantile(u[i]);
            for (std::size_t k = i + 1; k < n; ++k) {
                const double c = p.pair(p.feat(k), p.x().row(k), i, rho);
                nll -= regression_step(u[k], qv, rho[d], logit_alpha + c, i + 1);
            }
        } else {
            const double r = observed_probability(u[i], y[i]);
            state[i] = r;
            nll -= std::log(r);
            for (std::size_t k = i + 1; k < n; ++k) {
                const double c = p.pair(p.feat(k), p.x().row(k), i, rho);
                classification_step(u[k], r, y[i] == 1.0, rho[d], logit_alpha + c, i + 1);
            }
        }
    }
    return nll;
}

/// Exact reverse pass of forward_pass; grad is in the layout of the permuted
/// bandwidth.
double nll_and_gradient(const PermutedProblem& p, SupervisedTask task, const BandwidthModel& permuted_bw,
                        std::span<double> grad) {
    const std::size_t n = p.n(), d = p.d(), fs = p.feature_size();
    const auto& y = p.y();
    const auto& ev = p.evaluator();
    std::vector<std::vector<double>> hist;
    std::vector<double> state;
    const double nll = forward_pass(p, task, state, &hist);

    std::vector<double> ubar(n, 0.0), rho(d + 1), rho_bar(d + 1), feat_bar(n * fs, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        const double logit_alpha = detail::StepWeights(alpha(i + 1)).logit_alpha;
        const double v = hist[i][i];
        const auto xi = p.x().row(i);
        double vbar = 0.0;
        if (task == SupervisedTask::Classification) vbar = -1.0 / observed_probability(v, y[i]);
        const double qv = detail::quantile(v);
        for (std::size_t k = i + 1; k < n; ++k) {
            const auto xk = p.x().row(k);
            const double a = hist[k][i];
            const double c = p.pair(p.feat(k), xk, i, rho);
            const double t = logit_alpha + c;
            const double beta = sigmoid(t);
            double t_bar = 0.0;
            if (task == SupervisedTask::Regression) {
                const double qa = detail::quantile(a);
                const auto cp = detail::copula_partials(qa, qv, rho[d]);
                const double next = (1.0 - beta) * a + beta * cp.h;
                const double ub = (next < kUnitEps || next > 1.0 - kUnitEps) ? 0.0 : ubar[k];
                const double s2 = sigmoid(t + cp.lc);
                const double g_bar = -1.0;
                t_bar = g_bar * (s2 - beta) + ub * beta * (1.0 - beta) * (cp.h - a);
                const double lc_bar = g_bar * s2;
                const double h_bar = ub * beta;
                ubar[k] = ub * (1.0 - beta) + (h_bar * cp.dh_dqa + lc_bar * cp.dlc_dqa) / std_normal_pdf(qa);
                vbar += (h_bar * cp.dh_dqv + lc_bar * cp.dlc_dqv) / std_normal_pdf(qv);
                rho_bar[d] = h_bar * cp.dh_drho + lc_bar * cp.dlc_drho;
            } else {
                const double r = observed_probability(v, y[i]);
                const auto bt = b_terms(a, r, rho[d], y[i] == 1.0);
                const double f = 1.0 - beta + beta * bt.b;
                const double next = a * f;
                const double ub = (next < kUnitEps || next > 1.0 - kUnitEps) ? 0.0 : ubar[k];
                const double f_bar = ub * a;
                const double b_bar = f_bar * beta;
                t_bar = f_bar * (bt.b - 1.0) * beta * (1.0 - beta);
                ubar[k] = ub * f + b_bar * bt.db_dq;
                vbar += b_bar * bt.db_dr;
                rho_bar[d] = b_bar * bt.db_drho;
            }
            for (std::size_t j = 0; j < d; ++j)
                rho_bar[j] = t_bar * detail::copula_partials(xk[j], xi[j], rho[j]).dlc_drho;
            ev.backward(p.feat(k), p.feat(i), rho, rho_bar, grad, std::span(feat_bar).subspan(k * fs, fs),
                        std::span(feat_bar).subspan(i * fs, fs));
        }
        if (task == SupervisedTask::Classification && y[i] != 1.0) vbar = -vbar;
        ubar[i] = vbar;
    }
    if (permuted_bw.kind() == BandwidthKind::Net) {
        for (std::size_t k = 0; k < n; ++k)
            ev.finish_feature_backward(p.padded(p.x().row(k)), std::span<const double>(feat_bar).subspan(k * fs, fs),
                                       grad);
    }
    return nll;
}

void check_objective(SupervisedTask task, const Matrix& x, std::span<const double> y, const ParameterShape& shape,
                     std::span<const PermutationPair> permutations) {
    if (x.rows == 0) throw ContractViolation("supervised objective: empty data");
    if (shape.dim != x.cols + 1) throw ContractViolation("supervised objective: parameter shape must cover covariates + 1");
    if (y.size() != x.rows) throw ContractViolation("supervised objective: one response per row");
    if (task == SupervisedTask::Classification) check_labels(y);
    if (permutations.empty()) throw ContractViolation("supervised objective: at least one permutation is required");
    for (const auto& p : permutations)
        if (p.sample_order.size() != x.rows || p.feature_order.size() != x.cols || !p.valid())
            throw ContractViolation("supervised objective: invalid permutation");
}

SupervisedModel fit_task(SupervisedTask task, const Matrix& x, std::span<const double> y,
                         const BandwidthModel& bandwidth, const FitConfig& config, Standardization covariate_stats,
                         ResponseScale response) {
    check_inputs(x, y, bandwidth);
    if (task == SupervisedTask::Classification) check_labels(y);
    auto perms = make_permutations(x.rows, x.cols, config);
    std::vector<std::vector<double>> state(perms.size());
    parallel_for(perms.size(), [&](std::size_t m) {
        const PermutedProblem p(x, y, bandwidth, perms[m]);
        forward_pass(p, task, state[m], nullptr);
    });
    return SupervisedModel(task, bandwidth, x, std::vector<double>(y.begin(), y.end()), std::move(perms),
                           std::move(state), config.seed, std::move(covariate_stats), response);
}

/// Per-permutation query replay: returns (log density, CDF) for regression
/// and (p(1 | x), unused) for classification.
std::pair<double, double> replay(const SupervisedModel& model, const PermutedProblem& p, std::size_t m,
                                 std::span<const double> x, double y, std::size_t steps) {
    const std::size_t d = p.d();
    const auto xq = p.permute(x);
    std::vector<double> fq(p.feature_size()), rho(d + 1);
    p.features_into(xq, fq);
    const auto& st = model.state()[m];
    if (model.task() == SupervisedTask::Regression) {
        double u = clamp_unit(detail::cdf(y));
        double lp = std_normal_log_pdf(y);
        for (std::size_t i = 0; i < steps; ++i) {
            const double c = p.pair(fq, xq, i, rho);
            lp += regression_step(u, detail::quantile(st[i]), rho[d],
                                  detail::StepWeights(alpha(i + 1)).logit_alpha + c, i + 1);
        }
        return {lp, u};
    }
    double q = 0.5;
    for (std::size_t i = 0; i < steps; ++i) {
        const double c = p.pair(fq, xq, i, rho);
        classification_step(q, st[i], p.y()[i] == 1.0, rho[d], detail::StepWeights(alpha(i + 1)).logit_alpha + c,
                            i + 1);
    }
    return {q, 0.0};
}

void check_query(const SupervisedModel& model, std::span<const double> x) {
    if (x.size() != model.covariates()) throw ContractViolation("supervised predict: covariate width mismatch");
    for (double v : x)
        if (!std::isfinite(v)) throw ContractViolation("supervised predict: non-finite covariate");
}

std::size_t resolve_steps(const SupervisedModel& model, std::optional<std::size_t> steps) {
    const std::size_t s = steps.value_or(model.n());
    if (s > model.n()) throw ContractViolation("supervised predict: steps exceed training size");
    return s;
}

/// Runs `fn(m, problem)` for every permutation in parallel.
template <class Fn>
void for_each_permutation(const SupervisedModel& model, Fn fn) {
    parallel_for(model.permutation_count(), [&](std::size_t m) {
        const PermutedProblem p(model.x(), model.y(), model.bandwidth(), model.permutation(m));
        fn(m, p);
    });
}

}  // namespace

std::string to_string(SupervisedTask task) {
    return task == SupervisedTask::Regression ? "regression" : "classification";
}

BandwidthModel supervised_bandwidth(BandwidthKind kind, std::size_t covariates, bool per_dim_rho0,
                                    std::uint64_t seed) {
    if (covariates == 0) throw ContractViolation("supervised_bandwidth: at least one covariate is required");
    return BandwidthModel::initial(kind, covariates + 1, per_dim_rho0, seed);
}

BandwidthModel with_response_rho0(const BandwidthModel& bandwidth, double rho0) {
    const std::size_t dim = bandwidth.dim();
    std::vector<double> r(dim);
    for (std::size_t j = 0; j < dim; ++j) r[j] = bandwidth.rho0(j);
    r[dim - 1] = rho0;
    switch (bandwidth.kind()) {
        case BandwidthKind::Constant:
        case BandwidthKind::PerDim: return BandwidthModel::per_dim(std::move(r));
        case BandwidthKind::Rbf: return BandwidthModel::rbf(std::move(r), bandwidth.lengthscales());
        case BandwidthKind::RationalQuadratic:
            return BandwidthModel::rational_quadratic(std::move(r), bandwidth.lengthscales(), bandwidth.gamma());
        case BandwidthKind::Net: return BandwidthModel::net(std::move(r), bandwidth.net_weights());
    }
    throw ContractViolation("with_response_rho0: unknown kind");
}

double beta_weight(std::span<const double> x, std::span<const double> x_i, const BandwidthModel& bandwidth,
                   std::size_t i) {
    const std::size_t d = x.size();
    if (x_i.size() != d || (bandwidth.dim() != d && bandwidth.dim() != d + 1))
        throw ContractViolation("beta_weight: dimension mismatch");
    double c = 0.0;
    for (std::size_t j = 0; j < d; ++j)
        c += log_copula_density_scores(x[j], x_i[j], rho(bandwidth, j, x.first(j), x_i.first(j)));
    const double b = sigmoid(detail::StepWeights(alpha(i)).logit_alpha + c);
    if (!std::isfinite(b)) throw NumericFault("non-finite beta weight", i);
    return b;
}

double bernoulli_b(UnitInterval q, UnitInterval r, Correlation rho, bool same_label) {
    return b_terms(q, r, rho, same_label).b;
}

SupervisedModel::SupervisedModel(SupervisedTask task, BandwidthModel bandwidth, Matrix x, std::vector<double> y,
                                 std::vector<PermutationPair> permutations, std::vector<std::vector<double>> state,
                                 std::uint64_t seed, Standardization covariate_stats, ResponseScale response)
    : task_(task), bandwidth_(std::move(bandwidth)), x_(std::move(x)), y_(std::move(y)),
      permutations_(std::move(permutations)), state_(std::move(state)), seed_(seed),
      covariate_stats_(std::move(covariate_stats)), response_(response) {
    check_inputs(x_, y_, bandwidth_);
    if (task_ == SupervisedTask::Classification) check_labels(y_);
    if (!(response_.sd > 0.0) || !std::isfinite(response_.mean) || !std::isfinite(response_.sd))
        throw ContractViolation("SupervisedModel: response scale must have finite mean and positive sd");
    if (permutations_.empty()) throw ContractViolation("SupervisedModel: at least one permutation is required");
    if (state_.size() != permutations_.size()) throw ContractViolation("SupervisedModel: one state array per permutation");
    for (std::size_t m = 0; m < permutations_.size(); ++m) {
        const auto& p = permutations_[m];
        if (p.sample_order.size() != x_.rows || p.feature_order.size() != x_.cols || !p.valid())
            throw ContractViolation("SupervisedModel: invalid permutation");
        if (state_[m].size() != x_.rows) throw ContractViolation("SupervisedModel: state array has wrong size");
        for (double s : state_[m])
            if (!(s >= kUnitEps && s <= 1.0 - kUnitEps))
                throw ContractViolation("SupervisedModel: state entry outside [eps, 1 - eps]");
    }
}

SupervisedModel fit_regression(const Matrix& x, std::span<const double> y, const BandwidthModel& bandwidth,
                               const FitConfig& config, Standardization covariate_stats, ResponseScale response) {
    return fit_task(SupervisedTask::Regression, x, y, bandwidth, config, std::move(covariate_stats), response);
}

SupervisedModel fit_classification(const Matrix& x, std::span<const double> y, const BandwidthModel& bandwidth,
                                   const FitConfig& config, Standardization covariate_stats) {
    return fit_task(SupervisedTask::Classification, x, y, bandwidth, config, std::move(covariate_stats), {});
}

std::vector<double> predict_log_density_standardized(const SupervisedModel& model, const Matrix& x,
                                                     std::span<const double> y) {
    if (model.task() != SupervisedTask::Regression) throw ContractViolation("predict: model is not a regression model");
    if (y.size() != x.rows) throw ContractViolation("predict: one response per row");
    for (std::size_t t = 0; t < x.rows; ++t) {
        check_query(model, x.row(t));
        if (!std::isfinite(y[t])) throw ContractViolation("predict: non-finite response");
    }
    const std::size_t M = model.permutation_count();
    std::vector<double> lp(M * x.rows);
    for_each_permutation(model, [&](std::size_t m, const PermutedProblem& p) {
        for (std::size_t t = 0; t < x.rows; ++t) lp[t * M + m] = replay(model, p, m, x.row(t), y[t], model.n()).first;
    });
    std::vector<double> out(x.rows);
    for (std::size_t t = 0; t < x.rows; ++t)
        out[t] = log_sum_exp(std::span<const double>(lp).subspan(t * M, M)) - std::log(static_cast<double>(M));
    return out;
}

double predict_log_density_standardized(const SupervisedModel& model, std::span<const double> x, double y,
                                        std::optional<std::size_t> steps) {
    if (model.task() != SupervisedTask::Regression) throw ContractViolation("predict: model is not a regression model");
    check_query(model, x);
    if (!std::isfinite(y)) throw ContractViolation("predict: non-finite response");
    const std::size_t s = resolve_steps(model, steps);
    std::vector<double> lp(model.permutation_count());
    for_each_permutation(model, [&](std::size_t m, const PermutedProblem& p) { lp[m] = replay(model, p, m, x, y, s).first; });
    return log_sum_exp(lp) - std::log(static_cast<double>(lp.size()));
}

double predict_log_density_regression(const SupervisedModel& model, std::span<const double> x, double y) {
    const auto& r = model.response();
    return predict_log_density_standardized(model, x, (y - r.mean) / r.sd) - std::log(r.sd);
}

double predict_cdf_standardized(const SupervisedModel& model, std::span<const double> x, double y) {
    if (model.task() != SupervisedTask::Regression) throw ContractViolation("predict: model is not a regression model");
    check_query(model, x);
    std::vector<double> u(model.permutation_count());
    for_each_permutation(model, [&](std::size_t m, const PermutedProblem& p) {
        u[m] = replay(model, p, m, x, y, model.n()).second;
    });
    return std::accumulate(u.begin(), u.end(), 0.0) / static_cast<double>(u.size());
}

std::vector<double> predict_proba(const SupervisedModel& model, const Matrix& x) {
    if (model.task() != SupervisedTask::Classification)
        throw ContractViolation("predict_proba: model is not a classification model");
    for (std::size_t t = 0; t < x.rows; ++t) check_query(model, x.row(t));
    const std::size_t M = model.permutation_count();
    std::vector<double> q(M * x.rows);
    for_each_permutation(model, [&](std::size_t m, const PermutedProblem& p) {
        for (std::size_t t = 0; t < x.rows; ++t) q[t * M + m] = replay(model, p, m, x.row(t), 0.0, model.n()).first;
    });
    std::vector<double> out(x.rows);
    for (std::size_t t = 0; t < x.rows; ++t)
        out[t] = std::accumulate(q.begin() + static_cast<std::ptrdiff_t>(t * M),
                                 q.begin() + static_cast<std::ptrdiff_t>((t + 1) * M), 0.0) /
                 static_cast<double>(M);
    return out;
}

double predict_proba(const SupervisedModel& model, std::span<const double> x, std::optional<std::size_t> steps) {
    if (model.task() != SupervisedTask::Classification)
        throw ContractViolation("predict_proba: model is not a classification model");
    check_query(model, x);
    const std::size_t s = resolve_steps(model, steps);
    std::vector<double> q(model.permutation_count());
    for_each_permutation(model, [&](std::size_t m, const PermutedProblem& p) { q[m] = replay(model, p, m, x, 0.0, s).first; });
    return std::accumulate(q.begin(), q.end(), 0.0) / static_cast<double>(q.size());
}

std::pair<double, double> class_probabilities_unnormalized(const SupervisedModel& model, std::size_t m,
                                                           std::span<const double> x, std::size_t steps) {
    if (model.task() != SupervisedTask::Classification)
        throw ContractViolation("class_probabilities_unnormalized: model is not a classification model");
    check_query(model, x);
    const std::size_t s = resolve_steps(model, steps);
    const PermutedProblem p(model.x(), model.y(), model.bandwidth(), model.permutation(m));
    const std::size_t d = p.d();
    const auto xq = p.permute(x);
    std::vector<double> fq(p.feature_size()), rho(d + 1);
    p.features_into(xq, fq);
    double q0 = 0.5, q1 = 0.5;
    for (std::size_t i = 0; i < s; ++i) {
        const double beta = sigmoid(detail::StepWeights(alpha(i + 1)).logit_alpha + p.pair(fq, xq, i, rho));
        const double r = model.state()[m][i];
        const bool one = p.y()[i] == 1.0;
        const double n1 = q1 * (1.0 - beta + beta * b_terms(q1, r, rho[d], one).b);
        const double n0 = q0 * (1.0 - beta + beta * b_terms(q0, r, rho[d], !one).b);
        q1 = n1;
        q0 = n0;
    }
    return {q0, q1};
}

double supervised_objective_and_gradient(SupervisedTask task, std::span<const double> params, const Matrix& x,
                                         std::span<const double> y, const ParameterShape& shape,
                                         std::span<const PermutationPair> permutations,
                                         std::vector<double>& gradient) {
    check_objective(task, x, y, shape, permutations);
    const auto model = from_unconstrained(params, shape);
    const std::size_t M = permutations.size();
    std::vector<double> parts(M);
    std::vector<std::vector<double>> grads(M);
    parallel_for(M, [&](std::size_t m) {
        const auto& perm = permutations[m];
        const PermutedProblem p(x, y, model, perm);
        const auto order = response_last(perm.feature_order);
        std::vector<double> g(shape.size(), 0.0);
        parts[m] = nll_and_gradient(p, task, model.permuted(order), g);
        grads[m] = unpermute_gradient(g, shape, order);
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

double supervised_objective(SupervisedTask task, std::span<const double> params, const Matrix& x,
                            std::span<const double> y, const ParameterShape& shape,
                            std::span<const PermutationPair> permutations) {
    check_objective(task, x, y, shape, permutations);
    const auto model = from_unconstrained(params, shape);
    std::vector<double> parts(permutations.size());
    parallel_for(permutations.size(), [&](std::size_t m) {
        const PermutedProblem p(x, y, model, permutations[m]);
        std::vector<double> state;
        parts[m] = forward_pass(p, task, state, nullptr);
    });
    return std::accumulate(parts.begin(), parts.end(), 0.0);
}

BandwidthModel optimize_supervised(SupervisedTask task, const Matrix& x, std::span<const double> y,
                                   const BandwidthModel& initial, const OptimizerConfig& config,
                                   OptimizeTrace* trace) {
    check_inputs(x, y, initial);
    if (x.rows == 0) throw ContractViolation("optimize_supervised: empty data");
    if (task == SupervisedTask::Classification) check_labels(y);
    const auto rows = subsample_rows(x.rows, config);
    Matrix sub(rows.size(), x.cols);
    std::vector<double> ysub(rows.size());
    for (std::size_t t = 0; t < rows.size(); ++t) {
        std::copy_n(x.row(rows[t]).begin(), x.cols, sub.row(t).begin());
        ysub[t] = y[rows[t]];
    }
    if (trace) trace->subsample = rows;
    const auto shape = ParameterShape::of(initial);
    return minimize(initial, rows.size(), x.cols, config,
                    [&](std::span<const double> params, std::span<const PermutationPair> perms, std::vector<double>& g) {
                        return supervised_objective_and_gradient(task, params, sub, ysub, shape, perms, g);
                    },
                    trace);
}

ResponseScale fit_response_scale(std::span<const double> y) {
    if (y.size() < 2) throw ContractViolation("response scale: at least two values are needed");
    const double n = static_cast<double>(y.size());
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : y) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    if (!(sd > 0.0)) throw ContractViolation("response scale: constant response");
    return {mean, sd};
}

}  // namespace arbp
