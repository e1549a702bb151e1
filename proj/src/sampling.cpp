#include "arbp/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>

#include "arbp/errors.hpp"
#include "arbp/parallel.hpp"

namespace arbp {

namespace {

std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t tag) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag};
    return std::mt19937_64(seq);
}

Matrix proposal_draws(std::size_t count, std::size_t d, std::uint64_t seed) {
    auto rng = make_rng(seed, 3);
    std::normal_distribution<double> nd;
    Matrix z(count, d);
    for (auto& v : z.data) v = nd(rng);
    return z;
}

double log_p0(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += std_normal_log_pdf(v);
    return s;
}

std::vector<std::unique_ptr<PermutationView>> make_views(const FittedDensityModel& model) {
    std::vector<std::unique_ptr<PermutationView>> views;
    for (std::size_t m = 0; m < model.permutation_count(); ++m)
        views.push_back(std::make_unique<PermutationView>(model, m));
    return views;
}

/// Conditional CDF of permuted coordinate k under one permutation, for a
/// permuted point whose coordinates after k are ignored.
double conditional_cdf(const PermutationView& view, std::span<const double> xp, std::size_t k) {
    const auto feats = view.query_features(xp);
    auto state = QueryState::initial(xp);
    for (std::size_t i = 1; i <= view.steps(); ++i) view.advance(state, feats, i);
    return state.u[k];
}

/// Bisection for a nondecreasing cdf; the bracket doubles while u is outside.
template <class Cdf>
double invert(Cdf cdf, double u) {
    double lo = -10.0, hi = 10.0;
    for (int expand = 0; cdf(lo) > u || cdf(hi) < u; ++expand) {
        if (expand == 8) throw NumericFault("inverse sampling: target probability outside the reachable CDF range", 0);
        lo *= 2.0;
        hi *= 2.0;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double p = cdf(mid);
        if (std::abs(p - u) <= 1e-12) return mid;
        (p < u ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

void check_u(double u) {
    if (!(u > 0.0 && u < 1.0)) throw ContractViolation("inverse sampling: u must lie in (0, 1)");
}

}  // namespace

double effective_sample_size(std::span<const double> weights) {
    if (weights.empty()) throw ContractViolation("effective_sample_size: no weights");
    double s = 0.0, s2 = 0.0, top = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw ContractViolation("effective_sample_size: invalid weight");
        top = std::max(top, w);
    }
    if (top == 0.0) throw NumericFault("effective_sample_size: all weights are zero", 0);
    for (double w : weights) {
        const double r = w / top;
        s += r;
        s2 += r * r;
    }
    return s * s / s2;
}

std::vector<std::size_t> resample_indices(std::span<const double> weights, std::size_t count, std::uint64_t seed,
                                          bool systematic) {
    (void)effective_sample_size(weights);
    std::vector<double> cum(weights.size());
    double total = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) cum[k] = (total += weights[k]);
    auto rng = make_rng(seed, 4);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    std::vector<double> targets(count);
    if (systematic) {
        const double offset = ud(rng);
        for (std::size_t k = 0; k < count; ++k) targets[k] = (static_cast<double>(k) + offset) / static_cast<double>(count);
    } else {
        for (auto& t : targets) t = ud(rng);
    }
    std::vector<std::size_t> out(count);
    for (std::size_t k = 0; k < count; ++k) {
        const auto it = std::upper_bound(cum.begin(), cum.end(), targets[k] * total);
        out[k] = std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), weights.size() - 1);
    }
    return out;
}

double inverse_sample_1d(const FittedDensityModel& model, double u) {
    if (model.dim() != 1) throw ContractViolation("inverse_sample_1d: model must be one-dimensional");
    check_u(u);
    const auto views = make_views(model);
    auto cdf = [&](double x) {
        double s = 0.0;
        const double xp[1] = {x};
        for (const auto& v : views) s += conditional_cdf(*v, xp, 0);
        return s / static_cast<double>(views.size());
    };
    return invert(cdf, u);
}

std::vector<double> inverse_sample(const FittedDensityModel& model, std::span<const double> u, std::size_t m) {
    const std::size_t d = model.dim();
    if (u.size() != d) throw ContractViolation("inverse_sample: u must have one entry per dimension");
    for (double v : u) check_u(v);
    const PermutationView view(model, m);
    std::vector<double> xp(d, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
        xp[k] = invert(
            [&](double t) {
                xp[k] = t;
                return conditional_cdf(view, xp, k);
            },
            u[k]);
    }
    std::vector<double> x(d);
    const auto& order = view.feature_order();
    for (std::size_t k = 0; k < d; ++k) x[order[k]] = xp[k];
    return x;
}

ParticleSet importance_weights(const FittedDensityModel& model, std::size_t particles, std::uint64_t seed) {
    if (particles == 0) throw ContractViolation("importance sampling: at least one particle is required");
    ParticleSet out;
    out.particles = proposal_draws(particles, model.dim(), seed);
    const auto lp = eval_log_density(model, out.particles);
    std::vector<double> lw(particles);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < particles; ++k) {
        lw[k] = lp[k] - log_p0(out.particles.row(k));
        top = std::max(top, lw[k]);
    }
    if (!std::isfinite(top)) throw NumericFault("importance sampling: degenerate weights", model.n());
    out.weights.resize(particles);
    for (std::size_t k = 0; k < particles; ++k) out.weights[k] = std::exp(lw[k] - top);
    out.ess = effective_sample_size(out.weights);
    return out;
}

ParticleSet importance_sample(const FittedDensityModel& model, std::size_t particles, std::uint64_t seed,
                              bool systematic) {
    auto weighted = importance_weights(model, particles, seed);
    const auto idx = resample_indices(weighted.weights, particles, seed, systematic);
    ParticleSet out;
    out.particles = Matrix(particles, model.dim());
    for (std::size_t k = 0; k < particles; ++k)
        std::copy_n(weighted.particles.row(idx[k]).begin(), model.dim(), out.particles.row(k).begin());
    out.weights.assign(particles, 1.0);
    out.ess = static_cast<double>(particles);
    out.resample_events = 1;
    return out;
}

ParticleSet smc_sample(const FittedDensityModel& model, const SamplingConfig& config) {
    const std::size_t B = config.particles, d = model.dim(), M = model.permutation_count();
    if (B < 2) throw ContractViolation("smc_sample: at least two particles are required");
    if (!(config.ess_fraction > 0.0 && config.ess_fraction <= 1.0))
        throw ContractViolation("smc_sample: ess_fraction must lie in (0, 1]");
    const auto views = make_views(model);

    struct Particle {
        std::vector<double> x;
        std::vector<std::vector<double>> feats;  // per permutation
        std::vector<QueryState> states;          // per permutation
        double log_p = 0.0;                      // log of the permutation-averaged density
    };

    const Matrix z = proposal_draws(B, d, config.seed);
    std::vector<Particle> ps(B);
    parallel_for(B, [&](std::size_t k) {
        auto& p = ps[k];
        p.x.assign(z.row(k).begin(), z.row(k).end());
        for (std::size_t m = 0; m < M; ++m) {
            const auto xp = views[m]->permute(p.x);
            p.feats.push_back(views[m]->query_features(xp));
            p.states.push_back(QueryState::initial(xp));
        }
        p.log_p = log_p0(p.x);
    });

    std::vector<double> lw(B, 0.0), w(B, 1.0), lps(M);
    std::size_t events = 0;
    for (std::size_t i = 1; i <= model.n(); ++i) {
        parallel_for(B, [&](std::size_t k) {
            auto& p = ps[k];
            std::vector<double> l(M);
            for (std::size_t m = 0; m < M; ++m) {
                views[m]->advance(p.states[m], p.feats[m], i);
                l[m] = p.states[m].log_p;
            }
            const double next = log_sum_exp(l) - std::log(static_cast<double>(M));
            lw[k] += next - p.log_p;
            p.log_p = next;
        });
        const double top = *std::max_element(lw.begin(), lw.end());
        if (!std::isfinite(top)) throw NumericFault("smc_sample: degenerate weights", i);
        for (std::size_t k = 0; k < B; ++k) w[k] = std::exp(lw[k] - top);
        if (config.resample && effective_sample_size(w) < config.ess_fraction * static_cast<double>(B)) {
            const auto idx = resample_indices(w, B, config.seed + 0x9e3779b97f4a7c15ULL * i, config.systematic);
            std::vector<Particle> next(B);
            for (std::size_t k = 0; k < B; ++k) next[k] = ps[idx[k]];
            ps = std::move(next);
            std::fill(lw.begin(), lw.end(), 0.0);
            ++events;
        }
    }

    ParticleSet out;
    out.particles = Matrix(B, d);
    const double top = *std::max_element(lw.begin(), lw.end());
    out.weights.resize(B);
    for (std::size_t k = 0; k < B; ++k) {
        std::copy(ps[k].x.begin(), ps[k].x.end(), out.particles.row(k).begin());
        out.weights[k] = std::exp(lw[k] - top);
    }
    out.ess = effective_sample_size(out.weights);
    out.resample_events = events;
    return out;
}

}  // namespace arbp
