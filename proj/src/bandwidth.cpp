#include "arbp/bandwidth.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <random>

#include "arbp/errors.hpp"

namespace arbp {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw ContractViolation(what);
}

double logit_rho(double rho0) {
    const double s = rho0 / kRhoMax;
    return std::log(s) - std::log1p(-s);
}

template <typename T>
std::vector<T> gather(const std::vector<T>& src, std::span<const std::size_t> order) {
    std::vector<T> out(order.size());
    for (std::size_t t = 0; t < order.size(); ++t) out[t] = src.at(order[t]);
    return out;
}

}  // namespace

std::string to_string(BandwidthKind kind) {
    switch (kind) {
        case BandwidthKind::Constant: return "constant";
        case BandwidthKind::PerDim: return "per-dim";
        case BandwidthKind::Rbf: return "rbf";
        case BandwidthKind::RationalQuadratic: return "rq";
        case BandwidthKind::Net: return "net";
    }
    return "unknown";
}

BandwidthKind bandwidth_kind_from_string(const std::string& name) {
    for (auto kind : {BandwidthKind::Constant, BandwidthKind::PerDim, BandwidthKind::Rbf,
                      BandwidthKind::RationalQuadratic, BandwidthKind::Net}) {
        if (to_string(kind) == name) return kind;
    }
    throw ContractViolation("unknown bandwidth kind '" + name + "'");
}

// ---------------------------------------------------------------------------
// AR net

ArNetWeights ArNetWeights::zeros(std::size_t dim, std::size_t hidden, std::size_t latent) {
    ArNetWeights net;
    net.dim = dim;
    net.hidden = hidden;
    net.latent = latent;
    net.w.assign(hidden * dim, 0.0);
    net.b.assign(hidden, 0.0);
    net.v.assign(dim * latent * hidden, 0.0);
    return net;
}

ArNetWeights ArNetWeights::truncated_normal(std::size_t dim, std::uint64_t seed, std::size_t hidden,
                                            std::size_t latent) {
    ArNetWeights net = zeros(dim, hidden, latent);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto draw = [&](double stddev) {
        double z;
        do {
            z = normal(rng);
        } while (std::abs(z) > 2.0);
        return z * stddev;
    };
    const double w_sd = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(dim, 1)));
    const double v_sd = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (auto& x : net.w) x = draw(w_sd);
    for (auto& x : net.v) x = draw(v_sd);
    return net;
}

void ArNetWeights::validate() const {
    require(hidden > 0 && latent > 0, "ArNetWeights: hidden and latent widths must be positive");
    require(w.size() == hidden * dim && b.size() == hidden && v.size() == dim * latent * hidden,
            "ArNetWeights: array sizes do not match dim/hidden/latent");
    for (const auto* arr : {&w, &b, &v})
        for (double x : *arr) require(std::isfinite(x), "ArNetWeights: non-finite weight");
}

std::vector<double> arnet_latents(const ArNetWeights& net, std::span<const double> x) {
    require(x.size() == net.dim, "arnet_latents: input dimension mismatch");
    const std::size_t H = net.hidden, L = net.latent;
    std::vector<double> z(net.dim * L, 0.0);
    std::vector<double> pre(net.b);
    std::vector<double> act(H);
    for (std::size_t j = 0; j < net.dim; ++j) {
        if (j > 0) {
            for (std::size_t h = 0; h < H; ++h) pre[h] += net.w[h * net.dim + (j - 1)] * x[j - 1];
        }
        for (std::size_t h = 0; h < H; ++h) act[h] = std::tanh(pre[h]);
        const double* vj = net.v.data() + j * L * H;
        for (std::size_t l = 0; l < L; ++l) {
            double s = 0.0;
            for (std::size_t h = 0; h < H; ++h) s += vj[l * H + h] * act[h];
            z[j * L + l] = s;
        }
    }
    return z;
}

void arnet_latents_vjp(const ArNetWeights& net, std::span<const double> x, std::span<const double> latent_bar,
                       std::span<double> grad_w, std::span<double> grad_b, std::span<double> grad_v) {
    const std::size_t d = net.dim, H = net.hidden, L = net.latent;
    require(x.size() == d && latent_bar.size() == d * L, "arnet_latents_vjp: size mismatch");

    // Forward pass again, keeping activations per row.
    std::vector<double> act(d * H);
    std::vector<double> pre(net.b);
    for (std::size_t j = 0; j < d; ++j) {
        if (j > 0) {
            for (std::size_t h = 0; h < H; ++h) pre[h] += net.w[h * d + (j - 1)] * x[j - 1];
        }
        for (std::size_t h = 0; h < H; ++h) act[j * H + h] = std::tanh(pre[h]);
    }

    // pre_j = b + sum_{k<j} W[:,k] x_k, so dL/dW[:,k] = x_k * sum_{j>k} dL/dpre_j.
    std::vector<double> pre_bar_suffix(H, 0.0);
    for (std::size_t jj = d; jj-- > 0;) {
        const double* zb = latent_bar.data() + jj * L;
        const double* vj = net.v.data() + jj * L * H;
        double* gvj = grad_v.data() + jj * L * H;
        for (std::size_t h = 0; h < H; ++h) {
            const double a = act[jj * H + h];
            double act_bar = 0.0;
            for (std::size_t l = 0; l < L; ++l) {
                act_bar += vj[l * H + h] * zb[l];
                gvj[l * H + h] += zb[l] * a;
            }
            const double pre_bar = act_bar * (1.0 - a * a);
            grad_b[h] += pre_bar;
            pre_bar_suffix[h] += pre_bar;
        }
        // Column jj-1 feeds rows jj..d-1, whose pre-activation adjoints are now summed.
        if (jj > 0) {
            for (std::size_t h = 0; h < H; ++h) grad_w[h * d + (jj - 1)] += pre_bar_suffix[h] * x[jj - 1];
        }
    }
}

// ---------------------------------------------------------------------------
// Kernels

double rbf_kernel(std::span<const double> a, std::span<const double> b, std::span<const double> lengthscales) {
    require(a.size() == b.size() && a.size() == lengthscales.size(), "rbf_kernel: length mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        require(lengthscales[k] > 0.0, "rbf_kernel: length scales must be positive");
        const double t = (a[k] - b[k]) / lengthscales[k];
        s += t * t;
    }
    return std::exp(-s);
}

double rq_kernel(std::span<const double> a, std::span<const double> b, std::span<const double> lengthscales,
                 double gamma) {
    require(a.size() == b.size() && a.size() == lengthscales.size(), "rq_kernel: length mismatch");
    require(gamma > 0.0, "rq_kernel: gamma must be positive");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        require(lengthscales[k] > 0.0, "rq_kernel: length scales must be positive");
        const double t = (a[k] - b[k]) / lengthscales[k];
        s += t * t;
    }
    return std::exp(-gamma * std::log1p(s / (2.0 * gamma)));
}

// ---------------------------------------------------------------------------
// BandwidthModel

BandwidthModel BandwidthModel::constant(double rho0, std::size_t dim) {
    BandwidthModel m;
    m.kind_ = BandwidthKind::Constant;
    m.dim_ = dim;
    m.rho0_ = {rho0};
    m.validate();
    return m;
}

BandwidthModel BandwidthModel::per_dim(std::vector<double> rho0) {
    BandwidthModel m;
    m.kind_ = BandwidthKind::PerDim;
    m.dim_ = rho0.size();
    m.rho0_ = std::move(rho0);
    m.validate();
    return m;
}

BandwidthModel BandwidthModel::rbf(std::vector<double> rho0, std::vector<double> lengthscales) {
    BandwidthModel m;
    m.kind_ = BandwidthKind::Rbf;
    m.dim_ = lengthscales.size();
    m.rho0_ = std::move(rho0);
    m.lengthscales_ = std::move(lengthscales);
    m.validate();
    return m;
}

BandwidthModel BandwidthModel::rational_quadratic(std::vector<double> rho0, std::vector<double> lengthscales,
                                                  double gamma) {
    BandwidthModel m;
    m.kind_ = BandwidthKind::RationalQuadratic;
    m.dim_ = lengthscales.size();
    m.rho0_ = std::move(rho0);
    m.lengthscales_ = std::move(lengthscales);
    m.gamma_ = gamma;
    m.validate();
    return m;
}

BandwidthModel BandwidthModel::net(std::vector<double> rho0, ArNetWeights weights) {
    BandwidthModel m;
    m.kind_ = BandwidthKind::Net;
    m.dim_ = weights.dim;
    m.rho0_ = std::move(rho0);
    m.net_ = std::move(weights);
    m.validate();
    return m;
}

BandwidthModel BandwidthModel::initial(BandwidthKind kind, std::size_t dim, bool per_dim_rho0, std::uint64_t seed) {
    constexpr double rho_init = 0.9;
    std::vector<double> rho0(per_dim_rho0 ? dim : 1, rho_init);
    switch (kind) {
        case BandwidthKind::Constant: return constant(rho_init, dim);
        case BandwidthKind::PerDim: return per_dim(std::vector<double>(dim, rho_init));
        case BandwidthKind::Rbf: return rbf(std::move(rho0), std::vector<double>(dim, 1.0));
        case BandwidthKind::RationalQuadratic:
            return rational_quadratic(std::move(rho0), std::vector<double>(dim, 1.0), 1.0);
        case BandwidthKind::Net: return net(std::move(rho0), ArNetWeights::truncated_normal(dim, seed));
    }
    throw ContractViolation("BandwidthModel::initial: unknown kind");
}

void BandwidthModel::validate() const {
    require(dim_ > 0, "BandwidthModel: dimension must be positive");
    require(rho0_.size() == 1 || rho0_.size() == dim_, "BandwidthModel: rho0 must have length 1 or d");
    if (kind_ == BandwidthKind::PerDim) require(rho0_.size() == dim_, "BandwidthModel: per-dim needs d values");
    for (double r : rho0_) require(r > 0.0 && r <= kRhoMax, "BandwidthModel: rho0 must lie in (0, 0.999]");
    if (kind_ == BandwidthKind::Rbf || kind_ == BandwidthKind::RationalQuadratic) {
        require(lengthscales_.size() == dim_, "BandwidthModel: one length scale per dimension");
        for (double l : lengthscales_)
            require(std::isfinite(l) && l > 0.0, "BandwidthModel: length scales must be positive");
    } else {
        require(lengthscales_.empty(), "BandwidthModel: length scales only apply to kernel variants");
    }
    if (kind_ == BandwidthKind::RationalQuadratic)
        require(std::isfinite(gamma_) && gamma_ > 0.0, "BandwidthModel: gamma must be positive");
    if (kind_ == BandwidthKind::Net) net_.validate();
}

BandwidthModel BandwidthModel::permuted(std::span<const std::size_t> order) const {
    require(order.size() == dim_, "BandwidthModel::permuted: order length mismatch");
    BandwidthModel m = *this;
    if (rho0_.size() > 1) m.rho0_ = gather(rho0_, order);
    if (!lengthscales_.empty()) m.lengthscales_ = gather(lengthscales_, order);
    return m;
}

std::size_t BandwidthModel::parameter_count() const { return ParameterShape::of(*this).size(); }

Correlation rho(const BandwidthModel& model, std::size_t j, std::span<const double> x_prefix,
                std::span<const double> xi_prefix) {
    require(j < model.dim(), "rho: dimension index out of range");
    require(x_prefix.size() == j && xi_prefix.size() == j, "rho: prefix length must equal j");
    const double r0 = model.rho0(j);
    if (j == 0) return Correlation(r0);
    switch (model.kind()) {
        case BandwidthKind::Constant:
        case BandwidthKind::PerDim: return Correlation(r0);
        case BandwidthKind::Rbf:
            return Correlation(r0 * rbf_kernel(x_prefix, xi_prefix, std::span(model.lengthscales()).first(j)));
        case BandwidthKind::RationalQuadratic:
            return Correlation(
                r0 * rq_kernel(x_prefix, xi_prefix, std::span(model.lengthscales()).first(j), model.gamma()));
        case BandwidthKind::Net: {
            // Pad with zeros: rows < j never read coordinates >= j - 1.
            std::vector<double> a(model.dim(), 0.0), b(model.dim(), 0.0);
            std::copy(x_prefix.begin(), x_prefix.end(), a.begin());
            std::copy(xi_prefix.begin(), xi_prefix.end(), b.begin());
            const auto za = arnet_latents(model.net_weights(), a);
            const auto zb = arnet_latents(model.net_weights(), b);
            const std::size_t L = model.net_weights().latent;
            double s = 0.0;
            for (std::size_t k = 0; k < j * L; ++k) s += (za[k] - zb[k]) * (za[k] - zb[k]);
            return Correlation(r0 * std::exp(-s));
        }
    }
    throw ContractViolation("rho: unknown kind");
}

// ---------------------------------------------------------------------------
// Parameter transforms

ParameterShape ParameterShape::of(const BandwidthModel& model) {
    ParameterShape s;
    s.kind = model.kind();
    s.dim = model.dim();
    s.n_rho0 = model.rho0_values().size();
    if (model.kind() == BandwidthKind::Net) {
        s.hidden = model.net_weights().hidden;
        s.latent = model.net_weights().latent;
    }
    return s;
}

std::size_t ParameterShape::size() const {
    std::size_t n = n_rho0;
    if (kind == BandwidthKind::Rbf) n += dim;
    if (kind == BandwidthKind::RationalQuadratic) n += dim + 1;
    if (kind == BandwidthKind::Net) n += hidden * dim + hidden + dim * latent * hidden;
    return n;
}

std::vector<double> to_unconstrained(const BandwidthModel& model) {
    std::vector<double> out;
    out.reserve(model.parameter_count());
    for (double r : model.rho0_values()) out.push_back(logit_rho(r));
    for (double l : model.lengthscales()) out.push_back(std::log(l));
    if (model.kind() == BandwidthKind::RationalQuadratic) out.push_back(std::log(model.gamma()));
    if (model.kind() == BandwidthKind::Net) {
        const auto& net = model.net_weights();
        out.insert(out.end(), net.w.begin(), net.w.end());
        out.insert(out.end(), net.b.begin(), net.b.end());
        out.insert(out.end(), net.v.begin(), net.v.end());
    }
    return out;
}

BandwidthModel from_unconstrained(std::span<const double> params, const ParameterShape& shape) {
    require(params.size() == shape.size(), "from_unconstrained: parameter vector does not match shape");
    for (double p : params) require(std::isfinite(p), "from_unconstrained: non-finite parameter");
    std::size_t pos = 0;
    std::vector<double> rho0(shape.n_rho0);
    for (auto& r : rho0) r = std::max(kRhoMax * sigmoid(params[pos++]), DBL_MIN);
    auto take = [&](std::size_t n) {
        std::vector<double> v(params.begin() + static_cast<std::ptrdiff_t>(pos),
                              params.begin() + static_cast<std::ptrdiff_t>(pos + n));
        pos += n;
        return v;
    };
    switch (shape.kind) {
        case BandwidthKind::Constant: return BandwidthModel::constant(rho0[0], shape.dim);
        case BandwidthKind::PerDim: return BandwidthModel::per_dim(std::move(rho0));
        case BandwidthKind::Rbf: {
            auto ls = take(shape.dim);
            for (auto& l : ls) l = std::exp(l);
            return BandwidthModel::rbf(std::move(rho0), std::move(ls));
        }
        case BandwidthKind::RationalQuadratic: {
            auto ls = take(shape.dim);
            for (auto& l : ls) l = std::exp(l);
            const double gamma = std::exp(params[pos++]);
            return BandwidthModel::rational_quadratic(std::move(rho0), std::move(ls), gamma);
        }
        case BandwidthKind::Net: {
            ArNetWeights net;
            net.dim = shape.dim;
            net.hidden = shape.hidden;
            net.latent = shape.latent;
            net.w = take(shape.hidden * shape.dim);
            net.b = take(shape.hidden);
            net.v = take(shape.dim * shape.latent * shape.hidden);
            return BandwidthModel::net(std::move(rho0), std::move(net));
        }
    }
    throw ContractViolation("from_unconstrained: unknown kind");
}

std::vector<double> unpermute_gradient(std::span<const double> grad, const ParameterShape& shape,
                                       std::span<const std::size_t> order) {
    require(grad.size() == shape.size() && order.size() == shape.dim, "unpermute_gradient: size mismatch");
    std::vector<double> out(grad.begin(), grad.end());
    if (shape.n_rho0 > 1)
        for (std::size_t t = 0; t < shape.dim; ++t) out[order[t]] = grad[t];
    if (shape.kind == BandwidthKind::Rbf || shape.kind == BandwidthKind::RationalQuadratic) {
        const std::size_t off = shape.n_rho0;
        for (std::size_t t = 0; t < shape.dim; ++t) out[off + order[t]] = grad[off + t];
    }
    return out;
}

// ---------------------------------------------------------------------------
// BandwidthEvaluator

BandwidthEvaluator::BandwidthEvaluator(const BandwidthModel& model)
    : model_(&model), dim_(model.dim()), row_width_(1), feature_size_(0), ls_offset_(0), gamma_offset_(0),
      net_offset_(0) {
    const std::size_t n_rho0 = model.rho0_values().size();
    switch (model.kind()) {
        case BandwidthKind::Constant:
        case BandwidthKind::PerDim: feature_size_ = 0; break;
        case BandwidthKind::Rbf:
            feature_size_ = dim_;
            ls_offset_ = n_rho0;
            break;
        case BandwidthKind::RationalQuadratic:
            feature_size_ = dim_;
            ls_offset_ = n_rho0;
            gamma_offset_ = n_rho0 + dim_;
            break;
        case BandwidthKind::Net:
            row_width_ = model.net_weights().latent;
            feature_size_ = dim_ * row_width_;
            net_offset_ = n_rho0;
            break;
    }
}

void BandwidthEvaluator::features(std::span<const double> x, std::span<double> out) const {
    require(x.size() == dim_ && out.size() == feature_size_, "BandwidthEvaluator::features: size mismatch");
    switch (model_->kind()) {
        case BandwidthKind::Constant:
        case BandwidthKind::PerDim: break;
        case BandwidthKind::Rbf:
        case BandwidthKind::RationalQuadratic:
            for (std::size_t k = 0; k < dim_; ++k) out[k] = x[k] / model_->lengthscales()[k];
            break;
        case BandwidthKind::Net: {
            const auto z = arnet_latents(model_->net_weights(), x);
            std::copy(z.begin(), z.end(), out.begin());
            break;
        }
    }
}

double BandwidthEvaluator::row_distance(std::span<const double> fa, std::span<const double> fb,
                                        std::size_t row) const {
    double s = 0.0;
    const std::size_t off = row * row_width_;
    for (std::size_t l = 0; l < row_width_; ++l) {
        const double t = fa[off + l] - fb[off + l];
        s += t * t;
    }
    return s;
}

void BandwidthEvaluator::rho(std::span<const double> fa, std::span<const double> fb, std::span<double> out) const {
    const auto kind = model_->kind();
    if (kind == BandwidthKind::Constant || kind == BandwidthKind::PerDim) {
        for (std::size_t j = 0; j < dim_; ++j) out[j] = model_->rho0(j);
        return;
    }
    double s = 0.0;
    const double gamma = model_->gamma();
    for (std::size_t j = 0; j < dim_; ++j) {
        // Net rows j' < j depend on x[0..j'), so x[j-1] enters only via the kernels.
        if (j > 0) s += row_distance(fa, fb, j - 1);
        const double k = kind == BandwidthKind::RationalQuadratic ? std::exp(-gamma * std::log1p(s / (2.0 * gamma)))
                                                                  : std::exp(-s);
        out[j] = model_->rho0(j) * k;
    }
}

void BandwidthEvaluator::backward(std::span<const double> fa, std::span<const double> fb,
                                  std::span<const double> rho_values, std::span<const double> rho_bar,
                                  std::span<double> grad, std::span<double> fa_bar, std::span<double> fb_bar) const {
    const auto kind = model_->kind();
    const bool shared = model_->rho0_values().size() == 1;
    // rho0 = kRhoMax * sigmoid(theta): d rho / d theta = rho * (1 - rho0 / kRhoMax).
    for (std::size_t j = 0; j < dim_; ++j) {
        const double r0 = model_->rho0(j);
        grad[shared ? 0 : j] += rho_bar[j] * rho_values[j] * (1.0 - r0 / kRhoMax);
    }
    if (kind == BandwidthKind::Constant || kind == BandwidthKind::PerDim) return;

    // rho_j = rho0_j g(S_j), S_j = sum_{k<j} D_k. Walk j downwards keeping the
    // suffix sum of dL/dS so that dL/dD_k = sum_{j>k} dL/dS_j.
    const double gamma = model_->gamma();
    double s_total = 0.0;
    for (std::size_t k = 0; k + 1 < dim_; ++k) s_total += row_distance(fa, fb, k);
    double s = s_total;
    double d_bar_suffix = 0.0;
    double gamma_bar = 0.0;
    for (std::size_t j = dim_; j-- > 1;) {
        // Here s == S_j.
        double s_bar;
        if (kind == BandwidthKind::RationalQuadratic) {
            const double t = s / (2.0 * gamma);
            s_bar = rho_bar[j] * (-0.5 * rho_values[j] / (1.0 + t));
            gamma_bar += rho_bar[j] * rho_values[j] * (-std::log1p(t) + t / (1.0 + t));
        } else {
            s_bar = -rho_bar[j] * rho_values[j];
        }
        d_bar_suffix += s_bar;
        const std::size_t k = j - 1;
        const double dk = row_distance(fa, fb, k);
        s -= dk;
        if (kind == BandwidthKind::Net) {
            const std::size_t off = k * row_width_;
            for (std::size_t l = 0; l < row_width_; ++l) {
                const double g = 2.0 * d_bar_suffix * (fa[off + l] - fb[off + l]);
                fa_bar[off + l] += g;
                fb_bar[off + l] -= g;
            }
        } else {
            // D_k = ((x_a - x_b) / l_k)^2, d D_k / d log l_k = -2 D_k.
            grad[ls_offset_ + k] += d_bar_suffix * (-2.0 * dk);
        }
    }
    if (kind == BandwidthKind::RationalQuadratic) grad[gamma_offset_] += gamma_bar * gamma;
}

void BandwidthEvaluator::finish_feature_backward(std::span<const double> x, std::span<const double> feature_bar,
                                                 std::span<double> grad) const {
    if (model_->kind() != BandwidthKind::Net) return;
    const auto& net = model_->net_weights();
    auto g = grad.subspan(net_offset_);
    arnet_latents_vjp(net, x, feature_bar, g.first(net.w.size()), g.subspan(net.w.size(), net.b.size()),
                      g.subspan(net.w.size() + net.b.size(), net.v.size()));
}

}  // namespace arbp
