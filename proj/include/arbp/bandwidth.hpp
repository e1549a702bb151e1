#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "arbp/mathcore.hpp"

namespace arbp {

enum class BandwidthKind { Constant, PerDim, Rbf, RationalQuadratic, Net };

std::string to_string(BandwidthKind kind);
/// Accepts the names produced by to_string. Throws ContractViolation otherwise.
BandwidthKind bandwidth_kind_from_string(const std::string& name);

/// Weights of the autoregressive embedder f_w : R^d -> R^{d x d'}.
///
/// Row j of the output depends on x[0..j) only: the hidden pre-activation for
/// row j is b + W[:, 0..j) x[0..j) (input-to-hidden matrix shared across rows,
/// NADE style) and the row is V_j tanh(pre-activation). Row 0 sees no input.
struct ArNetWeights {
    std::size_t dim = 0;
    std::size_t hidden = 16;
    std::size_t latent = 4;
    std::vector<double> w;  ///< hidden x dim, row-major
    std::vector<double> b;  ///< hidden
    std::vector<double> v;  ///< dim x latent x hidden, row-major

    static ArNetWeights zeros(std::size_t dim, std::size_t hidden = 16, std::size_t latent = 4);

    /// Truncated-normal init (cut at two standard deviations) with variance
    /// 1/fan_in per layer; biases start at zero.
    static ArNetWeights truncated_normal(std::size_t dim, std::uint64_t seed, std::size_t hidden = 16,
                                         std::size_t latent = 4);

    std::size_t parameter_count() const { return w.size() + b.size() + v.size(); }
    void validate() const;

    friend bool operator==(const ArNetWeights&, const ArNetWeights&) = default;
};

/// Latent matrix Z = f_w(x), dim x latent, row-major.
std::vector<double> arnet_latents(const ArNetWeights& net, std::span<const double> x);

/// Reverse pass through arnet_latents: accumulates dL/dw into grad_w/grad_b/grad_v
/// given dL/dZ. Gradient spans have the layout of the corresponding weight arrays.
void arnet_latents_vjp(const ArNetWeights& net, std::span<const double> x, std::span<const double> latent_bar,
                       std::span<double> grad_w, std::span<double> grad_b, std::span<double> grad_v);

double rbf_kernel(std::span<const double> a, std::span<const double> b, std::span<const double> lengthscales);

/// (1 + sum_k ((a_k - b_k)/l_k)^2 / (2 gamma))^-gamma.
double rq_kernel(std::span<const double> a, std::span<const double> b, std::span<const double> lengthscales,
                 double gamma);

/// Bandwidth parameterization shared by all recursions.
///
/// rho0 holds either one value (shared) or one per dimension. Length scales,
/// when present, are indexed by dimension like the data columns. The model is
/// expressed in whatever dimension order the caller uses; see permuted().
class BandwidthModel {
public:
    static BandwidthModel constant(double rho0, std::size_t dim);
    static BandwidthModel per_dim(std::vector<double> rho0);
    static BandwidthModel rbf(std::vector<double> rho0, std::vector<double> lengthscales);
    static BandwidthModel rational_quadratic(std::vector<double> rho0, std::vector<double> lengthscales,
                                             double gamma);
    static BandwidthModel net(std::vector<double> rho0, ArNetWeights weights);

    /// Default initialization: rho0 = 0.9, length scales 1, gamma 1, net from
    /// truncated normal with the given seed.
    static BandwidthModel initial(BandwidthKind kind, std::size_t dim, bool per_dim_rho0, std::uint64_t seed = 0);

    BandwidthKind kind() const noexcept { return kind_; }
    std::size_t dim() const noexcept { return dim_; }
    bool has_kernel() const noexcept { return kind_ != BandwidthKind::Constant && kind_ != BandwidthKind::PerDim; }
    bool per_dim_rho0() const noexcept { return rho0_.size() > 1; }

    /// rho0 for dimension j (0-based).
    double rho0(std::size_t j) const { return rho0_.size() == 1 ? rho0_[0] : rho0_.at(j); }
    const std::vector<double>& rho0_values() const noexcept { return rho0_; }
    const std::vector<double>& lengthscales() const noexcept { return lengthscales_; }
    double gamma() const noexcept { return gamma_; }
    const ArNetWeights& net_weights() const noexcept { return net_; }

    /// Model for data whose columns are reordered as order[0], order[1], ...
    /// Per-dimension arrays move with their column; net weights are positional
    /// and stay in place.
    BandwidthModel permuted(std::span<const std::size_t> order) const;

    std::size_t parameter_count() const;

    friend bool operator==(const BandwidthModel&, const BandwidthModel&) = default;

private:
    void validate() const;

    BandwidthKind kind_ = BandwidthKind::Constant;
    std::size_t dim_ = 0;
    std::vector<double> rho0_;
    std::vector<double> lengthscales_;
    double gamma_ = 1.0;
    ArNetWeights net_;
};

/// rho^j for a query prefix and an observation prefix, j 0-based. For j == 0
/// the result is rho0. Prefix lengths must equal j.
Correlation rho(const BandwidthModel& model, std::size_t j, std::span<const double> x_prefix,
                std::span<const double> xi_prefix);

/// Describes how a model maps to an unconstrained vector (counts per block).
struct ParameterShape {
    BandwidthKind kind = BandwidthKind::Constant;
    std::size_t dim = 0;
    std::size_t n_rho0 = 1;
    std::size_t hidden = 0;
    std::size_t latent = 0;

    static ParameterShape of(const BandwidthModel& model);
    std::size_t size() const;

    friend bool operator==(const ParameterShape&, const ParameterShape&) = default;
};

/// Layout: [logit(rho0 / kRhoMax) ...][log l ...][log gamma][w][b][v].
std::vector<double> to_unconstrained(const BandwidthModel& model);
BandwidthModel from_unconstrained(std::span<const double> params, const ParameterShape& shape);

/// Reorders a gradient with respect to to_unconstrained(model.permuted(order))
/// into the layout of to_unconstrained(model).
std::vector<double> unpermute_gradient(std::span<const double> grad, const ParameterShape& shape,
                                       std::span<const std::size_t> order);

/// Pairwise bandwidth evaluation for the recursions.
///
/// Every point is first mapped to a feature vector (scaled coordinates for the
/// kernels, latents for the net); rho for a pair then costs O(d) for kernels
/// and O(d d') for the net. backward() accumulates the gradient with respect
/// to to_unconstrained(model) given dL/drho for one pair.
class BandwidthEvaluator {
public:
    explicit BandwidthEvaluator(const BandwidthModel& model);

    const BandwidthModel& model() const noexcept { return *model_; }
    std::size_t feature_size() const noexcept { return feature_size_; }

    void features(std::span<const double> x, std::span<double> out) const;

    /// rho^j for j = 0..d-1 into out.
    void rho(std::span<const double> fa, std::span<const double> fb, std::span<double> out) const;

    /// Gradient accumulation. rho_values must be the output of rho() for the
    /// same pair. Feature adjoints are written for the net only (fa_bar and
    /// fb_bar may be empty otherwise); they are turned into weight gradients by
    /// finish_feature_backward().
    void backward(std::span<const double> fa, std::span<const double> fb, std::span<const double> rho_values,
                  std::span<const double> rho_bar, std::span<double> grad, std::span<double> fa_bar,
                  std::span<double> fb_bar) const;

    /// Pushes accumulated per-point feature adjoints through the net.
    void finish_feature_backward(std::span<const double> x, std::span<const double> feature_bar,
                                 std::span<double> grad) const;

private:
    double row_distance(std::span<const double> fa, std::span<const double> fb, std::size_t row) const;

    const BandwidthModel* model_;
    std::size_t dim_;
    std::size_t row_width_;
    std::size_t feature_size_;
    std::size_t ls_offset_;
    std::size_t gamma_offset_;
    std::size_t net_offset_;
};

}  // namespace arbp
