#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "arbp/bandwidth.hpp"
#include "arbp/data.hpp"
#include "arbp/engine.hpp"
#include "arbp/train.hpp"

namespace arbp {

enum class SupervisedTask { Regression, Classification };

std::string to_string(SupervisedTask task);

/// Affine map of the response: y_std = (y - mean) / sd.
struct ResponseScale {
    double mean = 0.0;
    double sd = 1.0;

    friend bool operator==(const ResponseScale&, const ResponseScale&) = default;
};

/// Mean and sample sd of a training response. Throws ContractViolation for
/// fewer than two values or a constant response.
ResponseScale fit_response_scale(std::span<const double> y);

/// Bandwidth for d covariates plus the response. Dimension d of the model
/// (0-based, always last) is the response: its rho uses the kernel over all
/// covariates.
BandwidthModel supervised_bandwidth(BandwidthKind kind, std::size_t covariates, bool per_dim_rho0,
                                    std::uint64_t seed = 0);

/// Same model with the response rho0 set to `rho0`; shared rho0 becomes per
/// dimension.
BandwidthModel with_response_rho0(const BandwidthModel& bandwidth, double rho0);

/// beta_i(x, x_i): the step weight alpha_i tilted by the covariate copula
/// product, with covariate marginals fixed at Phi. Uses rho^0..rho^{d-1} of
/// `bandwidth` (dimension d or d + 1) in the given column order.
double beta_weight(std::span<const double> x, std::span<const double> x_i, const BandwidthModel& bandwidth,
                   std::size_t i);

/// Beta-Bernoulli factor b{q, r; rho}. q is the current probability of the
/// label being scored, r the prequential probability of the observed label.
double bernoulli_b(UnitInterval q, UnitInterval r, Correlation rho, bool same_label);

/// Fitted regression or classification model.
///
/// Covariates are standardized, responses are standardized (regression) or
/// 0/1 labels. `state[m][t]` is the prequential response CDF v_y
/// (regression) or the prequential probability r of the observed label
/// (classification) of permuted sample t.
class SupervisedModel {
public:
    SupervisedModel(SupervisedTask task, BandwidthModel bandwidth, Matrix x, std::vector<double> y,
                    std::vector<PermutationPair> permutations, std::vector<std::vector<double>> state,
                    std::uint64_t seed, Standardization covariate_stats = {}, ResponseScale response = {});

    SupervisedTask task() const noexcept { return task_; }
    const BandwidthModel& bandwidth() const noexcept { return bandwidth_; }
    const Matrix& x() const noexcept { return x_; }
    const std::vector<double>& y() const noexcept { return y_; }
    std::size_t n() const noexcept { return x_.rows; }
    std::size_t covariates() const noexcept { return x_.cols; }
    std::size_t permutation_count() const noexcept { return permutations_.size(); }
    const PermutationPair& permutation(std::size_t m) const { return permutations_.at(m); }
    const std::vector<PermutationPair>& permutations() const noexcept { return permutations_; }
    const std::vector<std::vector<double>>& state() const noexcept { return state_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const Standardization& covariate_stats() const noexcept { return covariate_stats_; }
    const ResponseScale& response() const noexcept { return response_; }

private:
    SupervisedTask task_;
    BandwidthModel bandwidth_;
    Matrix x_;
    std::vector<double> y_;
    std::vector<PermutationPair> permutations_;
    std::vector<std::vector<double>> state_;
    std::uint64_t seed_;
    Standardization covariate_stats_;
    ResponseScale response_;
};

/// Prequential fit of p(y | x). y is on the standardized scale; `response`
/// only records how it was obtained.
SupervisedModel fit_regression(const Matrix& x, std::span<const double> y, const BandwidthModel& bandwidth,
                               const FitConfig& config, Standardization covariate_stats = {},
                               ResponseScale response = {});

/// Labels must be 0 or 1.
SupervisedModel fit_classification(const Matrix& x, std::span<const double> y, const BandwidthModel& bandwidth,
                                   const FitConfig& config, Standardization covariate_stats = {});

/// log p_n(y | x) with both on the standardized scale, averaged over
/// permutations on the density scale. `steps` defaults to n.
double predict_log_density_standardized(const SupervisedModel& model, std::span<const double> x, double y,
                                        std::optional<std::size_t> steps = std::nullopt);

/// log p_n(y | x) for y on the original scale: the standardized density
/// minus log sd.
double predict_log_density_regression(const SupervisedModel& model, std::span<const double> x, double y);

/// Response CDF P_n(y | x), y standardized, averaged over permutations.
double predict_cdf_standardized(const SupervisedModel& model, std::span<const double> x, double y);

/// p_n(y = 1 | x), averaged over permutations. `steps` defaults to n.
double predict_proba(const SupervisedModel& model, std::span<const double> x,
                     std::optional<std::size_t> steps = std::nullopt);

/// Batch forms: one value per row of x (standardized covariates).
std::vector<double> predict_log_density_standardized(const SupervisedModel& model, const Matrix& x,
                                                     std::span<const double> y);
std::vector<double> predict_proba(const SupervisedModel& model, const Matrix& x);

/// Both class probabilities (p(0 | x), p(1 | x)) tracked separately through
/// `steps` updates of one permutation, without using their sum.
std::pair<double, double> class_probabilities_unnormalized(const SupervisedModel& model, std::size_t m,
                                                           std::span<const double> x, std::size_t steps);

/// Negative prequential conditional log likelihood summed over permutations,
/// and its exact gradient with respect to params = to_unconstrained(bandwidth).
/// Feature orders in `permutations` cover the covariates only.
double supervised_objective_and_gradient(SupervisedTask task, std::span<const double> params, const Matrix& x,
                                         std::span<const double> y, const ParameterShape& shape,
                                         std::span<const PermutationPair> permutations,
                                         std::vector<double>& gradient);

double supervised_objective(SupervisedTask task, std::span<const double> params, const Matrix& x,
                            std::span<const double> y, const ParameterShape& shape,
                            std::span<const PermutationPair> permutations);

/// Adam on the supervised prequential objective; see minimize().
BandwidthModel optimize_supervised(SupervisedTask task, const Matrix& x, std::span<const double> y,
                                   const BandwidthModel& initial, const OptimizerConfig& config,
                                   OptimizeTrace* trace = nullptr);

}  // namespace arbp
