#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "arbp/bandwidth.hpp"
#include "arbp/data.hpp"
#include "arbp/engine.hpp"

namespace arbp {

struct OptimizerConfig {
    std::size_t maxiter = 200;
    /// Subsample size; unset means min(n, 256).
    std::optional<std::size_t> n_rho;
    /// Unset means 0.05 for kernel variants and 0.01 for the net.
    std::optional<double> learning_rate;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    /// Permutations summed inside the objective at every step.
    std::size_t permutations_per_step = 1;
    bool shuffle_features = true;
    /// Return the iterate with the lowest observed objective instead of the last one.
    bool best_of_trace = false;
    /// Step retries with halved learning rate before a numeric fault aborts.
    std::size_t max_retries = 3;

    double resolved_learning_rate(BandwidthKind kind) const;
    std::size_t resolved_n_rho(std::size_t n) const;
};

class AdamState {
public:
    explicit AdamState(std::size_t size) : m_(size, 0.0), v_(size, 0.0) {}

    /// One bias-corrected Adam update of params in place.
    void step(std::span<double> params, std::span<const double> grad, double learning_rate,
              const OptimizerConfig& config);

    std::size_t iterations() const noexcept { return t_; }
    const std::vector<double>& first_moment() const noexcept { return m_; }
    const std::vector<double>& second_moment() const noexcept { return v_; }

private:
    std::vector<double> m_;
    std::vector<double> v_;
    std::size_t t_ = 0;
};

/// Sum over permutations of prequential_nll(data, from_unconstrained(params)).
double objective(std::span<const double> params, const Matrix& data, const ParameterShape& shape,
                 std::span<const PermutationPair> permutations);

/// Objective value and its exact gradient with respect to params, by a
/// reverse pass through the recursion.
double objective_and_gradient(std::span<const double> params, const Matrix& data, const ParameterShape& shape,
                              std::span<const PermutationPair> permutations, std::vector<double>& gradient);

/// Central finite differences of objective() with step h per coordinate.
std::vector<double> finite_difference_gradient(std::span<const double> params, const Matrix& data,
                                               const ParameterShape& shape,
                                               std::span<const PermutationPair> permutations, double h = 1e-4);

struct OptimizeTrace {
    std::vector<double> objective;  ///< value at the start of each step
    std::size_t retries = 0;
    std::vector<std::size_t> subsample;  ///< training rows used
};

/// Rows used by the optimizer: all of them when n <= n_rho, else a seeded
/// subsample in increasing order.
std::vector<std::size_t> subsample_rows(std::size_t n, const OptimizerConfig& config);

/// Objective over permutations of a fixed row set, with its gradient.
using PermutationObjective =
    std::function<double(std::span<const double> params, std::span<const PermutationPair> perms, std::vector<double>& grad)>;

/// The Adam loop shared by the density and supervised models. Each step draws
/// config.permutations_per_step permutations of `rows` samples and
/// `perm_dim` features; a step that raises NumericFault is retried with a
/// halved learning rate.
BandwidthModel minimize(const BandwidthModel& initial, std::size_t rows, std::size_t perm_dim,
                        const OptimizerConfig& config, const PermutationObjective& objective,
                        OptimizeTrace* trace = nullptr);

/// Adam on the prequential objective. Each step draws fresh permutations of
/// a subsample fixed before the loop.
BandwidthModel optimize(const Matrix& data, const BandwidthModel& initial, const OptimizerConfig& config,
                        OptimizeTrace* trace = nullptr);

}  // namespace arbp
