#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "arbp/data.hpp"
#include "arbp/engine.hpp"

namespace arbp {

/// Weighted particles in original feature order.
struct ParticleSet {
    Matrix particles;              ///< B x d
    std::vector<double> weights;   ///< nonnegative, max weight 1
    double ess = 0.0;
    std::size_t resample_events = 0;
};

/// (sum w)^2 / sum w^2. Throws ContractViolation for negative or non-finite
/// weights and NumericFault when all weights are zero.
double effective_sample_size(std::span<const double> weights);

/// Indices drawn with replacement proportional to weights. Systematic
/// resampling uses one uniform offset; multinomial draws `count` uniforms.
std::vector<std::size_t> resample_indices(std::span<const double> weights, std::size_t count, std::uint64_t seed,
                                          bool systematic = false);

/// x with P_n(x) = u for a d = 1 model, P_n averaged over permutations.
/// Bisection on [-10, 10], doubling the bracket up to 8 times if u lies
/// outside it.
double inverse_sample_1d(const FittedDensityModel& model, double u);

/// Coordinate-wise inversion of conditional CDFs in the feature order of
/// permutation m: the k-th permuted coordinate solves
/// P^(m)(x^k | earlier permuted coordinates) = u[k]. Returns x in original
/// feature order.
std::vector<double> inverse_sample(const FittedDensityModel& model, std::span<const double> u, std::size_t m = 0);

struct SamplingConfig {
    std::size_t particles = 1000;
    std::uint64_t seed = 0;
    bool resample = true;
    bool systematic = false;
    /// Resample when ESS < ess_fraction * B.
    double ess_fraction = 0.5;
};

/// z ~ N(0, I) with weights p_n(z) / p_0(z); no resampling.
ParticleSet importance_weights(const FittedDensityModel& model, std::size_t particles, std::uint64_t seed);

/// importance_weights followed by one resampling pass; output equally weighted.
ParticleSet importance_sample(const FittedDensityModel& model, std::size_t particles, std::uint64_t seed,
                              bool systematic = false);

/// SMC through the predictive sequence p_0, p_1, ..., p_n, each p_i averaged
/// over the fitted permutations. Every particle carries one query state per
/// permutation; weights are multiplied by p_i(z) / p_{i-1}(z) and reset after
/// ESS-triggered resampling.
ParticleSet smc_sample(const FittedDensityModel& model, const SamplingConfig& config);

}  // namespace arbp
