#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "arbp/bandwidth.hpp"
#include "arbp/data.hpp"

namespace arbp {

/// Sample and feature orders for one permutation. Indices are 0-based;
/// position t of the permuted data holds original index order[t].
struct PermutationPair {
    std::vector<std::size_t> sample_order;
    std::vector<std::size_t> feature_order;

    /// Reproducible draw keyed by (seed, m). A disabled shuffle gives the
    /// identity order. `feature_key` overrides the key of the feature stream.
    static PermutationPair make(std::size_t n, std::size_t d, std::uint64_t seed, std::size_t m,
                                bool shuffle_samples = true, bool shuffle_features = true,
                                std::optional<std::size_t> feature_key = std::nullopt);

    static PermutationPair identity(std::size_t n, std::size_t d);

    /// True when both members are permutations of 0..n-1 and 0..d-1.
    bool valid() const;

    friend bool operator==(const PermutationPair&, const PermutationPair&) = default;
};

/// Joint: each permutation draws its own sample and feature order.
/// Nested: feature orders come from `feature_groups` streams and are shared by
/// all permutations in a group, while sample orders stay per permutation.
enum class PermutationScheme { Joint, Nested };

struct FitConfig {
    std::size_t permutations = 10;
    std::uint64_t seed = 0;
    bool shuffle_samples = true;
    bool shuffle_features = true;
    PermutationScheme scheme = PermutationScheme::Joint;
    std::size_t feature_groups = 1;  ///< used by the nested scheme only
    bool compute_density = false;
};

/// Conditional CDFs of a query point in permuted feature order, and its log
/// predictive density.
struct QueryState {
    std::vector<double> u;
    double log_p = 0.0;

    /// State under the initial standard normal predictive; x in the order the
    /// recursion will use.
    static QueryState initial(std::span<const double> x);
};

/// In-place recursion step for one query, in permuted coordinates.
///
/// rho holds rho^j for the pair (query, x_i); alpha_i is the update weight of
/// step `step`. Throws NumericFault(step) if anything becomes non-finite.
void update_state(std::span<double> u, double& log_p, std::span<const double> v_row, std::span<const double> rho,
                  double alpha_i, std::size_t step);

/// One step for a query point. x_query and x_i are in the order the
/// bandwidth model expects; v_row holds v_{i-1} of x_i in that same order.
QueryState update_step(const QueryState& state, std::span<const double> x_query, std::span<const double> x_i,
                       std::size_t i, const BandwidthModel& bandwidth, std::span<const double> v_row);

/// Result of fit(): stored prequential CDFs per permutation.
class FittedDensityModel {
public:
    /// Assembles and validates a model; used by fit() and by model loading.
    /// v holds one n x d array per permutation, rows in permuted sample order,
    /// columns in permuted feature order.
    FittedDensityModel(BandwidthModel bandwidth, Matrix train, std::vector<PermutationPair> permutations,
                       std::vector<std::vector<double>> v, std::uint64_t seed, Standardization standardization = {});

    const BandwidthModel& bandwidth() const noexcept { return bandwidth_; }
    const Matrix& train() const noexcept { return train_; }
    std::size_t n() const noexcept { return train_.rows; }
    std::size_t dim() const noexcept { return bandwidth_.dim(); }
    std::size_t permutation_count() const noexcept { return permutations_.size(); }
    const PermutationPair& permutation(std::size_t m) const { return permutations_.at(m); }
    const std::vector<PermutationPair>& permutations() const noexcept { return permutations_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const Standardization& standardization() const noexcept { return standardization_; }

    /// v_{i-1}^j for permuted sample i (0-based row) and permuted feature j.
    double v(std::size_t m, std::size_t i, std::size_t j) const { return v_.at(m)[i * dim() + j]; }
    std::span<const double> v_row(std::size_t m, std::size_t i) const { return {v_.at(m).data() + i * dim(), dim()}; }
    const std::vector<std::vector<double>>& v_tensor() const noexcept { return v_; }

private:
    BandwidthModel bandwidth_;
    Matrix train_;
    std::vector<PermutationPair> permutations_;
    std::vector<std::vector<double>> v_;
    std::uint64_t seed_;
    Standardization standardization_;
};

/// Permutations used by fit() for the given config.
std::vector<PermutationPair> make_permutations(std::size_t n, std::size_t d, const FitConfig& config);

/// Prequential fit over every permutation. With config.compute_density, the
/// prequential log densities log p_{i-1}(x_i) are written to *prequential
/// as [m][original sample index].
FittedDensityModel fit(const Matrix& train, const BandwidthModel& bandwidth, const FitConfig& config,
                       std::vector<std::vector<double>>* prequential = nullptr);
FittedDensityModel fit(const StandardizedDataset& train, const BandwidthModel& bandwidth, const FitConfig& config,
                       std::vector<std::vector<double>>* prequential = nullptr);

/// Evaluation context for one permutation of a fitted model: permuted
/// bandwidth, permuted training rows and their bandwidth features.
class PermutationView {
public:
    PermutationView(const FittedDensityModel& model, std::size_t m);

    std::size_t steps() const noexcept { return n_; }
    std::size_t dim() const noexcept { return d_; }
    const std::vector<std::size_t>& feature_order() const noexcept { return *feature_order_; }

    /// x in original feature order -> x in permuted order.
    std::vector<double> permute(std::span<const double> x) const;

    /// Bandwidth features of a permuted query point.
    std::vector<double> query_features(std::span<const double> x_permuted) const;

    /// Applies update i (1-based) to a query state.
    void advance(QueryState& state, std::span<const double> features, std::size_t i) const;

    /// Runs updates 1..steps for x given in original feature order.
    QueryState run(std::span<const double> x, std::size_t steps) const;

private:
    const FittedDensityModel* model_;
    std::size_t m_;
    std::size_t n_;
    std::size_t d_;
    const std::vector<std::size_t>* feature_order_;
    std::unique_ptr<BandwidthModel> bandwidth_;
    std::unique_ptr<BandwidthEvaluator> evaluator_;
    std::vector<double> train_features_;  ///< n x feature_size
};

/// log p_steps(z) per test row (original feature order), averaged over
/// permutations on the density scale. `steps` defaults to n.
std::vector<double> eval_log_density(const FittedDensityModel& model, const Matrix& test,
                                     std::optional<std::size_t> steps = std::nullopt);

/// Same for one permutation only.
std::vector<double> eval_log_density_permutation(const FittedDensityModel& model, std::size_t m, const Matrix& test,
                                                 std::optional<std::size_t> steps = std::nullopt);

/// -sum_i log p_{i-1}(x_i) over the rows of `data` under one permutation.
double prequential_nll(const Matrix& data, const BandwidthModel& bandwidth, const PermutationPair& permutation);

/// log-sum-exp of the values, accumulated in index order.
double log_sum_exp(std::span<const double> values);

}  // namespace arbp
