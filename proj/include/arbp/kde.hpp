#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "arbp/data.hpp"

namespace arbp {

struct KdeOptions {
    std::size_t folds = 5;
    std::size_t grid_size = 80;
    double h_min = 0.1;
    double h_max = 100.0;
    std::uint64_t seed = 0;
};

struct KdeResult {
    double bandwidth = 0.0;
    double test_nll = 0.0;  ///< mean over test rows
    std::vector<double> grid;
    std::vector<double> cv_nll;  ///< mean held-out NLL per grid value
    bool leave_one_out = false;
    std::string log;
};

/// grid_size values spaced evenly in log between h_min and h_max inclusive.
std::vector<double> kde_bandwidth_grid(const KdeOptions& options = {});

/// Log density of each test row under a product Gaussian kernel with one
/// bandwidth h shared by all dimensions.
std::vector<double> kde_log_density(const Matrix& train, const Matrix& test, double h);

/// Bandwidth by k-fold cross validation over the grid (leave-one-out when
/// n < folds), then the mean test NLL at that bandwidth.
KdeResult kde_baseline(const Matrix& train, const Matrix& test, const KdeOptions& options = {});

}  // namespace arbp
