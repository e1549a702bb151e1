#include "arbp/kde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "arbp/engine.hpp"
#include "arbp/errors.hpp"

namespace arbp {

namespace {

Matrix take_rows(const Matrix& x, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), x.cols);
    for (std::size_t t = 0; t < rows.size(); ++t) std::copy_n(x.row(rows[t]).begin(), x.cols, out.row(t).begin());
    return out;
}

double mean_nll(const std::vector<double>& lp) {
    return -std::accumulate(lp.begin(), lp.end(), 0.0) / static_cast<double>(lp.size());
}

}  // namespace

std::vector<double> kde_bandwidth_grid(const KdeOptions& options) {
    if (options.grid_size < 2 || !(options.h_min > 0.0) || !(options.h_max > options.h_min))
        throw ContractViolation("kde: grid needs at least two values and 0 < h_min < h_max");
    std::vector<double> grid(options.grid_size);
    const double a = std::log(options.h_min), b = std::log(options.h_max);
    for (std::size_t k = 0; k < grid.size(); ++k)
        grid[k] = std::exp(a + (b - a) * static_cast<double>(k) / static_cast<double>(grid.size() - 1));
    grid.front() = options.h_min;
    grid.back() = options.h_max;
    return grid;
}

std::vector<double> kde_log_density(const Matrix& train, const Matrix& test, double h) {
    if (train.rows == 0) throw ContractViolation("kde: empty training data");
    if (train.cols != test.cols) throw ContractViolation("kde: train and test widths differ");
    if (!(h > 0.0)) throw ContractViolation("kde: bandwidth must be positive");
    const double d = static_cast<double>(train.cols);
    const double norm = -d * (std::log(h) + 0.5 * std::log(2.0 * std::numbers::pi)) - std::log(static_cast<double>(train.rows));
    std::vector<double> out(test.rows), terms(train.rows);
    for (std::size_t t = 0; t < test.rows; ++t) {
        const auto z = test.row(t);
        for (std::size_t i = 0; i < train.rows; ++i) {
            const auto x = train.row(i);
            double s = 0.0;
            for (std::size_t j = 0; j < train.cols; ++j) {
                const double u = (z[j] - x[j]) / h;
                s += u * u;
            }
            terms[i] = -0.5 * s;
        }
        out[t] = log_sum_exp(terms) + norm;
    }
    return out;
}

KdeResult kde_baseline(const Matrix& train, const Matrix& test, const KdeOptions& options) {
    const std::size_t n = train.rows;
    if (n < 2) throw ContractViolation("kde: at least two training rows are needed for bandwidth selection");
    if (options.folds < 2) throw ContractViolation("kde: at least two folds are needed");
    KdeResult r;
    r.grid = kde_bandwidth_grid(options);
    r.leave_one_out = n < options.folds;
    const std::size_t folds = r.leave_one_out ? n : options.folds;
    if (r.leave_one_out)
        r.log = "n = " + std::to_string(n) + " < " + std::to_string(options.folds) + " folds; using leave-one-out";

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(options.seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Matrix> fit_sets, held_sets;
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<std::size_t> fit_rows, held_rows;
        for (std::size_t t = 0; t < n; ++t) (t * folds / n == f ? held_rows : fit_rows).push_back(order[t]);
        fit_sets.push_back(take_rows(train, fit_rows));
        held_sets.push_back(take_rows(train, held_rows));
    }

    r.cv_nll.resize(r.grid.size());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < r.grid.size(); ++g) {
        double total = 0.0;
        for (std::size_t f = 0; f < folds; ++f) {
            const auto lp = kde_log_density(fit_sets[f], held_sets[f], r.grid[g]);
            total -= std::accumulate(lp.begin(), lp.end(), 0.0);
        }
        r.cv_nll[g] = total / static_cast<double>(n);
        if (r.cv_nll[g] < best) {
            best = r.cv_nll[g];
            r.bandwidth = r.grid[g];
        }
    }
    if (test.rows == 0) throw ContractViolation("kde: empty test data");
    r.test_nll = mean_nll(kde_log_density(train, test, r.bandwidth));
    return r;
}

}  // namespace arbp
