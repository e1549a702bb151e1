#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace arbp {

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

    /// Matrix from a list of equally long rows.
    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

struct DroppedColumn {
    std::string name;
    std::string reason;  ///< "discrete", "correlated with <name>" or "zero variance"

    friend bool operator==(const DroppedColumn&, const DroppedColumn&) = default;
};

/// Affine per-column transform fitted on a training split.
struct Standardization {
    std::vector<std::string> names;  ///< kept columns, in output order
    std::vector<std::size_t> source_columns;  ///< index of each kept column in the raw table
    std::vector<double> means;
    std::vector<double> sds;
    std::vector<DroppedColumn> dropped;

    std::size_t dim() const noexcept { return names.size(); }

    friend bool operator==(const Standardization&, const Standardization&) = default;
};

struct StandardizedDataset {
    Matrix values;
    Standardization stats;
};

}  // namespace arbp
