#include "arbp/data.hpp"

#include "arbp/errors.hpp"

namespace arbp {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix m;
    m.rows = rows.size();
    m.cols = rows.empty() ? 0 : rows.front().size();
    m.data.reserve(m.rows * m.cols);
    for (const auto& r : rows) {
        if (r.size() != m.cols) throw ContractViolation("Matrix::from_rows: ragged rows");
        m.data.insert(m.data.end(), r.begin(), r.end());
    }
    return m;
}

}  // namespace arbp
