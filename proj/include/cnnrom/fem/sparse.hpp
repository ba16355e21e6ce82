#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace cnnrom::fem {

struct Triplet {
    std::int64_t row;
    std::int64_t col;
    double value;
};

/// Compressed sparse row matrix. Column indices are sorted within each row and
/// explicit zeros are never stored.
class CsrMatrix {
public:
    CsrMatrix() = default;
    CsrMatrix(std::int64_t rows, std::int64_t cols, std::vector<std::int64_t> row_offsets,
              std::vector<std::int64_t> col_indices, std::vector<double> values);

    /// Duplicates are summed; entries that sum to exactly zero are dropped.
    static CsrMatrix from_triplets(std::int64_t rows, std::int64_t cols, std::vector<Triplet> triplets);
    static CsrMatrix identity(std::int64_t n);
    static CsrMatrix from_dense(const Eigen::MatrixXd& dense);

    std::int64_t rows() const { return rows_; }
    std::int64_t cols() const { return cols_; }
    std::int64_t nnz() const { return static_cast<std::int64_t>(values_.size()); }

    const std::vector<std::int64_t>& row_offsets() const { return row_offsets_; }
    const std::vector<std::int64_t>& col_indices() const { return col_indices_; }
    const std::vector<double>& values() const { return values_; }

    Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;
    /// Y = this * X for a dense block of columns.
    Eigen::MatrixXd multiply(const Eigen::MatrixXd& x) const;
    /// this^T * x.
    Eigen::VectorXd transpose_multiply(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd transpose_multiply(const Eigen::MatrixXd& x) const;
    Eigen::VectorXd diagonal() const;
    double coeff(std::int64_t row, std::int64_t col) const;

    CsrMatrix scaled(double factor) const;
    bool is_symmetric(double tol) const;

    Eigen::SparseMatrix<double> to_eigen() const;
    Eigen::MatrixXd to_dense() const;

    friend bool operator==(const CsrMatrix&, const CsrMatrix&) = default;

private:
    std::int64_t rows_ = 0;
    std::int64_t cols_ = 0;
    std::vector<std::int64_t> row_offsets_{0};
    std::vector<std::int64_t> col_indices_;
    std::vector<double> values_;
};

}  // namespace cnnrom::fem
