#include "cnnrom/fem/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cnnrom::fem {

CsrMatrix::CsrMatrix(std::int64_t rows, std::int64_t cols, std::vector<std::int64_t> row_offsets,
                     std::vector<std::int64_t> col_indices, std::vector<double> values)
    : rows_(rows), cols_(cols), row_offsets_(std::move(row_offsets)), col_indices_(std::move(col_indices)),
      values_(std::move(values))
{
    if (rows_ < 0 || cols_ < 0 || static_cast<std::int64_t>(row_offsets_.size()) != rows_ + 1) {
        throw std::invalid_argument("CsrMatrix: row offsets length must be rows+1");
    }
    if (row_offsets_.front() != 0 || row_offsets_.back() != static_cast<std::int64_t>(values_.size()) ||
        col_indices_.size() != values_.size()) {
        throw std::invalid_argument("CsrMatrix: inconsistent offsets/indices/values");
    }
    for (std::int64_t r = 0; r < rows_; ++r) {
        if (row_offsets_[r + 1] < row_offsets_[r]) {
            throw std::invalid_argument("CsrMatrix: row offsets must be non-decreasing");
        }
        for (std::int64_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
            if (col_indices_[k] < 0 || col_indices_[k] >= cols_) {
                throw std::invalid_argument("CsrMatrix: column index out of range");
            }
            if (k > row_offsets_[r] && col_indices_[k] <= col_indices_[k - 1]) {
                throw std::invalid_argument("CsrMatrix: column indices must be strictly increasing per row");
            }
        }
    }
}

CsrMatrix CsrMatrix::from_triplets(std::int64_t rows, std::int64_t cols, std::vector<Triplet> triplets)
{
    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<std::int64_t> offsets(static_cast<std::size_t>(rows + 1), 0);
    std::vector<std::int64_t> cols_out;
    std::vector<double> vals_out;
    cols_out.reserve(triplets.size());
    vals_out.reserve(triplets.size());
    std::size_t i = 0;
    for (std::int64_t r = 0; r < rows; ++r) {
        while (i < triplets.size() && triplets[i].row == r) {
            const std::int64_t c = triplets[i].col;
            double sum = 0.0;
            while (i < triplets.size() && triplets[i].row == r && triplets[i].col == c) {
                sum += triplets[i].value;
                ++i;
            }
            if (sum != 0.0) {
                cols_out.push_back(c);
                vals_out.push_back(sum);
            }
        }
        offsets[static_cast<std::size_t>(r + 1)] = static_cast<std::int64_t>(vals_out.size());
    }
    if (i != triplets.size()) {
        throw std::invalid_argument("CsrMatrix::from_triplets: row index out of range");
    }
    return CsrMatrix(rows, cols, std::move(offsets), std::move(cols_out), std::move(vals_out));
}

CsrMatrix CsrMatrix::identity(std::int64_t n)
{
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        t.push_back({i, i, 1.0});
    }
    return from_triplets(n, n, std::move(t));
}

CsrMatrix CsrMatrix::from_dense(const Eigen::MatrixXd& dense)
{
    std::vector<Triplet> t;
    for (Eigen::Index r = 0; r < dense.rows(); ++r) {
        for (Eigen::Index c = 0; c < dense.cols(); ++c) {
            if (dense(r, c) != 0.0) {
                t.push_back({r, c, dense(r, c)});
            }
        }
    }
    return from_triplets(dense.rows(), dense.cols(), std::move(t));
}

Eigen::VectorXd CsrMatrix::multiply(const Eigen::VectorXd& x) const
{
    if (x.size() != cols_) {
        throw std::invalid_argument("CsrMatrix::multiply: dimension mismatch");
    }
    Eigen::VectorXd y(rows_);
    for (std::int64_t r = 0; r < rows_; ++r) {
        double sum = 0.0;
        for (std::int64_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
            sum += values_[k] * x[col_indices_[k]];
        }
        y[r] = sum;
    }
    return y;
}

Eigen::MatrixXd CsrMatrix::multiply(const Eigen::MatrixXd& x) const
{
    if (x.rows() != cols_) {
        throw std::invalid_argument("CsrMatrix::multiply: dimension mismatch");
    }
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(rows_, x.cols());
    for (std::int64_t r = 0; r < rows_; ++r) {
        for (std::int64_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
            y.row(r) += values_[k] * x.row(col_indices_[k]);
        }
    }
    return y;
}

Eigen::MatrixXd CsrMatrix::transpose_multiply(const Eigen::MatrixXd& x) const
{
    if (x.rows() != rows_) {
        throw std::invalid_argument("CsrMatrix::transpose_multiply: dimension mismatch");
    }
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(cols_, x.cols());
    for (std::int64_t r = 0; r < rows_; ++r) {
        for (std::int64_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
            y.row(col_indices_[k]) += values_[k] * x.row(r);
        }
    }
    return y;
}

Eigen::VectorXd CsrMatrix::transpose_multiply(const Eigen::VectorXd& x) const
{
    return transpose_multiply(Eigen::MatrixXd(x)).col(0);
}

Eigen::VectorXd CsrMatrix::diagonal() const
{
    Eigen::VectorXd d = Eigen::VectorXd::Zero(std::min(rows_, cols_));
    for (std::int64_t r = 0; r < d.size(); ++r) {
        d[r] = coeff(r, r);
    }
    return d;
}

double CsrMatrix::coeff(std::int64_t row, std::int64_t col) const
{
    const auto begin = col_indices_.begin() + row_offsets_[row];
    const auto end = col_indices_.begin() + row_offsets_[row + 1];
    const auto it = std::lower_bound(begin, end, col);
    if (it == end || *it != col) {
        return 0.0;
    }
    return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

CsrMatrix CsrMatrix::scaled(double factor) const
{
    CsrMatrix out = *this;
    if (factor == 0.0) {
        return CsrMatrix(rows_, cols_, std::vector<std::int64_t>(static_cast<std::size_t>(rows_ + 1), 0), {}, {});
    }
    for (double& v : out.values_) {
        v *= factor;
    }
    return out;
}

bool CsrMatrix::is_symmetric(double tol) const
{
    if (rows_ != cols_) {
        return false;
    }
    double scale = 0.0;
    for (double v : values_) {
        scale = std::max(scale, std::abs(v));
    }
    for (std::int64_t r = 0; r < rows_; ++r) {
        for (std::int64_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
            if (std::abs(values_[k] - coeff(col_indices_[k], r)) > tol * scale) {
                return false;
            }
        }
    }
    return true;
}

Eigen::SparseMatrix<double> CsrMatrix::to_eigen() const
{
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(values_.size());
    for (std::int64_t r = 0; r < rows_; ++r) {
        for (std::int64_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
            t.emplace_back(static_cast<int>(r), static_cast<int>(col_indices_[k]), values_[k]);
        }
    }
    Eigen::SparseMatrix<double> m(rows_, cols_);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

Eigen::MatrixXd CsrMatrix::to_dense() const
{
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows_, cols_);
    for (std::int64_t r = 0; r < rows_; ++r) {
        for (std::int64_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
            m(r, col_indices_[k]) = values_[k];
        }
    }
    return m;
}

}  // namespace cnnrom::fem
