#pragma once

#include <cstddef>
#include <vector>

namespace tegamp::detail {

// Row-major dense kernels for the tiny rank-sized matrices of TR slices.

/// out(m x n) = a(m x k) * b(k x n). `out` must not alias the inputs.
inline void matmul(const double* a, const double* b, double* out, std::size_t m, std::size_t k,
                   std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* row = out + i * n;
        for (std::size_t j = 0; j < n; ++j) row[j] = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a[i * k + p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) row[j] += aip * brow[j];
        }
    }
}

/// Running product of a chain of slices: acc <- acc * next.
class ChainProduct {
public:
    void reset(const double* first, std::size_t rows, std::size_t cols) {
        rows_ = rows;
        cols_ = cols;
        acc_.assign(first, first + rows * cols);
    }

    void multiply(const double* next, std::size_t next_cols) {
        tmp_.resize(rows_ * next_cols);
        matmul(acc_.data(), next, tmp_.data(), rows_, cols_, next_cols);
        acc_.swap(tmp_);
        cols_ = next_cols;
    }

    double trace() const {
        double t = 0.0;
        for (std::size_t i = 0; i < rows_ && i < cols_; ++i) t += acc_[i * cols_ + i];
        return t;
    }

    double operator()(std::size_t i, std::size_t j) const { return acc_[i * cols_ + j]; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    const std::vector<double>& values() const { return acc_; }

private:
    std::vector<double> acc_;
    std::vector<double> tmp_;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
};

}  // namespace tegamp::detail
