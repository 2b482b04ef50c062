#pragma once

#include "tegamp/detail/small_matrix.hpp"

#include <cstddef>
#include <vector>

namespace tegamp::detail {

/// Matrix chain prod_j (A_j + t B_j) kept as polynomial coefficients in t,
/// truncated at max_degree. Coefficient k of the trace sums, over all rank
/// tuples, the products in which exactly k factors come from B.
class PolyChain {
public:
    void reset(const double* a, const double* b, std::size_t rows, std::size_t cols,
               std::size_t max_degree) {
        rows_ = rows;
        cols_ = cols;
        deg_ = 0;
        max_deg_ = max_degree;
        coef_.assign((max_degree + 1) * rows * cols, 0.0);
        const std::size_t n = rows * cols;
        for (std::size_t e = 0; e < n; ++e) coef_[e] = a[e];
        if (max_degree >= 1) {
            for (std::size_t e = 0; e < n; ++e) coef_[n + e] = b[e];
            deg_ = 1;
        }
    }

    void multiply(const double* a, const double* b, std::size_t next_cols) {
        const std::size_t new_deg = deg_ + 1 > max_deg_ ? max_deg_ : deg_ + 1;
        const std::size_t in = rows_ * cols_;
        const std::size_t out = rows_ * next_cols;
        next_.assign((max_deg_ + 1) * out, 0.0);
        tmp_.resize(out);
        for (std::size_t k = 0; k <= deg_; ++k) {
            matmul(&coef_[k * in], a, tmp_.data(), rows_, cols_, next_cols);
            add_into(&next_[k * out], out);
            if (k + 1 <= new_deg) {
                matmul(&coef_[k * in], b, tmp_.data(), rows_, cols_, next_cols);
                add_into(&next_[(k + 1) * out], out);
            }
        }
        coef_.swap(next_);
        cols_ = next_cols;
        deg_ = new_deg;
    }

    double trace(std::size_t k) const {
        if (k > deg_) return 0.0;
        const double* c = &coef_[k * rows_ * cols_];
        double t = 0.0;
        for (std::size_t i = 0; i < rows_ && i < cols_; ++i) t += c[i * cols_ + i];
        return t;
    }

    double coeff(std::size_t k, std::size_t i, std::size_t j) const {
        if (k > deg_) return 0.0;
        return coef_[k * rows_ * cols_ + i * cols_ + j];
    }

    std::size_t degree() const { return deg_; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

private:
    void add_into(double* dst, std::size_t n) const {
        for (std::size_t e = 0; e < n; ++e) dst[e] += tmp_[e];
    }

    std::vector<double> coef_;
    std::vector<double> next_;
    std::vector<double> tmp_;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t deg_ = 0;
    std::size_t max_deg_ = 0;
};

/// Scalar version: coefficients of prod_j (a_j + t b_j).
inline void poly_product(const double* a, const double* b, std::size_t n, std::vector<double>& out) {
    out.assign(n + 1, 0.0);
    out[0] = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = j + 1; k > 0; --k) out[k] = out[k] * a[j] + out[k - 1] * b[j];
        out[0] *= a[j];
    }
}

}  // namespace tegamp::detail
