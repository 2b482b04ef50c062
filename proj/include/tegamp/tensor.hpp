#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace tegamp {

/// Storage convention: every index is 0-based and every flat array is
/// row-major (last index fastest). Mode i of a d-order tensor is written
/// 1-based (x_1..x_d) in the literature; here it is simply dims()[i - 1].

using MultiIndex = std::vector<std::size_t>;

class Shape {
public:
    Shape() = default;
    explicit Shape(std::vector<std::size_t> dims);

    std::size_t order() const { return dims_.size(); }
    std::size_t dim(std::size_t mode) const { return dims_[mode]; }
    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t total() const { return total_; }
    std::size_t stride(std::size_t mode) const { return strides_[mode]; }

    bool contains(const MultiIndex& index) const;
    std::size_t flatten(const MultiIndex& index) const;
    MultiIndex unflatten(std::size_t flat) const;

    bool operator==(const Shape& other) const { return dims_ == other.dims_; }
    std::string str() const;

private:
    std::vector<std::size_t> dims_;
    std::vector<std::size_t> strides_;
    std::size_t total_ = 0;
};

/// Advances `index` to the next multi-index in row-major order.
/// Returns false after the last index (and leaves `index` at all zeros).
bool next_index(const Shape& shape, MultiIndex& index);

class DenseTensor {
public:
    DenseTensor() = default;
    explicit DenseTensor(Shape shape, double fill = 0.0);
    DenseTensor(Shape shape, std::vector<double> data);

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }

    double& operator[](std::size_t flat) { return data_[flat]; }
    double operator[](std::size_t flat) const { return data_[flat]; }
    double& at(const MultiIndex& index);
    double at(const MultiIndex& index) const;

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double frobenius_norm_sq() const;

private:
    Shape shape_;
    std::vector<double> data_;
};

/// TR-ranks r_1..r_d with the ring closure r_{d+1} = r_1.
class RankVector {
public:
    RankVector() = default;
    explicit RankVector(std::vector<std::size_t> ranks);

    std::size_t size() const { return ranks_.size(); }
    std::size_t operator[](std::size_t i) const { return ranks_[i % ranks_.size()]; }
    const std::vector<std::size_t>& values() const { return ranks_; }

private:
    std::vector<std::size_t> ranks_;
};

/// One TR core of logical shape left x n x right, i.e. Z_i(l_i, x_i, l_{i+1}).
/// Stored slice-major so that Z_i(:, x, :) is a contiguous row-major
/// left x right block.
class TRCore {
public:
    TRCore() = default;
    TRCore(std::size_t left, std::size_t n, std::size_t right, double fill = 0.0);

    std::size_t left() const { return left_; }
    std::size_t n() const { return n_; }
    std::size_t right() const { return right_; }
    std::size_t slice_size() const { return left_ * right_; }

    double& operator()(std::size_t a, std::size_t x, std::size_t b) {
        return data_[(x * left_ + a) * right_ + b];
    }
    double operator()(std::size_t a, std::size_t x, std::size_t b) const {
        return data_[(x * left_ + a) * right_ + b];
    }

    std::span<double> slice(std::size_t x) { return {data_.data() + x * slice_size(), slice_size()}; }
    std::span<const double> slice(std::size_t x) const {
        return {data_.data() + x * slice_size(), slice_size()};
    }

    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    bool same_dims(const TRCore& other) const {
        return left_ == other.left_ && n_ == other.n_ && right_ == other.right_;
    }

private:
    std::size_t left_ = 0;
    std::size_t n_ = 0;
    std::size_t right_ = 0;
    std::vector<double> data_;
};

class TRFactors {
public:
    TRFactors() = default;
    /// Validates core count and the ring rank compatibility.
    explicit TRFactors(std::vector<TRCore> cores);
    /// Zero-filled cores for the given shape and ranks.
    TRFactors(const Shape& shape, const RankVector& ranks, double fill = 0.0);

    std::size_t order() const { return cores_.size(); }
    TRCore& core(std::size_t i) { return cores_[i]; }
    const TRCore& core(std::size_t i) const { return cores_[i]; }
    const std::vector<TRCore>& cores() const { return cores_; }
    std::vector<TRCore>& cores() { return cores_; }

    Shape shape() const;
    RankVector ranks() const;
    std::size_t parameter_count() const;

    bool congruent(const TRFactors& other) const;

private:
    std::vector<TRCore> cores_;
};

/// CP factors: matrix i is N_i x r, column l holds a_i^l.
class CPFactors {
public:
    CPFactors() = default;
    explicit CPFactors(std::vector<Eigen::MatrixXd> factors);
    CPFactors(const Shape& shape, std::size_t rank, double fill = 0.0);

    std::size_t order() const { return factors_.size(); }
    std::size_t rank() const { return factors_.empty() ? 0 : static_cast<std::size_t>(factors_[0].cols()); }
    Eigen::MatrixXd& factor(std::size_t i) { return factors_[i]; }
    const Eigen::MatrixXd& factor(std::size_t i) const { return factors_[i]; }
    const std::vector<Eigen::MatrixXd>& factors() const { return factors_; }

    Shape shape() const;
    bool congruent(const CPFactors& other) const;

private:
    std::vector<Eigen::MatrixXd> factors_;
};

/// Tr{ prod_i Z_i(:, x_i, :) } by left-to-right slice products.
double tr_contract(const TRFactors& factors, const MultiIndex& index);
DenseTensor tr_full(const TRFactors& factors);

/// sum_l prod_i a_i^l(x_i)
double cp_evaluate(const CPFactors& factors, const MultiIndex& index);
DenseTensor cp_full(const CPFactors& factors);

/// Diagonal-slice embedding of a CP model as a TR model with all ranks r.
TRFactors cp_to_tr(const CPFactors& factors);

/// TT (first: N_1 x r_2, mids: r_i x N_i x r_{i+1}, last: r_d x N_d) to TR with r_1 = 1.
TRFactors tt_to_tr(const Eigen::MatrixXd& first, const std::vector<TRCore>& mids,
                   const Eigen::MatrixXd& last);

/// Z_i = Y_i x_2 M_i for a Tucker model whose core is given in TR form.
TRFactors tucker_to_tr(const TRFactors& core_tr, const std::vector<Eigen::MatrixXd>& factor_mats);

TRFactors random_tr(const Shape& shape, const RankVector& ranks, std::uint64_t seed);
CPFactors random_cp(const Shape& shape, std::size_t rank, std::uint64_t seed);

/// Text format: "dims: N1 ... Nd" then one %.17g value per line.
void write_tensor(std::ostream& out, const DenseTensor& tensor);
DenseTensor read_tensor(std::istream& in);
void save_tensor(const std::string& path, const DenseTensor& tensor);
DenseTensor load_tensor(const std::string& path);

/// Text format: "tr-factors: d", then per core "core: left n right" and values.
void write_tr_factors(std::ostream& out, const TRFactors& factors);
TRFactors read_tr_factors(std::istream& in);

std::vector<std::size_t> parse_size_list(const std::string& text);

}  // namespace tegamp
