#pragma once

#include "tegamp/amp_engine.hpp"
#include "tegamp/channel.hpp"
#include "tegamp/solver.hpp"
#include "tegamp/tensor.hpp"

#include <span>
#include <vector>

namespace tegamp {

/// Posterior means and variances of every TR core entry.
struct FactorMoments {
    TRFactors mean;
    TRFactors var;  // congruent with mean, entrywise >= 0
};

FactorMoments prior_moments(const Shape& shape, const RankVector& ranks, const PriorModel& prior,
                            std::uint64_t seed);

/// Tensor-ring factor model. Flat layout: the cores' storage concatenated.
class TrModel {
public:
    TrModel() = default;
    TrModel(const Shape& shape, const RankVector& ranks);

    const Shape& shape() const { return shape_; }
    const RankVector& ranks() const { return ranks_; }
    std::size_t order() const { return shape_.order(); }
    std::size_t param_count() const { return total_params_; }
    std::size_t left(std::size_t i) const { return ranks_[i]; }
    std::size_t right(std::size_t i) const { return ranks_[i + 1]; }
    /// Offset of Z_i(:, x, :) in the flat layout.
    std::size_t slice_offset(std::size_t i, std::size_t x) const {
        return offsets_[i] + x * left(i) * right(i);
    }
    std::size_t param_index(std::size_t i, std::size_t a, std::size_t x, std::size_t b) const {
        return slice_offset(i, x) + a * right(i) + b;
    }

    std::vector<double> pack(const TRFactors& f) const;
    TRFactors unpack(std::span<const double> flat) const;

    void plugin(std::span<const double> mean, std::vector<double>& out) const;
    void forward(std::span<const double> mean, std::span<const double> var,
                 std::span<const double> s_prev, ForwardFields& out) const;
    /// Variance of u_x under independent Gaussian factors.
    void belief_variance(std::span<const double> mean, std::span<const double> var,
                         std::vector<double>& out) const;
    void backward(const BackwardInput& in, BackwardFields& out) const;

private:
    Shape shape_;
    RankVector ranks_;
    std::vector<std::size_t> offsets_;
    std::size_t total_params_ = 0;
};

using TegAmp = AmpEngine<TrModel>;

// Single-entry forms of the engine's quantities.

/// sum over rank tuples of prod_i Z_i
double plugin_estimate(const FactorMoments& z, const MultiIndex& x);
/// Onsager variance term given the previous residual s_prev at x.
double onsager_variance(const FactorMoments& z, double s_prev, const MultiIndex& x);
/// (p_hat, nu_p) before clamping and damping.
Moments corrected_p(const FactorMoments& z, double s_prev, const MultiIndex& x);
/// Leave-core-i-out mixed variance/mean sum with (l_i, l_{i+1}) = (a, b).
double zeta(const FactorMoments& z, std::size_t i, std::size_t a, std::size_t b, const MultiIndex& x);

struct RStep {
    double r_hat = 0.0;
    double nu_r = 0.0;
    bool ok = false;  // false: no observation reaches this variable
};

/// r-step for Z_i(a, x_i, b). `z.mean` plays the role of the damped means;
/// s_hat and nu_s are flat fields over the tensor shape.
RStep r_step(const FactorMoments& z, std::span<const double> s_hat, std::span<const double> nu_s,
             std::size_t i, std::size_t a, std::size_t b, std::size_t x_i);

struct TegResult {
    RunResult run;
    FactorMoments factors;
};

TegResult teg_solve(const DenseTensor& v, const ObservationMask& mask, const RankVector& ranks,
                    const SolverConfig& cfg);

}  // namespace tegamp
