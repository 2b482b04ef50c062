#pragma once

#include "tegamp/amp_engine.hpp"
#include "tegamp/channel.hpp"
#include "tegamp/solver.hpp"
#include "tegamp/tensor.hpp"

#include <span>
#include <vector>

namespace tegamp {

/// Posterior means and variances of the CP factor entries a_i^l(x_i).
struct CPFactorMoments {
    CPFactors mean;
    CPFactors var;
};

CPFactorMoments cp_prior_moments(const Shape& shape, std::size_t rank, const PriorModel& prior,
                                 std::uint64_t seed);

/// CP factor model. Flat layout: factor matrices concatenated, each
/// row-major N_i x r.
class CpModel {
public:
    CpModel() = default;
    CpModel(const Shape& shape, std::size_t rank);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return rank_; }
    std::size_t order() const { return shape_.order(); }
    std::size_t param_count() const { return total_params_; }
    std::size_t param_index(std::size_t i, std::size_t x, std::size_t l) const {
        return offsets_[i] + x * rank_ + l;
    }

    std::vector<double> pack(const CPFactors& f) const;
    CPFactors unpack(std::span<const double> flat) const;

    void plugin(std::span<const double> mean, std::vector<double>& out) const;
    void forward(std::span<const double> mean, std::span<const double> var,
                 std::span<const double> s_prev, ForwardFields& out) const;
    void belief_variance(std::span<const double> mean, std::span<const double> var,
                         std::vector<double>& out) const;
    void backward(const BackwardInput& in, BackwardFields& out) const;

private:
    Shape shape_;
    std::size_t rank_ = 0;
    std::vector<std::size_t> offsets_;
    std::size_t total_params_ = 0;
};

using TesAmp = AmpEngine<CpModel>;

/// q_bar_x = sum_l prod_i a_i^l(x_i)
double cp_plugin(const CPFactorMoments& m, const MultiIndex& x);
double cp_onsager_variance(const CPFactorMoments& m, double s_prev, const MultiIndex& x);
/// (q_hat, nu_q) before clamping and damping.
Moments cp_corrected(const CPFactorMoments& m, double s_prev, const MultiIndex& x);
/// Mixed variance/mean sum over the modes other than i for rank l.
double cp_zeta(const CPFactorMoments& m, std::size_t l, std::size_t i, const MultiIndex& x);

struct CpRStep {
    double r_hat = 0.0;
    double nu_r = 0.0;
    bool ok = false;
};

/// r-step for a_i^l(x_i); `m.mean` plays the role of the damped means.
/// With `neglected_term`, s_prev must hold the previous residual.
CpRStep cp_r_step(const CPFactorMoments& m, std::span<const double> s_hat,
                  std::span<const double> nu_s, std::size_t l, std::size_t i, std::size_t x_i,
                  bool neglected_term = false, std::span<const double> s_prev = {});

struct TesResult {
    RunResult run;
    CPFactorMoments factors;
};

TesResult tes_solve(const DenseTensor& v, const ObservationMask& mask, std::size_t rank,
                    const SolverConfig& cfg);

}  // namespace tegamp
