#pragma once

#include "tegamp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace tegamp {

/// Boolean observation pattern over a tensor shape.
class ObservationMask {
public:
    ObservationMask() = default;
    ObservationMask(Shape shape, std::vector<std::uint8_t> bits);
    static ObservationMask full(const Shape& shape);

    const Shape& shape() const { return shape_; }
    bool observed(std::size_t flat) const { return bits_[flat] != 0; }
    std::size_t count() const { return count_; }
    const std::vector<std::uint8_t>& bits() const { return bits_; }

private:
    Shape shape_;
    std::vector<std::uint8_t> bits_;
    std::size_t count_ = 0;
};

struct PriorModel {
    enum class Kind { gaussian };
    Kind kind = Kind::gaussian;
    double mean = 0.0;
    double var = 1.0;

    void validate() const;
};

struct Moments {
    double mean = 0.0;
    double var = 0.0;
};

constexpr double kVarianceFloor = 1e-12;
constexpr double kVarianceCeil = 1e12;

/// NaN passes through so divergence checks still see it.
inline double clamp_variance(double v) {
    if (std::isnan(v)) return v;
    return std::clamp(v, kVarianceFloor, kVarianceCeil);
}

/// ||P_Omega(V)||^2 / ((snr + 1) |Omega|)
double estimate_noise_variance(const DenseTensor& v, const ObservationMask& mask, double snr);

/// Posterior moments of u given the AWGN observation v (or none) and the
/// Gaussian pseudo-prior N(p_hat, nu_p).
Moments output_moments(std::optional<double> v, double p_hat, double nu_p, double noise_var);

/// (s_hat, nu_s) from posterior output moments, general form.
Moments residual_from_output(const Moments& u, double p_hat, double nu_p);

/// (s_hat, nu_s) for the incomplete AWGN channel, closed form.
Moments residual_step(std::optional<double> v, double p_hat, double nu_p, double noise_var);

inline double omega(double s_hat, double nu_s) { return s_hat * s_hat - nu_s; }

/// Mean and variance of prior(z) N(z; r_hat, nu_r), normalized.
Moments input_posterior(double r_hat, double nu_r, const PriorModel& prior);

}  // namespace tegamp
