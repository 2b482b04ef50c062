#pragma once

#include "tegamp/channel.hpp"
#include "tegamp/tensor.hpp"

#include <span>
#include <string>
#include <vector>

namespace tegamp {

struct DampingConfig {
    enum class Mode { off, fixed, adaptive };
    Mode mode = Mode::adaptive;
    double beta_init = 0.3;  // also the constant factor in fixed mode
    double beta_min = 0.1;
    double shrink = 0.5;
    double grow = 1.1;
    std::size_t window = 1;

    void validate() const;
};

const char* damping_mode_name(DampingConfig::Mode mode);
DampingConfig::Mode parse_damping_mode(const std::string& text);

inline double damp(double raw, double prev, double beta) {
    if (beta == 1.0) return raw;
    return beta * raw + (1.0 - beta) * prev;
}

/// The quantities slowed down by damping, one value per tensor entry
/// (first four) or per factor entry (zbar).
struct DampedFields {
    std::vector<double> nubar_p;
    std::vector<double> nu_p;
    std::vector<double> s_hat;
    std::vector<double> nu_s;
    std::vector<double> zbar;
};

DampedFields apply_damping(const DampedFields& prev, const DampedFields& raw, double beta);

struct AdaptDecision {
    double beta = 1.0;
    bool accepted = true;
};

/// Accepts when `cost` does not exceed the largest of the last window+1
/// accepted costs (or there is no history yet), then grows beta; otherwise
/// shrinks it.
AdaptDecision adapt(double beta, double cost, std::span<const double> accepted_costs,
                    const DampingConfig& cfg);

/// KL(N(m, v) || N(prior.mean, prior.var))
double gaussian_kl(double m, double v, const PriorModel& prior);

/// Surrogate cost: sum of factor KL terms plus the expected negative
/// log-likelihood of the observed entries under N(p_bar, var_b).
/// With noise_var == 0 the cost is 0.5 * sum((v - p_bar)^2 + var_b) over
/// observed entries, the limit of noise_var * J.
double surrogate_cost(std::span<const double> mean, std::span<const double> var,
                      std::span<const double> p_bar, std::span<const double> var_b,
                      const DenseTensor& v, const ObservationMask& mask, double noise_var,
                      const PriorModel& prior);

}  // namespace tegamp
