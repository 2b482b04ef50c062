#include "tegamp/channel.hpp"

#include "tegamp/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace tegamp {

ObservationMask::ObservationMask(Shape shape, std::vector<std::uint8_t> bits)
    : shape_(std::move(shape)), bits_(std::move(bits)) {
    if (bits_.size() != shape_.total())
        throw std::domain_error("mask length does not match shape " + shape_.str());
    for (auto& b : bits_) {
        b = b ? 1 : 0;
        count_ += b;
    }
}

ObservationMask ObservationMask::full(const Shape& shape) {
    return ObservationMask(shape, std::vector<std::uint8_t>(shape.total(), 1));
}

void PriorModel::validate() const {
    if (!(var > 0.0) || !std::isfinite(var)) throw ConfigError("prior variance must be > 0");
    if (!std::isfinite(mean)) throw ConfigError("prior mean must be finite");
}

double estimate_noise_variance(const DenseTensor& v, const ObservationMask& mask, double snr) {
    if (!(v.shape() == mask.shape())) throw std::domain_error("mask and data shapes differ");
    if (mask.count() == 0) throw std::domain_error("noise estimate needs at least one observation");
    if (!(snr > -1.0)) throw std::domain_error("snr must be > -1");
    double energy = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k)
        if (mask.observed(k)) energy += v[k] * v[k];
    return energy / ((snr + 1.0) * static_cast<double>(mask.count()));
}

Moments output_moments(std::optional<double> v, double p_hat, double nu_p, double noise_var) {
    if (!(nu_p > 0.0)) throw std::domain_error("nu_p must be > 0");
    if (!v) return {p_hat, nu_p};
    const double denom = nu_p + noise_var;
    return {p_hat + nu_p / denom * (*v - p_hat), nu_p * noise_var / denom};
}

Moments residual_from_output(const Moments& u, double p_hat, double nu_p) {
    if (!(nu_p > 0.0)) throw std::domain_error("nu_p must be > 0");
    return {(u.mean - p_hat) / nu_p, (1.0 - u.var / nu_p) / nu_p};
}

Moments residual_step(std::optional<double> v, double p_hat, double nu_p, double noise_var) {
    if (!(nu_p > 0.0)) throw std::domain_error("nu_p must be > 0");
    if (!v) return {0.0, 0.0};
    const double denom = nu_p + noise_var;
    return {(*v - p_hat) / denom, 1.0 / denom};
}

Moments input_posterior(double r_hat, double nu_r, const PriorModel& prior) {
    if (!(nu_r > 0.0)) throw std::domain_error("nu_r must be > 0");
    const double s0 = prior.var;
    const double denom = s0 + nu_r;
    return {(s0 * r_hat + nu_r * prior.mean) / denom, s0 * nu_r / denom};
}

}  // namespace tegamp
