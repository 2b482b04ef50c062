#include "tegamp/damping.hpp"

#include "tegamp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tegamp {

void DampingConfig::validate() const {
    if (!(beta_init > 0.0 && beta_init <= 1.0)) throw ConfigError("beta-init must be in (0, 1]");
    if (!(beta_min > 0.0 && beta_min <= 1.0)) throw ConfigError("beta-min must be in (0, 1]");
    if (mode == Mode::adaptive && beta_min > beta_init)
        throw ConfigError("beta-min must not exceed beta-init");
    if (!(shrink > 0.0 && shrink < 1.0)) throw ConfigError("shrink must be in (0, 1)");
    if (!(grow >= 1.0) || !std::isfinite(grow)) throw ConfigError("grow must be >= 1");
}

const char* damping_mode_name(DampingConfig::Mode mode) {
    switch (mode) {
        case DampingConfig::Mode::off: return "off";
        case DampingConfig::Mode::fixed: return "fixed";
        case DampingConfig::Mode::adaptive: return "adaptive";
    }
    return "?";
}

DampingConfig::Mode parse_damping_mode(const std::string& text) {
    if (text == "off") return DampingConfig::Mode::off;
    if (text == "fixed") return DampingConfig::Mode::fixed;
    if (text == "adaptive") return DampingConfig::Mode::adaptive;
    throw ConfigError("unknown damping mode '" + text + "' (expected off, fixed or adaptive)");
}

namespace {

std::vector<double> damp_vec(const std::vector<double>& prev, const std::vector<double>& raw,
                             double beta) {
    if (prev.size() != raw.size()) throw std::domain_error("damped field sizes differ");
    std::vector<double> out(raw.size());
    for (std::size_t k = 0; k < raw.size(); ++k) out[k] = damp(raw[k], prev[k], beta);
    return out;
}

}  // namespace

DampedFields apply_damping(const DampedFields& prev, const DampedFields& raw, double beta) {
    if (!(beta > 0.0 && beta <= 1.0)) throw std::domain_error("damping factor must be in (0, 1]");
    return {damp_vec(prev.nubar_p, raw.nubar_p, beta), damp_vec(prev.nu_p, raw.nu_p, beta),
            damp_vec(prev.s_hat, raw.s_hat, beta), damp_vec(prev.nu_s, raw.nu_s, beta),
            damp_vec(prev.zbar, raw.zbar, beta)};
}

AdaptDecision adapt(double beta, double cost, std::span<const double> accepted_costs,
                    const DampingConfig& cfg) {
    bool ok = true;
    if (!accepted_costs.empty()) {
        const std::size_t n = std::min(accepted_costs.size(), cfg.window + 1);
        const double worst = *std::max_element(accepted_costs.end() - static_cast<std::ptrdiff_t>(n),
                                               accepted_costs.end());
        ok = !(cost > worst) && !std::isnan(cost);
    }
    if (ok) return {std::min(1.0, cfg.grow * beta), true};
    return {std::max(cfg.beta_min, cfg.shrink * beta), false};
}

double gaussian_kl(double m, double v, const PriorModel& prior) {
    const double dm = m - prior.mean;
    return 0.5 * (std::log(prior.var / v) + (v + dm * dm) / prior.var - 1.0);
}

double surrogate_cost(std::span<const double> mean, std::span<const double> var,
                      std::span<const double> p_bar, std::span<const double> var_b,
                      const DenseTensor& v, const ObservationMask& mask, double noise_var,
                      const PriorModel& prior) {
    double fit = 0.0;
    const double log_term = noise_var > 0.0 ? 0.5 * std::log(2.0 * std::numbers::pi * noise_var) : 0.0;
    for (std::size_t x = 0; x < v.size(); ++x) {
        if (!mask.observed(x)) continue;
        const double r = v[x] - p_bar[x];
        const double sq = r * r + var_b[x];
        fit += noise_var > 0.0 ? sq / (2.0 * noise_var) + log_term : 0.5 * sq;
    }
    // noise_var -> 0 scales the fit without bound; noise_var * J tends to the fit alone.
    if (noise_var == 0.0) return fit;

    double kl = 0.0;
    for (std::size_t k = 0; k < mean.size(); ++k) kl += gaussian_kl(mean[k], var[k], prior);
    return kl + fit;
}

}  // namespace tegamp
