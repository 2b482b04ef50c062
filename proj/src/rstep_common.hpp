#pragma once

#include "tegamp/amp_engine.hpp"
#include "tegamp/channel.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace tegamp {

// Sums over the fiber x' : x'_i = x_i feeding one factor variable.
struct RAccumulator {
    double num = 0.0;    // sum c * s
    double den = 0.0;    // sum c^2 * nu_s
    double zeta = 0.0;   // sum nu_s * zeta
    double extra = 0.0;  // optional higher-order term (CP engine)
};

struct RFinish {
    double r_hat = 0.0;
    double nu_r = 0.0;
    bool ok = false;
    double ratio = 1.0;
};

// Precision below this means no observation reaches the variable.
constexpr double kMinPrecision = 1e-12;

inline RFinish finish_one(const RAccumulator& acc, double self) {
    if (std::isnan(acc.den)) return {acc.den, acc.den, true, acc.den};
    if (!(acc.den >= kMinPrecision)) return {};
    const double nu_r = clamp_variance(1.0 / acc.den);
    const double ratio = 1.0 - nu_r * acc.zeta;
    return {nu_r * acc.num + self * ratio + nu_r * self * acc.extra, nu_r, true, ratio};
}

inline void finish_r_step(const std::vector<RAccumulator>& acc, std::span<const double> self,
                          BackwardFields& out) {
    const std::size_t n = acc.size();
    out.r_hat.assign(n, 0.0);
    out.nu_r.assign(n, 0.0);
    out.valid.assign(n, 0);
    out.min_ratio = 1.0;
    out.max_ratio = 1.0;
    bool first = true;
    for (std::size_t p = 0; p < n; ++p) {
        const RFinish f = finish_one(acc[p], self[p]);
        out.r_hat[p] = f.r_hat;
        out.nu_r[p] = f.nu_r;
        out.valid[p] = f.ok ? 1 : 0;
        if (!f.ok) continue;
        out.min_ratio = first ? f.ratio : std::min(out.min_ratio, f.ratio);
        out.max_ratio = first ? f.ratio : std::max(out.max_ratio, f.ratio);
        first = false;
    }
}

}  // namespace tegamp
