#include "tegamp/baselines.hpp"

#include "tegamp/errors.hpp"
#include "tegamp/random.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tegamp {

void AltMinConfig::validate() const {
    if (max_sweeps < 1) throw ConfigError("altmin sweeps must be >= 1");
    if (!(ridge >= 0.0)) throw ConfigError("altmin ridge must be >= 0");
    if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
}

const char* altmin_init_name(AltMinConfig::Init init) {
    return init == AltMinConfig::Init::random ? "random" : "spectral";
}

AltMinConfig::Init parse_altmin_init(const std::string& text) {
    if (text == "random") return AltMinConfig::Init::random;
    if (text == "spectral") return AltMinConfig::Init::spectral;
    throw ConfigError("unknown altmin init '" + text + "' (random, spectral)");
}

double masked_objective(const DenseTensor& v, const ObservationMask& mask, const DenseTensor& u) {
    double f = 0.0;
    for (std::size_t x = 0; x < v.size(); ++x) {
        if (!mask.observed(x)) continue;
        const double e = v[x] - u[x];
        f += e * e;
    }
    return f;
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Column c of the left singular vectors, or small noise past the numerical rank.
double left_vector(const Eigen::BDCSVD<RowMatrix>& svd, Eigen::Index row, Eigen::Index col, Rng& rng) {
    if (col < svd.matrixU().cols()) return svd.matrixU()(row, col);
    return 1e-3 * rng.normal();
}

}  // namespace

TRFactors tr_svd_init(const DenseTensor& t, const RankVector& ranks, std::uint64_t seed) {
    const Shape& shape = t.shape();
    const std::size_t d = shape.order();
    if (ranks.size() != d) throw std::domain_error("rank count does not match tensor order");
    TRFactors f(shape, ranks);
    Rng rng(seed);
    const auto idx = [](std::size_t v) { return static_cast<Eigen::Index>(v); };

    const std::size_t n1 = shape.dim(0);
    const std::size_t rest = shape.total() / n1;
    const std::size_t r1 = ranks[0];
    const std::size_t r2 = ranks[1];
    Eigen::Map<const RowMatrix> m0(t.values().data(), idx(n1), idx(rest));
    Eigen::BDCSVD<RowMatrix> svd(m0, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::Index q = svd.singularValues().size();
    for (std::size_t a = 0; a < r1; ++a)
        for (std::size_t b = 0; b < r2; ++b)
            for (std::size_t x = 0; x < n1; ++x)
                f.core(0)(a, x, b) = left_vector(svd, idx(x), idx(a * r2 + b), rng);

    // Carry S V^T with the wrap index moved last: layout (b, x_2..x_d, a).
    std::vector<double> carry(r2 * rest * r1, 0.0);
    for (std::size_t a = 0; a < r1; ++a)
        for (std::size_t b = 0; b < r2; ++b) {
            const Eigen::Index k = idx(a * r2 + b);
            if (k >= q) continue;
            const double s = svd.singularValues()(k);
            for (std::size_t c = 0; c < rest; ++c)
                carry[(b * rest + c) * r1 + a] = s * svd.matrixV()(idx(c), k);
        }

    std::size_t remaining = rest * r1;  // columns per carry row, times the leading rank
    for (std::size_t i = 1; i + 1 < d; ++i) {
        const std::size_t left = ranks[i];
        const std::size_t right = ranks[i + 1];
        const std::size_t n = shape.dim(i);
        remaining /= n;
        Eigen::Map<const RowMatrix> m(carry.data(), idx(left * n), idx(remaining));
        Eigen::BDCSVD<RowMatrix> s(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::Index qi = s.singularValues().size();
        for (std::size_t a = 0; a < left; ++a)
            for (std::size_t x = 0; x < n; ++x)
                for (std::size_t b = 0; b < right; ++b)
                    f.core(i)(a, x, b) = left_vector(s, idx(a * n + x), idx(b), rng);
        std::vector<double> next(right * remaining, 0.0);
        for (std::size_t b = 0; b < right; ++b) {
            if (idx(b) >= qi) continue;
            const double sv = s.singularValues()(idx(b));
            for (std::size_t c = 0; c < remaining; ++c) next[b * remaining + c] = sv * s.matrixV()(idx(c), idx(b));
        }
        carry = std::move(next);
    }

    TRCore& last = f.core(d - 1);
    for (std::size_t a = 0; a < last.left(); ++a)
        for (std::size_t x = 0; x < last.n(); ++x)
            for (std::size_t b = 0; b < last.right(); ++b)
                last(a, x, b) = carry[(a * last.n() + x) * last.right() + b];
    return f;
}

CPFactors cp_svd_init(const DenseTensor& t, std::size_t rank, std::uint64_t seed) {
    const Shape& shape = t.shape();
    CPFactors f(shape, rank);
    Rng rng(seed);
    // Mode-i unfolding via row-major reshape of (outer, n_i, inner).
    for (std::size_t i = 0; i < shape.order(); ++i) {
        const std::size_t n = shape.dim(i);
        const std::size_t inner = shape.stride(i);
        const std::size_t outer = shape.total() / (n * inner);
        RowMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(outer * inner));
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t x = 0; x < n; ++x)
                for (std::size_t k = 0; k < inner; ++k)
                    m(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(o * inner + k)) =
                        t[(o * n + x) * inner + k];
        Eigen::BDCSVD<RowMatrix> svd(m, Eigen::ComputeThinU);
        for (std::size_t x = 0; x < n; ++x)
            for (std::size_t l = 0; l < rank; ++l)
                f.factor(i)(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(l)) =
                    left_vector(svd, static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(l), rng);
    }
    // Put the data scale on the last factor.
    const double norm = std::sqrt(t.frobenius_norm_sq());
    f.factor(shape.order() - 1) *= norm / std::sqrt(static_cast<double>(rank));
    return f;
}

namespace {

/// Residuals on the observed entries; fiber coefficients are laid out
/// obs-major (coef[o * fibers + f]).
struct FiberProblem {
    std::vector<std::size_t> key;  // x_i of each observed entry
    std::vector<double> coef;
    std::vector<double> resid;
    std::size_t fibers = 0;
    std::size_t keys = 0;
};

/// One pass over the fibers; value(f, k) is the parameter of fiber f at x_i = k.
template <class Value>
void sweep_fibers(FiberProblem& p, double ridge, Value&& value) {
    std::vector<double> num(p.keys), den(p.keys);
    const std::size_t nobs = p.key.size();
    for (std::size_t fb = 0; fb < p.fibers; ++fb) {
        std::fill(num.begin(), num.end(), 0.0);
        std::fill(den.begin(), den.end(), 0.0);
        for (std::size_t o = 0; o < nobs; ++o) {
            const double c = p.coef[o * p.fibers + fb];
            num[p.key[o]] += c * p.resid[o];
            den[p.key[o]] += c * c;
        }
        for (std::size_t k = 0; k < p.keys; ++k) {
            const double h = den[k] + ridge;
            num[k] = h > 0.0 ? num[k] / h : 0.0;
            value(fb, k) += num[k];
        }
        for (std::size_t o = 0; o < nobs; ++o) p.resid[o] -= num[p.key[o]] * p.coef[o * p.fibers + fb];
    }
}

std::vector<std::size_t> observed_entries(const ObservationMask& mask) {
    std::vector<std::size_t> obs;
    obs.reserve(mask.count());
    for (std::size_t x = 0; x < mask.shape().total(); ++x)
        if (mask.observed(x)) obs.push_back(x);
    return obs;
}

struct SweepTracker {
    const DenseTensor& v;
    const ObservationMask& mask;
    const AltMinConfig& cfg;
    RunResult res;
    DenseTensor prev;
    double first_norm = -1.0;

    SweepTracker(const DenseTensor& v_, const ObservationMask& m, const AltMinConfig& c, DenseTensor start)
        : v(v_), mask(m), cfg(c), prev(std::move(start)) {
        res.objective.push_back(masked_objective(v, mask, prev));
    }

    // Returns true when the run should stop.
    bool record(DenseTensor u, std::size_t sweep) {
        res.iterations = sweep;
        res.objective.push_back(masked_objective(v, mask, u));
        double diff = 0.0, norm = 0.0;
        bool finite = true;
        for (std::size_t x = 0; x < u.size(); ++x) {
            if (!std::isfinite(u[x])) finite = false;
            const double e = u[x] - prev[x];
            diff += e * e;
            norm += u[x] * u[x];
        }
        prev = std::move(u);
        res.final_change = norm > 0.0 ? diff / norm : (diff > 0.0 ? INFINITY : 0.0);
        if (!finite) {
            res.status = Status::diverged;
            return true;
        }
        if (first_norm < 0.0) first_norm = std::sqrt(norm);
        if (first_norm > 0.0 && std::sqrt(norm) / first_norm > kDivergenceRatio) {
            res.status = Status::diverged;
            return true;
        }
        if (diff <= cfg.tau * norm) {
            res.status = Status::converged;
            return true;
        }
        return false;
    }

    RunResult finish() {
        res.estimate = std::move(prev);
        return std::move(res);
    }
};

void check_inputs(const DenseTensor& v, const ObservationMask& mask, const Shape& model_shape) {
    if (!(v.shape() == mask.shape())) throw std::domain_error("data and mask shapes differ");
    if (!(v.shape() == model_shape)) throw std::domain_error("factor shape does not match the data");
}

DenseTensor zero_filled(const DenseTensor& v, const ObservationMask& mask) {
    DenseTensor z(v.shape());
    for (std::size_t x = 0; x < v.size(); ++x)
        if (mask.observed(x)) z[x] = v[x];
    return z;
}

}  // namespace

AltMinTrResult altmin_tr(const DenseTensor& v, const ObservationMask& mask, const RankVector& ranks,
                         const AltMinConfig& cfg) {
    cfg.validate();
    const std::uint64_t seed = derive_seed(cfg.seed, "altmin-init");
    TRFactors init = cfg.init == AltMinConfig::Init::spectral
                         ? tr_svd_init(zero_filled(v, mask), ranks, seed)
                         : random_tr(v.shape(), ranks, seed);
    return altmin_tr(v, mask, std::move(init), cfg);
}

AltMinTrResult altmin_tr(const DenseTensor& v, const ObservationMask& mask, TRFactors f,
                         const AltMinConfig& cfg) {
    cfg.validate();
    check_inputs(v, mask, f.shape());
    const Shape& shape = v.shape();
    const std::size_t d = shape.order();
    const auto obs = observed_entries(mask);
    SweepTracker track(v, mask, cfg, tr_full(f));

    FiberProblem p;
    std::vector<double> acc, tmp;
    for (std::size_t sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
        for (std::size_t i = 0; i < d; ++i) {
            TRCore& core = f.core(i);
            const std::size_t left = core.left();
            const std::size_t right = core.right();
            p.fibers = left * right;
            p.keys = core.n();
            p.key.resize(obs.size());
            p.coef.assign(obs.size() * p.fibers, 0.0);
            p.resid.resize(obs.size());
            for (std::size_t o = 0; o < obs.size(); ++o) {
                const MultiIndex x = shape.unflatten(obs[o]);
                // C = Z_{i+1} ... Z_{i-1}, a right x left matrix.
                acc.assign(right * right, 0.0);
                for (std::size_t k = 0; k < right; ++k) acc[k * right + k] = 1.0;
                std::size_t cols = right;
                for (std::size_t s = 1; s < d; ++s) {
                    const std::size_t j = (i + s) % d;
                    const TRCore& cj = f.core(j);
                    const auto slice = cj.slice(x[j]);
                    tmp.assign(right * cj.right(), 0.0);
                    for (std::size_t r = 0; r < right; ++r)
                        for (std::size_t m = 0; m < cols; ++m) {
                            const double a = acc[r * cols + m];
                            if (a == 0.0) continue;
                            for (std::size_t c = 0; c < cj.right(); ++c) tmp[r * cj.right() + c] += a * slice[m * cj.right() + c];
                        }
                    acc.swap(tmp);
                    cols = cj.right();
                }
                // u_x = sum_{a,b} Z_i(a, x_i, b) C(b, a)
                double u = 0.0;
                const auto zi = core.slice(x[i]);
                for (std::size_t a = 0; a < left; ++a)
                    for (std::size_t b = 0; b < right; ++b) {
                        const double c = acc[b * left + a];
                        p.coef[o * p.fibers + a * right + b] = c;
                        u += zi[a * right + b] * c;
                    }
                p.key[o] = x[i];
                p.resid[o] = v[obs[o]] - u;
            }
            sweep_fibers(p, cfg.ridge, [&](std::size_t fb, std::size_t k) -> double& {
                return core(fb / right, k, fb % right);
            });
        }
        if (track.record(tr_full(f), sweep)) break;
    }
    return {track.finish(), std::move(f)};
}

AltMinCpResult altmin_cp(const DenseTensor& v, const ObservationMask& mask, std::size_t rank,
                         const AltMinConfig& cfg) {
    cfg.validate();
    const std::uint64_t seed = derive_seed(cfg.seed, "altmin-init");
    CPFactors init = cfg.init == AltMinConfig::Init::spectral ? cp_svd_init(zero_filled(v, mask), rank, seed)
                                                             : random_cp(v.shape(), rank, seed);
    return altmin_cp(v, mask, std::move(init), cfg);
}

AltMinCpResult altmin_cp(const DenseTensor& v, const ObservationMask& mask, CPFactors f,
                         const AltMinConfig& cfg) {
    cfg.validate();
    check_inputs(v, mask, f.shape());
    const Shape& shape = v.shape();
    const std::size_t d = shape.order();
    const std::size_t rank = f.rank();
    const auto obs = observed_entries(mask);
    SweepTracker track(v, mask, cfg, cp_full(f));

    FiberProblem p;
    p.fibers = rank;
    for (std::size_t sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
        for (std::size_t i = 0; i < d; ++i) {
            auto& a = f.factor(i);
            p.keys = shape.dim(i);
            p.key.resize(obs.size());
            p.coef.assign(obs.size() * rank, 0.0);
            p.resid.resize(obs.size());
            for (std::size_t o = 0; o < obs.size(); ++o) {
                const MultiIndex x = shape.unflatten(obs[o]);
                double u = 0.0;
                for (std::size_t l = 0; l < rank; ++l) {
                    double c = 1.0;
                    for (std::size_t j = 0; j < d; ++j)
                        if (j != i) c *= f.factor(j)(static_cast<Eigen::Index>(x[j]), static_cast<Eigen::Index>(l));
                    p.coef[o * rank + l] = c;
                    u += c * a(static_cast<Eigen::Index>(x[i]), static_cast<Eigen::Index>(l));
                }
                p.key[o] = x[i];
                p.resid[o] = v[obs[o]] - u;
            }
            sweep_fibers(p, cfg.ridge, [&](std::size_t l, std::size_t k) -> double& {
                return a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
            });
        }
        if (track.record(cp_full(f), sweep)) break;
    }
    return {track.finish(), std::move(f)};
}

}  // namespace tegamp
