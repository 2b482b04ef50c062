#include "tegamp/teg_amp.hpp"

#include "tegamp/detail/poly_chain.hpp"
#include "tegamp/detail/small_matrix.hpp"
#include "tegamp/random.hpp"
#include "rstep_common.hpp"

#include <cmath>
#include <stdexcept>

namespace tegamp {

namespace {

struct Workspace {
    detail::ChainProduct chain;
    detail::PolyChain poly;
    std::vector<double> a;
    std::vector<double> b;
};

double ipow(double base, std::size_t e) {
    double r = 1.0;
    for (std::size_t k = 0; k < e; ++k) r *= base;
    return r;
}

double chain_trace(const TrModel& m, std::span<const double> data, const MultiIndex& x,
                   detail::ChainProduct& chain) {
    const std::size_t d = m.order();
    chain.reset(&data[m.slice_offset(0, x[0])], m.left(0), m.right(0));
    for (std::size_t j = 1; j < d; ++j) chain.multiply(&data[m.slice_offset(j, x[j])], m.right(j));
    return chain.trace();
}

// Fills ws.a / ws.b with the entrywise maps of core j's slice at x_j:
//   a = m^pa, b = v * m^pb
void transform_slice(const TrModel& m, std::span<const double> mean, std::span<const double> var,
                     std::size_t j, std::size_t xj, std::size_t pa, std::size_t pb, Workspace& ws) {
    const std::size_t n = m.left(j) * m.right(j);
    const std::size_t off = m.slice_offset(j, xj);
    ws.a.resize(n);
    ws.b.resize(n);
    for (std::size_t e = 0; e < n; ++e) {
        const double z = mean[off + e];
        ws.a[e] = ipow(z, pa);
        ws.b[e] = var[off + e] * ipow(z, pb);
    }
}

// Polynomial chain over the cores start, start+1, ... (count of them, cyclic).
void poly_chain(const TrModel& m, std::span<const double> mean, std::span<const double> var,
                const MultiIndex& x, std::size_t start, std::size_t count, std::size_t pa,
                std::size_t pb, std::size_t max_degree, Workspace& ws) {
    const std::size_t d = m.order();
    for (std::size_t s = 0; s < count; ++s) {
        const std::size_t j = (start + s) % d;
        transform_slice(m, mean, var, j, x[j], pa, pb, ws);
        if (s == 0)
            ws.poly.reset(ws.a.data(), ws.b.data(), m.left(j), m.right(j), max_degree);
        else
            ws.poly.multiply(ws.a.data(), ws.b.data(), m.right(j));
    }
}

// sum_l sum_{k=1}^{d-1} e_k(l) (c P(l))^{k-1}: grouping subsets by the number
// k of variance factors, each group is coefficient k of a trace of
// (m^{k+1} + t v m^{k-1}) slice products.
double onsager_entry(const TrModel& m, std::span<const double> mean, std::span<const double> var,
                     const MultiIndex& x, double c, Workspace& ws) {
    const std::size_t d = m.order();
    const std::size_t kmax = c == 0.0 ? 1 : d - 1;
    double total = 0.0;
    for (std::size_t k = 1; k <= kmax; ++k) {
        poly_chain(m, mean, var, x, 0, d, k + 1, k - 1, k, ws);
        total += ws.poly.trace(k) * ipow(c, k - 1);
    }
    return total;
}

double belief_variance_entry(const TrModel& m, std::span<const double> mean,
                             std::span<const double> var, const MultiIndex& x, Workspace& ws) {
    const std::size_t d = m.order();
    poly_chain(m, mean, var, x, 0, d, 2, 0, d, ws);
    double s = 0.0;
    for (std::size_t k = 1; k <= d; ++k) s += ws.poly.trace(k);
    return s;
}

// Leave-core-i-out products at x: ws.chain holds the means chain
// Z_{i+1} ... Z_{i-1} (r_{i+1} x r_i); ws.poly the (m^2 + t v) chain.
void leave_one_out(const TrModel& m, std::span<const double> zbar, std::span<const double> var,
                   std::size_t i, const MultiIndex& x, Workspace& ws) {
    const std::size_t d = m.order();
    const std::size_t first = (i + 1) % d;
    ws.chain.reset(&zbar[m.slice_offset(first, x[first])], m.left(first), m.right(first));
    for (std::size_t s = 2; s < d; ++s) {
        const std::size_t j = (i + s) % d;
        ws.chain.multiply(&zbar[m.slice_offset(j, x[j])], m.right(j));
    }
    poly_chain(m, zbar, var, x, first, d - 1, 2, 0, d - 1, ws);
}

double zeta_from(const detail::PolyChain& poly, std::size_t row, std::size_t col) {
    double s = 0.0;
    for (std::size_t k = 1; k <= poly.degree(); ++k) s += poly.coeff(k, row, col);
    return s;
}

}  // namespace

TrModel::TrModel(const Shape& shape, const RankVector& ranks) : shape_(shape), ranks_(ranks) {
    if (shape_.order() < 2) throw std::domain_error("tensor order must be >= 2");
    if (ranks_.size() != shape_.order())
        throw std::domain_error("rank vector length must equal the tensor order");
    offsets_.resize(shape_.order());
    for (std::size_t i = 0; i < shape_.order(); ++i) {
        offsets_[i] = total_params_;
        total_params_ += left(i) * shape_.dim(i) * right(i);
    }
}

std::vector<double> TrModel::pack(const TRFactors& f) const {
    if (f.order() != order()) throw std::domain_error("factor order mismatch");
    std::vector<double> flat;
    flat.reserve(total_params_);
    for (std::size_t i = 0; i < order(); ++i) {
        const auto& c = f.core(i);
        if (c.left() != left(i) || c.n() != shape_.dim(i) || c.right() != right(i))
            throw std::domain_error("core " + std::to_string(i) + " does not match the model sizes");
        flat.insert(flat.end(), c.values().begin(), c.values().end());
    }
    return flat;
}

TRFactors TrModel::unpack(std::span<const double> flat) const {
    TRFactors f(shape_, ranks_);
    for (std::size_t i = 0; i < order(); ++i) {
        auto& vals = f.core(i).values();
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
                  flat.begin() + static_cast<std::ptrdiff_t>(offsets_[i] + vals.size()), vals.begin());
    }
    return f;
}

void TrModel::plugin(std::span<const double> mean, std::vector<double>& out) const {
    out.assign(shape_.total(), 0.0);
    detail::ChainProduct chain;
    MultiIndex x(order(), 0);
    std::size_t flat = 0;
    do {
        out[flat++] = chain_trace(*this, mean, x, chain);
    } while (next_index(shape_, x));
}

void TrModel::forward(std::span<const double> mean, std::span<const double> var,
                      std::span<const double> s_prev, ForwardFields& out) const {
    const std::size_t n = shape_.total();
    out.p_bar.assign(n, 0.0);
    out.nubar_raw.assign(n, 0.0);
    out.nu_prod.assign(n, 0.0);
    Workspace ws;
    MultiIndex x(order(), 0);
    std::size_t flat = 0;
    do {
        out.p_bar[flat] = chain_trace(*this, mean, x, ws.chain);
        out.nu_prod[flat] = chain_trace(*this, var, x, ws.chain);
        out.nubar_raw[flat] = onsager_entry(*this, mean, var, x, -s_prev[flat], ws);
        ++flat;
    } while (next_index(shape_, x));
}

void TrModel::belief_variance(std::span<const double> mean, std::span<const double> var,
                              std::vector<double>& out) const {
    out.assign(shape_.total(), 0.0);
    Workspace ws;
    MultiIndex x(order(), 0);
    std::size_t flat = 0;
    do {
        out[flat++] = belief_variance_entry(*this, mean, var, x, ws);
    } while (next_index(shape_, x));
}

void TrModel::backward(const BackwardInput& in, BackwardFields& out) const {
    const std::size_t d = order();
    std::vector<RAccumulator> acc(total_params_);
    Workspace ws;
    for (std::size_t i = 0; i < d; ++i) {
        MultiIndex x(d, 0);
        std::size_t flat = 0;
        do {
            const double s = in.s_hat[flat];
            const double nus = in.nu_s[flat];
            ++flat;
            if (s == 0.0 && nus == 0.0) continue;
            leave_one_out(*this, in.zbar, in.var, i, x, ws);
            for (std::size_t a = 0; a < left(i); ++a)
                for (std::size_t b = 0; b < right(i); ++b) {
                    auto& r = acc[param_index(i, a, x[i], b)];
                    const double c = ws.chain(b, a);
                    r.num += c * s;
                    r.den += c * c * nus;
                    r.zeta += nus * zeta_from(ws.poly, b, a);
                }
        } while (next_index(shape_, x));
    }
    finish_r_step(acc, in.zbar, out);
}

FactorMoments prior_moments(const Shape& shape, const RankVector& ranks, const PriorModel& prior,
                            std::uint64_t seed) {
    FactorMoments z{TRFactors(shape, ranks), TRFactors(shape, ranks, prior.var)};
    Rng rng(seed);
    for (auto& core : z.mean.cores())
        for (auto& v : core.values()) v = rng.normal(prior.mean, prior.var);
    return z;
}

namespace {

TrModel model_for(const FactorMoments& z) {
    if (!z.mean.congruent(z.var)) throw std::domain_error("mean and variance factors differ in shape");
    return TrModel(z.mean.shape(), z.mean.ranks());
}

void check_index(const TrModel& m, const MultiIndex& x) {
    if (!m.shape().contains(x)) throw std::domain_error("multi-index out of range");
}

}  // namespace

double plugin_estimate(const FactorMoments& z, const MultiIndex& x) { return tr_contract(z.mean, x); }

double onsager_variance(const FactorMoments& z, double s_prev, const MultiIndex& x) {
    const TrModel m = model_for(z);
    check_index(m, x);
    const auto mean = m.pack(z.mean);
    const auto var = m.pack(z.var);
    Workspace ws;
    return onsager_entry(m, mean, var, x, -s_prev, ws);
}

Moments corrected_p(const FactorMoments& z, double s_prev, const MultiIndex& x) {
    const double nubar = onsager_variance(z, s_prev, x);
    return {plugin_estimate(z, x) - s_prev * nubar, tr_contract(z.var, x) + nubar};
}

double zeta(const FactorMoments& z, std::size_t i, std::size_t a, std::size_t b, const MultiIndex& x) {
    const TrModel m = model_for(z);
    check_index(m, x);
    if (i >= m.order() || a >= m.left(i) || b >= m.right(i))
        throw std::domain_error("zeta: core or rank index out of range");
    const auto mean = m.pack(z.mean);
    const auto var = m.pack(z.var);
    Workspace ws;
    leave_one_out(m, mean, var, i, x, ws);
    return zeta_from(ws.poly, b, a);
}

RStep r_step(const FactorMoments& z, std::span<const double> s_hat, std::span<const double> nu_s,
             std::size_t i, std::size_t a, std::size_t b, std::size_t x_i) {
    const TrModel m = model_for(z);
    if (i >= m.order() || a >= m.left(i) || b >= m.right(i) || x_i >= m.shape().dim(i))
        throw std::domain_error("r_step: index out of range");
    if (s_hat.size() != m.shape().total() || nu_s.size() != m.shape().total())
        throw std::domain_error("r_step: residual fields do not match the shape");
    const auto mean = m.pack(z.mean);
    const auto var = m.pack(z.var);
    Workspace ws;
    RAccumulator acc;
    MultiIndex x(m.order(), 0);
    std::size_t flat = 0;
    do {
        const std::size_t k = flat++;
        if (x[i] != x_i || (s_hat[k] == 0.0 && nu_s[k] == 0.0)) continue;
        leave_one_out(m, mean, var, i, x, ws);
        const double c = ws.chain(b, a);
        acc.num += c * s_hat[k];
        acc.den += c * c * nu_s[k];
        acc.zeta += nu_s[k] * zeta_from(ws.poly, b, a);
    } while (next_index(m.shape(), x));
    const RFinish f = finish_one(acc, mean[m.param_index(i, a, x_i, b)]);
    return {f.r_hat, f.nu_r, f.ok};
}

TegResult teg_solve(const DenseTensor& v, const ObservationMask& mask, const RankVector& ranks,
                    const SolverConfig& cfg) {
    TegAmp engine(TrModel(v.shape(), ranks), v, mask, cfg);
    engine.initialize_from_prior();
    RunResult run = engine.run();
    const auto& m = engine.model();
    return {std::move(run), FactorMoments{m.unpack(engine.state().mean), m.unpack(engine.state().var)}};
}

}  // namespace tegamp
