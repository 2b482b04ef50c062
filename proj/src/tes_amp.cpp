#include "tegamp/tes_amp.hpp"

#include "tegamp/detail/poly_chain.hpp"
#include "tegamp/random.hpp"
#include "rstep_common.hpp"

#include <stdexcept>

namespace tegamp {

namespace {

double ipow(double base, std::size_t e) {
    double r = 1.0;
    for (std::size_t k = 0; k < e; ++k) r *= base;
    return r;
}

struct Scratch {
    std::vector<double> sq;
    std::vector<double> var;
    std::vector<double> coef;
};

struct EntryForward {
    double p_bar = 0.0;
    double nubar = 0.0;
    double nu_prod = 0.0;
    double var_b = 0.0;
};

EntryForward forward_entry(const CpModel& m, std::span<const double> mean,
                           std::span<const double> var, const MultiIndex& x, double c, Scratch& s) {
    const std::size_t d = m.order();
    EntryForward out;
    s.sq.resize(d);
    s.var.resize(d);
    for (std::size_t l = 0; l < m.rank(); ++l) {
        double prod = 1.0;
        double vprod = 1.0;
        for (std::size_t j = 0; j < d; ++j) {
            const std::size_t p = m.param_index(j, x[j], l);
            prod *= mean[p];
            vprod *= var[p];
            s.sq[j] = mean[p] * mean[p];
            s.var[j] = var[p];
        }
        out.p_bar += prod;
        out.nu_prod += vprod;
        // coefficient k: subsets with k variance factors
        detail::poly_product(s.sq.data(), s.var.data(), d, s.coef);
        for (std::size_t k = 1; k < d; ++k) out.nubar += s.coef[k] * ipow(c * prod, k - 1);
        for (std::size_t k = 1; k <= d; ++k) out.var_b += s.coef[k];
    }
    return out;
}

struct LeaveOneOut {
    double c = 0.0;           // prod_{j != i} a_j
    double zeta = 0.0;
    double higher = 0.0;      // bracket of the optional correction, before the s^2 weight
};

LeaveOneOut leave_one_out(const CpModel& m, std::span<const double> mean, std::span<const double> var,
                          std::size_t i, std::size_t l, const MultiIndex& x, bool neglected,
                          double s_prev, Scratch& s) {
    const std::size_t d = m.order();
    s.sq.clear();
    s.var.clear();
    LeaveOneOut out;
    out.c = 1.0;
    for (std::size_t j = 0; j < d; ++j) {
        if (j == i) continue;
        const std::size_t p = m.param_index(j, x[j], l);
        out.c *= mean[p];
        s.sq.push_back(mean[p] * mean[p]);
        s.var.push_back(var[p]);
    }
    detail::poly_product(s.sq.data(), s.var.data(), d - 1, s.coef);
    for (std::size_t k = 1; k < d; ++k) out.zeta += s.coef[k];
    if (neglected && d >= 4) {
        const double base = -s_prev * out.c * mean[m.param_index(i, x[i], l)];
        for (std::size_t k = 2; k + 2 <= d; ++k) out.higher += s.coef[k] * (1.0 - ipow(base, k - 1));
    }
    return out;
}

}  // namespace

CpModel::CpModel(const Shape& shape, std::size_t rank) : shape_(shape), rank_(rank) {
    if (shape_.order() < 2) throw std::domain_error("tensor order must be >= 2");
    if (rank_ == 0) throw std::domain_error("CP rank must be >= 1");
    offsets_.resize(shape_.order());
    for (std::size_t i = 0; i < shape_.order(); ++i) {
        offsets_[i] = total_params_;
        total_params_ += shape_.dim(i) * rank_;
    }
}

std::vector<double> CpModel::pack(const CPFactors& f) const {
    if (f.order() != order() || f.rank() != rank_) throw std::domain_error("CP factor sizes mismatch");
    std::vector<double> flat(total_params_);
    for (std::size_t i = 0; i < order(); ++i) {
        const auto& a = f.factor(i);
        if (static_cast<std::size_t>(a.rows()) != shape_.dim(i))
            throw std::domain_error("CP factor " + std::to_string(i) + " row count mismatch");
        for (std::size_t x = 0; x < shape_.dim(i); ++x)
            for (std::size_t l = 0; l < rank_; ++l)
                flat[param_index(i, x, l)] = a(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(l));
    }
    return flat;
}

CPFactors CpModel::unpack(std::span<const double> flat) const {
    CPFactors f(shape_, rank_);
    for (std::size_t i = 0; i < order(); ++i)
        for (std::size_t x = 0; x < shape_.dim(i); ++x)
            for (std::size_t l = 0; l < rank_; ++l)
                f.factor(i)(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(l)) =
                    flat[param_index(i, x, l)];
    return f;
}

void CpModel::plugin(std::span<const double> mean, std::vector<double>& out) const {
    out.assign(shape_.total(), 0.0);
    MultiIndex x(order(), 0);
    std::size_t flat = 0;
    do {
        double sum = 0.0;
        for (std::size_t l = 0; l < rank_; ++l) {
            double prod = 1.0;
            for (std::size_t j = 0; j < order(); ++j) prod *= mean[param_index(j, x[j], l)];
            sum += prod;
        }
        out[flat++] = sum;
    } while (next_index(shape_, x));
}

void CpModel::forward(std::span<const double> mean, std::span<const double> var,
                      std::span<const double> s_prev, ForwardFields& out) const {
    const std::size_t n = shape_.total();
    out.p_bar.assign(n, 0.0);
    out.nubar_raw.assign(n, 0.0);
    out.nu_prod.assign(n, 0.0);
    Scratch s;
    MultiIndex x(order(), 0);
    std::size_t flat = 0;
    do {
        const EntryForward e = forward_entry(*this, mean, var, x, -s_prev[flat], s);
        out.p_bar[flat] = e.p_bar;
        out.nubar_raw[flat] = e.nubar;
        out.nu_prod[flat] = e.nu_prod;
        ++flat;
    } while (next_index(shape_, x));
}

void CpModel::belief_variance(std::span<const double> mean, std::span<const double> var,
                              std::vector<double>& out) const {
    out.assign(shape_.total(), 0.0);
    Scratch s;
    MultiIndex x(order(), 0);
    std::size_t flat = 0;
    do {
        out[flat] = forward_entry(*this, mean, var, x, 0.0, s).var_b;
        ++flat;
    } while (next_index(shape_, x));
}

void CpModel::backward(const BackwardInput& in, BackwardFields& out) const {
    const std::size_t d = order();
    std::vector<RAccumulator> acc(total_params_);
    Scratch s;
    for (std::size_t i = 0; i < d; ++i) {
        MultiIndex x(d, 0);
        std::size_t flat = 0;
        do {
            const std::size_t k = flat++;
            const double sh = in.s_hat[k];
            const double nus = in.nu_s[k];
            if (sh == 0.0 && nus == 0.0) continue;
            const double sp = in.neglected_term ? in.s_prev[k] : 0.0;
            for (std::size_t l = 0; l < rank_; ++l) {
                const LeaveOneOut lo =
                    leave_one_out(*this, in.zbar, in.var, i, l, x, in.neglected_term, sp, s);
                auto& r = acc[param_index(i, x[i], l)];
                r.num += lo.c * sh;
                r.den += lo.c * lo.c * nus;
                r.zeta += nus * lo.zeta;
                r.extra += sh * sh * lo.higher;
            }
        } while (next_index(shape_, x));
    }
    finish_r_step(acc, in.zbar, out);
}

CPFactorMoments cp_prior_moments(const Shape& shape, std::size_t rank, const PriorModel& prior,
                                 std::uint64_t seed) {
    CPFactorMoments m{CPFactors(shape, rank), CPFactors(shape, rank, prior.var)};
    Rng rng(seed);
    for (std::size_t i = 0; i < m.mean.order(); ++i) {
        auto& a = m.mean.factor(i);
        for (Eigen::Index x = 0; x < a.rows(); ++x)
            for (Eigen::Index l = 0; l < a.cols(); ++l) a(x, l) = rng.normal(prior.mean, prior.var);
    }
    return m;
}

namespace {

CpModel model_for(const CPFactorMoments& m) {
    if (!m.mean.congruent(m.var)) throw std::domain_error("mean and variance factors differ in shape");
    return CpModel(m.mean.shape(), m.mean.rank());
}

void check_index(const CpModel& m, const MultiIndex& x) {
    if (!m.shape().contains(x)) throw std::domain_error("multi-index out of range");
}

}  // namespace

double cp_plugin(const CPFactorMoments& m, const MultiIndex& x) { return cp_evaluate(m.mean, x); }

double cp_onsager_variance(const CPFactorMoments& m, double s_prev, const MultiIndex& x) {
    const CpModel model = model_for(m);
    check_index(model, x);
    Scratch s;
    return forward_entry(model, model.pack(m.mean), model.pack(m.var), x, -s_prev, s).nubar;
}

Moments cp_corrected(const CPFactorMoments& m, double s_prev, const MultiIndex& x) {
    const CpModel model = model_for(m);
    check_index(model, x);
    Scratch s;
    const EntryForward e = forward_entry(model, model.pack(m.mean), model.pack(m.var), x, -s_prev, s);
    return {e.p_bar - s_prev * e.nubar, e.nu_prod + e.nubar};
}

double cp_zeta(const CPFactorMoments& m, std::size_t l, std::size_t i, const MultiIndex& x) {
    const CpModel model = model_for(m);
    check_index(model, x);
    if (i >= model.order() || l >= model.rank()) throw std::domain_error("cp_zeta: index out of range");
    Scratch s;
    return leave_one_out(model, model.pack(m.mean), model.pack(m.var), i, l, x, false, 0.0, s).zeta;
}

CpRStep cp_r_step(const CPFactorMoments& m, std::span<const double> s_hat,
                  std::span<const double> nu_s, std::size_t l, std::size_t i, std::size_t x_i,
                  bool neglected_term, std::span<const double> s_prev) {
    const CpModel model = model_for(m);
    const std::size_t n = model.shape().total();
    if (i >= model.order() || l >= model.rank() || x_i >= model.shape().dim(i))
        throw std::domain_error("cp_r_step: index out of range");
    if (s_hat.size() != n || nu_s.size() != n || (neglected_term && s_prev.size() != n))
        throw std::domain_error("cp_r_step: residual fields do not match the shape");
    const auto mean = model.pack(m.mean);
    const auto var = model.pack(m.var);
    Scratch s;
    RAccumulator acc;
    MultiIndex x(model.order(), 0);
    std::size_t flat = 0;
    do {
        const std::size_t k = flat++;
        if (x[i] != x_i || (s_hat[k] == 0.0 && nu_s[k] == 0.0)) continue;
        const double sp = neglected_term ? s_prev[k] : 0.0;
        const LeaveOneOut lo = leave_one_out(model, mean, var, i, l, x, neglected_term, sp, s);
        acc.num += lo.c * s_hat[k];
        acc.den += lo.c * lo.c * nu_s[k];
        acc.zeta += nu_s[k] * lo.zeta;
        acc.extra += s_hat[k] * s_hat[k] * lo.higher;
    } while (next_index(model.shape(), x));
    const RFinish f = finish_one(acc, mean[model.param_index(i, x_i, l)]);
    return {f.r_hat, f.nu_r, f.ok};
}

TesResult tes_solve(const DenseTensor& v, const ObservationMask& mask, std::size_t rank,
                    const SolverConfig& cfg) {
    TesAmp engine(CpModel(v.shape(), rank), v, mask, cfg);
    engine.initialize_from_prior();
    RunResult run = engine.run();
    const auto& m = engine.model();
    return {std::move(run), CPFactorMoments{m.unpack(engine.state().mean), m.unpack(engine.state().var)}};
}

}  // namespace tegamp
