#include "tegamp/amp_engine.hpp"

#include "tegamp/errors.hpp"
#include "tegamp/random.hpp"
#include "tegamp/teg_amp.hpp"
#include "tegamp/tes_amp.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

namespace tegamp {

const char* status_name(Status status) {
    switch (status) {
        case Status::converged: return "converged";
        case Status::diverged: return "diverged";
        case Status::max_iter: return "max-iter";
    }
    return "?";
}

void SolverConfig::validate() const {
    if (max_iter < 1) throw ConfigError("max-iter must be >= 1");
    if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
    if (!(init_var_scale > 0.0)) throw ConfigError("init-var-scale must be > 0");
    if (noise_var && !(*noise_var >= 0.0)) throw ConfigError("noise variance must be >= 0");
    if (!noise_var && !(snr > -1.0)) throw ConfigError("snr must be > -1");
    prior.validate();
    damping.validate();
}

namespace {

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

double sum_sq(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

}  // namespace

template <class Model>
AmpEngine<Model>::AmpEngine(Model model, const DenseTensor& v, const ObservationMask& mask,
                            const SolverConfig& cfg)
    : model_(std::move(model)), v_(v), mask_(mask), cfg_(cfg) {
    cfg_.validate();
    if (!(v_.shape() == model_.shape()) || !(mask_.shape() == model_.shape()))
        throw std::domain_error("data, mask and model shapes differ");
    noise_var_ = cfg_.noise_var ? *cfg_.noise_var : estimate_noise_variance(v_, mask_, cfg_.snr);
    if (cfg_.learn_noise) noise_floor_ = 1e-10 * estimate_noise_variance(v_, mask_, 0.0);
    beta_ = cfg_.damping.mode == DampingConfig::Mode::off ? 1.0 : cfg_.damping.beta_init;
}

template <class Model>
void AmpEngine<Model>::initialize_from_prior() {
    const std::size_t n = model_.param_count();
    std::vector<double> mean(n);
    Rng rng(derive_seed(cfg_.seed, "init"));
    for (auto& m : mean) m = rng.normal(cfg_.prior.mean, cfg_.prior.var);
    set_moments(std::move(mean), std::vector<double>(n, cfg_.init_var_scale * cfg_.prior.var));
}

template <class Model>
void AmpEngine<Model>::set_moments(std::vector<double> mean, std::vector<double> var) {
    const std::size_t n = model_.param_count();
    if (mean.size() != n || var.size() != n) throw std::domain_error("factor moment sizes mismatch");
    const std::size_t total = model_.shape().total();
    state_ = AmpState{};
    state_.mean = std::move(mean);
    state_.var = std::move(var);
    for (double v : state_.var)
        if (v < 0.0) throw std::domain_error("factor variances must be >= 0");
    state_.s_hat.assign(total, 0.0);
    state_.nu_s.assign(total, 0.0);
    state_.nubar_p.assign(total, 0.0);
    state_.nu_p.assign(total, 0.0);
    state_.p_hat.assign(total, 0.0);
    state_.zbar = state_.mean;
    initialized_ = true;
    passes_ = 0;
    accepted_costs_.clear();
    log_.clear();
    has_best_ = false;
    beta_ = cfg_.damping.mode == DampingConfig::Mode::off ? 1.0 : cfg_.damping.beta_init;
}

template <class Model>
double AmpEngine<Model>::cost_of(const AmpState& st, const ForwardFields& f) const {
    std::vector<double> var_b;
    model_.belief_variance(st.mean, st.var, var_b);
    return surrogate_cost(st.mean, st.var, f.p_bar, var_b, v_, mask_, noise_var_, cfg_.prior);
}

template <class Model>
void AmpEngine<Model>::update(const ForwardFields& f, double beta) {
    AmpState& st = state_;
    const std::size_t total = model_.shape().total();
    // nubar_p, nu_p and nu_s have no previous value before the first update;
    // s starts from s(0) = 0 and zbar from the initial means.
    const double b = beta;
    const double b_first = st.primed ? beta : 1.0;

    std::vector<double> s_new(total);
    std::vector<double> nus_new(total);
    double em_sum = 0.0;
    // The expanded nu_p can turn nonpositive for d >= 3; such entries fall
    // back to the belief variance of the current means.
    std::vector<double> var_b;
    for (std::size_t x = 0; x < total; ++x) {
        const double nubar = damp(f.nubar_raw[x], st.nubar_p[x], b_first);
        const double p_hat = f.p_bar[x] - st.s_hat[x] * nubar;
        double raw = f.nu_prod[x] + nubar;
        if (raw <= 0.0) {
            if (var_b.empty()) model_.belief_variance(st.mean, st.var, var_b);
            raw = var_b[x];
            ++diag_.nu_p_fallbacks;
        }
        const double nu_p = damp(clamp_variance(raw), st.nu_p[x], b_first);
        const std::optional<double> obs =
            mask_.observed(x) ? std::optional<double>(v_[x]) : std::nullopt;
        const Moments r = residual_step(obs, p_hat, nu_p, noise_var_);
        if (cfg_.learn_noise && obs) {
            const Moments u = output_moments(obs, p_hat, nu_p, noise_var_);
            em_sum += (*obs - u.mean) * (*obs - u.mean) + u.var;
        }
        s_new[x] = damp(r.mean, st.s_hat[x], b);
        nus_new[x] = damp(r.var, st.nu_s[x], b_first);
        st.nubar_p[x] = nubar;
        st.nu_p[x] = nu_p;
        st.p_hat[x] = p_hat;
    }

    std::vector<double> zbar(st.mean.size());
    for (std::size_t p = 0; p < zbar.size(); ++p) zbar[p] = damp(st.mean[p], st.zbar[p], b);

    BackwardInput in;
    in.zbar = zbar;
    in.var = st.var;
    in.s_hat = s_new;
    in.nu_s = nus_new;
    in.s_prev = st.s_hat;
    in.neglected_term = cfg_.neglected_term;
    BackwardFields out;
    model_.backward(in, out);

    diag_.min_ratio = out.min_ratio;
    diag_.max_ratio = out.max_ratio;
    for (std::size_t p = 0; p < st.mean.size(); ++p) {
        if (!out.valid[p]) {
            ++diag_.fallbacks;
            st.mean[p] = cfg_.prior.mean;
            st.var[p] = cfg_.prior.var;
            continue;
        }
        const Moments post = input_posterior(out.r_hat[p], out.nu_r[p], cfg_.prior);
        st.mean[p] = post.mean;
        st.var[p] = clamp_variance(post.var);
    }
    st.zbar = std::move(zbar);
    em_noise_ = em_sum / static_cast<double>(mask_.count());
    st.s_hat = std::move(s_new);
    st.nu_s = std::move(nus_new);
    st.p_bar = f.p_bar;
    st.primed = true;
    ++st.t;
}

template <class Model>
IterationReport AmpEngine<Model>::iterate() {
    if (!initialized_) initialize_from_prior();
    IterationReport rep;
    rep.pass = ++passes_;

    ForwardFields f;
    model_.forward(state_.mean, state_.var, state_.s_hat, f);
    rep.finite = all_finite(f.p_bar);

    const auto& dc = cfg_.damping;
    if (dc.mode == DampingConfig::Mode::adaptive && rep.finite) {
        rep.cost = cost_of(state_, f);
        const AdaptDecision dec = adapt(beta_, rep.cost, accepted_costs_, dc);
        if (dec.accepted) {
            accepted_costs_.push_back(rep.cost);
            if (!has_best_ || rep.cost < best_cost_) {
                best_ = Snapshot{state_, f};
                best_cost_ = rep.cost;
                has_best_ = true;
            }
            beta_ = dec.beta;
            snapshot_ = Snapshot{state_, f};
        } else if (beta_ > dc.beta_min) {
            rep.accepted = false;
            beta_ = dec.beta;
            state_ = snapshot_.state;
            f = snapshot_.forward;
        } else {
            rep.accepted = false;
            rep.forced = true;
        }
        log_.push_back({rep.pass, beta_, rep.cost, rep.accepted, rep.forced});
    } else if (dc.mode == DampingConfig::Mode::fixed) {
        beta_ = dc.beta_init;
    }
    rep.beta = beta_;

    const double p_sq = sum_sq(f.p_bar);
    rep.p_norm = std::sqrt(p_sq);
    if (rep.accepted && !state_.p_bar.empty()) {
        double diff = 0.0;
        for (std::size_t x = 0; x < f.p_bar.size(); ++x) {
            const double e = f.p_bar[x] - state_.p_bar[x];
            diff += e * e;
        }
        rep.change = p_sq > 0.0 ? diff / p_sq : (diff > 0.0 ? INFINITY : 0.0);
        rep.converged = diff <= cfg_.tau * p_sq;
    }
    forward_ = f;
    if (!rep.finite) return rep;

    update(f, beta_);
    rep.finite = all_finite(state_.mean) && all_finite(state_.var) && all_finite(state_.s_hat);
    if (cfg_.learn_noise && rep.finite && std::isfinite(em_noise_)) {
        noise_var_ = std::max(em_noise_, noise_floor_);
        if (!accepted_costs_.empty()) accepted_costs_.assign(1, cost_of(snapshot_.state, snapshot_.forward));
        if (has_best_) best_cost_ = cost_of(best_.state, best_.forward);
    }
    return rep;
}

template <class Model>
RunResult AmpEngine<Model>::run() {
    if (!initialized_) initialize_from_prior();
    RunResult res;
    double first_norm = -1.0;
    for (std::size_t it = 0; it < cfg_.max_iter; ++it) {
        const IterationReport rep = iterate();
        res.iterations = rep.pass;
        res.final_change = rep.change;
        if (!rep.finite) {
            res.status = Status::diverged;
            break;
        }
        if (first_norm < 0.0) first_norm = rep.p_norm;
        if (first_norm > 0.0 && rep.p_norm / first_norm > kDivergenceRatio) {
            res.status = Status::diverged;
            break;
        }
        if (rep.converged) {
            res.status = Status::converged;
            break;
        }
    }
    if (cfg_.keep_best && has_best_) {
        ForwardFields f;
        model_.forward(state_.mean, state_.var, state_.s_hat, f);
        const double final_cost = all_finite(f.p_bar) && all_finite(state_.var) ? cost_of(state_, f) : INFINITY;
        if (!(final_cost <= best_cost_)) {
            state_ = best_.state;
            res.restored_best = true;
        }
    }
    std::vector<double> est;
    model_.plugin(state_.mean, est);
    res.estimate = DenseTensor(model_.shape(), std::move(est));
    res.noise_var = noise_var_;
    res.damping_log = log_;
    res.diagnostics = diag_;
    return res;
}

template class AmpEngine<TrModel>;
template class AmpEngine<CpModel>;

}  // namespace tegamp
