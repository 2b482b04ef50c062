// Acceptance checks, one PASS/FAIL line each; exit status 1 when any fails.

#include "oracles.hpp"

#include "tegamp/baselines.hpp"
#include "tegamp/channel.hpp"
#include "tegamp/experiments.hpp"
#include "tegamp/random.hpp"
#include "tegamp/teg_amp.hpp"
#include "tegamp/tes_amp.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>

using namespace tegamp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double limit_s;  // 0: no runtime limit
    std::function<Outcome()> run;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::size_t jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

// ---------------------------------------------------------------- 1

Outcome contraction_oracle() {
    Rng pick(0xC0FFEE);
    double worst = 0.0;
    for (int inst = 0; inst < 200; ++inst) {
        const std::size_t d = 2 + pick.next_u64() % 3;
        std::vector<std::size_t> dims(d), ranks(d);
        for (auto& n : dims) n = 1 + pick.next_u64() % 4;
        for (auto& r : ranks) r = 1 + pick.next_u64() % 3;
        const Shape shape(dims);
        const TRFactors f = random_tr(shape, RankVector(ranks), pick.next_u64());
        MultiIndex x(d, 0);
        do {
            const double ref = oracle::tr_multisum(f, x);
            worst = std::max(worst, oracle::rel_diff(tr_contract(f, x), ref));
        } while (next_index(shape, x));
    }
    return {worst <= 1e-12, "max relative error " + fmt("%.2e", worst)};
}

// ---------------------------------------------------------------- 2

Outcome variance_oracle() {
    Rng pick(0xBEEF);
    double worst = 0.0;
    auto track = [&](double got, double ref) { worst = std::max(worst, oracle::rel_diff(got, ref)); };
    for (std::size_t d : {2u, 3u, 4u}) {
        for (int st = 0; st < 100; ++st) {
            std::vector<std::size_t> dims(d), ranks(d);
            for (auto& n : dims) n = 2 + pick.next_u64() % 2;
            for (auto& r : ranks) r = 1 + pick.next_u64() % 3;
            const Shape shape(dims);
            const RankVector rv(ranks);
            const auto z = oracle::random_moments(shape, rv, pick.next_u64());
            const std::size_t cp_rank = 1 + pick.next_u64() % 3;
            const auto m = oracle::random_cp_moments(shape, cp_rank, pick.next_u64());
            const double s_prev = pick.normal();
            MultiIndex x(d, 0);
            do {
                const double ons = oracle::onsager(z, s_prev, x);
                track(onsager_variance(z, s_prev, x), ons);
                track(corrected_p(z, s_prev, x).var, oracle::var_product_sum(z.var, x) + ons);
                for (std::size_t i = 0; i < d; ++i)
                    for (std::size_t a = 0; a < rv[i]; ++a)
                        for (std::size_t b = 0; b < rv[i + 1]; ++b)
                            track(zeta(z, i, a, b, x), oracle::zeta(z, i, a, b, x));
                const double q_ons = oracle::cp_onsager(m, s_prev, x);
                track(cp_onsager_variance(m, s_prev, x), q_ons);
                track(cp_corrected(m, s_prev, x).var, oracle::cp_var_product_sum(m, x) + q_ons);
            } while (next_index(shape, x));
        }
    }
    return {worst <= 1e-12, "max relative error " + fmt("%.2e", worst)};
}

// ---------------------------------------------------------------- 3

Outcome channel_oracle() {
    const oracle::GaussHermite gh(80);
    auto posterior = [&](double a, double va, double b, double vb) {
        if (va > vb) std::swap(a, b), std::swap(va, vb);
        return oracle::quadrature_posterior(gh, a, va, [&](double u) { return oracle::normal_pdf(u, b, vb); });
    };
    const double means[] = {-2.0, -0.5, 0.0, 0.7, 3.0};
    const double vars[] = {0.05, 0.2, 0.5, 1.0, 2.0};
    const PriorModel prior{PriorModel::Kind::gaussian, 0.2, 1.0};
    const double v = 0.9, noise = 0.1, h = 1e-5;
    double quad = 0.0, fd = 0.0;
    for (double c : means)
        for (double nu : vars) {
            // input side: (u_hat, nu_u) = (g, nu_r g')
            const Moments in = input_posterior(c, nu, prior);
            const Moments in_ref = posterior(prior.mean, prior.var, c, nu);
            quad = std::max({quad, std::abs(in.mean - in_ref.mean), std::abs(in.var - in_ref.var)});
            const double g1 = (input_posterior(c + h, nu, prior).mean - input_posterior(c - h, nu, prior).mean) / (2 * h);
            fd = std::max(fd, std::abs(nu * g1 - in.var) / in.var);
            // output side: s_hat = g_out, nu_s = -g_out'
            const Moments out = output_moments(v, c, nu, noise);
            const Moments out_ref = posterior(c, nu, v, noise);
            const Moments s = residual_step(v, c, nu, noise);
            quad = std::max({quad, std::abs(out.mean - out_ref.mean), std::abs(out.var - out_ref.var),
                             std::abs(s.mean - (out_ref.mean - c) / nu),
                             std::abs(s.var - (1.0 - out_ref.var / nu) / nu)});
            const double s1 = (residual_step(v, c + h, nu, noise).mean - residual_step(v, c - h, nu, noise).mean) / (2 * h);
            fd = std::max(fd, std::abs(-s1 - s.var) / s.var);
        }
    return {quad <= 1e-6 && fd <= 1e-6,
            "quadrature gap " + fmt("%.2e", quad) + ", finite-difference relative gap " + fmt("%.2e", fd)};
}

// ---------------------------------------------------------------- 4

Outcome fixed_point() {
    const Shape shape({6, 7, 8});
    const RankVector ranks({2, 2, 2});
    double worst = 0.0;
    bool finite = true;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const TRFactors truth = random_tr(shape, ranks, 4000 + seed);
        const DenseTensor u = tr_full(truth);
        SolverConfig cfg;
        cfg.noise_var = 0.0;
        const TrModel model(shape, ranks);
        TegAmp engine(model, u, ObservationMask::full(shape), cfg);
        const auto mean = model.pack(truth);
        engine.set_moments(mean, std::vector<double>(mean.size(), 0.0));
        const IterationReport rep = engine.iterate();
        finite = finite && rep.finite;
        for (std::size_t k = 0; k < mean.size(); ++k)
            worst = std::max(worst, std::abs(engine.state().mean[k] - mean[k]));
    }
    return {finite && worst <= 1e-10, "largest mean change " + fmt("%.2e", worst)};
}

// ---------------------------------------------------------------- 5

Outcome damping_neutrality() {
    const Shape shape({6, 7, 8});
    const RankVector ranks({2, 2, 2});
    int identical = 0, violations = 0;
    std::size_t accepted = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const DenseTensor u = tr_full(random_tr(shape, ranks, 4100 + seed));
        const ObservationMask mask = sample_mask(shape, 0.6, 4200 + seed);
        SolverConfig off;
        off.noise_var = 0.0;
        off.seed = seed;
        off.max_iter = 100;
        off.damping.mode = DampingConfig::Mode::off;
        SolverConfig one = off;
        one.damping.mode = DampingConfig::Mode::fixed;
        one.damping.beta_init = 1.0;
        const auto a = teg_solve(u, mask, ranks, off);
        const auto b = teg_solve(u, mask, ranks, one);
        if (a.run.iterations == b.run.iterations && a.run.estimate.values() == b.run.estimate.values())
            ++identical;

        SolverConfig ad = off;
        ad.damping = DampingConfig{};
        const auto c = teg_solve(u, mask, ranks, ad);
        std::vector<double> hist;
        for (const auto& e : c.run.damping_log) {
            if (!e.accepted) continue;
            if (!hist.empty()) {
                const std::size_t k = std::min(hist.size(), ad.damping.window + 1);
                if (e.cost > *std::max_element(hist.end() - static_cast<long>(k), hist.end())) ++violations;
            }
            hist.push_back(e.cost);
        }
        accepted += hist.size();
    }
    return {identical == 20 && violations == 0,
            std::to_string(identical) + "/20 bit-identical, " + std::to_string(violations) +
                " window violations over " + std::to_string(accepted) + " accepted steps"};
}

// ---------------------------------------------------------------- 6, 7

std::map<std::pair<std::string, double>, double> recovery_by_rate(const std::vector<TrialRecord>& recs) {
    std::map<std::pair<std::string, double>, std::vector<double>> errs;
    for (const auto& r : recs) errs[{r.solver, r.p_omega}].push_back(r.epsilon);
    std::map<std::pair<std::string, double>, double> out;
    for (const auto& [k, e] : errs) out[k] = recovery_rate(e);
    return out;
}

Outcome recovery(bool cp) {
    ExperimentPlan plan;
    plan.generator = cp ? ExperimentPlan::Generator::cp : ExperimentPlan::Generator::tr;
    plan.shape = {6, 7, 8};
    plan.rates = {0.3, 0.5, 0.7, 0.9};
    if (!cp) plan.rates.insert(plan.rates.begin() + 3, 0.8);
    plan.trials = 25;
    plan.seed = cp ? 8000 : 7000;
    const char* amp = cp ? "tesamp" : "tegamp";
    const char* alt = cp ? "altmin-cp" : "altmin-tr";
    plan.solvers = {parse_solver(amp), parse_solver(alt)};
    if (cp) plan.settings.cp_rank = 2;
    else plan.settings.tr_ranks = {2, 2, 2};
    const auto rates = recovery_by_rate(run_plan(plan, jobs()));
    const double target_p = cp ? 0.7 : 0.8;
    bool pass = rates.at({amp, target_p}) >= 0.8;
    std::ostringstream d;
    d << amp << " at " << target_p << ": " << rates.at({amp, target_p}) << ";";
    for (double p : {0.3, 0.5, 0.7, 0.9}) {
        const double a = rates.at({amp, p}), b = rates.at({alt, p});
        pass = pass && a >= b;
        d << " p=" << p << " " << a << " vs " << b;
    }
    return {pass, d.str()};
}

// ---------------------------------------------------------------- 8

Outcome noise_robustness() {
    ExperimentPlan plan;
    plan.shape = {6, 7, 8};
    plan.settings.tr_ranks = {2, 2, 2};
    plan.rates = {1.0};
    plan.snr_db = {10.0, 20.0, 30.0, 40.0};
    plan.trials = 25;
    plan.seed = 9000;
    plan.true_noise = true;
    const auto recs = run_plan(plan, jobs());
    std::vector<double> med;
    std::ostringstream d;
    d << "median epsilon";
    for (double snr : plan.snr_db) {
        std::vector<double> e;
        for (const auto& r : recs)
            if (r.snr_db == snr) e.push_back(r.epsilon);
        std::sort(e.begin(), e.end());
        const std::size_t n = e.size();
        med.push_back(n % 2 ? e[n / 2] : 0.5 * (e[n / 2 - 1] + e[n / 2]));
        d << " " << snr << "dB=" << fmt("%.4g", med.back());
    }
    int inversions = 0;
    bool small = true;
    for (std::size_t k = 1; k < med.size(); ++k)
        if (med[k] > med[k - 1]) {
            ++inversions;
            small = small && med[k] - med[k - 1] <= 0.02;
        }
    return {inversions <= 1 && small, d.str()};
}

// ---------------------------------------------------------------- 9

Outcome image_ordering() {
    ExperimentPlan plan;
    plan.generator = ExperimentPlan::Generator::image;
    for (int k = 0; k < 6; ++k) plan.images.push_back(TEGAMP_TEST_DATA "/digit5_" + std::to_string(k) + ".pgm");
    plan.settings.tr_ranks = {14, 14, 6};
    plan.settings.prior_var_auto = true;
    plan.rates = {0.4};
    plan.seed = 2026;
    plan.solvers = {SolverKind::altmin_tr, SolverKind::tegamp};
    const auto recs = run_plan(plan, jobs());
    double teg = NAN, alt = NAN;
    std::string teg_status;
    for (const auto& r : recs) {
        if (r.solver == "tegamp") teg = r.nmse, teg_status = status_name(r.status);
        else alt = r.nmse;
    }
    return {teg < 0.5 * alt, "NMSE tegamp " + fmt("%.4g", teg) + " (" + teg_status + "), altmin-tr " + fmt("%.4g", alt)};
}

// ---------------------------------------------------------------- 10

Outcome altmin_monotone() {
    Rng pick(0xA17);
    int bad = 0;
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        std::vector<std::size_t> dims(3);
        for (auto& n : dims) n = 3 + pick.next_u64() % 5;
        const Shape shape(dims);
        const bool cp = k % 2 == 1;
        const DenseTensor u = cp ? cp_full(random_cp(shape, 2, pick.next_u64()))
                                 : tr_full(random_tr(shape, RankVector({2, 2, 2}), pick.next_u64()));
        const DenseTensor v = add_awgn(u, k % 4 < 2 ? 0.0 : 0.01, pick.next_u64());
        const ObservationMask mask = sample_mask(shape, 0.3 + 0.03 * k, pick.next_u64());
        AltMinConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(k);
        cfg.init = k % 3 == 0 ? AltMinConfig::Init::random : AltMinConfig::Init::spectral;
        cfg.max_sweeps = 100;
        const RunResult r = cp ? altmin_cp(v, mask, 2, cfg).run : altmin_tr(v, mask, RankVector({2, 2, 2}), cfg).run;
        bool ok = r.objective.size() >= 2;
        for (std::size_t t = 1; t < r.objective.size(); ++t) {
            worst = std::max(worst, r.objective[t] - r.objective[t - 1]);
            ok = ok && r.objective[t] <= r.objective[t - 1] + 1e-10;
        }
        if (!ok) ++bad;
    }
    return {bad == 0, std::to_string(20 - bad) + "/20 monotone, largest increase " + fmt("%.2e", std::max(worst, 0.0))};
}

// ---------------------------------------------------------------- 11

int shell(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Outcome bench_determinism() {
    const fs::path dir = fs::temp_directory_path() / "tegamp_acceptance_bench";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "plan.cfg") << "generator = tr\nshape = 5,6,4\ntr-ranks = 2,2,2\ncp-rank = 2\n"
                                       "rates = 0.5, 0.8\nsnr-db = inf, 20\ntrials = 3\nseed = 77\n"
                                       "solvers = tegamp, tesamp, altmin-tr, altmin-cp\n";
    const std::string base = std::string("\"") + TEGAMP_CLI + "\" bench --plan " + (dir / "plan.cfg").string();
    int codes = 0;
    codes += shell(base + " --out " + (dir / "a.csv").string() + " --jobs 1 >/dev/null 2>&1");
    codes += shell(base + " --out " + (dir / "b.csv").string() + " --jobs 1 >/dev/null 2>&1");
    codes += shell(base + " --out " + (dir / "c.csv").string() + " --jobs 4 >/dev/null 2>&1");
    const std::string a = slurp(dir / "a.csv");
    const long rows = std::count(a.begin(), a.end(), '\n') - 1;
    const bool same = !a.empty() && a == slurp(dir / "b.csv") && a == slurp(dir / "c.csv");
    return {codes == 0 && same && rows == 48,
            std::to_string(rows) + " rows, reruns " + (same ? "byte-identical" : "differ") + ", exit codes sum " +
                std::to_string(codes)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "contraction oracle", 5, contraction_oracle},
        {2, "variance-formula oracle", 30, variance_oracle},
        {3, "channel oracle", 0, channel_oracle},
        {4, "fixed point at the truth", 0, fixed_point},
        {5, "damping neutrality", 0, damping_neutrality},
        {6, "noiseless TR recovery", 600, [] { return recovery(false); }},
        {7, "noiseless CP recovery", 300, [] { return recovery(true); }},
        {8, "noise robustness", 0, noise_robustness},
        {9, "image-stack ordering", 900, image_ordering},
        {10, "AltMin monotone objective", 0, altmin_monotone},
        {11, "bench determinism", 0, bench_determinism},
    };
    // Optional arguments pick criteria by number.
    std::vector<int> only;
    for (int k = 1; k < argc; ++k) only.push_back(std::atoi(argv[k]));
    int failed = 0;
    for (const auto& c : all) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.limit_s > 0 && s > c.limit_s) {
            o.pass = false;
            o.detail += "; over the " + fmt("%.0f", c.limit_s) + " s limit";
        }
        if (!o.pass) ++failed;
        std::printf("[%s] C%d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), s);
        std::fflush(stdout);
    }
    std::printf("%d failed\n", failed);
    return failed == 0 ? 0 : 1;
}
