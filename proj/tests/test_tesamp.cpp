#include "doctest.h"
#include "oracles.hpp"

#include "tegamp/experiments.hpp"
#include "tegamp/tes_amp.hpp"

#include <cmath>

using namespace tegamp;

namespace {

std::vector<double> field(std::size_t n, std::uint64_t seed, bool positive) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = positive ? 0.1 + rng.uniform() : rng.normal();
    return v;
}

}  // namespace

TEST_CASE("CP plug-in and Onsager terms match enumeration") {
    for (std::size_t d : {2u, 3u, 4u}) {
        const Shape shape(std::vector<std::size_t>(d, 3));
        const auto m = oracle::random_cp_moments(shape, 3, 40 + d);
        for (double s_prev : {0.0, -0.6}) {
            MultiIndex x(d, 0);
            do {
                double plug = 0.0;
                for (std::size_t l = 0; l < 3; ++l) {
                    double t = 1.0;
                    for (std::size_t j = 0; j < d; ++j) t *= m.mean.factor(j)(static_cast<long>(x[j]), static_cast<long>(l));
                    plug += t;
                }
                CHECK(oracle::rel_diff(cp_plugin(m, x), plug) < 1e-12);
                const double ons = oracle::cp_onsager(m, s_prev, x);
                CHECK(oracle::rel_diff(cp_onsager_variance(m, s_prev, x), ons) < 1e-12);
                const Moments q = cp_corrected(m, s_prev, x);
                CHECK(oracle::rel_diff(q.mean, plug - s_prev * ons) < 1e-12);
                CHECK(oracle::rel_diff(q.var, oracle::cp_var_product_sum(m, x) + ons) < 1e-12);
            } while (next_index(shape, x));
        }
    }
}

TEST_CASE("CP zeta matches enumeration") {
    const Shape shape({2, 3, 2, 3});
    const auto m = oracle::random_cp_moments(shape, 2, 51);
    MultiIndex x(4, 0);
    do {
        for (std::size_t l = 0; l < 2; ++l)
            for (std::size_t i = 0; i < 4; ++i)
                CHECK(oracle::rel_diff(cp_zeta(m, l, i, x), oracle::cp_zeta(m, l, i, x)) < 1e-12);
    } while (next_index(shape, x));
}

TEST_CASE("CP r-step matches the direct sums") {
    const Shape shape({3, 2, 4});
    const auto m = oracle::random_cp_moments(shape, 2, 60);
    const auto s_hat = field(shape.total(), 61, false);
    const auto nu_s = field(shape.total(), 62, true);
    const auto s_prev = field(shape.total(), 63, false);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t l = 0; l < 2; ++l)
            for (std::size_t xi = 0; xi < shape.dim(i); ++xi) {
                double num = 0.0, den = 0.0, zsum = 0.0;
                for (std::size_t f = 0; f < shape.total(); ++f) {
                    const MultiIndex x = shape.unflatten(f);
                    if (x[i] != xi) continue;
                    double c = 1.0;
                    for (std::size_t j = 0; j < 3; ++j)
                        if (j != i) c *= m.mean.factor(j)(static_cast<long>(x[j]), static_cast<long>(l));
                    num += c * s_hat[f];
                    den += c * c * nu_s[f];
                    zsum += nu_s[f] * oracle::cp_zeta(m, l, i, x);
                }
                const double self = m.mean.factor(i)(static_cast<long>(xi), static_cast<long>(l));
                const double nu_r = 1.0 / den;
                const double r_hat = nu_r * num + self * (1.0 - nu_r * zsum);
                const CpRStep plain = cp_r_step(m, s_hat, nu_s, l, i, xi);
                REQUIRE(plain.ok);
                CHECK(oracle::rel_diff(plain.nu_r, nu_r) < 1e-10);
                CHECK(oracle::rel_diff(plain.r_hat, r_hat) < 1e-10);

                const CpRStep full = cp_r_step(m, s_hat, nu_s, l, i, xi, true, s_prev);
                const double extra = oracle::cp_higher_term(m, s_hat, s_prev, l, i, xi, nu_r);
                CHECK(oracle::rel_diff(full.r_hat, r_hat + extra) < 1e-10);
            }
}

TEST_CASE("CP model agrees with the TR embedding on the plug-in") {
    const Shape shape({3, 4, 2});
    const CPFactors cp = random_cp(shape, 2, 8);
    const CpModel model(shape, 2);
    std::vector<double> out;
    model.plugin(model.pack(cp), out);
    const DenseTensor ref = tr_full(cp_to_tr(cp));
    for (std::size_t k = 0; k < out.size(); ++k) CHECK(oracle::rel_diff(out[k], ref[k]) < 1e-12);
}

TEST_CASE("TeS-AMP recovers most well-sampled rank-2 problems") {
    const Shape shape({6, 7, 8});
    int recovered = 0;
    for (std::uint64_t seed = 300; seed < 306; ++seed) {
        const DenseTensor u = cp_full(random_cp(shape, 2, seed));
        const ObservationMask mask = sample_mask(shape, 0.9, seed + 50);
        SolverConfig cfg;
        cfg.noise_var = 0.0;
        cfg.seed = seed;
        const auto r = tes_solve(u, mask, 2, cfg);
        if (relative_error(u, r.run.estimate, mask) < 0.01) ++recovered;
    }
    CHECK(recovered >= 4);
}
