#include "doctest.h"
#include "oracles.hpp"

#include "tegamp/channel.hpp"
#include "tegamp/teg_amp.hpp"

#include <cmath>

using namespace tegamp;

namespace {

std::vector<double> random_field(std::size_t n, std::uint64_t seed, bool positive) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = positive ? 0.1 + rng.uniform() : rng.normal();
    return v;
}

}  // namespace

TEST_CASE("plug-in estimate equals the tuple multisum") {
    const Shape shape({3, 4, 2});
    const auto z = oracle::random_moments(shape, RankVector({2, 3, 2}), 11);
    MultiIndex x(3, 0);
    do {
        CHECK(oracle::rel_diff(plugin_estimate(z, x), oracle::tr_multisum(z.mean, x)) < 1e-12);
    } while (next_index(shape, x));
}

TEST_CASE("onsager variance matches subset enumeration") {
    for (std::size_t d : {2u, 3u, 4u}) {
        std::vector<std::size_t> dims(d, 3), ranks(d, 2);
        ranks[0] = 3;
        const Shape shape(dims);
        const auto z = oracle::random_moments(shape, RankVector(ranks), 20 + d);
        for (double s_prev : {0.0, 0.7, -1.3}) {
            MultiIndex x(d, 0);
            do {
                const double ref = oracle::onsager(z, s_prev, x);
                CHECK(oracle::rel_diff(onsager_variance(z, s_prev, x), ref) < 1e-10);
                const Moments p = corrected_p(z, s_prev, x);
                CHECK(oracle::rel_diff(p.mean, oracle::tr_multisum(z.mean, x) - s_prev * ref) < 1e-10);
                CHECK(oracle::rel_diff(p.var, oracle::var_product_sum(z.var, x) + ref) < 1e-10);
            } while (next_index(shape, x));
        }
    }
}

TEST_CASE("zeta matches subset enumeration") {
    const Shape shape({2, 3, 2, 2});
    const RankVector ranks({2, 3, 1, 2});
    const auto z = oracle::random_moments(shape, ranks, 5);
    MultiIndex x(4, 0);
    do {
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t a = 0; a < ranks[i]; ++a)
                for (std::size_t b = 0; b < ranks[i + 1]; ++b)
                    CHECK(oracle::rel_diff(zeta(z, i, a, b, x), oracle::zeta(z, i, a, b, x)) < 1e-10);
    } while (next_index(shape, x));
}

TEST_CASE("r-step matches the direct sums") {
    const Shape shape({3, 2, 3});
    const RankVector ranks({2, 2, 3});
    const auto z = oracle::random_moments(shape, ranks, 8);
    const auto s_hat = random_field(shape.total(), 9, false);
    const auto nu_s = random_field(shape.total(), 10, true);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t a = 0; a < ranks[i]; ++a)
            for (std::size_t b = 0; b < ranks[i + 1]; ++b)
                for (std::size_t xi = 0; xi < shape.dim(i); ++xi) {
                    const RStep got = r_step(z, s_hat, nu_s, i, a, b, xi);
                    const auto ref = oracle::r_step(z, s_hat, nu_s, i, a, b, xi);
                    REQUIRE(got.ok);
                    CHECK(oracle::rel_diff(got.nu_r, ref.nu_r) < 1e-10);
                    CHECK(oracle::rel_diff(got.r_hat, ref.r_hat) < 1e-10);
                }
}

TEST_CASE("rank-1 order-2 case reduces to scalar formulas") {
    // u = z0 * z1, the r-step for z0 has c = z1 and zeta = nu1.
    const Shape shape({1, 1});
    FactorMoments z{TRFactors(shape, RankVector({1, 1})), TRFactors(shape, RankVector({1, 1}))};
    z.mean.core(0)(0, 0, 0) = 1.5;
    z.mean.core(1)(0, 0, 0) = -0.4;
    z.var.core(0)(0, 0, 0) = 0.3;
    z.var.core(1)(0, 0, 0) = 0.2;
    const MultiIndex x{0, 0};
    CHECK(onsager_variance(z, 0.9, x) == doctest::Approx(1.5 * 1.5 * 0.2 + 0.4 * 0.4 * 0.3));
    const std::vector<double> s{0.25}, nus{0.8};
    const RStep r = r_step(z, s, nus, 0, 0, 0, 0);
    CHECK(r.nu_r == doctest::Approx(1.0 / (0.16 * 0.8)));
    CHECK(r.r_hat == doctest::Approx(-0.4 * 0.25 / (0.16 * 0.8) + 1.5 * (1.0 - 0.8 * 0.2 / (0.16 * 0.8))));
}

TEST_CASE("belief variance matches subset enumeration") {
    const Shape shape({2, 3, 2});
    const RankVector ranks({2, 2, 3});
    const auto z = oracle::random_moments(shape, ranks, 3);
    const TrModel model(shape, ranks);
    std::vector<double> out;
    model.belief_variance(model.pack(z.mean), model.pack(z.var), out);
    for (std::size_t f = 0; f < shape.total(); ++f)
        CHECK(oracle::rel_diff(out[f], oracle::belief_variance(z, shape.unflatten(f))) < 1e-10);
}

TEST_CASE("model backward agrees with the standalone r-step") {
    const Shape shape({3, 3, 2});
    const RankVector ranks({2, 1, 2});
    const auto z = oracle::random_moments(shape, ranks, 31);
    const TrModel model(shape, ranks);
    const auto mean = model.pack(z.mean);
    const auto var = model.pack(z.var);
    const auto s_hat = random_field(shape.total(), 32, false);
    const auto nu_s = random_field(shape.total(), 33, true);
    BackwardInput in;
    in.zbar = mean;
    in.var = var;
    in.s_hat = s_hat;
    in.nu_s = nu_s;
    in.s_prev = s_hat;
    BackwardFields out;
    model.backward(in, out);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t a = 0; a < model.left(i); ++a)
            for (std::size_t b = 0; b < model.right(i); ++b)
                for (std::size_t xi = 0; xi < shape.dim(i); ++xi) {
                    const std::size_t p = model.param_index(i, a, xi, b);
                    const RStep r = r_step(z, s_hat, nu_s, i, a, b, xi);
                    CHECK(oracle::rel_diff(out.r_hat[p], r.r_hat) < 1e-10);
                    CHECK(oracle::rel_diff(out.nu_r[p], r.nu_r) < 1e-10);
                }
}

TEST_CASE("pack and unpack round trip") {
    const Shape shape({2, 3, 4});
    const RankVector ranks({3, 1, 2});
    const TRFactors f = random_tr(shape, ranks, 4);
    const TrModel model(shape, ranks);
    const TRFactors back = model.unpack(model.pack(f));
    for (std::size_t i = 0; i < 3; ++i) CHECK(back.core(i).values() == f.core(i).values());
}
