#include "doctest.h"
#include "oracles.hpp"

#include "tegamp/errors.hpp"
#include "tegamp/random.hpp"
#include "tegamp/tensor.hpp"

#include <sstream>

using namespace tegamp;

TEST_CASE("tr_contract equals the brute-force multisum") {
    Rng pick(77);
    for (int inst = 0; inst < 30; ++inst) {
        const std::size_t d = 2 + pick.next_u64() % 3;
        std::vector<std::size_t> dims(d), ranks(d);
        for (auto& n : dims) n = 1 + pick.next_u64() % 4;
        for (auto& r : ranks) r = 1 + pick.next_u64() % 3;
        const Shape shape(dims);
        const TRFactors f = random_tr(shape, RankVector(ranks), 100 + inst);
        const DenseTensor full = tr_full(f);
        MultiIndex x(d, 0);
        do {
            const double ref = oracle::tr_multisum(f, x);
            CHECK(oracle::rel_diff(tr_contract(f, x), ref) < 1e-12);
            CHECK(oracle::rel_diff(full.at(x), ref) < 1e-12);
        } while (next_index(shape, x));
    }
}

TEST_CASE("shape flattening is row-major") {
    const Shape s({2, 3, 4});
    CHECK(s.total() == 24);
    CHECK(s.flatten({1, 2, 3}) == 23);
    CHECK(s.flatten({0, 1, 0}) == 4);
    CHECK(s.unflatten(13) == MultiIndex{1, 0, 1});
    CHECK_FALSE(s.contains({2, 0, 0}));
}

TEST_CASE("CP embeds as a diagonal TR model") {
    const Shape shape({3, 4, 2});
    const CPFactors cp = random_cp(shape, 3, 9);
    const TRFactors tr = cp_to_tr(cp);
    CHECK(tr.ranks().values() == std::vector<std::size_t>{3, 3, 3});
    const DenseTensor a = cp_full(cp);
    const DenseTensor b = tr_full(tr);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(oracle::rel_diff(a[k], b[k]) < 1e-12);
    MultiIndex x(3, 0);
    do {
        CHECK(oracle::rel_diff(cp_evaluate(cp, x), a.at(x)) < 1e-12);
    } while (next_index(shape, x));
}

TEST_CASE("TT converts to TR with a unit wrap rank") {
    Rng rng(4);
    Eigen::MatrixXd first(3, 2), last(2, 4);
    for (long k = 0; k < first.size(); ++k) first.data()[k] = rng.normal();
    for (long k = 0; k < last.size(); ++k) last.data()[k] = rng.normal();
    TRCore mid(2, 5, 2);
    for (auto& v : mid.values()) v = rng.normal();
    const TRFactors tr = tt_to_tr(first, {mid}, last);
    CHECK(tr.ranks().values() == std::vector<std::size_t>{1, 2, 2});
    MultiIndex x{2, 3, 1};
    double ref = 0.0;
    for (long a = 0; a < 2; ++a)
        for (long b = 0; b < 2; ++b) ref += first(2, a) * mid(a, 3, b) * last(b, 1);
    CHECK(oracle::rel_diff(tr_contract(tr, x), ref) < 1e-12);
}

TEST_CASE("mismatched ring ranks are rejected") {
    std::vector<TRCore> cores{TRCore(2, 3, 2), TRCore(3, 3, 2)};
    CHECK_THROWS(TRFactors(std::move(cores)));
}

TEST_CASE("tensor text round trip is exact") {
    const DenseTensor t = tr_full(random_tr(Shape({2, 3, 2}), RankVector({2, 2, 2}), 3));
    std::stringstream ss;
    write_tensor(ss, t);
    const DenseTensor back = read_tensor(ss);
    CHECK(back.shape() == t.shape());
    CHECK(back.values() == t.values());
}

TEST_CASE("TR factor text round trip is exact") {
    const TRFactors f = random_tr(Shape({2, 3, 4}), RankVector({3, 1, 2}), 12);
    std::stringstream ss;
    write_tr_factors(ss, f);
    const TRFactors back = read_tr_factors(ss);
    REQUIRE(back.congruent(f));
    for (std::size_t i = 0; i < 3; ++i) CHECK(back.core(i).values() == f.core(i).values());
}

TEST_CASE("malformed tensor text reports the line") {
    std::istringstream in("dims: 2 2\n1\n2\nthree\n4\n");
    try {
        read_tensor(in);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 4);
    }
    std::istringstream short_in("dims: 2 2\n1\n2\n");
    CHECK_THROWS_AS(read_tensor(short_in), ParseError);
}

TEST_CASE("size lists parse with commas") {
    CHECK(parse_size_list("6,7,8") == std::vector<std::size_t>{6, 7, 8});
    CHECK_THROWS(parse_size_list("6,x"));
}
