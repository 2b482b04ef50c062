#include "doctest.h"

#include "tegamp/config.hpp"
#include "tegamp/errors.hpp"
#include "tegamp/experiments.hpp"

#include <cmath>
#include <sstream>

using namespace tegamp;

TEST_CASE("mask fraction is close to the rate and nested across rates") {
    const Shape shape({20, 20, 20});
    const ObservationMask lo = sample_mask(shape, 0.3, 9);
    const ObservationMask hi = sample_mask(shape, 0.6, 9);
    CHECK(std::abs(static_cast<double>(lo.count()) / 8000.0 - 0.3) < 0.02);
    for (std::size_t k = 0; k < shape.total(); ++k)
        if (lo.observed(k)) CHECK(hi.observed(k));
    CHECK(sample_mask(shape, 1.0, 2).count() == 8000);
}

TEST_CASE("AWGN variance follows the SNR definition") {
    const Shape shape({40, 50, 30});
    const DenseTensor u = tr_full(random_tr(shape, RankVector({2, 2, 2}), 1));
    const double nu = snr_db_noise_variance(u, 20.0);
    CHECK(nu == doctest::Approx(u.frobenius_norm_sq() / (shape.total() * 100.0)));
    CHECK(snr_db_noise_variance(u, INFINITY) == 0.0);
    const DenseTensor v = add_awgn(u, nu, 7);
    double s = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) s += (v[k] - u[k]) * (v[k] - u[k]);
    CHECK(s / static_cast<double>(u.size()) == doctest::Approx(nu).epsilon(0.03));
}

TEST_CASE("relative error hand cases") {
    const Shape shape({4});
    const DenseTensor truth(shape, {1.0, 2.0, 3.0, 4.0});
    const DenseTensor est(shape, {1.0, 0.0, 3.0, 4.0});
    const ObservationMask mask(shape, {1, 0, 1, 0});
    CHECK(relative_error(truth, est, mask) == doctest::Approx(2.0 / std::sqrt(20.0)));
    CHECK(relative_error(truth, est, ObservationMask::full(shape)) == doctest::Approx(2.0 / std::sqrt(30.0)));
    CHECK(relative_error(DenseTensor(shape, 0.0), est, mask) == INFINITY);
    CHECK(nmse(truth, est) == doctest::Approx(4.0 / 30.0));
    const std::vector<double> errs{0.001, 0.01, 0.5, 0.009};
    CHECK(recovery_rate(errs) == doctest::Approx(0.5));
}

TEST_CASE("PGM loading scales by maxval") {
    std::istringstream in("P2\n# comment\n2 2\n255\n0 255\n255 0\n");
    const DenseTensor t = read_pgm(in);
    CHECK(t.shape().dims() == std::vector<std::size_t>{2, 2});
    CHECK(t.values() == std::vector<double>{0.0, 1.0, 1.0, 0.0});
}

TEST_CASE("malformed images report line and column") {
    std::istringstream pgm("P2\n2 2\n255\n0 12\n7 x\n");
    try {
        read_pgm(pgm);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 5);
        CHECK(e.column() == 3);
    }
    std::istringstream csv("0,1\n2,oops\n");
    try {
        read_image_csv(csv);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(e.column() > 0);
    }
    std::istringstream ragged("0,1\n2\n");
    CHECK_THROWS_AS(read_image_csv(ragged), ParseError);
}

TEST_CASE("CSV and PGM of one image load identically") {
    const DenseTensor img = load_image(TEGAMP_TEST_DATA "/digit5_0.pgm");
    std::stringstream pgm, csv;
    write_pgm(pgm, img);
    write_image_csv(csv, img);
    CHECK(read_pgm(pgm).values() == img.values());
    CHECK(read_image_csv(csv).values() == img.values());
}

TEST_CASE("image stacks are H x W x K") {
    std::vector<std::string> paths;
    for (int k = 0; k < 6; ++k) paths.push_back(TEGAMP_TEST_DATA "/digit5_" + std::to_string(k) + ".pgm");
    const DenseTensor stack = load_image_stack(paths);
    CHECK(stack.shape().dims() == std::vector<std::size_t>{28, 28, 6});
    const DenseTensor third = load_image(paths[2]);
    CHECK(stack.at({5, 9, 2}) == third.at({5, 9}));
}

TEST_CASE("plan parsing rejects unknown keys with the line") {
    std::istringstream in("generator = tr\nshape = 6,7,8\ntr-ranks = 2,2,2\nrates = 0.5\nwibble = 1\n");
    try {
        parse_plan(parse_key_values(in));
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 5") != std::string::npos);
    }
}

TEST_CASE("plan runs are deterministic and independent of jobs") {
    std::istringstream in(
        "generator = tr\nshape = 5,5,4\ntr-ranks = 2,2,2\nrates = 0.5, 0.8\ntrials = 3\nseed = 40\n"
        "solvers = tegamp, altmin-tr\nmax-iter = 30\naltmin-sweeps = 20\n");
    const ExperimentPlan plan = parse_plan(parse_key_values(in));
    const auto a = run_plan(plan, 1);
    const auto b = run_plan(plan, 3);
    CHECK(a.size() == 12);
    std::ostringstream ca, cb;
    write_results_csv(ca, a);
    write_results_csv(cb, b);
    CHECK(ca.str() == cb.str());
    CHECK(ca.str().rfind("solver,seed,p_omega,snr_db,epsilon,nmse,iterations,status,wall_ms\n", 0) == 0);
}

TEST_CASE("trial data does not depend on the solver list or the SNR mask") {
    ExperimentPlan plan;
    plan.shape = {4, 4, 4};
    plan.settings.tr_ranks = {2, 2, 2};
    plan.rates = {0.5};
    const TrialData a = make_trial(plan, 3, 0.5, INFINITY);
    plan.solvers = {SolverKind::altmin_tr, SolverKind::tegamp};
    const TrialData b = make_trial(plan, 3, 0.5, 10.0);
    CHECK(a.truth.values() == b.truth.values());
    CHECK(a.mask.bits() == b.mask.bits());
    CHECK(a.observed.values() != b.observed.values());
}

TEST_CASE("config values parse strictly") {
    CHECK(parse_double("k", " 2.5 ") == 2.5);
    CHECK_THROWS_AS(parse_double("k", "2.5x"), ConfigError);
    CHECK(parse_bool("k", "on"));
    CHECK_THROWS_AS(parse_count("k", "-3"), ConfigError);
    CHECK(split_list("1, 2 3") == std::vector<std::string>{"1", "2", "3"});
    std::istringstream dup("a = 1\n\n# x\na = 2\n");
    try {
        parse_key_values(dup);
        FAIL("expected a duplicate-key error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 4);
    }
    std::istringstream noeq("a = 1\n  b\n");
    try {
        parse_key_values(noeq);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(e.column() == 3);
    }
}

TEST_CASE("solver settings round through their keys") {
    SolverSettings s;
    CHECK(apply_solver_setting(s, "beta-min", "0.05"));
    CHECK(s.amp.damping.beta_min == 0.05);
    CHECK(apply_solver_setting(s, "prior-var", "auto"));
    CHECK(s.prior_var_auto);
    CHECK(apply_solver_setting(s, "damping", "fixed"));
    CHECK(s.amp.damping.mode == DampingConfig::Mode::fixed);
    CHECK_FALSE(apply_solver_setting(s, "rates", "0.5"));
    CHECK_THROWS_AS(apply_solver_setting(s, "max-iter", "many"), ConfigError);
    CHECK(parse_solver("altmin-cp") == SolverKind::altmin_cp);
    CHECK_THROWS(parse_solver("magic"));
}
