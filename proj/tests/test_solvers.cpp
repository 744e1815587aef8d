#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "precoder/solvers.hpp"
#include "fixtures.hpp"
#include "test_util.hpp"

using namespace precoder;
using namespace precoder::testing;

namespace {

SolverConfig fast_config(std::uint64_t seed = 99) {
    SolverConfig cfg;
    cfg.restarts = 4;
    cfg.seed = seed;
    return cfg;
}

RotationParams neutral_init(std::size_t m, double power) {
    RotationParams r;
    r.lambdas.assign(m, power / static_cast<double>(m));
    r.thetas.assign(num_angles(m), 0.0);
    return r;
}

} // namespace

TEST_CASE("generic ascent reproduces the water-filling rate") {
    Rng rng(41);
    for (int trial = 0; trial < 6; ++trial) {
        ChannelPair ch = random_channel(rng, 1 + rng.uniform_int(5), 1 + rng.uniform_int(5), 3, 20.0);
        ObjectiveFn rate = [&](const Matrix& q) { return logdet_rate(ch.h1, q); };
        const SolveReport rep =
            maximize_over_rotation(rate, ch, fast_config(trial), neutral_init(3, 20.0));
        const double closed = solve_wit(ch).rate;
        CHECK(rep.objective == doctest::Approx(closed).epsilon(0).scale(1.0).epsilon(1e-4));
        CHECK(rep.objective <= closed + 1e-9);
        rep.q_opt.validate(20.0);
    }
}

TEST_CASE("generic ascent reproduces the harvesting energy") {
    Rng rng(42);
    for (int trial = 0; trial < 6; ++trial) {
        ChannelPair ch = random_channel(rng, 1, 1 + rng.uniform_int(5), 3, 20.0);
        ObjectiveFn energy = [&](const Matrix& q) {
            return harvested_energy(ch, CovarianceMatrix(q));
        };
        const SolveReport rep =
            maximize_over_rotation(energy, ch, fast_config(trial), neutral_init(3, 20.0));
        const double closed = solve_eh(ch).energy;
        CHECK(std::fabs(rep.objective - closed) <= 1e-4 * 20.0);
        rep.q_opt.validate(20.0);
    }
}

TEST_CASE("scalar transmitter reduces to a line search") {
    Rng rng(43);
    ChannelPair ch(Matrix(1, 1, {1.3}), Matrix(1, 1, {0.4}), 20.0);
    ObjectiveFn rate = [&](const Matrix& q) { return logdet_rate(ch.h1, q); };
    const SolveReport rep = maximize_over_rotation(rate, ch, fast_config(), neutral_init(1, 20.0));
    CHECK(rep.q_opt.matrix()(0, 0) == doctest::Approx(20.0).epsilon(1e-6));
}

TEST_CASE("NaN objectives surface as NonFinite errors") {
    ChannelPair ch(Matrix::identity(2), Matrix::identity(2), 10.0);
    ObjectiveFn poison = [](const Matrix&) { return std::nan(""); };
    try {
        maximize_over_rotation(poison, ch, fast_config(), neutral_init(2, 10.0));
        FAIL("expected NonFinite");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonFinite);
        CHECK(std::string(e.what()).find("lambda") != std::string::npos);
    }
}

TEST_CASE("swipt endpoints coincide with the closed forms") {
    const ChannelPair ch = region_fixture(20.0);
    const WaterfillResult wit = solve_wit(ch);
    const EhResult eh = solve_eh(ch);

    const SolveReport at0 = solve_swipt(ch, 0.0, fast_config());
    CHECK(at0.objective == doctest::Approx(wit.rate));
    CHECK(harvested_energy(ch, at0.q_opt) >= energy_bounds(ch).e_min - 1e-9);

    const SolveReport at1 = solve_swipt(ch, 1.0, fast_config());
    CHECK(harvested_energy(ch, at1.q_opt) == doctest::Approx(eh.energy).epsilon(1e-9));
    CHECK(at1.objective == doctest::Approx(rate_wit(ch, eh.q_opt, 1)));
}

TEST_CASE("swipt constraint holds and the rate decreases with the level") {
    const ChannelPair ch = region_fixture(20.0);
    const EnergyBounds bounds = energy_bounds(ch);
    double prev_rate = std::numeric_limits<double>::infinity();
    double prev_energy = -1.0;
    for (double level : {0.0, 0.3, 0.6, 0.9, 1.0}) {
        const SolveReport rep = solve_swipt(ch, level, fast_config());
        const double e_bar = bounds.threshold(level);
        CHECK(rep.constraint_violation <= 1e-4 * std::max(e_bar, 1.0));
        const double energy = harvested_energy(ch, rep.q_opt);
        CHECK(energy >= e_bar - 1e-4 * std::max(e_bar, 1.0));
        CHECK(rep.objective <= prev_rate + 1e-6);
        CHECK(energy >= prev_energy - 1e-6);
        rep.q_opt.validate(20.0);
        prev_rate = rep.objective;
        prev_energy = energy;
    }
    CHECK_THROWS_AS(solve_swipt(ch, 1.5, fast_config()), Error);
}

TEST_CASE("secrecy solver on an absent eavesdropper matches water-filling") {
    Rng rng(44);
    Matrix h1 = random_matrix(rng, 2, 3);
    ChannelPair ch(h1, Matrix(1, 3), 20.0);
    const SolveReport rep = solve_secrecy(ch, fast_config());
    CHECK(std::fabs(rep.objective - solve_wit(ch).rate) <= 1e-4);
}

TEST_CASE("secrecy solver on identical channels settles at zero") {
    Rng rng(45);
    Matrix h = random_matrix(rng, 2, 3);
    ChannelPair ch(h, h, 20.0);
    const SolveReport rep = solve_secrecy(ch, fast_config());
    CHECK(rep.objective >= 0.0);
    CHECK(rep.objective <= 1e-6);
}

TEST_CASE("secrecy solver dominates its own initialization") {
    Rng rng(46);
    for (int trial = 0; trial < 5; ++trial) {
        ChannelPair ch = random_channel(rng, 2, 1, 3, 20.0);
        const SolveReport rep = solve_secrecy(ch, fast_config(trial));
        CHECK(rep.objective >= 0.0);
        CHECK(rep.objective >= secrecy_rate(ch, solve_wit(ch).q_opt) - 1e-9);
        rep.q_opt.validate(20.0);
    }
}

TEST_CASE("multicast shortcut cases") {
    Rng rng(47);
    Matrix h = random_matrix(rng, 2, 3);
    ChannelPair same(h, h, 20.0);
    const SolveReport rep = solve_multicast(same, fast_config());
    REQUIRE(rep.case_tag.has_value());
    CHECK(*rep.case_tag == MulticastCase::Case1);
    CHECK(rep.objective == doctest::Approx(solve_wit(same).rate));

    Matrix strong = 10.0 * h;
    ChannelPair lopsided(h, strong, 20.0);
    const SolveReport rep2 = solve_multicast(lopsided, fast_config());
    REQUIRE(rep2.case_tag.has_value());
    CHECK(*rep2.case_tag == MulticastCase::Case1); // user 1 is the bottleneck
    CHECK(rep2.objective == doctest::Approx(solve_wit(lopsided).rate));
}

TEST_CASE("multicast case tags agree with direct test evaluation") {
    Rng rng(48);
    int case3 = 0;
    for (int trial = 0; trial < 40; ++trial) {
        ChannelPair ch = random_channel(rng, 1 + rng.uniform_int(3), 1 + rng.uniform_int(3), 3, 20.0);
        const SolveReport rep = solve_multicast(ch, fast_config(trial));
        const WaterfillResult opt1 = solve_wit_matrix(ch.h1, 20.0);
        const WaterfillResult opt2 = solve_wit_matrix(ch.h2, 20.0);
        const bool case1 = rate_wit(ch, opt1.q_opt, 1) <= rate_wit(ch, opt1.q_opt, 2);
        const bool case2 = rate_wit(ch, opt2.q_opt, 1) >= rate_wit(ch, opt2.q_opt, 2);
        REQUIRE(rep.case_tag.has_value());
        if (case1) {
            CHECK(*rep.case_tag == MulticastCase::Case1);
            CHECK(max_abs_diff(rep.q_opt.matrix(), opt1.q_opt.matrix()) == 0.0); // bit for bit
        } else if (case2) {
            CHECK(*rep.case_tag == MulticastCase::Case2);
            CHECK(max_abs_diff(rep.q_opt.matrix(), opt2.q_opt.matrix()) == 0.0);
        } else {
            CHECK(*rep.case_tag == MulticastCase::Case3);
            ++case3;
        }
        // never above the single-user optima
        CHECK(rep.objective <= std::min(opt1.rate, solve_wit_matrix(ch.h2, 20.0).rate) + 1e-9);
        rep.q_opt.validate(20.0);
    }
    CHECK(case3 > 0); // the ascent path must be exercised
}

TEST_CASE("solvers are deterministic given the seed") {
    const ChannelPair ch = region_fixture(20.0);
    const SolveReport a = solve_secrecy(ch, fast_config(7));
    const SolveReport b = solve_secrecy(ch, fast_config(7));
    CHECK(a.objective == b.objective);
    CHECK(a.iterations == b.iterations);
    CHECK(max_abs_diff(a.q_opt.matrix(), b.q_opt.matrix()) == 0.0);

    const SolveReport c = solve_swipt(ch, 0.5, fast_config(7));
    const SolveReport d = solve_swipt(ch, 0.5, fast_config(7));
    CHECK(c.objective == d.objective);
    CHECK(max_abs_diff(c.q_opt.matrix(), d.q_opt.matrix()) == 0.0);
}

TEST_CASE("solve_mode dispatches to every objective") {
    const ChannelPair ch = region_fixture(20.0);
    CHECK(solve_mode(ch, Mode::from_index(1), fast_config()).objective ==
          doctest::Approx(solve_wit(ch).rate));
    CHECK(solve_mode(ch, Mode::from_index(2), fast_config()).objective ==
          doctest::Approx(solve_eh(ch).energy));
    const SolveReport swipt = solve_mode(ch, Mode::from_index(7), fast_config());
    CHECK(swipt.constraint_violation <= 1e-4 * energy_bounds(ch).threshold(0.5));
    CHECK(solve_mode(ch, Mode::from_index(12), fast_config()).objective >= 0.0);
    CHECK(solve_mode(ch, Mode::from_index(13), fast_config()).case_tag.has_value());
}
