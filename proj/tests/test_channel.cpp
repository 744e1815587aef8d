#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "precoder/channel.hpp"
#include "fixtures.hpp"
#include "test_util.hpp"

using namespace precoder;
using namespace precoder::testing;

TEST_CASE("channel pair validation") {
    Rng rng(1);
    CHECK_THROWS_AS(ChannelPair(random_matrix(rng, 2, 3), random_matrix(rng, 2, 2), 20.0), Error);
    CHECK_THROWS_AS(ChannelPair(random_matrix(rng, 2, 3), random_matrix(rng, 2, 3), 0.0), Error);
    ChannelPair ch(random_matrix(rng, 2, 3), random_matrix(rng, 4, 3), 20.0);
    CHECK(ch.tx_antennas() == 3);
    CHECK(ch.rx1_antennas() == 2);
    CHECK(ch.rx2_antennas() == 4);
}

TEST_CASE("covariance matrix validation") {
    CHECK_THROWS_AS(CovarianceMatrix(Matrix(2, 2, {1.0, 0.5, -0.5, 1.0})), Error);

    // negative eigenvalue
    CovarianceMatrix bad(Matrix(2, 2, {1.0, 2.0, 2.0, 1.0}));
    CHECK_THROWS_AS(bad.validate(20.0), Error);

    // trace above budget
    CovarianceMatrix hot(Matrix(2, 2, {15.0, 0.0, 0.0, 15.0}));
    CHECK_THROWS_AS(hot.validate(20.0), Error);
    CHECK_NOTHROW(hot.validate(30.0));
}

TEST_CASE("mode table codes and EH levels") {
    const int expected[13][4] = {{0, 0, 0, 1}, {0, 0, 1, 0}, {0, 0, 1, 1}, {0, 1, 0, 0},
                                 {0, 1, 0, 1}, {0, 1, 1, 0}, {0, 1, 1, 1}, {1, 0, 0, 0},
                                 {1, 0, 0, 1}, {1, 0, 1, 0}, {1, 0, 1, 1}, {1, 1, 0, 0},
                                 {1, 1, 0, 1}};
    for (int k = 1; k <= 13; ++k) {
        const Mode mode = Mode::from_index(k);
        const auto code = mode.code();
        for (int b = 0; b < 4; ++b) CHECK(code[b] == expected[k - 1][b]);
        auto decoded = Mode::from_code(code);
        REQUIRE(decoded.has_value());
        CHECK(decoded->index() == k);
        CHECK(mode.eh_level().has_value() == (k >= 3 && k <= 11));
    }
    CHECK(*Mode::from_index(3).eh_level() == doctest::Approx(0.9));
    CHECK(*Mode::from_index(7).eh_level() == doctest::Approx(0.5));
    CHECK(*Mode::from_index(11).eh_level() == doctest::Approx(0.1));
    CHECK(Mode::from_name("M12").index() == 12);
    CHECK(!Mode::from_code({1, 1, 1, 0}).has_value());
    CHECK_THROWS_AS(Mode::from_index(14), Error);
}

TEST_CASE("rate_wit isotropic case and zero covariance") {
    ChannelPair ch(Matrix::identity(3), Matrix::identity(3), 20.0);
    CovarianceMatrix zero(Matrix(3, 3));
    CHECK(rate_wit(ch, zero, 1) == 0.0);

    std::vector<double> third(3, 20.0 / 3.0);
    CovarianceMatrix uniform(Matrix::diagonal(third));
    const double expected = 1.5 * std::log2(1.0 + 20.0 / 3.0);
    CHECK(rate_wit(ch, uniform, 1) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(4.41).epsilon(1e-2));
}

TEST_CASE("rate_wit matches direct determinant evaluation") {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n1 = 1 + rng.uniform_int(5);
        ChannelPair ch = random_channel(rng, n1, 1 + rng.uniform_int(5), 3, 20.0);
        CovarianceMatrix q(random_covariance(rng, 3, 20.0 * rng.uniform()));
        const int user = trial % 2 ? 1 : 2;
        const Matrix& h = user == 1 ? ch.h1 : ch.h2;
        const std::size_t n = h.rows();
        const double oracle = 0.5 * std::log2(det(Matrix::identity(n) + h * q.matrix() * h.transposed()));
        CHECK(rate_wit(ch, q, user) == doctest::Approx(oracle).epsilon(1e-10));
    }
}

TEST_CASE("harvested energy padded diagonal case and trace identity") {
    Matrix h2(3, 3, {2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0});
    ChannelPair ch(Matrix::identity(3), std::move(h2), 20.0);
    Matrix q(3, 3);
    q(0, 0) = 20.0;
    CHECK(harvested_energy(ch, CovarianceMatrix(std::move(q))) == doctest::Approx(80.0));
    CHECK(harvested_energy(ch, CovarianceMatrix(Matrix(3, 3))) == 0.0);

    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        ChannelPair rch = random_channel(rng, 2, 1 + rng.uniform_int(5), 3, 20.0);
        CovarianceMatrix cq(random_covariance(rng, 3, 20.0));
        const Matrix inner = rch.h2.transposed() * rch.h2 * cq.matrix();
        CHECK(harvested_energy(rch, cq) == doctest::Approx(inner.trace()).epsilon(1e-10));
    }
}

TEST_CASE("harvested energy is linear in the covariance") {
    Rng rng(9);
    ChannelPair ch = random_channel(rng, 2, 3, 3, 40.0);
    Matrix q1 = random_covariance(rng, 3, 10.0);
    Matrix q2 = random_covariance(rng, 3, 10.0);
    const double a = 0.7, b = 1.3;
    const double lhs = harvested_energy(ch, CovarianceMatrix(a * q1 + b * q2));
    const double rhs = a * harvested_energy(ch, CovarianceMatrix(q1)) +
                       b * harvested_energy(ch, CovarianceMatrix(q2));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("secrecy rate identities") {
    Rng rng(10);
    Matrix h = random_matrix(rng, 2, 3);
    ChannelPair same(h, h, 20.0);
    ChannelPair silent(h, Matrix(2, 3), 20.0);
    for (int trial = 0; trial < 20; ++trial) {
        CovarianceMatrix q(random_covariance(rng, 3, 20.0 * rng.uniform()));
        CHECK(secrecy_rate(same, q) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(secrecy_rate(silent, q) == doctest::Approx(rate_wit(silent, q, 1)));
        // exact difference identity
        ChannelPair ch = random_channel(rng, 2, 2, 3, 20.0);
        CHECK(secrecy_rate(ch, q) == rate_wit(ch, q, 1) - rate_wit(ch, q, 2));
    }
    CHECK(secrecy_rate(same, CovarianceMatrix(Matrix(3, 3))) == 0.0);
}

TEST_CASE("multicast rate equals the component minimum") {
    Rng rng(11);
    Matrix h = random_matrix(rng, 2, 3);
    ChannelPair same(h, h, 20.0);
    for (int trial = 0; trial < 50; ++trial) {
        ChannelPair ch = random_channel(rng, 1 + rng.uniform_int(3), 1 + rng.uniform_int(3), 3, 20.0);
        CovarianceMatrix q(random_covariance(rng, 3, 20.0 * rng.uniform()));
        CHECK(multicast_rate(ch, q) == std::min(rate_wit(ch, q, 1), rate_wit(ch, q, 2)));
        CHECK(multicast_rate(same, q) == doctest::Approx(rate_wit(same, q, 1)));
    }
    CHECK(multicast_rate(same, CovarianceMatrix(Matrix(3, 3))) == 0.0);
}

TEST_CASE("apply_precoder basics") {
    std::vector<double> lambda{4.0, 0.0, 0.0};
    std::vector<double> zero(3, 0.0);
    auto x0 = apply_precoder(Matrix::identity(3), lambda, zero);
    for (double v : x0) CHECK(v == 0.0);

    std::vector<double> e1{1.0, 0.0, 0.0};
    auto x = apply_precoder(Matrix::identity(3), lambda, e1);
    CHECK(x[0] == doctest::Approx(2.0));
    CHECK(x[1] == 0.0);
    CHECK(x[2] == 0.0);

    std::vector<double> neg{-1.0, 0.0, 0.0};
    CHECK_THROWS_AS(apply_precoder(Matrix::identity(3), neg, e1), Error);
}

TEST_CASE("apply_precoder empirical covariance matches V Lambda V^T") {
    Rng rng(12);
    const Matrix v = sym_eig(random_symmetric(rng, 3)).vectors; // any orthonormal basis
    const std::vector<double> lambda{5.0, 3.0, 1.0};

    Matrix expected(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < 3; ++k) s += v(i, k) * lambda[k] * v(j, k);
            expected(i, j) = s;
        }

    const int draws = 100000;
    Matrix accum(3, 3);
    std::vector<double> s(3);
    for (int d = 0; d < draws; ++d) {
        for (double& si : s) si = rng.normal();
        const auto x = apply_precoder(v, lambda, s);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) accum(i, j) += x[i] * x[j];
    }
    accum *= 1.0 / draws;
    CHECK((accum - expected).frobenius_norm() <= 0.02 * expected.frobenius_norm());
}
