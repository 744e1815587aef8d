#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "precoder/closed_form.hpp"
#include "precoder/rotation.hpp"
#include "fixtures.hpp"
#include "test_util.hpp"

using namespace precoder;
using namespace precoder::testing;

namespace {

/// Exhaustive active-set projection onto {x >= 0, sum x <= P}; independent
/// of the sort-based production code. m <= 4 only.
std::vector<double> brute_force_projection(const std::vector<double>& lam, double power) {
    const std::size_t m = lam.size();
    std::vector<double> best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t mask = 0; mask < (1u << m); ++mask) {
        std::vector<std::size_t> free;
        for (std::size_t i = 0; i < m; ++i)
            if (!(mask & (1u << i))) free.push_back(i);
        // candidate a: interior of the budget constraint (tau = 0)
        // candidate b: on the budget hyperplane over the free set
        for (int on_plane = 0; on_plane <= 1; ++on_plane) {
            std::vector<double> x(m, 0.0);
            double tau = 0.0;
            if (on_plane) {
                if (free.empty()) continue;
                double sum = 0.0;
                for (auto i : free) sum += lam[i];
                tau = (sum - power) / static_cast<double>(free.size());
                if (tau < -1e-12) continue; // KKT: multiplier must be nonnegative
            }
            bool ok = true;
            double sum = 0.0, dist = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const bool is_free = !(mask & (1u << i));
                x[i] = is_free ? lam[i] - tau : 0.0;
                if (x[i] < -1e-12) ok = false;
                sum += x[i];
                dist += (x[i] - lam[i]) * (x[i] - lam[i]);
            }
            if (!ok || sum > power + 1e-9) continue;
            if (dist < best_dist) {
                best_dist = dist;
                best = x;
            }
        }
    }
    return best;
}

double roundtrip_error(const Matrix& q) {
    const CovarianceMatrix cov(q);
    const RotationParams r = covariance_to_params(cov);
    const CovarianceMatrix back = params_to_covariance(r);
    Matrix diff = back.matrix();
    diff -= q;
    return diff.frobenius_norm();
}

} // namespace

TEST_CASE("angle count bookkeeping") {
    CHECK(num_angles(1) == 0);
    CHECK(num_angles(2) == 1);
    CHECK(num_angles(3) == 3);
    CHECK(num_angles(5) == 10);

    RotationParams r;
    r.lambdas = {1.0, 2.0, 3.0};
    r.thetas = {0.1, 0.2}; // one short
    CHECK_THROWS_AS(params_to_covariance(r), Error);
    r.thetas = {0.1, 0.2, 0.3};
    CHECK_NOTHROW(params_to_covariance(r));
    r.lambdas[1] = -0.5;
    CHECK_THROWS_AS(params_to_covariance(r), Error);
}

TEST_CASE("zero angles give a diagonal covariance") {
    RotationParams r;
    r.lambdas = {5.0, 3.0, 2.0};
    r.thetas = {0.0, 0.0, 0.0};
    const CovarianceMatrix q = params_to_covariance(r);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(q.matrix()(i, j) == doctest::Approx(i == j ? r.lambdas[i] : 0.0));
}

TEST_CASE("composed covariance has the prescribed spectrum and trace") {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = 2 + rng.uniform_int(4);
        RotationParams r;
        r.lambdas.resize(m);
        for (double& l : r.lambdas) l = 10.0 * rng.uniform();
        r.thetas.resize(num_angles(m));
        for (double& t : r.thetas) t = rng.uniform(-8.0, 8.0);

        const CovarianceMatrix q = params_to_covariance(r);
        CHECK(q.trace() == doctest::Approx(r.power()).epsilon(1e-12));

        auto sorted = r.lambdas;
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        const auto eig = sym_eig(q.matrix());
        for (std::size_t i = 0; i < m; ++i)
            CHECK(eig.values[i] == doctest::Approx(sorted[i]).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("constructed rotation matrices have determinant +1") {
    Rng rng(32);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t m = 2 + rng.uniform_int(5);
        std::vector<double> thetas(num_angles(m));
        for (double& t : thetas) t = rng.uniform(-10.0, 10.0);
        const Matrix v = rotation_matrix(m, thetas);
        CHECK(det(v) == doctest::Approx(1.0).epsilon(1e-10));
        CHECK((v * v.transposed() - Matrix::identity(m)).frobenius_norm() <= 1e-12);
    }
}

TEST_CASE("diagonal covariance decodes to sorted eigenvalues and zero angles") {
    Matrix q(3, 3);
    q(0, 0) = 3.0;
    q(1, 1) = 2.0;
    q(2, 2) = 1.0;
    const RotationParams r = covariance_to_params(CovarianceMatrix(q));
    CHECK(r.lambdas[0] == doctest::Approx(3.0));
    CHECK(r.lambdas[1] == doctest::Approx(2.0));
    CHECK(r.lambdas[2] == doctest::Approx(1.0));
    for (double t : r.thetas) CHECK(std::fabs(std::sin(t)) <= 1e-12);
}

TEST_CASE("rank-one harvesting optimum round-trips") {
    const ChannelPair ch = region_fixture(20.0);
    const CovarianceMatrix q = solve_eh(ch).q_opt;
    CHECK(roundtrip_error(q.matrix()) <= 1e-9 * (1.0 + q.matrix().frobenius_norm()));
}

TEST_CASE("round trip over random PSD matrices incl. rank deficiency") {
    Rng rng(33);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t m = 2 + rng.uniform_int(4);
        const std::size_t rank = 1 + rng.uniform_int(m);
        Matrix q = random_psd(rng, m, rank);
        CHECK(roundtrip_error(q) <= 1e-9 * (1.0 + q.frobenius_norm()));
    }
}

TEST_CASE("covariance_to_params rejects indefinite input") {
    Matrix q(2, 2, {1.0, 2.0, 2.0, 1.0}); // eigenvalues 3, -1
    CHECK_THROWS_AS(covariance_to_params(CovarianceMatrix(q)), Error);
}

TEST_CASE("feasibility system has the exact block structure") {
    const auto sys = feasibility_system(3, 20.0);
    CHECK(sys.l.rows() == 4);
    CHECK(sys.l.cols() == 6);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 6; ++j) {
            double expected = 0.0;
            if (i == j) expected = -1.0;
            CHECK(sys.l(i, j) == expected);
        }
    for (std::size_t j = 0; j < 6; ++j) CHECK(sys.l(3, j) == (j < 3 ? 1.0 : 0.0));
    CHECK(sys.b[0] == 0.0);
    CHECK(sys.b[3] == 20.0);

    RotationParams good;
    good.lambdas = {5.0, 5.0, 5.0};
    good.thetas = {9.0, -9.0, 100.0}; // angles unconstrained
    CHECK(sys.max_violation(good) == 0.0);

    RotationParams bad = good;
    bad.lambdas = {25.0, -1.0, 0.0};
    CHECK(sys.max_violation(bad) == doctest::Approx(4.0)); // budget overshoot dominates
}

TEST_CASE("project_feasible clamps, projects, and leaves angles alone") {
    RotationParams r;
    r.lambdas = {30.0, 0.0, 0.0};
    r.thetas = {1.0, 2.0, 3.0};
    const RotationParams p = project_feasible(r, 20.0);
    CHECK(p.lambdas[0] == doctest::Approx(20.0));
    CHECK(p.lambdas[1] == 0.0);
    CHECK(p.lambdas[2] == 0.0);
    CHECK(p.thetas == r.thetas);

    RotationParams two;
    two.lambdas = {15.0, 15.0, 0.0};
    two.thetas = {0.0, 0.0, 0.0};
    const RotationParams q = project_feasible(two, 20.0);
    CHECK(q.lambdas[0] == doctest::Approx(10.0));
    CHECK(q.lambdas[1] == doctest::Approx(10.0));
    CHECK(q.lambdas[2] == 0.0);

    RotationParams fine;
    fine.lambdas = {1.0, 2.0, 3.0};
    fine.thetas = {-4.0, 5.0, 6.0};
    const RotationParams same = project_feasible(fine, 20.0);
    CHECK(same.lambdas == fine.lambdas);
    CHECK(same.thetas == fine.thetas);
}

TEST_CASE("projection agrees with the exhaustive active-set oracle") {
    Rng rng(34);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t m = 1 + rng.uniform_int(4);
        RotationParams r;
        r.lambdas.resize(m);
        for (double& l : r.lambdas) l = rng.uniform(-10.0, 25.0);
        r.thetas.assign(num_angles(m), 0.0);
        const double power = rng.uniform(1.0, 30.0);

        const RotationParams mine = project_feasible(r, power);
        // oracle projects the clamped vector, matching the two-stage contract
        std::vector<double> clamped = r.lambdas;
        for (double& l : clamped) l = std::max(0.0, l);
        const auto expect = brute_force_projection(clamped, power);
        REQUIRE(expect.size() == m);
        for (std::size_t i = 0; i < m; ++i)
            CHECK(mine.lambdas[i] == doctest::Approx(expect[i]).epsilon(1e-9).scale(1.0));

        // idempotency, exact
        const RotationParams again = project_feasible(mine, power);
        CHECK(again.lambdas == mine.lambdas);
    }
}

TEST_CASE("single-antenna edge has no angles") {
    RotationParams r;
    r.lambdas = {7.0};
    const CovarianceMatrix q = params_to_covariance(r);
    CHECK(q.matrix()(0, 0) == 7.0);
    const RotationParams back = covariance_to_params(q);
    CHECK(back.lambdas[0] == doctest::Approx(7.0));
    CHECK(back.thetas.empty());
}
