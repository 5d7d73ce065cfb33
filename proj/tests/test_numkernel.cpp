#include <cmath>
#include <numeric>

#include "doctest.h"
#include "support.hpp"

#include "cran/errors.hpp"
#include "cran/numkernel.hpp"
#include "cran/subset.hpp"

using namespace cran;
using testing_support::gaussian;
using testing_support::oracle_logdet;

TEST_CASE("logdet_gram on a rank-one column") {
    RealMatrix m(2, 1);
    m << 1.0, 1.0;
    // |I + 7.5 m m^T| = 1 + 7.5 * 2 = 16
    CHECK(logdet_gram(m, 7.5) == doctest::Approx(4.0).epsilon(1e-13));
    CHECK(logdet_gram(m.transpose(), 7.5) == doctest::Approx(4.0).epsilon(1e-13));
}

TEST_CASE("logdet_gram trivial inputs") {
    RealMatrix m = RealMatrix::Ones(3, 2);
    CHECK(logdet_gram(m, 0.0) == 0.0);
    CHECK(logdet_gram(RealMatrix(0, 3), 2.0) == 0.0);
    CHECK(logdet_gram(RealMatrix(3, 0), 2.0) == 0.0);
    CHECK(logdet_gram(RealMatrix::Zero(4, 4), 5.0) == 0.0);
}

TEST_CASE("logdet_gram matches a determinant oracle on random matrices") {
    Stream rng(11, {1});
    for (int t = 0; t < 200; ++t) {
        const auto r = static_cast<Index>(testing_support::uniform_int(1, 6, rng));
        const auto c = static_cast<Index>(testing_support::uniform_int(1, 6, rng));
        RealMatrix m = gaussian(r, c, rng);
        const double s = testing_support::uniform(1e-3, 50.0, rng);
        const double got = logdet_gram(m, s);
        CHECK(got == doctest::Approx(oracle_logdet(m, s)).epsilon(1e-10));
        CHECK(got == doctest::Approx(logdet_gram(m.transpose(), s)).epsilon(1e-12));
        CHECK(got >= 0.0);
    }
}

TEST_CASE("logdet_gram is monotone in the scale and in added rows") {
    Stream rng(11, {2});
    for (int t = 0; t < 100; ++t) {
        RealMatrix m = gaussian(4, 3, rng);
        const double s = testing_support::uniform(0.01, 10.0, rng);
        CHECK(logdet_gram(m, 2.0 * s) >= logdet_gram(m, s) - 1e-12);
        CHECK(logdet_gram(m, s) >= logdet_gram(m.topRows(3), s) - 1e-12);
    }
}

TEST_CASE("logdet_gram rejects bad input") {
    RealMatrix m = RealMatrix::Ones(2, 2);
    CHECK_THROWS_AS(logdet_gram(m, -1.0), InvalidInput);
    m(0, 0) = std::nan("");
    CHECK_THROWS_AS(logdet_gram(m, 1.0), InvalidInput);
}

TEST_CASE("schur_conditional on a correlated pair") {
    const double p = 3.0, rho = 0.6;
    PsdMatrix g(2, 2);
    g << p, rho * p, rho * p, p;
    PsdMatrix s = schur_conditional(g, {0});
    REQUIRE(s.rows() == 1);
    CHECK(s(0, 0) == doctest::Approx(p * (1 - rho * rho)).epsilon(1e-13));
    // conditioning on nothing leaves the marginal
    PsdMatrix full = schur_conditional(g, {1, 0});
    CHECK(full(0, 0) == doctest::Approx(p));
    CHECK(full(0, 1) == doctest::Approx(rho * p));
}

TEST_CASE("schur_conditional uses a pseudoinverse on a singular complement") {
    PsdMatrix g(3, 3);
    g << 2, 1, 1,
         1, 1, 1,
         1, 1, 1;
    // complement {1,2} has rank one along (1,1)/sqrt2 with eigenvalue 2
    PsdMatrix s = schur_conditional(g, {0});
    CHECK(s(0, 0) == doctest::Approx(2.0 - 1.0).epsilon(1e-12));
}

TEST_CASE("schur_conditional property: PSD and dominated by the marginal") {
    Stream rng(11, {3});
    for (int t = 0; t < 100; ++t) {
        RealMatrix a = gaussian(5, 5, rng);
        PsdMatrix g = a * a.transpose();
        std::vector<Index> s{0, 2};
        PsdMatrix c = schur_conditional(g, s);
        CHECK(is_psd(c));
        PsdMatrix marginal = select(g, s, s);
        CHECK(is_psd(marginal - c));
    }
}

TEST_CASE("schur_conditional rejects malformed index sets") {
    PsdMatrix g = PsdMatrix::Identity(3, 3);
    CHECK_THROWS_AS(schur_conditional(g, {}), InvalidInput);
    CHECK_THROWS_AS(schur_conditional(g, {0, 0}), InvalidInput);
    CHECK_THROWS_AS(schur_conditional(g, {3}), InvalidInput);
}

TEST_CASE("water_fill closed forms") {
    auto p = water_fill({1.0, 1.0}, 2.0);
    CHECK(p[0] == doctest::Approx(1.0));
    CHECK(p[1] == doctest::Approx(1.0));
    // level 0.5 keeps the weak channel (1/g = 1) off
    p = water_fill({4.0, 1.0}, 0.25);
    CHECK(p[0] == doctest::Approx(0.25));
    CHECK(p[1] == doctest::Approx(0.0));
    p = water_fill({4.0, 0.0}, 1.0);
    CHECK(p[0] == doctest::Approx(1.0));
    CHECK(p[1] == 0.0);
    CHECK_THROWS_AS(water_fill({0.0, 0.0}, 1.0), InvalidInput);
    CHECK_THROWS_AS(water_fill({1.0}, -1.0), InvalidInput);
}

TEST_CASE("water_fill satisfies the KKT conditions") {
    Stream rng(11, {4});
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = testing_support::uniform_int(1, 8, rng);
        std::vector<double> g(n);
        for (double& x : g) x = testing_support::uniform(0.01, 10.0, rng);
        const double budget = testing_support::uniform(0.01, 20.0, rng);
        const auto p = water_fill(g, budget);
        CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(budget).epsilon(1e-10));
        double level = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (p[i] > 0.0) level = p[i] + 1.0 / g[i];
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(p[i] >= 0.0);
            if (p[i] > 0.0) CHECK(p[i] + 1.0 / g[i] == doctest::Approx(level).epsilon(1e-9));
            else CHECK(1.0 / g[i] >= level - 1e-9);
        }
    }
}

TEST_CASE("binary_entropy values") {
    CHECK(binary_entropy(0.5) == doctest::Approx(1.0));
    CHECK(binary_entropy(0.0) == 0.0);
    CHECK(binary_entropy(1.0) == 0.0);
    CHECK(binary_entropy(0.25) == doctest::Approx(0.8112781244591328));
    for (double p : {0.01, 0.1, 0.3, 0.45}) CHECK(binary_entropy(p) == doctest::Approx(binary_entropy(1 - p)));
}

TEST_CASE("mp_edges values") {
    auto [lo, hi] = mp_edges(4.0);
    CHECK(lo == doctest::Approx(1.0));
    CHECK(hi == doctest::Approx(9.0));
    for (double rho : {1.0, 1.5, 4.0, 17.0, 1e6}) {
        auto [a, b] = mp_edges(rho);
        CHECK(std::abs(a * b - (rho - 1) * (rho - 1)) <= 1e-12 * std::max(1.0, (rho - 1) * (rho - 1)));
    }
    CHECK_THROWS_AS(mp_edges(0.5), InvalidInput);
    auto [lo1, hi1] = mp_edges(1.0);
    CHECK(lo1 == doctest::Approx(0.0));
    CHECK(hi1 == doctest::Approx(4.0));
}

TEST_CASE("spectral helpers agree with the determinant oracle") {
    Stream rng(11, {5});
    for (int t = 0; t < 50; ++t) {
        RealMatrix m = gaussian(3, 5, rng);
        auto lambda = gram_eigenvalues(m);
        CHECK(lambda.size() == 3);
        CHECK(log2_det_from_spectrum(lambda, 0.7) == doctest::Approx(oracle_logdet(m, 0.7)).epsilon(1e-10));
    }
}

TEST_CASE("psd_sqrt squares back") {
    Stream rng(11, {6});
    RealMatrix a = gaussian(4, 4, rng);
    PsdMatrix g = a * a.transpose();
    PsdMatrix r = psd_sqrt(g);
    CHECK((r * r - g).norm() < 1e-10 * g.norm());
    CHECK(is_psd(g));
    PsdMatrix bad = PsdMatrix::Identity(2, 2);
    bad(1, 1) = -1.0;
    CHECK_FALSE(is_psd(bad));
}

TEST_CASE("subset helpers") {
    CHECK(full_mask(3) == 7u);
    CHECK(cardinality(0b1011) == 3);
    CHECK(members(0b1010) == std::vector<std::size_t>{1, 3});
    CHECK(block_indices(0b101, 2) == std::vector<Index>{0, 1, 4, 5});
    CHECK(contains(0b100, 2));
    CHECK_FALSE(contains(0b100, 1));
}
