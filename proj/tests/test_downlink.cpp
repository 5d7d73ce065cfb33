#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "doctest.h"
#include "support.hpp"

#include "cran/errors.hpp"
#include "cran/downlink.hpp"

using namespace cran;
using namespace testing_support;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double oracle_pen(const NetworkInstance& inst, double s) { return 0.5 * static_cast<double>(inst.Nu) * std::log2(1.0 + 1.0 / s); }

// 1/2 log2 |I + scale H_{users, relays} (P/Nr) H^T|
double oracle_term(const NetworkInstance& inst, Mask users, Mask relays, double scale) {
    if (users == 0 || relays == 0) return 0.0;
    RealMatrix ht = inst.gain * std::sqrt(inst.P / static_cast<double>(inst.Nr));
    return 0.5 * oracle_logdet(oracle_select(ht, block_rows(users, inst.Nu), block_rows(relays, inst.Nr)), scale);
}

double oracle_F_in(const NetworkInstance& inst, double s, Mask s1, Mask s2) {
    const Mask rated = full_mask(inst.K) & ~s2;
    return oracle_term(inst, rated, s1, 1.0 / s) + fronthaul_of(inst, full_mask(inst.L) & ~s1) -
           cardinality(rated) * oracle_pen(inst, s);
}

double oracle_ddf(const NetworkInstance& inst, double s) {
    double best = kInf;
    for (Mask s1 = 0; s1 <= full_mask(inst.L); ++s1) best = std::min(best, oracle_F_in(inst, s, s1, 0));
    return best;
}

// Schur complement through an explicit inverse of the complement block.
double oracle_F_out(const NetworkInstance& inst, const PsdMatrix& gamma, Mask s1, Mask s2) {
    const Mask rated = full_mask(inst.K) & ~s2;
    const Mask s1c = full_mask(inst.L) & ~s1;
    double rate = 0.0;
    if (s1 != 0 && rated != 0) {
        auto a = block_rows(s1, inst.Nr);
        auto b = block_rows(s1c, inst.Nr);
        PsdMatrix cond = oracle_select(gamma, a, a);
        if (!b.empty())
            cond -= oracle_select(gamma, a, b) * oracle_select(gamma, b, b).inverse() * oracle_select(gamma, b, a);
        RealMatrix h = oracle_select(inst.gain, block_rows(rated, inst.Nu), a);
        RealMatrix m = RealMatrix::Identity(h.rows(), h.rows()) + h * cond * h.transpose();
        rate = 0.5 * std::log2(m.determinant());
    }
    return rate + fronthaul_of(inst, s1c);
}

// Random full covariance with every relay block trace equal to P.
PsdMatrix random_full_covariance(const NetworkInstance& inst, Stream& rng) {
    const auto n = static_cast<Index>(inst.Nr * inst.L);
    RealMatrix a = gaussian(n, n, rng);
    PsdMatrix g = a * a.transpose() + 0.1 * PsdMatrix::Identity(n, n);
    Eigen::VectorXd d(n);
    const auto nr = static_cast<Index>(inst.Nr);
    for (std::size_t l = 0; l < inst.L; ++l) {
        const double tr = g.block(static_cast<Index>(l) * nr, static_cast<Index>(l) * nr, nr, nr).trace();
        for (Index i = 0; i < nr; ++i) d(static_cast<Index>(l) * nr + i) = std::sqrt(inst.P / tr);
    }
    return d.asDiagonal() * g * d.asDiagonal();
}

NetworkInstance scalar_link(double c = 10.0) {
    return downlink_instance(1, 1, 3.0, {c}, RealMatrix::Ones(1, 1));
}

}  // namespace

TEST_CASE("single link closed forms") {
    auto inst = scalar_link();
    auto gam = isotropic_covariances(inst);
    CHECK(downlink::F_in(inst, 1.0, gam, 1, 0) == doctest::Approx(0.5));
    CHECK(downlink::F_in(inst, 1.0, gam, 0, 0) == doctest::Approx(9.5));
    CHECK(downlink::F_in(inst, 1.0, gam, 1, 1) == doctest::Approx(0.0));
    auto r = downlink::ddf_sum_rate(inst, 1.0, gam);
    CHECK(r.value == doctest::Approx(0.5));
    CHECK(r.argmin == 1u);
    CHECK(downlink::c_star_down(inst, 1.0, gam) == doctest::Approx(1.0));
    CHECK(downlink::F_out(inst, downlink::full_covariance(inst, gam), 1, 0) == doctest::Approx(1.0));
    CHECK(downlink::cutset_sum_upper(inst, downlink::full_covariance(inst, gam)) == doctest::Approx(1.0));
    // zero fronthaul: only the penalty remains
    auto starved = scalar_link(0.0);
    CHECK(downlink::ddf_sum_rate(starved, 1.0, gam).value == doctest::Approx(-0.5));
}

TEST_CASE("F_out conditions on the other relays through the Schur complement") {
    const double p = 3.0, rho = 0.5;
    auto inst = downlink_instance(1, 2, p, {2.0, 7.0}, RealMatrix::Ones(1, 2));
    PsdMatrix g(2, 2);
    g << p, rho * p, rho * p, p;
    CHECK(downlink::F_out(inst, g, 0b01, 0) == doctest::Approx(0.5 * std::log2(1.0 + p * (1 - rho * rho)) + 7.0));
    CHECK(downlink::F_out(inst, g, 0b11, 0) == doctest::Approx(0.5 * std::log2(1.0 + 2 * p + 2 * rho * p)));
    CHECK(downlink::F_out(inst, g, 0b00, 0) == doctest::Approx(9.0));
    PsdMatrix over = g * 1.5;
    CHECK_THROWS_AS(downlink::F_out(inst, over, 1, 0), InvalidInput);
}

TEST_CASE("bound terms match oracles, SISO and MIMO") {
    Stream rng(41, {1});
    for (int t = 0; t < 60; ++t) {
        const std::size_t K = uniform_int(1, 3, rng), L = uniform_int(1, 3, rng);
        auto inst = random_downlink(rng, K, L, uniform_int(1, 2, rng), uniform_int(1, 2, rng));
        auto gam = isotropic_covariances(inst);
        const double s = uniform(0.05, 20.0, rng);
        PsdMatrix full = random_full_covariance(inst, rng);
        for (Mask s1 = 0; s1 <= full_mask(L); ++s1)
            for (Mask s2 = 0; s2 <= full_mask(K); ++s2) {
                CHECK(downlink::F_in(inst, s, gam, s1, s2) == doctest::Approx(oracle_F_in(inst, s, s1, s2)).epsilon(1e-9));
                CHECK(downlink::F_out(inst, full, s1, s2) == doctest::Approx(oracle_F_out(inst, full, s1, s2)).epsilon(1e-8));
                CHECK(downlink::F_in(inst, s, gam, s1, s2) <=
                      downlink::F_out(inst, downlink::full_covariance(inst, gam), s1, s2) + 1e-9);
            }
        CHECK(downlink::ddf_sum_rate(inst, s, gam).value == doctest::Approx(oracle_ddf(inst, s)).epsilon(1e-9));
        CHECK(downlink::ddf_sum_rate(inst, s, gam).value <=
              downlink::cutset_sum_upper(inst, downlink::full_covariance(inst, gam)) + 1e-9);
    }
}

TEST_CASE("allocation reaches C* minus the users' penalty") {
    Stream rng(41, {2});
    int checked = 0;
    for (int t = 0; t < 150; ++t) {
        const std::size_t L = uniform_int(1, 6, rng);
        auto inst = random_downlink(rng, uniform_int(1, 4, rng), L, uniform_int(1, 2, rng), uniform_int(1, 2, rng));
        auto gam = isotropic_covariances(inst);
        const double s = uniform(0.05, 20.0, rng);
        const double c_star = downlink::c_star_down(inst, s, gam);
        const double users_pen = static_cast<double>(inst.K) * oracle_pen(inst, s);
        const double c_sum = c_star * uniform(1.0, 2.0, rng);
        if (c_star < users_pen) {
            CHECK_THROWS_AS(downlink::allocate_fronthaul_down(inst, s, gam, c_sum), Infeasible);
            continue;
        }
        auto a = downlink::allocate_fronthaul_down(inst, s, gam, c_sum);
        REQUIRE(a.capacities.size() == L);
        CHECK(std::accumulate(a.capacities.begin(), a.capacities.end(), 0.0) == doctest::Approx(c_sum).epsilon(1e-12));
        for (double x : a.capacities) CHECK(x >= 0.0);
        if (a.floor_met)
            for (double x : a.capacities) CHECK(x >= 0.5 * inst.Nr * std::log2(1.0 + 1.0 / s) - 1e-7);
        inst.fronthaul = a.capacities;
        const double target = c_star - users_pen;
        CHECK(std::abs(downlink::ddf_sum_rate(inst, s, gam).value - target) <= 1e-7);
        CHECK(std::abs(downlink::ddf_sum_rate_certified(inst, s, gam) - target) <= 1e-7);
        ++checked;
    }
    CHECK(checked > 50);
}

TEST_CASE("allocation preconditions") {
    auto inst = scalar_link();
    auto gam = isotropic_covariances(inst);
    try {
        downlink::allocate_fronthaul_down(inst, 1.0, gam, 0.75);
        FAIL("expected Infeasible");
    } catch (const Infeasible& e) {
        CHECK(e.shortfall() == doctest::Approx(0.25));
    }
    // C* = 1/2 log2(1 + 3 * 1e-4) is far below the 1/2 bit penalty
    auto weak = downlink_instance(1, 1, 3.0, {1.0}, RealMatrix::Constant(1, 1, 1e-2));
    CHECK_THROWS_AS(downlink::allocate_fronthaul_down(weak, 1.0, isotropic_covariances(weak), 5.0), Infeasible);
    auto a = downlink::allocate_fronthaul_down(inst, 1.0, gam, 1.0);
    CHECK(a.capacities[0] == doctest::Approx(1.0));
    CHECK(a.floor_met);
}

TEST_CASE("symmetric relays share the fronthaul equally") {
    auto inst = downlink_instance(2, 3, 10.0, {0, 0, 0}, RealMatrix::Ones(2, 3));
    auto gam = isotropic_covariances(inst);
    auto a = downlink::allocate_fronthaul_down(inst, 0.5, gam, 12.0);
    for (double x : a.capacities) CHECK(x == doctest::Approx(4.0));
}

TEST_CASE("best sum-rate over sigma matches a dense scan") {
    Stream rng(41, {3});
    for (int t = 0; t < 20; ++t) {
        auto inst = random_downlink(rng, uniform_int(1, 3, rng), uniform_int(1, 4, rng), 1, uniform_int(1, 2, rng));
        auto gam = isotropic_covariances(inst);
        double prev = -kInf;
        for (double c_sum : {0.5, 2.0, 8.0, 32.0, kInf}) {
            auto best = downlink::max_sum_given_csum_down(inst, gam, c_sum);
            CHECK_FALSE(best.degenerate);
            double scan = -kInf;
            for (int i = 0; i <= 20000; ++i) {
                const double s = std::exp(-40.0 + 80.0 * i / 20000.0);
                const double v = std::min(c_sum, downlink::c_star_down(inst, s, gam)) -
                                 static_cast<double>(inst.K) * oracle_pen(inst, s);
                scan = std::max(scan, v);
            }
            CHECK(best.value >= scan - 1e-9);
            // slope in ln sigma^2 is at most (rank + K Nu) / (2 ln 2)
            const double rank = static_cast<double>(std::min(inst.gain.rows(), inst.gain.cols()));
            const double lipschitz = (rank + static_cast<double>(inst.K * inst.Nu)) / (2.0 * std::log(2.0));
            CHECK(best.value <= scan + 0.5 * (80.0 / 20000.0) * lipschitz + 1e-12);
            CHECK(best.value <= c_sum);
            CHECK(best.value >= prev - 1e-9);
            prev = best.value;
            const double at = std::min(c_sum, downlink::c_star_down(inst, best.sigma_sq, gam)) -
                              static_cast<double>(inst.K) * oracle_pen(inst, best.sigma_sq);
            CHECK(at == doctest::Approx(best.value).epsilon(1e-9));
        }
    }
    auto zero = downlink_instance(1, 2, 1.0, {1.0, 1.0}, RealMatrix::Zero(1, 2));
    auto d = downlink::max_sum_given_csum_down(zero, isotropic_covariances(zero), 1.0);
    CHECK(d.degenerate);
    CHECK(d.value == 0.0);
    CHECK_THROWS_AS(downlink::max_sum_given_csum_down(zero, isotropic_covariances(zero), 0.0), InvalidInput);
}

TEST_CASE("dual bounds: closed forms and weak duality") {
    auto inst = downlink_instance(1, 2, 3.0, {0, 0}, RealMatrix::Ones(1, 2));
    auto simple = downlink::dl_unlimited_upper_bound(inst, {});
    CHECK(simple.achieved_bound == doctest::Approx(0.5 * std::log2(1.0 + 6.0 * 2.0)));
    REQUIRE(simple.q.size() == 2);
    CHECK(simple.q[0] == doctest::Approx(1.0 / 6.0));
    // rank one: water-filling puts the unit budget on the single mode
    CHECK(downlink::dual_value(inst, simple.q) == doctest::Approx(0.5 * std::log2(1.0 + 12.0)));
    CHECK_THROWS_AS(downlink::dual_value(inst, {0.3, 0.3}), InvalidInput);
    CHECK_THROWS_AS(downlink::dual_value(inst, {0.1}), InvalidInput);
    CHECK_THROWS_AS(downlink::dual_value(inst, {0.0, 0.1}), InvalidInput);

    Stream rng(41, {4});
    for (int t = 0; t < 60; ++t) {
        auto r = random_downlink(rng, uniform_int(1, 3, rng), uniform_int(1, 4, rng), uniform_int(1, 2, rng),
                                 uniform_int(1, 2, rng));
        downlink::UpperBoundOptions opts{downlink::BoundStrategy::randomized_q, 50, 7};
        auto rq = downlink::dl_unlimited_upper_bound(r, opts);
        auto sb = downlink::dl_unlimited_upper_bound(r, {});
        CHECK(rq.achieved_bound == doctest::Approx(downlink::dual_value(r, rq.q)).epsilon(1e-12));
        CHECK(sb.achieved_bound == doctest::Approx(0.5 * oracle_logdet(r.gain, r.P * r.L)).epsilon(1e-10));
        CHECK(downlink::dual_value(r, sb.q) <= sb.achieved_bound + 1e-9);
        for (int j = 0; j < 5; ++j) {
            PsdMatrix g = random_full_covariance(r, rng);
            RealMatrix m = RealMatrix::Identity(r.gain.rows(), r.gain.rows()) + r.gain * g * r.gain.transpose();
            const double primal = 0.5 * std::log2(m.determinant());
            CHECK(primal <= rq.achieved_bound + 1e-9);
            CHECK(primal <= sb.achieved_bound + 1e-9);
        }
        auto best = downlink::max_sum_given_csum_down(r, isotropic_covariances(r), kInf);
        CHECK(best.value <= rq.achieved_bound + 1e-9);
        // same seed, same certificate
        CHECK(downlink::dl_unlimited_upper_bound(r, opts).q == rq.q);
    }
}

TEST_CASE("gap bound closed forms") {
    auto siso = downlink_instance(2, 3, 1.0, {0, 0, 0}, RealMatrix::Ones(2, 3));
    CHECK(downlink::per_user_gap_bound(siso) == doctest::Approx(0.5 * std::log2(std::exp(1.0) * 3 * 2)));
    CHECK(downlink::sum_gap_bound(siso) == doctest::Approx(1.0 + std::log2(3.0)));
    // four user antennas against one relay antenna, K = 1: only case B applies
    auto b = downlink_instance(1, 1, 1.0, {0}, RealMatrix::Ones(4, 1), 4, 1);
    CHECK(downlink::per_user_gap_bound(b) == doctest::Approx(0.5 * std::log2(std::exp(1.0) * 4)));
    CHECK(downlink::required_audit_sigmas(b).back() == doctest::Approx(3.0));
    // three user antennas against two relay antennas, K = 1: only case C applies
    auto c2 = downlink_instance(1, 2, 1.0, {0, 0}, RealMatrix::Ones(3, 2), 3, 1);
    CHECK(downlink::per_user_gap_bound(c2) == doctest::Approx(1.5 + 1.0));
}

TEST_CASE("gap audit passes and agrees with independent sums") {
    Stream rng(41, {5});
    const std::vector<double> grid{0.01, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0};
    for (int t = 0; t < 40; ++t) {
        const std::size_t K = uniform_int(1, 3, rng), L = uniform_int(1, 3, rng);
        auto inst = random_downlink(rng, K, L, uniform_int(1, 2, rng), uniform_int(1, 2, rng));
        auto gam = isotropic_covariances(inst);
        PsdMatrix full = downlink::full_covariance(inst, gam);
        auto a = downlink::gap_audit_down(inst, full, grid);
        CHECK(a.pass_per_user);
        CHECK(a.pass_sum);
        CHECK(a.delta <= a.delta_uniform + 1e-12);
        for (double req : downlink::required_audit_sigmas(inst))
            CHECK(std::any_of(a.grid.begin(), a.grid.end(), [&](double x) { return std::abs(x - req) <= 1e-12 * req; }));
        double best_inner = -kInf;
        for (double s : a.grid) best_inner = std::max(best_inner, oracle_ddf(inst, s));
        CHECK(a.delta_sum == doctest::Approx(downlink::cutset_sum_upper(inst, full) - best_inner).epsilon(1e-9));
    }
    auto big = random_downlink(rng, 9, 1);
    CHECK_THROWS_AS(downlink::gap_audit_down(big, downlink::full_covariance(big, isotropic_covariances(big)), grid),
                    SizeLimit);
}

TEST_CASE("region membership") {
    auto inst = scalar_link();
    auto gam = isotropic_covariances(inst);
    CHECK(downlink::ddf_region_membership(inst, 1.0, gam, {0.0}).member);
    CHECK(downlink::ddf_region_membership(inst, 1.0, gam, {0.5}).member);
    auto m = downlink::ddf_region_membership(inst, 1.0, gam, {0.5 + 1e-6});
    CHECK_FALSE(m.member);
    CHECK(m.s1 == 1u);
    CHECK_THROWS_AS(downlink::ddf_region_membership(inst, 1.0, gam, {}), InvalidInput);

    Stream rng(41, {6});
    for (int t = 0; t < 30; ++t) {
        auto r = random_downlink(rng, 2, 3);
        for (double& c : r.fronthaul) c += 5.0;
        auto g = isotropic_covariances(r);
        const double sum = downlink::ddf_sum_rate(r, 1.0, g).value;
        if (sum <= 0.0) continue;
        CHECK_FALSE(downlink::ddf_region_membership(r, 1.0, g, {sum / 2 + 1e-5, sum / 2 + 1e-5}).member);
        CHECK(downlink::ddf_region_membership(r, 1.0, g, {0.0, 0.0}).member);
    }
}

TEST_CASE("report and direction checks") {
    auto inst = scalar_link();
    auto r = downlink::report(inst, 1.0, isotropic_covariances(inst));
    CHECK(r.inner == doctest::Approx(0.5));
    CHECK(r.outer == doctest::Approx(1.0));
    CHECK(r.unlimited == doctest::Approx(1.0));
    CHECK(r.c_star == doctest::Approx(1.0));
    auto up = inst;
    up.direction = Direction::uplink;
    CHECK_THROWS_AS(downlink::c_star_down(up, 1.0, isotropic_covariances(up)), InvalidInput);
}
