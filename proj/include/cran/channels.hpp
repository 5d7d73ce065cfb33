#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cran/numkernel.hpp"

namespace cran::channels {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

// Node intensities are per 10^4 m^2.
struct GeometryScenario {
    double area_side = 100.0;
    double lambda_u = 0.0;
    double lambda_r = 0.0;
    double r0 = 1.0;
    std::uint64_t seed = 0;
    std::vector<Point> user_positions;
    std::vector<Point> relay_positions;

    void validate() const;
};

// Exactly `count` points uniform on the square.
std::vector<Point> uniform_nodes(double area_side, std::size_t count, std::uint64_t seed);

// K users and L relays placed uniformly at random.
GeometryScenario fixed_scenario(double area_side, std::size_t K, std::size_t L, double r0, std::uint64_t seed);

// Draws both node sets from independent Poisson point processes.
GeometryScenario draw_scenario(double area_side, double lambda_u, double lambda_r, double r0, std::uint64_t seed);

struct MultipathParams {
    double beta_los = 2.5;
    double beta_nlos = 3.5;
    double f_c = 2.1e9;
    double r0 = 1.0;
    double nakagami_m = 2.0;  // positive integer
    double omega = 1.0;
    double rayleigh_omega = 1.0;
    double shadow_sigma_los_db = 3.0;
    double shadow_sigma_nlos_db = 4.0;
    double shadow_mean_db = 0.0;
    bool unit_amplitude = false;  // test hook: fading amplitude fixed at 1

    // Amplitude-domain free-space factor 4 pi r0 f_c / c.
    double kappa() const;
    void validate() const;
};

RealMatrix rich_scattering(std::size_t rows, std::size_t cols, std::uint64_t seed);

std::vector<Point> ppp_nodes(double area_side, double lambda, std::uint64_t seed);

// L x K matrix of max(r0, r_lk)^(-beta).
RealMatrix los_gain_matrix(const GeometryScenario& scenario, double beta);

double p_los(double r);

// L x K matrix of fading, shadowing and path-loss gains.
RealMatrix multipath_gain_matrix(const GeometryScenario& scenario, const MultipathParams& params, std::uint64_t seed);

// (Nr L) x (Nu K) expansion of the multipath model: one LOS branch and one
// shadowing draw per user-relay pair, independent fading per antenna pair.
RealMatrix mimo_expand(const GeometryScenario& scenario, const MultipathParams& params, std::size_t nu,
                       std::size_t nr, std::uint64_t seed);

// Same as multipath_gain_matrix but every entry's fading amplitude is reported
// separately, so tests can recover the shadowing factor.
struct MultipathDraw {
    RealMatrix gain;
    RealMatrix amplitude;
};
MultipathDraw mimo_expand_detailed(const GeometryScenario& scenario, const MultipathParams& params, std::size_t nu,
                                   std::size_t nr, std::uint64_t seed);

// Fraction of the eigenvalues of G^T G / K (G is L x K, L >= K) inside the
// Marchenko-Pastur support for rho = L/K widened by `margin` on both sides.
double mp_band_fraction(const RealMatrix& g, double margin);

// mp_band_fraction(g, margin) >= min_fraction.
bool mp_band_check(const RealMatrix& g, double margin = 0.3, double min_fraction = 0.99);

// Fading samplers on a counter-based stream; n-th sample keyed by (seed, n).
double nakagami_sample(double m, double omega, std::uint64_t seed, std::uint64_t n);
double rayleigh_sample(double omega, std::uint64_t seed, std::uint64_t n);

}  // namespace cran::channels
