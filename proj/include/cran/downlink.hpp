#pragma once

#include <cstdint>
#include <vector>

#include "cran/network.hpp"
#include "cran/polymatroid.hpp"

namespace cran::downlink {

// Inner (distributed decode-forward) bound: relays in s1 transmit jointly
// precoded signals, users outside s2 are the ones whose rates are summed.
double F_in(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas, Mask s1, Mask s2);

// Cutset bound with a full (Nr*L x Nr*L) input covariance, conditioned on the
// relays outside s1 through the Schur complement.
double F_out(const NetworkInstance& inst, const PsdMatrix& gamma, Mask s1, Mask s2);

// Block-diagonal full covariance assembled from per-relay blocks.
PsdMatrix full_covariance(const NetworkInstance& inst, const CovarianceSet& gammas);

// min over S1 of F_in(S1, empty set); argmin is S1.
SubsetMin ddf_sum_rate(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas);

// min over S1 of F_out(S1, empty set).
double cutset_sum_upper(const NetworkInstance& inst, const PsdMatrix& gamma);

double c_star_down(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas);

// phi(S1) = 1/2 log2 |I + H_{[K],S1} Gamma H^T / sigma^2| over relay subsets.
SetFunctionView relay_logdet_function(const NetworkInstance& inst, double sigma_sq,
                                      const CovarianceSet& gammas);

struct Allocation {
    std::vector<double> capacities;
    // Whether the base vector behind the split reached the per-relay floor
    // 1/2 log2(1 + 1/sigma^2). The sum-rate identity holds either way.
    bool floor_met = false;
};

Allocation allocate_fronthaul_down(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas,
                                   double c_sum);

// DDF sum-rate of the instance's fronthaul, certified by a base vector of phi
// that fits under every relay's capacity; falls back on enumeration for small L.
double ddf_sum_rate_certified(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas);

struct BestRate {
    double sigma_sq = 1.0;
    double value = 0.0;
    bool degenerate = false;
};

// sup over sigma^2 of min{C_sum, C*(sigma^2)} - (Nu K / 2) log2(1 + 1/sigma^2).
// c_sum may be +infinity.
BestRate max_sum_given_csum_down(const NetworkInstance& inst, const CovarianceSet& gammas, double c_sum);

struct DualCertificate {
    std::vector<double> q;  // diagonal of Q, one entry per relay antenna
    double achieved_bound = 0.0;
};

enum class BoundStrategy { simple, randomized_q };

struct UpperBoundOptions {
    BoundStrategy strategy = BoundStrategy::simple;
    std::size_t n_samples = 200;
    std::uint64_t seed = 0;
};

DualCertificate dl_unlimited_upper_bound(const NetworkInstance& inst, const UpperBoundOptions& opts);

// The value certified by a given Q (checked against the trace constraint).
double dual_value(const NetworkInstance& inst, const std::vector<double>& q);

struct GapAudit {
    double delta = 0.0;
    double delta_uniform = 0.0;
    double sigma_uniform = 0.0;
    double delta_sum = 0.0;
    double bound_per_user = 0.0;
    double bound_sum = 0.0;
    bool pass_per_user = false;
    bool pass_sum = false;
    std::vector<double> grid;
};

std::vector<double> required_audit_sigmas(const NetworkInstance& inst);
double per_user_gap_bound(const NetworkInstance& inst);
double sum_gap_bound(const NetworkInstance& inst);

// gamma: the cutset input covariance; the inner bound uses isotropic blocks.
GapAudit gap_audit_down(const NetworkInstance& inst, const PsdMatrix& gamma, const std::vector<double>& sigma_grid);

struct Membership {
    bool member = true;
    Mask s1 = 0;
    Mask s2 = 0;
    double excess = 0.0;
};

Membership ddf_region_membership(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas,
                                 const std::vector<double>& rates);

SumRateReport report(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas);

}  // namespace cran::downlink
