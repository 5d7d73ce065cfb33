#pragma once

#include <vector>

#include "cran/network.hpp"
#include "cran/polymatroid.hpp"

namespace cran::uplink {

// Inner (network compress-forward) bound for the users in s1 and the relays
// in s2 whose fronthaul is counted instead of their observations.
double f_in(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas, Mask s1, Mask s2);

// Cutset bound term for the same pair of subsets.
double f_out(const NetworkInstance& inst, const CovarianceSet& gammas, Mask s1, Mask s2);

// min over S2 of f_in([K], S2); argmin is S2.
SubsetMin ncf_sum_rate(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas);

// min over S2 of f_out([K], S2), an upper bound on the cutset sum-rate.
double cutset_sum_upper(const NetworkInstance& inst, const CovarianceSet& gammas);

// 1/2 log2 |I + G Gamma G^T| with all fronthaul unlimited.
double unlimited_sum_capacity(const NetworkInstance& inst, const CovarianceSet& gammas);

// 1/2 log2 |I + G Gamma G^T / (sigma^2 + 1)|: the sum-rate reached once the
// fronthaul total is at least C*.
double provisioned_sum_rate(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas);

double c_star_up(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas);

// The log-det set function phi(A) = 1/2 log2 |I + G_A Gamma G_A^T/(sigma^2+1)|
// over relay subsets A. Exhaustively verified for small L, structural beyond.
SetFunctionView relay_logdet_function(const NetworkInstance& inst, double sigma_sq,
                                      const CovarianceSet& gammas);

std::vector<double> allocate_fronthaul_up(const NetworkInstance& inst, double sigma_sq,
                                          const CovarianceSet& gammas, double c_sum);

// Sum-rate of the instance's fronthaul certified without 2^L enumeration: a
// greedy base of phi that also respects each relay's fronthaul proves the
// rate equals phi([L]). Throws SizeLimit when the certificate fails and L is
// too large for the exact path.
double ncf_sum_rate_certified(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas);

struct SigmaStar {
    double sigma_sq = 1.0;
    double rate = 0.0;
};

SigmaStar sigma_star_up(const NetworkInstance& inst, const CovarianceSet& gammas, double c_sum);

struct AdditiveGap {
    double delta1 = 0.0;  // C* - R_inf
    double delta2 = 0.0;  // R_inf - R_NCF
};

AdditiveGap additive_gap_up(const NetworkInstance& inst, double sigma_sq);

enum class ScheduleKind { constant, log_p, inverse_log_power };

// sigma^2 as a function of P: a constant, log2 P, or (log2 P)^(-epsilon).
struct SigmaSchedule {
    ScheduleKind kind = ScheduleKind::constant;
    double value = 1.0;  // the constant, or epsilon
    double operator()(double p) const;
};

struct RatioRow {
    double P = 0.0;
    double sigma_sq = 0.0;
    double cstar_excess = 0.0;        // C*/R_inf - 1
    double ncf_shortfall = 0.0;       // 1 - R_NCF/R_inf
    double cstar_excess_pred = 0.0;
    double ncf_shortfall_pred = 0.0;
};

std::vector<RatioRow> multiplicative_ratios_up(const RealMatrix& g, const SigmaSchedule& schedule,
                                               const std::vector<double>& p_grid);

struct GapAudit {
    double delta = 0.0;           // per-user gap, best grid sigma^2 per subset
    double delta_uniform = 0.0;   // per-user gap with one sigma^2 for all subsets
    double sigma_uniform = 0.0;   // the sigma^2 achieving delta_uniform
    double delta_sum = 0.0;
    double bound_per_user = 0.0;
    double bound_sum = 0.0;
    double stated_bound_per_user = 0.0;  // closed form before the small-array correction
    bool pass_per_user = false;
    bool pass_sum = false;
    std::vector<double> grid;     // the grid actually used
};

// Grid points the gap proofs rely on for this instance shape.
std::vector<double> required_audit_sigmas(const NetworkInstance& inst);
double per_user_gap_bound(const NetworkInstance& inst);
double stated_per_user_gap_bound(const NetworkInstance& inst);
double sum_gap_bound(const NetworkInstance& inst);

GapAudit gap_audit_up(const NetworkInstance& inst, const CovarianceSet& gammas,
                      const std::vector<double>& sigma_grid);

struct Membership {
    bool member = true;
    Mask s1 = 0;
    Mask s2 = 0;
    double excess = 0.0;  // rate sum minus bound at the first violation
};

Membership ncf_region_membership(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas,
                                 const std::vector<double>& rates);

SumRateReport report(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas);

}  // namespace cran::uplink
