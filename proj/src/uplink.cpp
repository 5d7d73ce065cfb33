#include "cran/uplink.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "cran/errors.hpp"

namespace cran::uplink {

namespace {

constexpr double kLog2e = 1.4426950408889634074;
// Ground sets up to this size get an exhaustive polymatroid check before the
// greedy base is taken; larger ones rely on the log-det structure.
constexpr std::size_t kVerifyLimit = 8;
constexpr std::size_t kAuditLimit = 10;

void require_uplink(const NetworkInstance& inst) {
    inst.validate();
    if (inst.direction != Direction::uplink) throw InvalidInput("expected an uplink instance");
}

std::vector<Index> relay_rows(const NetworkInstance& inst, Mask relays) {
    return block_indices(relays, inst.Nr);
}

std::vector<Index> user_cols(const NetworkInstance& inst, Mask users) {
    return block_indices(users, inst.Nu);
}

double fronthaul_sum(const NetworkInstance& inst, Mask s) {
    double sum = 0.0;
    for (std::size_t l : members(s)) sum += inst.fronthaul[l];
    return sum;
}

// 1/2 log2 |I + scale * Gt_{rows(A), cols(S1)} Gt^T|.
double half_logdet(const NetworkInstance& inst, const RealMatrix& gt, Mask users, Mask relays, double scale) {
    if (users == 0 || relays == 0) return 0.0;
    return 0.5 * logdet_gram(select(gt, relay_rows(inst, relays), user_cols(inst, users)), scale);
}

std::vector<double> fronthaul_table(const NetworkInstance& inst) {
    std::vector<double> t(std::size_t{1} << inst.L, 0.0);
    for (Mask s = 1; s < t.size(); ++s) {
        const auto low = static_cast<std::size_t>(std::countr_zero(s));
        t[s] = t[s & (s - 1)] + inst.fronthaul[low];
    }
    return t;
}

void require_enumerable(const NetworkInstance& inst, const char* op) {
    if (inst.L > kMaxEnumeration) {
        throw SizeLimit(std::string(op) + ": L = " + std::to_string(inst.L) +
                        " exceeds the enumeration limit of " + std::to_string(kMaxEnumeration));
    }
}

}  // namespace

double f_in(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas, Mask s1, Mask s2) {
    require_uplink(inst);
    require_sigma(sigma_sq);
    const RealMatrix gt = effective_gain(inst, gammas);
    const Mask s2c = full_mask(inst.L) & ~s2;
    return half_logdet(inst, gt, s1, s2c, 1.0 / (sigma_sq + 1.0)) + fronthaul_sum(inst, s2) -
           static_cast<double>(cardinality(s2)) * penalty(inst.Nr, sigma_sq);
}

double f_out(const NetworkInstance& inst, const CovarianceSet& gammas, Mask s1, Mask s2) {
    require_uplink(inst);
    const RealMatrix gt = effective_gain(inst, gammas);
    const Mask s2c = full_mask(inst.L) & ~s2;
    return half_logdet(inst, gt, s1, s2c, 1.0) + fronthaul_sum(inst, s2);
}

SetFunctionView relay_logdet_function(const NetworkInstance& inst, double sigma_sq,
                                      const CovarianceSet& gammas) {
    require_uplink(inst);
    require_sigma(sigma_sq);
    auto gt = std::make_shared<const RealMatrix>(effective_gain(inst, gammas));
    const double scale = 1.0 / (sigma_sq + 1.0);
    const std::size_t nr = inst.Nr;
    SetEvaluator f = [gt, scale, nr](const std::vector<std::size_t>& relays) {
        if (relays.empty()) return 0.0;
        std::vector<Index> rows;
        rows.reserve(relays.size() * nr);
        for (std::size_t l : relays)
            for (std::size_t a = 0; a < nr; ++a) rows.push_back(static_cast<Index>(l * nr + a));
        return 0.5 * logdet_gram(gt->operator()(rows, Eigen::all), scale);
    };
    if (inst.L <= kVerifyLimit) {
        auto verdict = check_polymatroid(SetFunctionView(inst.L, f));
        if (!verdict.ok) throw Error("relay log-det function failed the polymatroid check: " + verdict.violation);
        return verdict.view;
    }
    return SetFunctionView::structural_polymatroid(inst.L, f);
}

SubsetMin ncf_sum_rate(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas) {
    require_uplink(inst);
    require_sigma(sigma_sq);
    require_enumerable(inst, "ncf_sum_rate");
    const SetFunctionView phi = relay_logdet_function(inst, sigma_sq, gammas);
    const double pen = penalty(inst.Nr, sigma_sq);
    std::vector<double> c = inst.fronthaul;
    SetFunctionView psi(inst.L, [c, pen](const std::vector<std::size_t>& s) {
        double sum = 0.0;
        for (std::size_t l : s) sum += c[l] - pen;
        return sum;
    });
    return min_combined(phi, psi);
}

double cutset_sum_upper(const NetworkInstance& inst, const CovarianceSet& gammas) {
    require_uplink(inst);
    require_enumerable(inst, "cutset_sum_upper");
    const RealMatrix gt = effective_gain(inst, gammas);
    const Mask users = full_mask(inst.K);
    std::vector<double> phi(std::size_t{1} << inst.L);
    for (Mask a = 0; a < phi.size(); ++a) phi[a] = half_logdet(inst, gt, users, a, 1.0);
    return min_combined_tables(phi, fronthaul_table(inst)).value;
}

double unlimited_sum_capacity(const NetworkInstance& inst, const CovarianceSet& gammas) {
    require_uplink(inst);
    return 0.5 * logdet_gram(effective_gain(inst, gammas), 1.0);
}

double provisioned_sum_rate(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas) {
    require_uplink(inst);
    require_sigma(sigma_sq);
    return 0.5 * logdet_gram(effective_gain(inst, gammas), 1.0 / (sigma_sq + 1.0));
}

double c_star_up(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas) {
    return provisioned_sum_rate(inst, sigma_sq, gammas) +
           static_cast<double>(inst.L) * penalty(inst.Nr, sigma_sq);
}

std::vector<double> allocate_fronthaul_up(const NetworkInstance& inst, double sigma_sq,
                                          const CovarianceSet& gammas, double c_sum) {
    const double c_star = c_star_up(inst, sigma_sq, gammas);
    if (!(c_sum >= c_star - 1e-9)) {
        throw Infeasible("allocate_fronthaul_up: C_sum is below C*", c_star - c_sum);
    }
    const SetFunctionView phi = relay_logdet_function(inst, sigma_sq, gammas);
    const BaseVector base = inst.L <= kMaxEnumeration ? cyclic_average_base(phi)
                                                      : greedy_base(phi, identity_order(inst.L));
    const double total = std::accumulate(base.y.begin(), base.y.end(), 0.0);
    const double pen = penalty(inst.Nr, sigma_sq);
    const double budget = c_sum - static_cast<double>(inst.L) * pen;

    std::vector<double> c(inst.L);
    for (std::size_t l = 0; l < inst.L; ++l) {
        const double share = total > 0.0 ? base.y[l] * (budget / total) : budget / static_cast<double>(inst.L);
        c[l] = std::max(0.0, share + pen);
    }
    return c;
}

double ncf_sum_rate_certified(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas) {
    require_uplink(inst);
    const SetFunctionView phi = relay_logdet_function(inst, sigma_sq, gammas);
    const double pen = penalty(inst.Nr, sigma_sq);
    auto certifies = [&](const BaseVector& b) {
        for (std::size_t l = 0; l < inst.L; ++l)
            if (b.y[l] > inst.fronthaul[l] - pen + kSetTol) return false;
        return true;
    };
    const BaseVector first = greedy_base(phi, identity_order(inst.L));
    if (certifies(first) || certifies(cyclic_average_base(phi))) {
        return phi(identity_order(inst.L));
    }
    if (inst.L <= kMaxEnumeration) return ncf_sum_rate(inst, sigma_sq, gammas).value;
    throw SizeLimit("ncf_sum_rate_certified: no base certificate and L exceeds the enumeration limit");
}

SigmaStar sigma_star_up(const NetworkInstance& inst, const CovarianceSet& gammas, double c_sum) {
    require_uplink(inst);
    if (!(c_sum > 0.0)) throw InvalidInput("sigma_star_up: C_sum must be positive");
    const Eigen::VectorXd lambda = gram_eigenvalues(effective_gain(inst, gammas));
    if (lambda.size() == 0 || lambda.maxCoeff() <= 0.0) throw DegenerateChannel("sigma_star_up: zero channel");

    const double antennas = static_cast<double>(inst.Nr * inst.L);
    auto fronthaul_term = [&](double s) { return c_sum - 0.5 * antennas * std::log2(1.0 + 1.0 / s); };
    auto rate_term = [&](double s) { return 0.5 * log2_det_from_spectrum(lambda, 1.0 / (s + 1.0)); };

    double lo = std::log(1e-12);
    double hi = std::log(1e12);
    auto diff = [&](double u) { return fronthaul_term(std::exp(u)) - rate_term(std::exp(u)); };
    if (diff(lo) >= 0.0) return {std::exp(lo), std::min(fronthaul_term(std::exp(lo)), rate_term(std::exp(lo)))};
    if (diff(hi) <= 0.0) return {std::exp(hi), std::min(fronthaul_term(std::exp(hi)), rate_term(std::exp(hi)))};
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 400; ++it) {
        mid = 0.5 * (lo + hi);
        const double s = std::exp(mid);
        const double a = fronthaul_term(s);
        const double b = rate_term(s);
        if (std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(b))) break;
        if (a - b < 0.0) lo = mid;
        else hi = mid;
    }
    const double s = std::exp(mid);
    return {s, std::min(fronthaul_term(s), rate_term(s))};
}

AdditiveGap additive_gap_up(const NetworkInstance& inst, double sigma_sq) {
    require_uplink(inst);
    require_sigma(sigma_sq);
    const double rank = static_cast<double>(std::min(inst.Nu * inst.K, inst.Nr * inst.L));
    return {static_cast<double>(inst.L) * penalty(inst.Nr, sigma_sq), 0.5 * rank * std::log2(1.0 + sigma_sq)};
}

double SigmaSchedule::operator()(double p) const {
    switch (kind) {
        case ScheduleKind::constant:
            if (!(value > 0.0)) throw InvalidInput("sigma schedule: constant must be positive");
            return value;
        case ScheduleKind::log_p:
            if (!(p > 1.0)) throw InvalidInput("sigma schedule: log P requires P > 1");
            return std::log2(p);
        case ScheduleKind::inverse_log_power:
            if (!(p > 1.0)) throw InvalidInput("sigma schedule: (log P)^-eps requires P > 1");
            if (!(value > 0.0 && value < 1.0)) throw InvalidInput("sigma schedule: epsilon must lie in (0,1)");
            return std::pow(std::log2(p), -value);
    }
    throw InvalidInput("sigma schedule: unknown kind");
}

std::vector<RatioRow> multiplicative_ratios_up(const RealMatrix& g, const SigmaSchedule& schedule,
                                               const std::vector<double>& p_grid) {
    require_finite(g, "multiplicative_ratios_up");
    const Eigen::VectorXd lambda = gram_eigenvalues(g);
    const double top = lambda.size() ? lambda.maxCoeff() : 0.0;
    if (top <= 0.0) throw DegenerateChannel("multiplicative_ratios_up: zero channel");
    double rank = 0.0;
    for (Index i = 0; i < lambda.size(); ++i)
        if (lambda(i) > 1e-12 * top) rank += 1.0;
    const double l_count = static_cast<double>(g.rows());

    std::vector<RatioRow> rows;
    for (double p : p_grid) {
        if (!(p > 1.0)) throw InvalidInput("multiplicative_ratios_up: P grid entries must exceed 1");
        const double s = schedule(p);
        const double r_inf = 0.5 * log2_det_from_spectrum(lambda, p);
        const double r_ncf = 0.5 * log2_det_from_spectrum(lambda, p / (1.0 + s));
        const double c_star = r_ncf + 0.5 * l_count * std::log2(1.0 + 1.0 / s);
        const double log_p = std::log2(p);

        RatioRow row;
        row.P = p;
        row.sigma_sq = s;
        row.cstar_excess = c_star / r_inf - 1.0;
        row.ncf_shortfall = 1.0 - r_ncf / r_inf;
        row.ncf_shortfall_pred = std::log2(1.0 + s) / log_p;
        switch (schedule.kind) {
            case ScheduleKind::constant:
                row.cstar_excess_pred =
                    (rank * std::log2(1.0 / (1.0 + s)) + l_count * std::log2(1.0 + 1.0 / s)) / (rank * log_p);
                break;
            case ScheduleKind::log_p:
                row.cstar_excess_pred = (l_count * kLog2e / s - rank * std::log2(s)) / (rank * log_p);
                break;
            case ScheduleKind::inverse_log_power:
                row.cstar_excess_pred = l_count * std::log2(1.0 / s) / (rank * log_p);
                break;
        }
        rows.push_back(row);
    }
    return rows;
}

double stated_per_user_gap_bound(const NetworkInstance& inst) {
    const double nu = static_cast<double>(inst.Nu);
    const double nrl = static_cast<double>(inst.Nr * inst.L);
    return 0.5 * nu * std::log2(std::exp(1.0) * nrl / nu);
}

double per_user_gap_bound(const NetworkInstance& inst) {
    const double stated = stated_per_user_gap_bound(inst);
    const double nrl = static_cast<double>(inst.Nr * inst.L);
    if (inst.Nr * inst.L >= 2 * inst.Nu) return stated;
    // Below Nr*L = 2 Nu the gap at sigma^2 = 1 can reach Nr*L/2.
    return std::max(stated, 0.5 * nrl);
}

double sum_gap_bound(const NetworkInstance& inst) {
    const double x = static_cast<double>(inst.Nr * inst.L);
    const double y = static_cast<double>(inst.Nu * inst.K);
    if (x >= 2.0 * y) return 0.5 * x * binary_entropy(y / x);
    return 0.5 * x;
}

std::vector<double> required_audit_sigmas(const NetworkInstance& inst) {
    std::vector<double> s{1.0, std::max(static_cast<double>(inst.L) - 1.0, 1.0)};
    const double nrl = static_cast<double>(inst.Nr * inst.L);
    const double nu = static_cast<double>(inst.Nu);
    const double nuk = static_cast<double>(inst.Nu * inst.K);
    if (nrl >= 2.0 * nu) s.push_back(nrl / nu - 1.0);
    if (nrl > 2.0 * nuk) s.push_back(nrl / nuk - 1.0);
    return s;
}

namespace {

std::vector<double> merge_grid(std::vector<double> grid, const std::vector<double>& extra) {
    for (double s : grid) require_sigma(s);
    grid.insert(grid.end(), extra.begin(), extra.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end(),
                           [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(a, b); }),
               grid.end());
    return grid;
}

}  // namespace

GapAudit gap_audit_up(const NetworkInstance& inst, const CovarianceSet& gammas,
                      const std::vector<double>& sigma_grid) {
    require_uplink(inst);
    if (inst.K > kAuditLimit || inst.L > kAuditLimit) {
        throw SizeLimit("gap_audit_up: K and L are limited to " + std::to_string(kAuditLimit));
    }
    GapAudit out;
    out.grid = merge_grid(sigma_grid, required_audit_sigmas(inst));
    const std::size_t ng = out.grid.size();
    const RealMatrix gt = effective_gain(inst, gammas);
    const auto csum = fronthaul_table(inst);
    const Mask full_l = full_mask(inst.L);
    const Mask full_k = full_mask(inst.K);

    std::vector<double> pen(ng), scale(ng);
    for (std::size_t j = 0; j < ng; ++j) {
        pen[j] = penalty(inst.Nr, out.grid[j]);
        scale[j] = 1.0 / (out.grid[j] + 1.0);
    }

    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> worst(ng, -inf);
    out.delta = -inf;
    std::vector<Eigen::VectorXd> spectra(std::size_t{1} << inst.L);
    for (Mask s1 = 1; s1 <= full_k; ++s1) {
        for (Mask a = 1; a <= full_l; ++a)
            spectra[a] = gram_eigenvalues(select(gt, relay_rows(inst, a), user_cols(inst, s1)));

        double out_min = inf;
        std::vector<double> in_min(ng, inf);
        for (Mask s2 = 0; s2 <= full_l; ++s2) {
            const Mask a = full_l & ~s2;
            const double c = csum[s2];
            const double outer = (a ? 0.5 * log2_det_from_spectrum(spectra[a], 1.0) : 0.0) + c;
            out_min = std::min(out_min, outer);
            const double n2 = static_cast<double>(cardinality(s2));
            for (std::size_t j = 0; j < ng; ++j) {
                const double inner =
                    (a ? 0.5 * log2_det_from_spectrum(spectra[a], scale[j]) : 0.0) + c - n2 * pen[j];
                in_min[j] = std::min(in_min[j], inner);
            }
        }
        const double size = static_cast<double>(cardinality(s1));
        const double best_in = *std::max_element(in_min.begin(), in_min.end());
        out.delta = std::max(out.delta, (out_min - best_in) / size);
        for (std::size_t j = 0; j < ng; ++j) worst[j] = std::max(worst[j], (out_min - in_min[j]) / size);
        if (s1 == full_k) out.delta_sum = out_min - best_in;
    }
    const auto it = std::min_element(worst.begin(), worst.end());
    out.delta_uniform = *it;
    out.sigma_uniform = out.grid[static_cast<std::size_t>(it - worst.begin())];
    out.stated_bound_per_user = stated_per_user_gap_bound(inst);
    out.bound_per_user = per_user_gap_bound(inst);
    out.bound_sum = sum_gap_bound(inst);
    out.pass_per_user = out.delta_uniform <= out.bound_per_user + kSetTol && out.delta <= out.bound_per_user + kSetTol;
    out.pass_sum = out.delta_sum <= out.bound_sum + kSetTol;
    return out;
}

Membership ncf_region_membership(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas,
                                 const std::vector<double>& rates) {
    require_uplink(inst);
    require_sigma(sigma_sq);
    if (inst.K + inst.L > kMaxEnumeration) throw SizeLimit("ncf_region_membership: K + L exceeds 20");
    if (rates.size() != inst.K) throw InvalidInput("ncf_region_membership: one rate per user required");
    const RealMatrix gt = effective_gain(inst, gammas);
    const auto csum = fronthaul_table(inst);
    const double pen = penalty(inst.Nr, sigma_sq);
    const double scale = 1.0 / (sigma_sq + 1.0);
    const Mask full_l = full_mask(inst.L);
    for (Mask s1 = 0; s1 <= full_mask(inst.K); ++s1) {
        double r = 0.0;
        for (std::size_t k : members(s1)) r += rates[k];
        for (Mask s2 = 0; s2 <= full_l; ++s2) {
            const double bound = half_logdet(inst, gt, s1, full_l & ~s2, scale) + csum[s2] -
                                 static_cast<double>(cardinality(s2)) * pen;
            if (r > bound + kSetTol) return {false, s1, s2, r - bound};
        }
    }
    return {};
}

SumRateReport report(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas) {
    SumRateReport r;
    const SubsetMin inner = ncf_sum_rate(inst, sigma_sq, gammas);
    r.inner = inner.value;
    r.inner_clamped = std::max(0.0, inner.value);
    r.argmin_subset = inner.argmin;
    r.outer = cutset_sum_upper(inst, gammas);
    r.unlimited = unlimited_sum_capacity(inst, gammas);
    r.c_star = c_star_up(inst, sigma_sq, gammas);
    r.sigma_sq = sigma_sq;
    return r;
}

}  // namespace cran::uplink
