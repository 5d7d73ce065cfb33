#include "cran/downlink.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "cran/errors.hpp"
#include "cran/rng.hpp"

namespace cran::downlink {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLn2 = 0.69314718055994530942;
constexpr std::size_t kVerifyLimit = 8;
constexpr std::size_t kAuditLimit = 8;
constexpr std::size_t kMembershipLimit = 18;
constexpr double kLogSigmaLo = -40.0;
constexpr double kLogSigmaHi = 40.0;

void require_downlink(const NetworkInstance& inst) {
    inst.validate();
    if (inst.direction != Direction::downlink) throw InvalidInput("expected a downlink instance");
}

void require_enumerable(const NetworkInstance& inst, const char* op) {
    if (inst.L > kMaxEnumeration) {
        throw SizeLimit(std::string(op) + ": L = " + std::to_string(inst.L) +
                        " exceeds the enumeration limit of " + std::to_string(kMaxEnumeration));
    }
}

std::vector<Index> user_rows(const NetworkInstance& inst, Mask users) { return block_indices(users, inst.Nu); }

std::vector<Index> relay_cols(const NetworkInstance& inst, Mask relays) { return block_indices(relays, inst.Nr); }

double fronthaul_sum(const NetworkInstance& inst, Mask s) {
    double sum = 0.0;
    for (std::size_t l : members(s)) sum += inst.fronthaul[l];
    return sum;
}

std::vector<double> fronthaul_table(const NetworkInstance& inst) {
    std::vector<double> t(std::size_t{1} << inst.L, 0.0);
    for (Mask s = 1; s < t.size(); ++s) {
        const auto low = static_cast<std::size_t>(std::countr_zero(s));
        t[s] = t[s & (s - 1)] + inst.fronthaul[low];
    }
    return t;
}

// 1/2 log2 |I + scale * Ht_{users, relays} Ht^T|.
double half_logdet(const NetworkInstance& inst, const RealMatrix& ht, Mask users, Mask relays, double scale) {
    if (users == 0 || relays == 0) return 0.0;
    return 0.5 * logdet_gram(select(ht, user_rows(inst, users), relay_cols(inst, relays)), scale);
}

void validate_full_covariance(const NetworkInstance& inst, const PsdMatrix& gamma) {
    const auto n = static_cast<Index>(inst.Nr * inst.L);
    if (gamma.rows() != n || gamma.cols() != n) throw InvalidInput("downlink covariance has the wrong shape");
    require_finite(gamma, "downlink covariance");
    if (!is_psd(gamma)) throw InvalidInput("downlink covariance is not PSD");
    const auto nr = static_cast<Index>(inst.Nr);
    for (std::size_t l = 0; l < inst.L; ++l) {
        const double tr = gamma.block(static_cast<Index>(l) * nr, static_cast<Index>(l) * nr, nr, nr).trace();
        if (tr > inst.P * (1.0 + 1e-9)) throw InvalidInput("downlink covariance violates the per-relay power constraint");
    }
}

// Gamma_{S1|S1^c}^{1/2} for a relay subset, expanded to antenna indices.
PsdMatrix conditional_sqrt(const NetworkInstance& inst, const PsdMatrix& gamma, Mask s1) {
    const auto idx = relay_cols(inst, s1);
    if (s1 == full_mask(inst.L)) return psd_sqrt(gamma);
    return psd_sqrt(schur_conditional(gamma, idx));
}

double spectral_rate(const Eigen::VectorXd& lambda, double u) {
    const double scale = std::exp(-u);
    double s = 0.0;
    for (Index i = 0; i < lambda.size(); ++i) s += std::log1p(lambda(i) * scale);
    return 0.5 * s / kLn2;
}

}  // namespace

PsdMatrix full_covariance(const NetworkInstance& inst, const CovarianceSet& gammas) {
    validate_covariances(inst, gammas);
    const auto nr = static_cast<Index>(inst.Nr);
    PsdMatrix g = PsdMatrix::Zero(nr * static_cast<Index>(inst.L), nr * static_cast<Index>(inst.L));
    for (std::size_t l = 0; l < inst.L; ++l)
        g.block(static_cast<Index>(l) * nr, static_cast<Index>(l) * nr, nr, nr) = gammas.blocks[l];
    return g;
}

double F_in(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas, Mask s1, Mask s2) {
    require_downlink(inst);
    require_sigma(sigma_sq);
    const RealMatrix ht = effective_gain(inst, gammas);
    const Mask s2c = full_mask(inst.K) & ~s2;
    const Mask s1c = full_mask(inst.L) & ~s1;
    return half_logdet(inst, ht, s2c, s1, 1.0 / sigma_sq) + fronthaul_sum(inst, s1c) -
           static_cast<double>(cardinality(s2c)) * penalty(inst.Nu, sigma_sq);
}

double F_out(const NetworkInstance& inst, const PsdMatrix& gamma, Mask s1, Mask s2) {
    require_downlink(inst);
    validate_full_covariance(inst, gamma);
    const Mask s2c = full_mask(inst.K) & ~s2;
    const Mask s1c = full_mask(inst.L) & ~s1;
    double rate = 0.0;
    if (s1 != 0 && s2c != 0) {
        const RealMatrix m = select(inst.gain, user_rows(inst, s2c), relay_cols(inst, s1)) *
                             conditional_sqrt(inst, gamma, s1);
        rate = 0.5 * logdet_gram(m, 1.0);
    }
    return rate + fronthaul_sum(inst, s1c);
}

SetFunctionView relay_logdet_function(const NetworkInstance& inst, double sigma_sq,
                                      const CovarianceSet& gammas) {
    require_downlink(inst);
    require_sigma(sigma_sq);
    auto ht = std::make_shared<const RealMatrix>(effective_gain(inst, gammas));
    const double scale = 1.0 / sigma_sq;
    const std::size_t nr = inst.Nr;
    SetEvaluator f = [ht, scale, nr](const std::vector<std::size_t>& relays) {
        if (relays.empty()) return 0.0;
        std::vector<Index> cols;
        cols.reserve(relays.size() * nr);
        for (std::size_t l : relays)
            for (std::size_t a = 0; a < nr; ++a) cols.push_back(static_cast<Index>(l * nr + a));
        return 0.5 * logdet_gram(ht->operator()(Eigen::all, cols), scale);
    };
    if (inst.L <= kVerifyLimit) {
        auto verdict = check_polymatroid(SetFunctionView(inst.L, f));
        if (!verdict.ok) throw Error("relay log-det function failed the polymatroid check: " + verdict.violation);
        return verdict.view;
    }
    return SetFunctionView::structural_polymatroid(inst.L, f);
}

SubsetMin ddf_sum_rate(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas) {
    require_downlink(inst);
    require_sigma(sigma_sq);
    require_enumerable(inst, "ddf_sum_rate");
    const RealMatrix ht = effective_gain(inst, gammas);
    const auto csum = fronthaul_table(inst);
    const Mask full_l = full_mask(inst.L);
    const Mask users = full_mask(inst.K);
    const double scale = 1.0 / sigma_sq;
    SubsetMin best{kInf, 0};
    for (Mask s1 = 0; s1 <= full_l; ++s1) {
        const double v = half_logdet(inst, ht, users, s1, scale) + csum[full_l & ~s1];
        if (v < best.value - 1e-12 ||
            (std::abs(v - best.value) <= 1e-12 && cardinality(s1) < cardinality(best.argmin))) {
            best = {v, s1};
        }
    }
    best.value -= static_cast<double>(inst.K) * penalty(inst.Nu, sigma_sq);
    return best;
}

double cutset_sum_upper(const NetworkInstance& inst, const PsdMatrix& gamma) {
    require_downlink(inst);
    require_enumerable(inst, "cutset_sum_upper");
    validate_full_covariance(inst, gamma);
    const auto csum = fronthaul_table(inst);
    const Mask full_l = full_mask(inst.L);
    const auto all_users = user_rows(inst, full_mask(inst.K));
    double best = kInf;
    for (Mask s1 = 0; s1 <= full_l; ++s1) {
        double rate = 0.0;
        if (s1 != 0) {
            const RealMatrix m = select(inst.gain, all_users, relay_cols(inst, s1)) * conditional_sqrt(inst, gamma, s1);
            rate = 0.5 * logdet_gram(m, 1.0);
        }
        best = std::min(best, rate + csum[full_l & ~s1]);
    }
    return best;
}

double c_star_down(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas) {
    require_downlink(inst);
    require_sigma(sigma_sq);
    return 0.5 * logdet_gram(effective_gain(inst, gammas), 1.0 / sigma_sq);
}

Allocation allocate_fronthaul_down(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas,
                                   double c_sum) {
    const double c_star = c_star_down(inst, sigma_sq, gammas);
    if (!(c_sum >= c_star - 1e-9)) {
        throw Infeasible("allocate_fronthaul_down: C_sum is below C*", c_star - c_sum);
    }
    const double users_penalty = static_cast<double>(inst.K) * penalty(inst.Nu, sigma_sq);
    if (c_star < users_penalty - kSetTol) {
        throw Infeasible("allocate_fronthaul_down: C* is below the users' quantization penalty",
                         users_penalty - c_star);
    }
    const SetFunctionView phi = relay_logdet_function(inst, sigma_sq, gammas);
    BaseVector base = inst.L <= kMaxEnumeration ? cyclic_average_base(phi)
                                                : greedy_base(phi, identity_order(inst.L));
    const double floor = penalty(inst.Nr, sigma_sq);
    auto meets_floor = [&](const BaseVector& b) {
        return std::all_of(b.y.begin(), b.y.end(), [&](double v) { return v >= floor - 1e-7; });
    };

    Allocation out;
    out.floor_met = meets_floor(base);
    if (!out.floor_met && inst.L <= kMaxEnumeration) {
        try {
            base = repair_base_to_floor(phi, base, floor);
            out.floor_met = true;
        } catch (const Error&) {
        }
    }

    const double total = std::accumulate(base.y.begin(), base.y.end(), 0.0);
    out.capacities.resize(inst.L);
    for (std::size_t l = 0; l < inst.L; ++l) {
        out.capacities[l] = total > 0.0 ? base.y[l] * (c_sum / total) : c_sum / static_cast<double>(inst.L);
    }
    return out;
}

double ddf_sum_rate_certified(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas) {
    require_downlink(inst);
    const SetFunctionView phi = relay_logdet_function(inst, sigma_sq, gammas);
    auto certifies = [&](const BaseVector& b) {
        for (std::size_t l = 0; l < inst.L; ++l)
            if (b.y[l] > inst.fronthaul[l] + kSetTol) return false;
        return true;
    };
    const double users_penalty = static_cast<double>(inst.K) * penalty(inst.Nu, sigma_sq);
    if (certifies(greedy_base(phi, identity_order(inst.L))) || certifies(cyclic_average_base(phi))) {
        return phi(identity_order(inst.L)) - users_penalty;
    }
    if (inst.L <= kMaxEnumeration) return ddf_sum_rate(inst, sigma_sq, gammas).value;
    throw SizeLimit("ddf_sum_rate_certified: no base certificate and L exceeds the enumeration limit");
}

BestRate max_sum_given_csum_down(const NetworkInstance& inst, const CovarianceSet& gammas, double c_sum) {
    require_downlink(inst);
    if (!(c_sum > 0.0)) throw InvalidInput("max_sum_given_csum_down: C_sum must be positive");
    const Eigen::VectorXd lambda = gram_eigenvalues(effective_gain(inst, gammas));
    if (lambda.size() == 0 || lambda.maxCoeff() <= 0.0) return {std::exp(kLogSigmaHi), 0.0, true};

    const double users = static_cast<double>(inst.K * inst.Nu);
    auto objective = [&](double u) {
        const double pen = 0.5 * users * std::log1p(std::exp(-u)) / kLn2;
        return std::min(c_sum, spectral_rate(lambda, u)) - pen;
    };

    constexpr int n_scan = 801;
    const double step = (kLogSigmaHi - kLogSigmaLo) / (n_scan - 1);
    int best = 0;
    double best_value = -kInf;
    for (int i = 0; i < n_scan; ++i) {
        const double v = objective(kLogSigmaLo + step * i);
        if (v > best_value) {
            best_value = v;
            best = i;
        }
    }
    double a = kLogSigmaLo + step * std::max(best - 1, 0);
    double b = kLogSigmaLo + step * std::min(best + 1, n_scan - 1);
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - ratio * (b - a);
    double x2 = a + ratio * (b - a);
    double f1 = objective(x1);
    double f2 = objective(x2);
    while (b - a > 1e-8) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = objective(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = objective(x1);
        }
    }
    const double u_mid = 0.5 * (a + b);
    const double v_mid = objective(u_mid);
    if (v_mid >= best_value) return {std::exp(u_mid), v_mid, false};
    return {std::exp(kLogSigmaLo + step * best), best_value, false};
}

double dual_value(const NetworkInstance& inst, const std::vector<double>& q) {
    require_downlink(inst);
    const std::size_t n = inst.Nr * inst.L;
    if (q.size() != n) throw InvalidInput("dual_value: Q needs one diagonal entry per relay antenna");
    double level_sum = 0.0;
    for (std::size_t l = 0; l < inst.L; ++l) {
        double top = 0.0;
        for (std::size_t a = 0; a < inst.Nr; ++a) {
            const double v = q[l * inst.Nr + a];
            if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput("dual_value: Q entries must be positive");
            top = std::max(top, v);
        }
        level_sum += top;
    }
    if (level_sum > (1.0 / inst.P) * (1.0 + 1e-9)) throw InvalidInput("dual_value: Q violates the trace constraint");

    RealMatrix a = inst.gain;
    for (std::size_t i = 0; i < n; ++i) a.col(static_cast<Index>(i)) /= std::sqrt(q[i]);
    const Eigen::VectorXd lambda = gram_eigenvalues(a);
    std::vector<double> gains(lambda.data(), lambda.data() + lambda.size());
    if (std::none_of(gains.begin(), gains.end(), [](double g) { return g > 0.0; })) return 0.0;
    const std::vector<double> p = water_fill(gains, 1.0);
    double v = 0.0;
    for (std::size_t i = 0; i < gains.size(); ++i) v += std::log2(1.0 + gains[i] * p[i]);
    return 0.5 * v;
}

DualCertificate dl_unlimited_upper_bound(const NetworkInstance& inst, const UpperBoundOptions& opts) {
    require_downlink(inst);
    const std::size_t n = inst.Nr * inst.L;
    const double pl = inst.P * static_cast<double>(inst.L);
    if (opts.strategy == BoundStrategy::simple) {
        DualCertificate c;
        c.q.assign(n, 1.0 / pl);
        c.achieved_bound = 0.5 * logdet_gram(inst.gain, pl);
        return c;
    }
    if (opts.n_samples == 0) throw InvalidInput("dl_unlimited_upper_bound: n_samples must be positive");
    DualCertificate best;
    best.achieved_bound = kInf;
    for (std::size_t s = 0; s < opts.n_samples; ++s) {
        Stream rng(opts.seed, {0x51A7ull, s});
        std::vector<double> w(inst.L);
        for (double& x : w) x = rng.exponential();
        const double total = std::accumulate(w.begin(), w.end(), 0.0);
        std::vector<double> q(n);
        for (std::size_t l = 0; l < inst.L; ++l)
            for (std::size_t a = 0; a < inst.Nr; ++a) q[l * inst.Nr + a] = w[l] / (total * inst.P);
        const double v = dual_value(inst, q);
        if (v < best.achieved_bound) best = {std::move(q), v};
    }
    return best;
}

double per_user_gap_bound(const NetworkInstance& inst) {
    const double nu = static_cast<double>(inst.Nu);
    const double k = static_cast<double>(inst.K);
    const double nrl = static_cast<double>(inst.Nr * inst.L);
    const double e = std::exp(1.0);
    double bound = kInf;
    if (inst.Nr * inst.L >= inst.Nu) bound = std::min(bound, 0.5 * nu * std::log2(e * nrl * k));
    if (inst.Nu >= inst.Nr * inst.L && inst.Nu * inst.K >= 2 * inst.Nr * inst.L)
        bound = std::min(bound, 0.5 * nrl * std::log2(e * nu * k));
    if (inst.K == 1 && inst.Nr * inst.L <= inst.Nu && inst.Nu < 2 * inst.Nr * inst.L)
        bound = std::min(bound, 0.5 * nu + 0.5 * nrl * std::log2(nrl));
    return bound;
}

double sum_gap_bound(const NetworkInstance& inst) {
    const double nuk = static_cast<double>(inst.Nu * inst.K);
    const double nrl = static_cast<double>(inst.Nr * inst.L);
    return 0.5 * nuk + 0.5 * std::min(nrl, nuk) * std::log2(nrl);
}

std::vector<double> required_audit_sigmas(const NetworkInstance& inst) {
    std::vector<double> s{1.0, std::max(static_cast<double>(inst.K) - 1.0, 1.0)};
    if (inst.Nu >= inst.Nr * inst.L && inst.Nu * inst.K >= 2 * inst.Nr * inst.L) {
        s.push_back(static_cast<double>(inst.Nu * inst.K) / static_cast<double>(inst.Nr * inst.L) - 1.0);
    }
    return s;
}

GapAudit gap_audit_down(const NetworkInstance& inst, const PsdMatrix& gamma, const std::vector<double>& sigma_grid) {
    require_downlink(inst);
    if (inst.K > kAuditLimit || inst.L > kAuditLimit) {
        throw SizeLimit("gap_audit_down: K and L are limited to " + std::to_string(kAuditLimit));
    }
    validate_full_covariance(inst, gamma);
    GapAudit out;
    out.grid = sigma_grid;
    for (double s : out.grid) require_sigma(s);
    for (double s : required_audit_sigmas(inst)) out.grid.push_back(s);
    std::sort(out.grid.begin(), out.grid.end());
    out.grid.erase(std::unique(out.grid.begin(), out.grid.end(),
                               [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(a, b); }),
                   out.grid.end());
    const std::size_t ng = out.grid.size();

    const RealMatrix ht = effective_gain(inst, isotropic_covariances(inst));
    const auto csum = fronthaul_table(inst);
    const Mask full_l = full_mask(inst.L);
    const Mask full_k = full_mask(inst.K);
    const std::size_t nk = std::size_t{1} << inst.K;
    const std::size_t nl = std::size_t{1} << inst.L;

    std::vector<PsdMatrix> cond(nl);
    for (Mask s1 = 1; s1 <= full_l; ++s1) cond[s1] = conditional_sqrt(inst, gamma, s1);

    // out_min[s2] = min_{S1} F_out(S1, s2); h[j][t2] = min_{S1} F_in(S1, t2, sigma_j).
    std::vector<double> out_min(nk, kInf);
    std::vector<std::vector<double>> h(ng, std::vector<double>(nk, kInf));
    std::vector<double> pen(ng);
    for (std::size_t j = 0; j < ng; ++j) pen[j] = penalty(inst.Nu, out.grid[j]);

    for (Mask s2 = 0; s2 <= full_k; ++s2) {
        const Mask rated = full_k & ~s2;
        const double n_rated = static_cast<double>(cardinality(rated));
        for (Mask s1 = 0; s1 <= full_l; ++s1) {
            const double c = csum[full_l & ~s1];
            double outer = c;
            Eigen::VectorXd spectrum;
            if (s1 != 0 && rated != 0) {
                const auto rows = user_rows(inst, rated);
                const auto cols = relay_cols(inst, s1);
                outer += 0.5 * logdet_gram(select(inst.gain, rows, cols) * cond[s1], 1.0);
                spectrum = gram_eigenvalues(select(ht, rows, cols));
            }
            out_min[s2] = std::min(out_min[s2], outer);
            for (std::size_t j = 0; j < ng; ++j) {
                const double rate = spectrum.size() ? 0.5 * log2_det_from_spectrum(spectrum, 1.0 / out.grid[j]) : 0.0;
                h[j][s2] = std::min(h[j][s2], rate + c - n_rated * pen[j]);
            }
        }
    }
    // Subset minimum over T2 within S2.
    for (auto& row : h) {
        for (std::size_t i = 0; i < inst.K; ++i) {
            const Mask bit = Mask{1} << i;
            for (Mask m = 0; m <= full_k; ++m)
                if (m & bit) row[m] = std::min(row[m], row[m ^ bit]);
        }
    }

    std::vector<double> worst(ng, -kInf);
    out.delta = -kInf;
    for (Mask s2 = 0; s2 < full_k; ++s2) {
        const double size = static_cast<double>(cardinality(full_k & ~s2));
        double best_in = -kInf;
        for (std::size_t j = 0; j < ng; ++j) {
            best_in = std::max(best_in, h[j][s2]);
            worst[j] = std::max(worst[j], (out_min[s2] - h[j][s2]) / size);
        }
        out.delta = std::max(out.delta, (out_min[s2] - best_in) / size);
    }
    double best_sum_in = -kInf;
    for (std::size_t j = 0; j < ng; ++j) best_sum_in = std::max(best_sum_in, h[j][0]);
    out.delta_sum = out_min[0] - best_sum_in;

    const auto it = std::min_element(worst.begin(), worst.end());
    out.delta_uniform = *it;
    out.sigma_uniform = out.grid[static_cast<std::size_t>(it - worst.begin())];
    out.bound_per_user = per_user_gap_bound(inst);
    out.bound_sum = sum_gap_bound(inst);
    out.pass_per_user = out.delta <= out.bound_per_user + kSetTol && out.delta_uniform <= out.bound_per_user + kSetTol;
    out.pass_sum = out.delta_sum <= out.bound_sum + kSetTol;
    return out;
}

Membership ddf_region_membership(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas,
                                 const std::vector<double>& rates) {
    require_downlink(inst);
    require_sigma(sigma_sq);
    if (inst.K + inst.L > kMembershipLimit) throw SizeLimit("ddf_region_membership: K + L exceeds 18");
    if (rates.size() != inst.K) throw InvalidInput("ddf_region_membership: one rate per user required");
    const RealMatrix ht = effective_gain(inst, gammas);
    const auto csum = fronthaul_table(inst);
    const double pen = penalty(inst.Nu, sigma_sq);
    const Mask full_l = full_mask(inst.L);
    const Mask full_k = full_mask(inst.K);
    for (Mask s2 = 0; s2 <= full_k; ++s2) {
        const Mask rated = full_k & ~s2;
        double r = 0.0;
        for (std::size_t k : members(rated)) r += rates[k];
        for (Mask s1 = 0; s1 <= full_l; ++s1) {
            const double bound = half_logdet(inst, ht, rated, s1, 1.0 / sigma_sq) + csum[full_l & ~s1] -
                                 static_cast<double>(cardinality(rated)) * pen;
            if (r > bound + kSetTol) return {false, s1, s2, r - bound};
        }
    }
    return {};
}

SumRateReport report(const NetworkInstance& inst, double sigma_sq, const CovarianceSet& gammas) {
    SumRateReport r;
    const SubsetMin inner = ddf_sum_rate(inst, sigma_sq, gammas);
    r.inner = inner.value;
    r.inner_clamped = std::max(0.0, inner.value);
    r.argmin_subset = inner.argmin;
    r.outer = cutset_sum_upper(inst, full_covariance(inst, gammas));
    r.unlimited = dl_unlimited_upper_bound(inst, {}).achieved_bound;
    r.c_star = c_star_down(inst, sigma_sq, gammas);
    r.sigma_sq = sigma_sq;
    return r;
}

}  // namespace cran::downlink
