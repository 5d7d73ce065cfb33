#include "cran/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "cran/downlink.hpp"
#include "cran/errors.hpp"
#include "cran/rng.hpp"
#include "cran/uplink.hpp"

namespace cran::experiments {

namespace {

constexpr double kLog2e = 1.4426950408889634074;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool close_enough(double a, double b) { return std::abs(a - b) <= 1e-7 * std::max({1.0, std::abs(a), std::abs(b)}); }

bool at_most(double a, double b) { return a <= b + 1e-9 * std::max({1.0, std::abs(a), std::abs(b)}); }

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

NetworkInstance make_instance(Direction dir, std::size_t K, std::size_t L, std::size_t nu, std::size_t nr,
                              RealMatrix gain, double P) {
    NetworkInstance inst;
    inst.direction = dir;
    inst.K = K;
    inst.L = L;
    inst.Nu = nu;
    inst.Nr = nr;
    inst.gain = std::move(gain);
    inst.P = P;
    inst.fronthaul.assign(L, 0.0);
    inst.validate();
    return inst;
}

struct TrialStats {
    double rate = 0.0;      // R_NCF or R_DDF
    double c_star = 0.0;
    double reference = 0.0;  // R_inf (uplink) or its upper bound (downlink)
    bool violated = false;
};

// Fronthaul provisioned at C*(sigma^2) by the allocation, then the sum-rate
// recomputed from the allocated capacities.
TrialStats uplink_trial(NetworkInstance inst, double sigma_sq) {
    const CovarianceSet gammas = isotropic_covariances(inst);
    TrialStats t;
    t.c_star = uplink::c_star_up(inst, sigma_sq, gammas);
    inst.fronthaul = uplink::allocate_fronthaul_up(inst, sigma_sq, gammas, t.c_star);
    t.rate = uplink::ncf_sum_rate_certified(inst, sigma_sq, gammas);
    t.reference = uplink::unlimited_sum_capacity(inst, gammas);
    const double identity = uplink::provisioned_sum_rate(inst, sigma_sq, gammas);
    t.violated = !at_most(t.rate, t.reference) || !at_most(t.rate, t.c_star) || !close_enough(t.rate, identity);
    return t;
}

TrialStats downlink_trial(NetworkInstance inst, double sigma_sq) {
    const CovarianceSet gammas = isotropic_covariances(inst);
    TrialStats t;
    t.c_star = downlink::c_star_down(inst, sigma_sq, gammas);
    const double identity = t.c_star - static_cast<double>(inst.K) * penalty(inst.Nu, sigma_sq);
    double rate = identity;
    if (identity >= 0.0) {
        inst.fronthaul = downlink::allocate_fronthaul_down(inst, sigma_sq, gammas, t.c_star).capacities;
        rate = downlink::ddf_sum_rate_certified(inst, sigma_sq, gammas);
    }
    t.rate = std::max(0.0, rate);
    t.reference = downlink::dl_unlimited_upper_bound(inst, {}).achieved_bound;
    t.violated = !at_most(t.rate, t.reference) || !close_enough(rate, identity);
    return t;
}

void aggregate(SweepResult& out, const std::string& regime, double p1, double p2, const std::string& statistic,
               const std::vector<double>& values, std::uint64_t seed) {
    const std::size_t n = values.size();
    if (n == 1) {
        out.rows.push_back({regime, p1, p2, n, statistic, "single", values[0], seed});
        return;
    }
    out.rows.push_back({regime, p1, p2, n, statistic, "median", median(values), seed});
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    out.rows.push_back({regime, p1, p2, n, statistic, "mean", mean, seed});
}

struct Prediction {
    double sigma_sq = 1.0;
    double rate = kNaN;
    double c_star = kNaN;
    double reference = kNaN;
};

Prediction predict(const ScalingConfig& cfg, std::size_t K, std::size_t L) {
    const double k = static_cast<double>(K);
    const double l = static_cast<double>(L);
    const double balanced = 0.5 * std::min(k, l) * std::log2(std::max(k, l));
    Prediction p;
    if (cfg.direction == Direction::uplink) {
        p.reference = balanced;
        switch (cfg.regime) {
            case Regime::power:
                if (cfg.gamma > 1.0) {
                    p.sigma_sq = std::pow(k, cfg.gamma - 1.0 - cfg.delta);
                    p.rate = (1.0 + cfg.delta) * 0.5 * k * std::log2(k);
                    p.c_star = cfg.delta > 0.0 ? 0.5 * std::pow(k, 1.0 + cfg.delta) * kLog2e : 0.5 * k * std::log2(k);
                    return p;
                }
                break;
            case Regime::k_fixed:
                p.sigma_sq = std::pow(l, cfg.epsilon);
                p.rate = (1.0 - cfg.epsilon) * 0.5 * k * std::log2(l);
                p.c_star = 0.5 * std::pow(l, 1.0 - cfg.epsilon) * kLog2e;
                return p;
            case Regime::linear:
            case Regime::l_fixed:
                break;
        }
        p.rate = p.c_star = balanced;
        return p;
    }
    if (cfg.regime == Regime::l_fixed) throw InvalidInput("scaling_sweep: the downlink has no L-fixed regime");
    if (cfg.regime == Regime::power && cfg.gamma < 1.0) {
        p.sigma_sq = std::pow(l, 1.0 / cfg.gamma - 1.0 + cfg.delta);
        p.rate = p.c_star = (1.0 - cfg.delta) * 0.5 * l * std::log2(l);
        return p;
    }
    p.rate = p.c_star = balanced;
    return p;
}

std::pair<std::size_t, std::size_t> scaling_sizes(const ScalingConfig& cfg, std::size_t size) {
    switch (cfg.regime) {
        case Regime::linear:
            return {size, static_cast<std::size_t>(std::max(1.0, std::round(cfg.gamma * static_cast<double>(size))))};
        case Regime::power:
            return {size,
                    static_cast<std::size_t>(std::max(1.0, std::round(std::pow(static_cast<double>(size), cfg.gamma))))};
        case Regime::k_fixed:
            return {cfg.fixed_size, size};
        case Regime::l_fixed:
            return {size, cfg.fixed_size};
    }
    throw InvalidInput("scaling_sweep: unknown regime");
}

std::string direction_prefix(Direction d) { return to_string(d) + ":"; }

const char* rate_name(Direction d) { return d == Direction::uplink ? "R_NCF" : "R_DDF"; }

const char* reference_name(Direction d) { return d == Direction::uplink ? "R_inf" : "R_inf_upper"; }

RealMatrix replicate_blocks(const RealMatrix& g, std::size_t n) {
    const auto w = static_cast<Index>(n);
    RealMatrix out(g.rows() * w, g.cols() * w);
    for (Index r = 0; r < g.rows(); ++r)
        for (Index c = 0; c < g.cols(); ++c) out.block(r * w, c * w, w, w).setConstant(g(r, c));
    return out;
}

}  // namespace

double median(std::vector<double> v) {
    if (v.empty()) throw InvalidInput("median of an empty sample");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string csv_header() { return "regime,param1,param2,trials,statistic,aggregation,value,seed"; }

std::string to_csv(const SweepResult& result) {
    std::string out = csv_header() + "\n";
    for (const auto& r : result.rows) {
        out += r.regime + "," + format_number(r.param1) + "," + format_number(r.param2) + "," +
               std::to_string(r.trials) + "," + r.statistic + "," + r.aggregation + "," + format_number(r.value) +
               "," + std::to_string(r.seed) + "\n";
    }
    return out;
}

std::vector<double> default_sigma_grid() {
    std::vector<double> g(25);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::pow(10.0, -3.0 + 6.0 * static_cast<double>(i) / 24.0);
    return g;
}

double sigma_select_uplink(const NetworkInstance& inst, const CovarianceSet& gammas, const std::vector<double>& grid) {
    if (grid.empty()) throw InvalidInput("sigma_select_uplink: empty grid");
    const double r_inf = uplink::unlimited_sum_capacity(inst, gammas);
    const Eigen::VectorXd lambda = gram_eigenvalues(effective_gain(inst, gammas));
    double best_s = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (double s : grid) {
        require_sigma(s);
        const double rate = 0.5 * log2_det_from_spectrum(lambda, 1.0 / (s + 1.0));
        const double c_star = rate + static_cast<double>(inst.L) * penalty(inst.Nr, s);
        const double objective = std::max(c_star - r_inf, r_inf - rate);
        if (objective < best || (objective == best && s < best_s)) {
            best = objective;
            best_s = s;
        }
    }
    return best_s;
}

double sigma_select_downlink(const NetworkInstance& inst, const CovarianceSet& gammas,
                             const std::vector<double>& grid) {
    if (grid.empty()) throw InvalidInput("sigma_select_downlink: empty grid");
    double best_s = 0.0;
    double best = -std::numeric_limits<double>::infinity();
    for (double s : grid) {
        const double v = downlink::ddf_sum_rate(inst, s, gammas).value;
        if (v > best || (v == best && s < best_s)) {
            best = v;
            best_s = s;
        }
    }
    return best_s;
}

double sigma_select_downlink_provisioned(const NetworkInstance& inst, const CovarianceSet& gammas,
                                         const std::vector<double>& grid) {
    if (grid.empty()) throw InvalidInput("sigma_select_downlink_provisioned: empty grid");
    const Eigen::VectorXd lambda = gram_eigenvalues(effective_gain(inst, gammas));
    double best_s = 0.0;
    double best = -std::numeric_limits<double>::infinity();
    for (double s : grid) {
        require_sigma(s);
        const double v = 0.5 * log2_det_from_spectrum(lambda, 1.0 / s) -
                         static_cast<double>(inst.K) * penalty(inst.Nu, s);
        if (v > best || (v == best && s < best_s)) {
            best = v;
            best_s = s;
        }
    }
    return best_s;
}

std::string to_string(Regime r) {
    switch (r) {
        case Regime::linear: return "linear";
        case Regime::power: return "power";
        case Regime::k_fixed: return "k_fixed";
        case Regime::l_fixed: return "l_fixed";
    }
    return "unknown";
}

Regime parse_regime(const std::string& s) {
    if (s == "linear") return Regime::linear;
    if (s == "power") return Regime::power;
    if (s == "k_fixed") return Regime::k_fixed;
    if (s == "l_fixed") return Regime::l_fixed;
    throw InvalidInput("unknown scaling regime '" + s + "' (linear, power, k_fixed, l_fixed)");
}

std::string to_string(Coupling c) {
    switch (c) {
        case Coupling::double_relays: return "double_relays";
        case Coupling::squared_relays: return "squared_relays";
        case Coupling::users_fixed: return "users_fixed";
    }
    return "unknown";
}

Coupling parse_coupling(const std::string& s) {
    if (s == "double_relays") return Coupling::double_relays;
    if (s == "squared_relays") return Coupling::squared_relays;
    if (s == "users_fixed") return Coupling::users_fixed;
    throw InvalidInput("unknown coupling '" + s + "' (double_relays, squared_relays, users_fixed)");
}

std::string to_string(GainModel m) {
    switch (m) {
        case GainModel::los: return "los";
        case GainModel::multipath: return "multipath";
        case GainModel::rich: return "rich";
    }
    return "unknown";
}

GainModel parse_gain_model(const std::string& s) {
    if (s == "los") return GainModel::los;
    if (s == "multipath") return GainModel::multipath;
    if (s == "rich") return GainModel::rich;
    throw InvalidInput("unknown gain model '" + s + "' (los, multipath, rich)");
}

SweepResult scaling_sweep(const ScalingConfig& cfg) {
    if (cfg.sizes.empty()) throw InvalidInput("scaling_sweep: size list is empty");
    if (cfg.trials < 1) throw InvalidInput("scaling_sweep: trials must be at least 1");
    if (!(cfg.gamma > 0.0) || cfg.gamma == 1.0) throw InvalidInput("scaling_sweep: gamma must be positive and not 1");
    if (cfg.regime == Regime::k_fixed && !(cfg.epsilon > 0.0 && cfg.epsilon < 1.0))
        throw InvalidInput("scaling_sweep: epsilon must lie in (0,1)");
    if (!(cfg.delta >= 0.0)) throw InvalidInput("scaling_sweep: delta must be nonnegative");
    if (cfg.sigma_sq) require_sigma(*cfg.sigma_sq);

    SweepResult out;
    std::string regime = direction_prefix(cfg.direction) + to_string(cfg.regime);
    if (cfg.regime == Regime::linear || cfg.regime == Regime::power) regime += "(gamma=" + format_number(cfg.gamma) + ")";
    else regime += "(" + std::string(cfg.regime == Regime::k_fixed ? "K=" : "L=") + std::to_string(cfg.fixed_size) + ")";

    for (std::size_t si = 0; si < cfg.sizes.size(); ++si) {
        const auto [K, L] = scaling_sizes(cfg, cfg.sizes[si]);
        if (K < 1 || L < 1) throw InvalidInput("scaling_sweep: sizes must be at least 1");
        const Prediction pred = predict(cfg, K, L);
        const double sigma_sq = cfg.sigma_sq.value_or(pred.sigma_sq);
        std::vector<double> rate, c_star, reference;
        for (std::size_t t = 0; t < cfg.trials; ++t) {
            const std::uint64_t key = derive_key(cfg.seed, {si, t});
            TrialStats s;
            if (cfg.direction == Direction::uplink) {
                s = uplink_trial(make_instance(Direction::uplink, K, L, 1, 1, channels::rich_scattering(L, K, key), cfg.P),
                                 sigma_sq);
            } else {
                s = downlink_trial(
                    make_instance(Direction::downlink, K, L, 1, 1, channels::rich_scattering(K, L, key), cfg.P), sigma_sq);
            }
            rate.push_back(s.rate);
            c_star.push_back(s.c_star);
            reference.push_back(s.reference);
            ++out.trial_count;
            if (s.violated) ++out.violations;
        }
        const double k = static_cast<double>(K);
        const double l = static_cast<double>(L);
        aggregate(out, regime, k, l, rate_name(cfg.direction), rate, cfg.seed);
        aggregate(out, regime, k, l, "C_star", c_star, cfg.seed);
        aggregate(out, regime, k, l, reference_name(cfg.direction), reference, cfg.seed);
        if (!std::isnan(pred.rate))
            out.rows.push_back({regime, k, l, cfg.trials, rate_name(cfg.direction), "asymptote", pred.rate, cfg.seed});
        if (!std::isnan(pred.c_star))
            out.rows.push_back({regime, k, l, cfg.trials, "C_star", "asymptote", pred.c_star, cfg.seed});
        if (!std::isnan(pred.reference))
            out.rows.push_back({regime, k, l, cfg.trials, reference_name(cfg.direction), "asymptote", pred.reference,
                                cfg.seed});
    }
    return out;
}

SweepResult geometry_sweep(const GeometryConfig& cfg) {
    if (cfg.lambda_grid.empty()) throw InvalidInput("geometry_sweep: lambda grid is empty");
    if (cfg.trials < 1) throw InvalidInput("geometry_sweep: trials must be at least 1");
    if (cfg.sigma_grid.empty()) throw InvalidInput("geometry_sweep: sigma grid is empty");
    if (cfg.model == GainModel::rich) throw InvalidInput("geometry_sweep: model must be los or multipath");
    if (cfg.model == GainModel::multipath) cfg.multipath.validate();
    if (cfg.coupling == Coupling::users_fixed && !(cfg.lambda_u_fixed > 0.0))
        throw InvalidInput("geometry_sweep: fixed lambda_u must be positive");

    SweepResult out;
    const std::string label = direction_prefix(cfg.direction) + "geometry(" + to_string(cfg.coupling) + ";" +
                              to_string(cfg.model) + ")";

    for (std::size_t gi = 0; gi < cfg.lambda_grid.size(); ++gi) {
        const double lambda = cfg.lambda_grid[gi];
        if (!(lambda > 0.0)) throw InvalidInput("geometry_sweep: lambda values must be positive");
        double lambda_u = lambda;
        double lambda_r = 2.0 * lambda;
        if (cfg.coupling == Coupling::squared_relays) lambda_r = lambda * lambda;
        if (cfg.coupling == Coupling::users_fixed) {
            lambda_u = cfg.lambda_u_fixed;
            lambda_r = lambda;
        }
        std::vector<double> rate, c_star, reference;
        for (std::size_t t = 0; t < cfg.trials; ++t) {
            const std::uint64_t key = derive_key(cfg.seed, {gi, t});
            const auto scenario = channels::draw_scenario(cfg.area_side, lambda_u, lambda_r, cfg.multipath.r0, key);
            const std::size_t K = scenario.user_positions.size();
            const std::size_t L = scenario.relay_positions.size();
            ++out.trial_count;
            if (K == 0 || L == 0) {
                rate.push_back(0.0);
                c_star.push_back(0.0);
                reference.push_back(0.0);
                continue;
            }
            const std::uint64_t channel_key = derive_key(key, {1});
            RealMatrix g = cfg.model == GainModel::los ? channels::los_gain_matrix(scenario, cfg.beta)
                                                       : channels::multipath_gain_matrix(scenario, cfg.multipath, channel_key);
            TrialStats s;
            if (cfg.direction == Direction::uplink) {
                const auto inst = make_instance(Direction::uplink, K, L, 1, 1, std::move(g), cfg.P);
                s = uplink_trial(inst, sigma_select_uplink(inst, isotropic_covariances(inst), cfg.sigma_grid));
            } else {
                const auto inst = make_instance(Direction::downlink, K, L, 1, 1, g.transpose(), cfg.P);
                s = downlink_trial(inst,
                                   sigma_select_downlink_provisioned(inst, isotropic_covariances(inst), cfg.sigma_grid));
            }
            rate.push_back(s.rate);
            c_star.push_back(s.c_star);
            reference.push_back(s.reference);
            if (s.violated) ++out.violations;
        }
        aggregate(out, label, lambda_u, lambda_r, rate_name(cfg.direction), rate, cfg.seed);
        aggregate(out, label, lambda_u, lambda_r, "C_star", c_star, cfg.seed);
        aggregate(out, label, lambda_u, lambda_r, reference_name(cfg.direction), reference, cfg.seed);
    }
    return out;
}

SweepResult antenna_sweep(const AntennaConfig& cfg) {
    if (cfg.K < 1 || cfg.L < 1) throw InvalidInput("antenna_sweep: K and L must be at least 1");
    if (cfg.c_sums.empty() || cfg.antennas.empty()) throw InvalidInput("antenna_sweep: empty C_sum or antenna list");
    if (cfg.trials < 1) throw InvalidInput("antenna_sweep: trials must be at least 1");
    for (double c : cfg.c_sums)
        if (!(c > 0.0)) throw InvalidInput("antenna_sweep: C_sum values must be positive");
    for (std::size_t n : cfg.antennas)
        if (n < 1) throw InvalidInput("antenna_sweep: antenna counts must be at least 1");
    if (cfg.model == GainModel::multipath) cfg.multipath.validate();

    SweepResult out;
    const std::string regime = direction_prefix(cfg.direction) + "antenna(" + to_string(cfg.model) + ")";
    const std::size_t nc = cfg.c_sums.size();
    for (std::size_t ni = 0; ni < cfg.antennas.size(); ++ni) {
        const std::size_t n = cfg.antennas[ni];
        std::vector<std::vector<double>> values(nc);
        for (std::size_t t = 0; t < cfg.trials; ++t) {
            const std::uint64_t key = derive_key(cfg.seed, {t});
            const std::uint64_t channel_key = derive_key(key, {1});
            RealMatrix g;
            if (cfg.model == GainModel::rich) {
                g = channels::rich_scattering(n * cfg.L, n * cfg.K, derive_key(channel_key, {n}));
            } else {
                const auto scenario = channels::fixed_scenario(cfg.area_side, cfg.K, cfg.L, cfg.multipath.r0, key);
                if (cfg.model == GainModel::multipath) {
                    g = channels::mimo_expand(scenario, cfg.multipath, n, n, channel_key);
                } else {
                    g = replicate_blocks(channels::los_gain_matrix(scenario, cfg.beta), n);
                }
            }
            ++out.trial_count;
            bool violated = false;
            double previous = -std::numeric_limits<double>::infinity();
            double previous_c = -std::numeric_limits<double>::infinity();
            for (std::size_t ci = 0; ci < nc; ++ci) {
                const double c_sum = cfg.c_sums[ci];
                double v = 0.0;
                if (cfg.direction == Direction::uplink) {
                    const auto inst = make_instance(Direction::uplink, cfg.K, cfg.L, n, n, g, cfg.P);
                    v = uplink::sigma_star_up(inst, isotropic_covariances(inst), c_sum).rate;
                } else {
                    const auto inst = make_instance(Direction::downlink, cfg.K, cfg.L, n, n, g.transpose(), cfg.P);
                    v = downlink::max_sum_given_csum_down(inst, isotropic_covariances(inst), c_sum).value;
                }
                if (!at_most(v, c_sum)) violated = true;
                if (c_sum >= previous_c && v < previous - 1e-6 * std::max(1.0, std::abs(previous))) violated = true;
                previous = v;
                previous_c = c_sum;
                values[ci].push_back(v);
            }
            if (violated) ++out.violations;
        }
        for (std::size_t ci = 0; ci < nc; ++ci)
            aggregate(out, regime, static_cast<double>(n), cfg.c_sums[ci], rate_name(cfg.direction), values[ci],
                      cfg.seed);
    }
    return out;
}

}  // namespace cran::experiments
