#include "cran/app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "cran/channels.hpp"
#include "cran/downlink.hpp"
#include "cran/errors.hpp"
#include "cran/experiments.hpp"
#include "cran/matrix_io.hpp"
#include "cran/network.hpp"
#include "cran/rng.hpp"
#include "cran/uplink.hpp"

namespace cran::app {

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "subcommand", "seed", "out", "direction",
        "instance.K", "instance.L", "instance.Nu", "instance.Nr", "instance.P", "instance.fronthaul",
        "instance.c_sum", "instance.sigma_sq",
        "channel.source", "channel.file", "channel.model", "channel.beta", "channel.area_side", "channel.r0",
        "channel.beta_los", "channel.beta_nlos", "channel.f_c", "channel.nakagami_m", "channel.omega",
        "channel.rayleigh_omega", "channel.shadow_sigma_los_db", "channel.shadow_sigma_nlos_db",
        "channel.shadow_mean_db",
        "audit.sigma_grid",
        "bound.strategy", "bound.samples",
        "sweep.regime", "sweep.gamma", "sweep.fixed_size", "sweep.sizes", "sweep.delta", "sweep.epsilon",
        "sweep.sigma_sq", "sweep.trials", "sweep.coupling", "sweep.lambda_grid", "sweep.lambda_u_fixed",
        "sweep.model", "sweep.beta", "sweep.area_side", "sweep.sigma_grid", "sweep.c_sums", "sweep.antennas",
        "sweep.K", "sweep.L", "sweep.P",
    };
    return keys;
}

enum Purpose : std::uint64_t { kChannel = 101, kScenario = 102 };

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
    return s;
}

std::string mask_string(Mask m) {
    std::string s = "{";
    bool first = true;
    for (std::size_t i : members(m)) {
        s += (first ? "" : ",") + std::to_string(i + 1);
        first = false;
    }
    return s + "}";
}

struct Output {
    std::string body;     // report or CSV
    std::string summary;  // one line
};

class Report {
public:
    explicit Report(const Config& cfg) {
        lines_ << "subcommand=" << cfg.get_string("subcommand") << '\n';
        for (const auto& [k, v] : cfg.entries())
            if (k != "subcommand") lines_ << "config." << k << '=' << v << '\n';
    }
    Report& add(const std::string& key, double v) {
        lines_ << key << '=' << num(v) << '\n';
        return *this;
    }
    Report& add(const std::string& key, const std::string& v) {
        lines_ << key << '=' << v << '\n';
        return *this;
    }
    std::string str() const { return lines_.str(); }

private:
    std::ostringstream lines_;
};

Direction direction_of(const Config& cfg) { return parse_direction(cfg.get_string("direction", "uplink")); }

channels::MultipathParams multipath_params(const Config& cfg) {
    channels::MultipathParams p;
    p.beta_los = cfg.get_double("channel.beta_los", p.beta_los);
    p.beta_nlos = cfg.get_double("channel.beta_nlos", p.beta_nlos);
    p.f_c = cfg.get_double("channel.f_c", p.f_c);
    p.r0 = cfg.get_double("channel.r0", p.r0);
    p.nakagami_m = cfg.get_double("channel.nakagami_m", p.nakagami_m);
    p.omega = cfg.get_double("channel.omega", p.omega);
    p.rayleigh_omega = cfg.get_double("channel.rayleigh_omega", p.rayleigh_omega);
    p.shadow_sigma_los_db = cfg.get_double("channel.shadow_sigma_los_db", p.shadow_sigma_los_db);
    p.shadow_sigma_nlos_db = cfg.get_double("channel.shadow_sigma_nlos_db", p.shadow_sigma_nlos_db);
    p.shadow_mean_db = cfg.get_double("channel.shadow_mean_db", p.shadow_mean_db);
    p.validate();
    return p;
}

std::size_t positive_size(const Config& cfg, const std::string& key, std::size_t fallback) {
    const std::size_t v = cfg.get_size(key, fallback);
    if (v < 1) throw InvalidInput(key + " must be at least 1");
    return v;
}

std::size_t required_positive_size(const Config& cfg, const std::string& key) {
    const std::size_t v = cfg.get_size(key);
    if (v < 1) throw InvalidInput(key + " must be at least 1");
    return v;
}

RealMatrix replicate_blocks(const RealMatrix& g, std::size_t nr, std::size_t nu) {
    RealMatrix out(g.rows() * static_cast<Index>(nr), g.cols() * static_cast<Index>(nu));
    for (Index r = 0; r < g.rows(); ++r)
        for (Index c = 0; c < g.cols(); ++c)
            out.block(r * static_cast<Index>(nr), c * static_cast<Index>(nu), static_cast<Index>(nr),
                      static_cast<Index>(nu))
                .setConstant(g(r, c));
    return out;
}

// The channel in uplink orientation: (Nr L) x (Nu K).
RealMatrix channel_matrix(const Config& cfg, Direction dir, std::size_t K, std::size_t L, std::size_t nu,
                          std::size_t nr) {
    const std::string source = cfg.get_string("channel.source");
    const std::uint64_t seed = cfg.get_u64("seed");
    if (source != "file" && cfg.has("channel.file"))
        throw InvalidInput("channel.file is only allowed with channel.source = file");
    if (source == "file") {
        RealMatrix m = read_matrix_file(cfg.get_string("channel.file"));
        return dir == Direction::uplink ? m : RealMatrix(m.transpose());
    }
    if (source == "rich") return channels::rich_scattering(nr * L, nu * K, derive_key(seed, {kChannel}));
    if (source == "geometry") {
        const double area = cfg.get_double("channel.area_side", 100.0);
        const channels::MultipathParams params = multipath_params(cfg);
        const auto scenario = channels::fixed_scenario(area, K, L, params.r0, derive_key(seed, {kScenario}));
        const std::string model = cfg.get_string("channel.model", "multipath");
        if (model == "los") return replicate_blocks(channels::los_gain_matrix(scenario, cfg.get_double("channel.beta", 2.5)), nr, nu);
        if (model == "multipath") return channels::mimo_expand(scenario, params, nu, nr, derive_key(seed, {kChannel}));
        throw InvalidInput("channel.model must be los or multipath");
    }
    throw InvalidInput("channel.source must be file, rich or geometry");
}

NetworkInstance build_instance(const Config& cfg, Direction dir, bool need_fronthaul) {
    NetworkInstance inst;
    inst.direction = dir;
    inst.K = required_positive_size(cfg, "instance.K");
    inst.L = required_positive_size(cfg, "instance.L");
    inst.Nu = positive_size(cfg, "instance.Nu", 1);
    inst.Nr = positive_size(cfg, "instance.Nr", 1);
    inst.P = cfg.get_double("instance.P");
    RealMatrix g = channel_matrix(cfg, dir, inst.K, inst.L, inst.Nu, inst.Nr);
    inst.gain = dir == Direction::uplink ? g : RealMatrix(g.transpose());
    if (cfg.has("instance.fronthaul")) inst.fronthaul = cfg.get_doubles("instance.fronthaul");
    else if (need_fronthaul) throw InvalidInput("missing required key 'instance.fronthaul'");
    else inst.fronthaul.assign(inst.L, 0.0);
    inst.validate();
    return inst;
}

double sigma_of(const Config& cfg) {
    const double s = cfg.get_double("instance.sigma_sq");
    require_sigma(s);
    return s;
}

std::vector<double> sigma_grid(const Config& cfg, const std::string& key) {
    return cfg.has(key) ? cfg.get_doubles(key) : experiments::default_sigma_grid();
}

Output sumrate(const Config& cfg, Direction dir) {
    const NetworkInstance inst = build_instance(cfg, dir, true);
    const double s = sigma_of(cfg);
    const CovarianceSet gammas = isotropic_covariances(inst);
    Report r(cfg);
    SumRateReport rep;
    const char* rate_key = dir == Direction::uplink ? "R_NCF" : "R_DDF";
    if (dir == Direction::uplink) {
        rep = uplink::report(inst, s, gammas);
        r.add("R_NCF", rep.inner).add("R_NCF_clamped", rep.inner_clamped).add("argmin_S2", mask_string(rep.argmin_subset));
        r.add("R_cutset_upper", rep.outer).add("R_inf", rep.unlimited).add("C_star", rep.c_star);
    } else {
        rep = downlink::report(inst, s, gammas);
        r.add("R_DDF", rep.inner).add("R_DDF_clamped", rep.inner_clamped).add("argmin_S1", mask_string(rep.argmin_subset));
        r.add("R_cutset_upper", rep.outer).add("R_inf_upper", rep.unlimited).add("C_star", rep.c_star);
    }
    r.add("sigma_sq", s);
    return {r.str(), std::string(rate_key) + "=" + num(rep.inner) + " C_star=" + num(rep.c_star)};
}

Output allocate(const Config& cfg) {
    const Direction dir = direction_of(cfg);
    NetworkInstance inst = build_instance(cfg, dir, false);
    const double s = sigma_of(cfg);
    const double c_sum = cfg.get_double("instance.c_sum");
    if (!(c_sum > 0.0) || !std::isfinite(c_sum)) throw InvalidInput("instance.c_sum must be positive and finite");
    const CovarianceSet gammas = isotropic_covariances(inst);
    Report r(cfg);
    double rate = 0.0;
    double c_star = 0.0;
    if (dir == Direction::uplink) {
        c_star = uplink::c_star_up(inst, s, gammas);
        inst.fronthaul = uplink::allocate_fronthaul_up(inst, s, gammas, c_sum);
        rate = uplink::ncf_sum_rate_certified(inst, s, gammas);
        r.add("C_star", c_star).add("capacities", join(inst.fronthaul)).add("R_NCF", rate);
    } else {
        c_star = downlink::c_star_down(inst, s, gammas);
        const auto a = downlink::allocate_fronthaul_down(inst, s, gammas, c_sum);
        inst.fronthaul = a.capacities;
        rate = downlink::ddf_sum_rate_certified(inst, s, gammas);
        r.add("C_star", c_star).add("capacities", join(inst.fronthaul)).add("R_DDF", rate);
        r.add("floor_met", a.floor_met ? "true" : "false");
    }
    return {r.str(), "capacities=" + join(inst.fronthaul) + " sum_rate=" + num(rate)};
}

Output sigma_star(const Config& cfg) {
    const Direction dir = direction_of(cfg);
    const NetworkInstance inst = build_instance(cfg, dir, false);
    const double c_sum = cfg.get_double("instance.c_sum");
    if (!(c_sum > 0.0)) throw InvalidInput("instance.c_sum must be positive");
    const CovarianceSet gammas = isotropic_covariances(inst);
    Report r(cfg);
    double s = 0.0;
    double v = 0.0;
    if (dir == Direction::uplink) {
        if (!std::isfinite(c_sum)) throw InvalidInput("instance.c_sum must be finite for the uplink");
        const auto st = uplink::sigma_star_up(inst, gammas, c_sum);
        s = st.sigma_sq;
        v = st.rate;
        r.add("sigma_star_sq", s).add("R_sum_max", v).add("R_inf", uplink::unlimited_sum_capacity(inst, gammas));
    } else {
        const auto best = downlink::max_sum_given_csum_down(inst, gammas, c_sum);
        s = best.sigma_sq;
        v = best.value;
        r.add("sigma_star_sq", s).add("R_sum_max", v).add("degenerate", best.degenerate ? "true" : "false");
    }
    return {r.str(), "sigma_star_sq=" + num(s) + " R_sum_max=" + num(v)};
}

Output gap_audit(const Config& cfg) {
    const Direction dir = direction_of(cfg);
    const NetworkInstance inst = build_instance(cfg, dir, true);
    const std::vector<double> grid = sigma_grid(cfg, "audit.sigma_grid");
    const CovarianceSet gammas = isotropic_covariances(inst);
    Report r(cfg);
    bool pass = false;
    if (dir == Direction::uplink) {
        const auto a = uplink::gap_audit_up(inst, gammas, grid);
        r.add("delta", a.delta).add("delta_uniform", a.delta_uniform).add("sigma_uniform", a.sigma_uniform);
        r.add("delta_sum", a.delta_sum).add("bound_per_user", a.bound_per_user);
        r.add("stated_bound_per_user", a.stated_bound_per_user).add("bound_sum", a.bound_sum);
        r.add("pass_per_user", a.pass_per_user ? "true" : "false").add("pass_sum", a.pass_sum ? "true" : "false");
        r.add("grid", join(a.grid));
        pass = a.pass_per_user && a.pass_sum;
    } else {
        const auto a = downlink::gap_audit_down(inst, downlink::full_covariance(inst, gammas), grid);
        r.add("delta", a.delta).add("delta_uniform", a.delta_uniform).add("sigma_uniform", a.sigma_uniform);
        r.add("delta_sum", a.delta_sum).add("bound_per_user", a.bound_per_user).add("bound_sum", a.bound_sum);
        r.add("pass_per_user", a.pass_per_user ? "true" : "false").add("pass_sum", a.pass_sum ? "true" : "false");
        r.add("grid", join(a.grid));
        pass = a.pass_per_user && a.pass_sum;
    }
    r.add("pass", pass ? "true" : "false");
    return {r.str(), std::string("pass=") + (pass ? "true" : "false")};
}

Output unlimited_bound(const Config& cfg) {
    const Direction dir = direction_of(cfg);
    const NetworkInstance inst = build_instance(cfg, dir, false);
    Report r(cfg);
    double v = 0.0;
    if (dir == Direction::uplink) {
        v = uplink::unlimited_sum_capacity(inst, isotropic_covariances(inst));
        r.add("R_inf", v);
    } else {
        downlink::UpperBoundOptions opts;
        const std::string strategy = cfg.get_string("bound.strategy", "simple");
        if (strategy == "randomized_q") {
            opts.strategy = downlink::BoundStrategy::randomized_q;
            opts.n_samples = positive_size(cfg, "bound.samples", 200);
            opts.seed = cfg.get_u64("seed");
        } else if (strategy != "simple") {
            throw InvalidInput("bound.strategy must be simple or randomized_q");
        }
        const auto cert = downlink::dl_unlimited_upper_bound(inst, opts);
        v = cert.achieved_bound;
        r.add("R_inf_upper", v).add("q", join(cert.q));
    }
    return {r.str(), (dir == Direction::uplink ? "R_inf=" : "R_inf_upper=") + num(v)};
}

Output sweep_output(const experiments::SweepResult& res) {
    return {experiments::to_csv(res), "rows=" + std::to_string(res.rows.size()) + " trials=" +
                                          std::to_string(res.trial_count) +
                                          " violations=" + std::to_string(res.violations)};
}

Output scaling(const Config& cfg) {
    experiments::ScalingConfig sc;
    sc.direction = direction_of(cfg);
    sc.regime = experiments::parse_regime(cfg.get_string("sweep.regime", "linear"));
    sc.gamma = cfg.get_double("sweep.gamma", sc.gamma);
    sc.fixed_size = positive_size(cfg, "sweep.fixed_size", sc.fixed_size);
    sc.sizes = cfg.get_sizes("sweep.sizes");
    sc.delta = cfg.get_double("sweep.delta", sc.delta);
    sc.epsilon = cfg.get_double("sweep.epsilon", sc.epsilon);
    if (cfg.has("sweep.sigma_sq")) sc.sigma_sq = cfg.get_double("sweep.sigma_sq");
    sc.P = cfg.get_double("sweep.P", sc.P);
    sc.trials = positive_size(cfg, "sweep.trials", sc.trials);
    sc.seed = cfg.get_u64("seed");
    return sweep_output(experiments::scaling_sweep(sc));
}

Output geometry(const Config& cfg) {
    experiments::GeometryConfig gc;
    gc.direction = direction_of(cfg);
    gc.coupling = experiments::parse_coupling(cfg.get_string("sweep.coupling", "double_relays"));
    gc.lambda_grid = cfg.get_doubles("sweep.lambda_grid");
    gc.lambda_u_fixed = cfg.get_double("sweep.lambda_u_fixed", gc.lambda_u_fixed);
    gc.model = experiments::parse_gain_model(cfg.get_string("sweep.model", "los"));
    gc.beta = cfg.get_double("sweep.beta", gc.beta);
    gc.multipath = multipath_params(cfg);
    gc.area_side = cfg.get_double("sweep.area_side", gc.area_side);
    gc.P = cfg.get_double("sweep.P", gc.P);
    if (cfg.has("sweep.sigma_grid")) gc.sigma_grid = cfg.get_doubles("sweep.sigma_grid");
    gc.trials = positive_size(cfg, "sweep.trials", gc.trials);
    gc.seed = cfg.get_u64("seed");
    return sweep_output(experiments::geometry_sweep(gc));
}

Output antenna(const Config& cfg) {
    experiments::AntennaConfig ac;
    ac.direction = direction_of(cfg);
    ac.K = positive_size(cfg, "sweep.K", ac.K);
    ac.L = positive_size(cfg, "sweep.L", ac.L);
    if (cfg.has("sweep.c_sums")) ac.c_sums = cfg.get_doubles("sweep.c_sums");
    if (cfg.has("sweep.antennas")) ac.antennas = cfg.get_sizes("sweep.antennas");
    ac.model = experiments::parse_gain_model(cfg.get_string("sweep.model", "multipath"));
    ac.beta = cfg.get_double("sweep.beta", ac.beta);
    ac.multipath = multipath_params(cfg);
    ac.area_side = cfg.get_double("sweep.area_side", ac.area_side);
    ac.P = cfg.get_double("sweep.P", ac.P);
    ac.trials = positive_size(cfg, "sweep.trials", ac.trials);
    ac.seed = cfg.get_u64("seed");
    return sweep_output(experiments::antenna_sweep(ac));
}

Output gen_channel(const Config& cfg) {
    if (!cfg.has("out")) throw InvalidInput("gen-channel requires an output path");
    const Direction dir = direction_of(cfg);
    const std::size_t K = required_positive_size(cfg, "instance.K");
    const std::size_t L = required_positive_size(cfg, "instance.L");
    const std::size_t nu = positive_size(cfg, "instance.Nu", 1);
    const std::size_t nr = positive_size(cfg, "instance.Nr", 1);
    RealMatrix g = channel_matrix(cfg, dir, K, L, nu, nr);
    if (dir == Direction::downlink) g.transposeInPlace();
    std::ostringstream os;
    write_matrix(os, g);
    return {os.str(), "matrix " + std::to_string(g.rows()) + "x" + std::to_string(g.cols())};
}

using Handler = std::function<Output(const Config&)>;

const std::vector<std::pair<std::string, Handler>>& handlers() {
    static const std::vector<std::pair<std::string, Handler>> h{
        {"uplink-sumrate", [](const Config& c) { return sumrate(c, Direction::uplink); }},
        {"downlink-sumrate", [](const Config& c) { return sumrate(c, Direction::downlink); }},
        {"allocate", allocate},
        {"sigma-star", sigma_star},
        {"gap-audit", gap_audit},
        {"unlimited-bound", unlimited_bound},
        {"scaling-sweep", scaling},
        {"geometry-sweep", geometry},
        {"antenna-sweep", antenna},
        {"gen-channel", gen_channel},
    };
    return h;
}

void validate_keys(const Config& cfg) {
    for (const auto& [k, v] : cfg.entries())
        if (!known_keys().count(k)) throw InvalidInput("unknown config key '" + k + "'");
    cfg.get_u64("seed");
}

}  // namespace

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& [name, h] : handlers()) n.push_back(name);
        return n;
    }();
    return names;
}

std::string usage() {
    std::string s = "usage: cran <subcommand> [--config PATH] [--out PATH] [--seed N] [--direction uplink|downlink]\n"
                    "            [--set KEY=VALUE]... [--KEY VALUE]...\n"
                    "subcommands:\n";
    for (const auto& name : subcommands()) s += "  " + name + "\n";
    return s;
}

int run(const Config& cfg, std::ostream& out, std::ostream& err) {
    try {
        const std::string sub = cfg.get_string("subcommand");
        const auto& hs = handlers();
        const auto it = std::find_if(hs.begin(), hs.end(), [&](const auto& p) { return p.first == sub; });
        if (it == hs.end()) {
            err << "unknown subcommand '" << sub << "'\n" << usage();
            return kConfigError;
        }
        validate_keys(cfg);
        const Output o = it->second(cfg);
        if (cfg.has("out")) {
            const std::string path = cfg.get_string("out");
            std::ofstream f(path, std::ios::binary);
            if (!f) throw InvalidInput("cannot open output file: " + path);
            f << o.body;
            if (!f) throw InvalidInput("failed writing output file: " + path);
        } else {
            out << o.body;
        }
        out << sub << ": " << o.summary << '\n';
        return kOk;
    } catch (const Infeasible& e) {
        err << "infeasible: " << e.what() << " (shortfall " << num(e.shortfall()) << ")\n";
        return kInfeasible;
    } catch (const SizeLimit& e) {
        err << "size limit: " << e.what() << '\n';
        return kSizeLimit;
    } catch (const InvalidInput& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
}

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App cli{"Cloud-RAN capacity bounds, fronthaul allocation and sweeps"};
    std::string sub;
    std::string config_path;
    std::string out_path;
    std::string seed;
    std::string direction;
    std::vector<std::string> sets;
    cli.add_option("subcommand", sub, "one of the subcommands below")->required();
    cli.add_option("--config", config_path, "config file (key = value, [section] headers)");
    cli.add_option("--out", out_path, "output path");
    cli.add_option("--seed", seed, "top-level seed");
    cli.add_option("--direction", direction, "uplink or downlink");
    cli.add_option("--set", sets, "KEY=VALUE override, repeatable");
    cli.allow_extras();
    cli.footer(usage());
    try {
        cli.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << cli.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n' << usage();
        return kConfigError;
    }

    Config cfg;
    try {
        if (!config_path.empty()) cfg = Config::parse_file(config_path);
        if (cfg.has("subcommand") && cfg.get_string("subcommand") != sub)
            throw InvalidInput("config names subcommand '" + cfg.get_string("subcommand") + "' but '" + sub +
                               "' was requested");
        cfg.set("subcommand", sub);
        auto assign = [&](const std::string& kv) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw InvalidInput("override '" + kv + "' is not KEY=VALUE");
            cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
        };
        for (const auto& kv : sets) assign(kv);
        const auto extras = cli.remaining();
        for (std::size_t i = 0; i < extras.size(); ++i) {
            const std::string& a = extras[i];
            if (a.rfind("--", 0) != 0 || a.size() < 3) throw InvalidInput("unexpected argument '" + a + "'");
            const std::string body = a.substr(2);
            if (body.find('=') != std::string::npos) {
                assign(body);
            } else {
                if (i + 1 >= extras.size()) throw InvalidInput("flag '" + a + "' needs a value");
                cfg.set(body, extras[++i]);
            }
        }
        if (!out_path.empty()) cfg.set("out", out_path);
        if (!seed.empty()) cfg.set("seed", seed);
        if (!direction.empty()) cfg.set("direction", direction);
    } catch (const Error& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    }
    return run(cfg, out, err);
}

}  // namespace cran::app
