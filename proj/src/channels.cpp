#include "cran/channels.hpp"

#include <algorithm>
#include <cmath>

#include "cran/errors.hpp"
#include "cran/rng.hpp"

namespace cran::channels {

namespace {

constexpr double kSpeedOfLight = 299792458.0;
constexpr double kPi = 3.14159265358979323846;
constexpr double kPoissonChunk = 500.0;

enum Purpose : std::uint64_t {
    kRich = 1,
    kPppCount,
    kPppPosition,
    kUsers,
    kRelays,
    kBranch,
    kShadow,
    kFading,
    kNakagami,
    kRayleigh,
};

std::uint64_t poisson(double mean, Stream& rng) {
    std::uint64_t count = 0;
    while (mean > 0.0) {
        const double chunk = std::min(mean, kPoissonChunk);
        mean -= chunk;
        const double limit = std::exp(-chunk);
        double prod = rng.uniform();
        while (prod > limit) {
            ++count;
            prod *= rng.uniform();
        }
    }
    return count;
}

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double gamma_integer_shape(std::uint64_t shape, double scale, Stream& rng) {
    double s = 0.0;
    for (std::uint64_t i = 0; i < shape; ++i) s += rng.exponential();
    return s * scale;
}

double nakagami_from(double m, double omega, Stream& rng) {
    return std::sqrt(gamma_integer_shape(static_cast<std::uint64_t>(m), omega / m, rng));
}

double rayleigh_from(double omega, Stream& rng) { return std::sqrt(omega * rng.exponential()); }

void require_nodes(const GeometryScenario& s) {
    s.validate();
    if (s.user_positions.empty() || s.relay_positions.empty())
        throw DegenerateChannel("scenario needs at least one user and one relay");
}

}  // namespace

void GeometryScenario::validate() const {
    if (!(r0 > 0.0)) throw InvalidInput("scenario: r0 must be positive");
    if (!(area_side >= 0.0)) throw InvalidInput("scenario: area side must be nonnegative");
    auto inside = [&](const Point& p) {
        return p.x >= 0.0 && p.x <= area_side && p.y >= 0.0 && p.y <= area_side;
    };
    if (!std::all_of(user_positions.begin(), user_positions.end(), inside) ||
        !std::all_of(relay_positions.begin(), relay_positions.end(), inside))
        throw InvalidInput("scenario: node positions must lie inside the square");
}

std::vector<Point> uniform_nodes(double area_side, std::size_t count, std::uint64_t seed) {
    if (!(area_side >= 0.0)) throw InvalidInput("uniform_nodes: area side must be nonnegative");
    std::vector<Point> pts(count);
    for (std::size_t i = 0; i < count; ++i) {
        Stream rng(seed, {kPppPosition, i});
        pts[i].x = rng.uniform() * area_side;
        pts[i].y = rng.uniform() * area_side;
    }
    return pts;
}

GeometryScenario fixed_scenario(double area_side, std::size_t K, std::size_t L, double r0, std::uint64_t seed) {
    GeometryScenario s;
    s.area_side = area_side;
    s.r0 = r0;
    s.seed = seed;
    s.user_positions = uniform_nodes(area_side, K, derive_key(seed, {kUsers}));
    s.relay_positions = uniform_nodes(area_side, L, derive_key(seed, {kRelays}));
    s.validate();
    return s;
}

GeometryScenario draw_scenario(double area_side, double lambda_u, double lambda_r, double r0, std::uint64_t seed) {
    GeometryScenario s;
    s.area_side = area_side;
    s.lambda_u = lambda_u;
    s.lambda_r = lambda_r;
    s.r0 = r0;
    s.seed = seed;
    s.user_positions = ppp_nodes(area_side, lambda_u, derive_key(seed, {kUsers}));
    s.relay_positions = ppp_nodes(area_side, lambda_r, derive_key(seed, {kRelays}));
    s.validate();
    return s;
}

double MultipathParams::kappa() const { return 4.0 * kPi * r0 * f_c / kSpeedOfLight; }

void MultipathParams::validate() const {
    if (!(beta_los > 0.0) || !(beta_nlos > 0.0)) throw InvalidInput("multipath: path-loss exponents must be positive");
    if (!(f_c > 0.0) || !(r0 > 0.0)) throw InvalidInput("multipath: f_c and r0 must be positive");
    if (!(nakagami_m >= 1.0) || nakagami_m != std::floor(nakagami_m) || nakagami_m > 64.0)
        throw InvalidInput("multipath: nakagami_m must be an integer in [1, 64]");
    if (!(omega > 0.0) || !(rayleigh_omega > 0.0)) throw InvalidInput("multipath: spreads must be positive");
    if (!(shadow_sigma_los_db >= 0.0) || !(shadow_sigma_nlos_db >= 0.0))
        throw InvalidInput("multipath: shadowing deviations must be nonnegative");
    if (!std::isfinite(shadow_mean_db)) throw InvalidInput("multipath: shadowing mean must be finite");
}

RealMatrix rich_scattering(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    if (rows < 1 || cols < 1) throw InvalidInput("rich_scattering: rows and cols must be at least 1");
    RealMatrix g(static_cast<Index>(rows), static_cast<Index>(cols));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) g(static_cast<Index>(r), static_cast<Index>(c)) =
            Stream(seed, {kRich, r, c}).normal();
    return g;
}

std::vector<Point> ppp_nodes(double area_side, double lambda, std::uint64_t seed) {
    if (!(lambda > 0.0)) throw InvalidInput("ppp_nodes: intensity must be positive");
    if (!(area_side >= 0.0)) throw InvalidInput("ppp_nodes: area side must be nonnegative");
    Stream count_rng(seed, {kPppCount});
    const std::uint64_t n = poisson(lambda * area_side * area_side / 1e4, count_rng);
    return uniform_nodes(area_side, static_cast<std::size_t>(n), seed);
}

RealMatrix los_gain_matrix(const GeometryScenario& scenario, double beta) {
    require_nodes(scenario);
    if (!(beta > 0.0)) throw InvalidInput("los_gain_matrix: beta must be positive");
    const auto& relays = scenario.relay_positions;
    const auto& users = scenario.user_positions;
    RealMatrix g(static_cast<Index>(relays.size()), static_cast<Index>(users.size()));
    for (std::size_t l = 0; l < relays.size(); ++l)
        for (std::size_t k = 0; k < users.size(); ++k)
            g(static_cast<Index>(l), static_cast<Index>(k)) =
                std::pow(std::max(scenario.r0, distance(relays[l], users[k])), -beta);
    return g;
}

double p_los(double r) {
    if (!(r > 0.0)) throw InvalidInput("p_los: distance must be positive");
    if (r <= 18.0) return 1.0;
    const double decay = std::exp(-r / 36.0);
    return (18.0 / r) * (1.0 - decay) + decay;
}

MultipathDraw mimo_expand_detailed(const GeometryScenario& scenario, const MultipathParams& params, std::size_t nu,
                                   std::size_t nr, std::uint64_t seed) {
    require_nodes(scenario);
    params.validate();
    if (nu < 1 || nr < 1) throw InvalidInput("mimo_expand: antenna counts must be at least 1");
    const auto& relays = scenario.relay_positions;
    const auto& users = scenario.user_positions;
    const auto rows = static_cast<Index>(nr * relays.size());
    const auto cols = static_cast<Index>(nu * users.size());
    MultipathDraw out{RealMatrix(rows, cols), RealMatrix(rows, cols)};
    const double kappa = params.kappa();

    for (std::size_t l = 0; l < relays.size(); ++l) {
        for (std::size_t k = 0; k < users.size(); ++k) {
            const double r = std::max(params.r0, distance(relays[l], users[k]));
            const bool los = Stream(seed, {kBranch, l, k}).uniform() < p_los(r);
            const double sigma_db = los ? params.shadow_sigma_los_db : params.shadow_sigma_nlos_db;
            const double shadow_db = params.shadow_mean_db + sigma_db * Stream(seed, {kShadow, l, k}).normal();
            const double theta = std::pow(10.0, shadow_db / 20.0);
            const double loss = kappa * std::pow(r, los ? params.beta_los : params.beta_nlos);
            for (std::size_t i = 0; i < nr; ++i) {
                for (std::size_t j = 0; j < nu; ++j) {
                    double a = 1.0;
                    if (!params.unit_amplitude) {
                        Stream rng(seed, {kFading, l, k, i, j});
                        a = los ? nakagami_from(params.nakagami_m, params.omega, rng)
                                : rayleigh_from(params.rayleigh_omega, rng);
                    }
                    const auto row = static_cast<Index>(l * nr + i);
                    const auto col = static_cast<Index>(k * nu + j);
                    out.amplitude(row, col) = a;
                    out.gain(row, col) = a * theta / loss;
                }
            }
        }
    }
    return out;
}

RealMatrix mimo_expand(const GeometryScenario& scenario, const MultipathParams& params, std::size_t nu,
                       std::size_t nr, std::uint64_t seed) {
    return mimo_expand_detailed(scenario, params, nu, nr, seed).gain;
}

RealMatrix multipath_gain_matrix(const GeometryScenario& scenario, const MultipathParams& params, std::uint64_t seed) {
    return mimo_expand_detailed(scenario, params, 1, 1, seed).gain;
}

double mp_band_fraction(const RealMatrix& g, double margin) {
    require_finite(g, "mp_band_fraction");
    if (g.cols() < 1 || g.rows() < g.cols()) throw InvalidInput("mp_band_fraction: need L >= K >= 1");
    if (!(margin >= 0.0)) throw InvalidInput("mp_band_fraction: margin must be nonnegative");
    const double k = static_cast<double>(g.cols());
    const auto [lo, hi] = mp_edges(static_cast<double>(g.rows()) / k);
    const Eigen::VectorXd lambda = gram_eigenvalues(g) / k;
    Index inside = 0;
    for (Index i = 0; i < lambda.size(); ++i)
        if (lambda(i) >= lo - margin && lambda(i) <= hi + margin) ++inside;
    return static_cast<double>(inside) / static_cast<double>(lambda.size());
}

bool mp_band_check(const RealMatrix& g, double margin, double min_fraction) {
    return mp_band_fraction(g, margin) >= min_fraction;
}

double nakagami_sample(double m, double omega, std::uint64_t seed, std::uint64_t n) {
    MultipathParams p;
    p.nakagami_m = m;
    p.omega = omega;
    p.validate();
    Stream rng(seed, {kNakagami, n});
    return nakagami_from(m, omega, rng);
}

double rayleigh_sample(double omega, std::uint64_t seed, std::uint64_t n) {
    if (!(omega > 0.0)) throw InvalidInput("rayleigh_sample: omega must be positive");
    Stream rng(seed, {kRayleigh, n});
    return rayleigh_from(omega, rng);
}

}  // namespace cran::channels
