#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cran/channels.hpp"
#include "cran/network.hpp"

namespace cran::experiments {

struct SweepRow {
    std::string regime;
    double param1 = 0.0;
    double param2 = 0.0;
    std::size_t trials = 0;
    std::string statistic;    // R_NCF, R_DDF, C_star, R_inf, R_inf_upper
    std::string aggregation;  // median, mean, single, asymptote
    double value = 0.0;
    std::uint64_t seed = 0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::size_t trial_count = 0;      // trials evaluated over the whole sweep
    std::size_t violations = 0;       // trials breaking a per-trial inequality
};

std::string csv_header();
std::string to_csv(const SweepResult& result);

// 25 log-spaced points on [1e-3, 1e3].
std::vector<double> default_sigma_grid();

// Grid argmin of max{C*(s) - R_inf, R_inf - R(s)}, R(s) the sum-rate once the
// fronthaul total reaches C*(s). Ties go to the smaller sigma^2.
double sigma_select_uplink(const NetworkInstance& inst, const CovarianceSet& gammas, const std::vector<double>& grid);

// Grid argmax of ddf_sum_rate with the instance's own fronthaul.
double sigma_select_downlink(const NetworkInstance& inst, const CovarianceSet& gammas, const std::vector<double>& grid);

// Grid argmax of C*(s) - (K Nu / 2) log2(1 + 1/s): the DDF sum-rate once the
// fronthaul total reaches C*(s).
double sigma_select_downlink_provisioned(const NetworkInstance& inst, const CovarianceSet& gammas,
                                         const std::vector<double>& grid);

enum class Regime { linear, power, k_fixed, l_fixed };

std::string to_string(Regime r);
Regime parse_regime(const std::string& s);

struct ScalingConfig {
    Direction direction = Direction::uplink;
    Regime regime = Regime::linear;
    double gamma = 2.0;            // L = gamma K or L = K^gamma
    std::size_t fixed_size = 4;    // K (k_fixed) or L (l_fixed)
    std::vector<std::size_t> sizes;  // K values, or L values for k_fixed
    double delta = 0.0;
    double epsilon = 0.5;
    std::optional<double> sigma_sq;  // overrides the regime's sigma^2 policy
    double P = 1.0;
    std::size_t trials = 20;
    std::uint64_t seed = 0;
};

SweepResult scaling_sweep(const ScalingConfig& cfg);

enum class Coupling { double_relays, squared_relays, users_fixed };

std::string to_string(Coupling c);
Coupling parse_coupling(const std::string& s);

enum class GainModel { los, multipath, rich };

std::string to_string(GainModel m);
GainModel parse_gain_model(const std::string& s);

struct GeometryConfig {
    Direction direction = Direction::uplink;
    Coupling coupling = Coupling::double_relays;
    std::vector<double> lambda_grid;
    double lambda_u_fixed = 10.0;  // users_fixed: lambda_grid sweeps lambda_r
    GainModel model = GainModel::los;
    double beta = 2.5;
    channels::MultipathParams multipath;
    double area_side = 100.0;
    double P = 1.0;
    std::vector<double> sigma_grid = default_sigma_grid();
    std::size_t trials = 1000;
    std::uint64_t seed = 0;
};

SweepResult geometry_sweep(const GeometryConfig& cfg);

struct AntennaConfig {
    Direction direction = Direction::uplink;
    std::size_t K = 4;
    std::size_t L = 6;
    std::vector<double> c_sums{20.0, 40.0, 60.0, 80.0};
    std::vector<std::size_t> antennas{1, 2, 4};
    GainModel model = GainModel::multipath;
    double beta = 2.5;
    channels::MultipathParams multipath;
    double area_side = 100.0;
    double P = 1.0;
    std::size_t trials = 100;
    std::uint64_t seed = 0;
};

SweepResult antenna_sweep(const AntennaConfig& cfg);

double median(std::vector<double> v);

}  // namespace cran::experiments
