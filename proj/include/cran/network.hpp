#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cran/numkernel.hpp"
#include "cran/subset.hpp"

namespace cran {

enum class Direction { uplink, downlink };

std::string to_string(Direction d);
Direction parse_direction(const std::string& s);

// Uplink gain is (Nr*L) x (Nu*K): row blocks are relays, column blocks users.
// Downlink gain is (Nu*K) x (Nr*L): row blocks are users, column blocks relays.
struct NetworkInstance {
    Direction direction = Direction::uplink;
    std::size_t K = 1;
    std::size_t L = 1;
    std::size_t Nu = 1;
    std::size_t Nr = 1;
    RealMatrix gain;
    double P = 1.0;
    std::vector<double> fronthaul;  // L entries, bits per real dimension

    void validate() const;
    // Antenna width of the transmitting node blocks (users uplink, relays downlink).
    std::size_t tx_width() const { return direction == Direction::uplink ? Nu : Nr; }
    std::size_t rx_width() const { return direction == Direction::uplink ? Nr : Nu; }
    std::size_t tx_nodes() const { return direction == Direction::uplink ? K : L; }
    std::size_t rx_nodes() const { return direction == Direction::uplink ? L : K; }
};

// Per-transmitter covariance blocks: Gamma_k (uplink) or Gamma_l (downlink).
struct CovarianceSet {
    std::vector<PsdMatrix> blocks;
};

// (P / N) I for every transmitting node.
CovarianceSet isotropic_covariances(const NetworkInstance& inst);

// Checks block count, shapes, PSD-ness and trace(Gamma) = P (uplink) or
// trace(Gamma) <= P (downlink).
void validate_covariances(const NetworkInstance& inst, const CovarianceSet& gammas);

// gain * blockdiag(Gamma^{1/2}) so that a Gram form of the product carries the
// covariances: G Gamma G^T = (G Gamma^{1/2})(G Gamma^{1/2})^T.
RealMatrix effective_gain(const NetworkInstance& inst, const CovarianceSet& gammas);

// (N/2) log2(1 + 1/sigma^2): the per-node quantization penalty.
double penalty(std::size_t antennas, double sigma_sq);

void require_sigma(double sigma_sq);

struct SumRateReport {
    double inner = 0.0;
    double inner_clamped = 0.0;
    double outer = 0.0;
    double unlimited = 0.0;
    double c_star = 0.0;
    double sigma_sq = 1.0;
    Mask argmin_subset = 0;
    std::optional<double> delta_per_user;
    std::optional<double> delta_sum;
};

}  // namespace cran
