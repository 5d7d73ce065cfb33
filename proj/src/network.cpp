#include "cran/network.hpp"

#include <cmath>

#include "cran/errors.hpp"

namespace cran {

std::string to_string(Direction d) { return d == Direction::uplink ? "uplink" : "downlink"; }

Direction parse_direction(const std::string& s) {
    if (s == "uplink" || s == "up") return Direction::uplink;
    if (s == "downlink" || s == "down") return Direction::downlink;
    throw InvalidInput("unknown direction '" + s + "'");
}

void NetworkInstance::validate() const {
    if (K < 1 || L < 1) throw InvalidInput("instance: K and L must be at least 1");
    if (Nu < 1 || Nr < 1) throw InvalidInput("instance: antenna counts must be at least 1");
    if (!(P > 0.0) || !std::isfinite(P)) throw InvalidInput("instance: P must be positive");
    const auto rows = static_cast<Index>(rx_width() * rx_nodes());
    const auto cols = static_cast<Index>(tx_width() * tx_nodes());
    if (gain.rows() != rows || gain.cols() != cols) {
        throw InvalidInput("instance: gain is " + std::to_string(gain.rows()) + "x" +
                           std::to_string(gain.cols()) + ", expected " + std::to_string(rows) +
                           "x" + std::to_string(cols));
    }
    require_finite(gain, "instance gain");
    if (fronthaul.size() != L) throw InvalidInput("instance: fronthaul list must have L entries");
    for (double c : fronthaul)
        if (!(c >= 0.0) || std::isnan(c)) throw InvalidInput("instance: fronthaul capacities must be nonnegative");
}

CovarianceSet isotropic_covariances(const NetworkInstance& inst) {
    const std::size_t n = inst.tx_width();
    CovarianceSet s;
    s.blocks.assign(inst.tx_nodes(),
                    RealMatrix::Identity(static_cast<Index>(n), static_cast<Index>(n)) *
                        (inst.P / static_cast<double>(n)));
    return s;
}

void validate_covariances(const NetworkInstance& inst, const CovarianceSet& gammas) {
    const auto n = static_cast<Index>(inst.tx_width());
    if (gammas.blocks.size() != inst.tx_nodes())
        throw InvalidInput("covariances: one block per transmitting node required");
    for (const auto& g : gammas.blocks) {
        if (g.rows() != n || g.cols() != n) throw InvalidInput("covariances: block has wrong shape");
        if (!is_psd(g)) throw InvalidInput("covariances: block is not PSD");
        const double tr = g.trace();
        if (inst.direction == Direction::uplink) {
            if (std::abs(tr - inst.P) > 1e-9 * std::max(1.0, inst.P))
                throw InvalidInput("covariances: uplink block trace must equal P");
        } else if (tr > inst.P * (1.0 + 1e-9)) {
            throw InvalidInput("covariances: downlink block trace exceeds P");
        }
    }
}

RealMatrix effective_gain(const NetworkInstance& inst, const CovarianceSet& gammas) {
    validate_covariances(inst, gammas);
    const auto n = static_cast<Index>(inst.tx_width());
    RealMatrix out(inst.gain.rows(), inst.gain.cols());
    for (std::size_t b = 0; b < gammas.blocks.size(); ++b) {
        const Index c0 = static_cast<Index>(b) * n;
        out.middleCols(c0, n) = inst.gain.middleCols(c0, n) * psd_sqrt(gammas.blocks[b]);
    }
    return out;
}

double penalty(std::size_t antennas, double sigma_sq) {
    return 0.5 * static_cast<double>(antennas) * std::log2(1.0 + 1.0 / sigma_sq);
}

void require_sigma(double sigma_sq) {
    if (!(sigma_sq > 0.0) || !std::isfinite(sigma_sq))
        throw InvalidInput("sigma^2 must be positive and finite");
}

}  // namespace cran
