#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "cran/network.hpp"
#include "cran/rng.hpp"
#include "cran/subset.hpp"

namespace testing_support {

using cran::Mask;
using cran::RealMatrix;

inline RealMatrix gaussian(Eigen::Index rows, Eigen::Index cols, cran::Stream& rng) {
    RealMatrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
    return m;
}

inline double uniform(double lo, double hi, cran::Stream& rng) { return lo + (hi - lo) * rng.uniform(); }

inline std::size_t uniform_int(std::size_t lo, std::size_t hi, cran::Stream& rng) {
    return lo + static_cast<std::size_t>(rng.next_u64() % (hi - lo + 1));
}

// log2 det(I + scale * M M^T) through a full LU determinant of the larger
// side, independent of the library's Cholesky and spectral paths.
inline double oracle_logdet(const RealMatrix& m, double scale) {
    if (m.size() == 0) return 0.0;
    RealMatrix a = RealMatrix::Identity(m.rows(), m.rows()) + scale * m * m.transpose();
    return std::log2(a.determinant());
}

inline RealMatrix oracle_select(const RealMatrix& m, const std::vector<Eigen::Index>& rows,
                                const std::vector<Eigen::Index>& cols) {
    RealMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(rows[i], cols[j]);
    return out;
}

inline std::vector<Eigen::Index> block_rows(Mask m, std::size_t width) {
    std::vector<Eigen::Index> out;
    for (std::size_t i = 0; i < 32; ++i)
        if (m & (Mask{1} << i))
            for (std::size_t a = 0; a < width; ++a) out.push_back(static_cast<Eigen::Index>(i * width + a));
    return out;
}

inline double fronthaul_of(const cran::NetworkInstance& inst, Mask s) {
    double sum = 0.0;
    for (std::size_t l = 0; l < inst.L; ++l)
        if (s & (Mask{1} << l)) sum += inst.fronthaul[l];
    return sum;
}

inline cran::NetworkInstance uplink_instance(std::size_t K, std::size_t L, double P, std::vector<double> c,
                                             RealMatrix g, std::size_t nu = 1, std::size_t nr = 1) {
    cran::NetworkInstance inst;
    inst.direction = cran::Direction::uplink;
    inst.K = K;
    inst.L = L;
    inst.Nu = nu;
    inst.Nr = nr;
    inst.P = P;
    inst.gain = std::move(g);
    inst.fronthaul = std::move(c);
    return inst;
}

inline cran::NetworkInstance downlink_instance(std::size_t K, std::size_t L, double P, std::vector<double> c,
                                               RealMatrix h, std::size_t nu = 1, std::size_t nr = 1) {
    cran::NetworkInstance inst = uplink_instance(K, L, P, std::move(c), std::move(h), nu, nr);
    inst.direction = cran::Direction::downlink;
    return inst;
}

inline cran::NetworkInstance random_uplink(cran::Stream& rng, std::size_t K, std::size_t L, std::size_t nu = 1,
                                           std::size_t nr = 1) {
    const double P = uniform(0.1, 100.0, rng);
    std::vector<double> c(L);
    for (double& x : c) x = uniform(0.0, 10.0, rng);
    return uplink_instance(K, L, P, c, gaussian(static_cast<Eigen::Index>(nr * L), static_cast<Eigen::Index>(nu * K), rng),
                           nu, nr);
}

inline cran::NetworkInstance random_downlink(cran::Stream& rng, std::size_t K, std::size_t L, std::size_t nu = 1,
                                             std::size_t nr = 1) {
    const double P = uniform(0.1, 100.0, rng);
    std::vector<double> c(L);
    for (double& x : c) x = uniform(0.0, 10.0, rng);
    return downlink_instance(K, L, P, c,
                             gaussian(static_cast<Eigen::Index>(nu * K), static_cast<Eigen::Index>(nr * L), rng), nu, nr);
}

}  // namespace testing_support
