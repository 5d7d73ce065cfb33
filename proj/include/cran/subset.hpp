#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace cran {

// Subsets of a ground set [n] with n <= 32, bit i standing for element i.
using Mask = std::uint32_t;

constexpr std::size_t kMaxMaskBits = 32;

inline Mask full_mask(std::size_t n) {
    return n >= 32 ? ~Mask{0} : static_cast<Mask>((Mask{1} << n) - 1);
}

inline int cardinality(Mask m) { return std::popcount(m); }

inline bool contains(Mask m, std::size_t i) { return (m >> i) & 1u; }

inline std::vector<std::size_t> members(Mask m) {
    std::vector<std::size_t> out;
    out.reserve(static_cast<std::size_t>(cardinality(m)));
    while (m) {
        out.push_back(static_cast<std::size_t>(std::countr_zero(m)));
        m &= m - 1;
    }
    return out;
}

// Antenna-level indices of the node blocks in `m`, each block `width` wide.
inline std::vector<Eigen::Index> block_indices(Mask m, std::size_t width) {
    std::vector<Eigen::Index> out;
    out.reserve(static_cast<std::size_t>(cardinality(m)) * width);
    while (m) {
        const auto node = static_cast<Eigen::Index>(std::countr_zero(m));
        for (std::size_t a = 0; a < width; ++a)
            out.push_back(node * static_cast<Eigen::Index>(width) + static_cast<Eigen::Index>(a));
        m &= m - 1;
    }
    return out;
}

}  // namespace cran
