#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "cran/subset.hpp"

namespace cran {

// Largest ground set for which exhaustive 2^L routines run.
constexpr std::size_t kMaxEnumeration = 20;
// Largest ground set check_polymatroid accepts.
constexpr std::size_t kMaxPolymatroidCheck = 16;
// Membership and feasibility tolerance on bit values.
constexpr double kSetTol = 1e-9;

enum class Flag {
    unchecked,
    verified_true,
    verified_false,
    // Holds by construction (e.g. log-det of nested Gram matrices) but was not
    // enumerated, because the ground set is too large to check exhaustively.
    structural,
};

struct PolymatroidFlags {
    Flag normalized = Flag::unchecked;
    Flag monotone = Flag::unchecked;
    Flag submodular = Flag::unchecked;
};

struct PolymatroidVerdict;
class SetFunctionView;
PolymatroidVerdict check_polymatroid(const SetFunctionView& f);

using SetEvaluator = std::function<double(const std::vector<std::size_t>&)>;

class SetFunctionView {
public:
    SetFunctionView(std::size_t ground_size, SetEvaluator f);

    // Marks all three flags structural.
    static SetFunctionView structural_polymatroid(std::size_t ground_size, SetEvaluator f);

    std::size_t ground_size() const { return n_; }
    double operator()(const std::vector<std::size_t>& s) const { return f_(s); }
    double at(Mask m) const { return f_(members(m)); }
    const PolymatroidFlags& flags() const { return flags_; }
    bool is_polymatroid() const;

private:
    friend PolymatroidVerdict check_polymatroid(const SetFunctionView& f);

    std::size_t n_;
    SetEvaluator f_;
    PolymatroidFlags flags_;
};

struct PolymatroidVerdict {
    SetFunctionView view;  // copy of the input with flags set
    bool ok = false;
    std::string violation;  // "", "normalization", "monotonicity", "submodularity"
    Mask first = 0;         // violating pair (S, T); for monotonicity S subset T
    Mask second = 0;
};

PolymatroidVerdict check_polymatroid(const SetFunctionView& f);

// Values of f on all 2^L subsets, indexed by mask.
std::vector<double> tabulate(const SetFunctionView& f);

struct SubsetMin {
    double value = 0.0;
    Mask argmin = 0;
};

// min over S of phi(S^c) + psi(S).
SubsetMin min_combined(const SetFunctionView& phi, const SetFunctionView& psi);
SubsetMin min_combined_tables(const std::vector<double>& phi, const std::vector<double>& psi);

struct BaseVector {
    std::vector<double> y;
};

BaseVector greedy_base(const SetFunctionView& phi, const std::vector<std::size_t>& order);

// Average of the greedy vertices over the L cyclic shifts of the identity
// order; symmetric functions get symmetric bases.
BaseVector cyclic_average_base(const SetFunctionView& phi);

BaseVector repair_base_to_floor(const SetFunctionView& phi, const BaseVector& y, double floor);

struct EdmondsResult {
    double value = 0.0;
    Mask argmin = 0;  // S minimizing phi(S^c) + psi(S)
    std::vector<double> witness;
};

EdmondsResult edmonds_max(const SetFunctionView& phi, const SetFunctionView& psi);

// max over S of x(S) - f(S), together with min_l x_l folded in as -x_l when
// negative; <= tol means x lies in the polymatroid of the tabulated f.
double polymatroid_excess(const std::vector<double>& table, const std::vector<double>& x);

std::vector<std::size_t> identity_order(std::size_t n);

}  // namespace cran
