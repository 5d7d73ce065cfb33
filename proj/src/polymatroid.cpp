#include "cran/polymatroid.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "cran/errors.hpp"

namespace cran {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Exchange capacities at or below this count as zero.
constexpr double kCapTol = 1e-12;

void require_enumerable(std::size_t n, const char* op) {
    if (n > kMaxEnumeration) {
        throw SizeLimit(std::string(op) + ": ground set of " + std::to_string(n) +
                        " exceeds the enumeration limit of " + std::to_string(kMaxEnumeration));
    }
}

bool flag_ok(Flag f) { return f == Flag::verified_true || f == Flag::structural; }

// Subset sums x(A) for every mask.
std::vector<double> subset_sums(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<double> s(std::size_t{1} << n, 0.0);
    for (Mask a = 1; a < s.size(); ++a) {
        const auto low = static_cast<std::size_t>(std::countr_zero(a));
        s[a] = s[a & (a - 1)] + x[low];
    }
    return s;
}

// cap[u * n + v] = min over A with u in A, v not in A of slack(A), capped by
// x_v (the decreased coordinate must stay nonnegative). cap[u * n + u] holds
// the free capacity min over A containing u.
std::vector<double> exchange_capacities(const std::vector<double>& slack,
                                        const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<double> cap(n * n, kInf);
    for (Mask a = 1; a < slack.size(); ++a) {
        const double s = slack[a];
        for (Mask in = a; in; in &= in - 1) {
            const auto u = static_cast<std::size_t>(std::countr_zero(in));
            double* row = &cap[u * n];
            row[u] = std::min(row[u], s);
            for (std::size_t v = 0; v < n; ++v)
                if (!contains(a, v) && s < row[v]) row[v] = s;
        }
    }
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v)
            if (u != v) cap[u * n + v] = std::min(cap[u * n + v], x[v]);
    return cap;
}

}  // namespace

SetFunctionView::SetFunctionView(std::size_t ground_size, SetEvaluator f)
    : n_(ground_size), f_(std::move(f)) {
    if (!f_) throw InvalidInput("SetFunctionView: empty evaluator");
}

SetFunctionView SetFunctionView::structural_polymatroid(std::size_t ground_size, SetEvaluator f) {
    SetFunctionView v(ground_size, std::move(f));
    v.flags_ = {Flag::structural, Flag::structural, Flag::structural};
    return v;
}

bool SetFunctionView::is_polymatroid() const {
    return flag_ok(flags_.normalized) && flag_ok(flags_.monotone) && flag_ok(flags_.submodular);
}

std::vector<double> tabulate(const SetFunctionView& f) {
    require_enumerable(f.ground_size(), "tabulate");
    std::vector<double> t(std::size_t{1} << f.ground_size());
    for (Mask m = 0; m < t.size(); ++m) t[m] = f.at(m);
    return t;
}

std::vector<std::size_t> identity_order(std::size_t n) {
    std::vector<std::size_t> o(n);
    std::iota(o.begin(), o.end(), std::size_t{0});
    return o;
}

PolymatroidVerdict check_polymatroid(const SetFunctionView& f) {
    const std::size_t n = f.ground_size();
    if (n > kMaxPolymatroidCheck) {
        throw SizeLimit("check_polymatroid: ground set of " + std::to_string(n) +
                        " exceeds the exhaustive-check limit of " +
                        std::to_string(kMaxPolymatroidCheck));
    }
    const auto t = tabulate(f);
    PolymatroidVerdict v{f, false, "", 0, 0};
    v.view.flags_ = {Flag::verified_true, Flag::verified_true, Flag::verified_true};

    if (std::abs(t[0]) > kSetTol) {
        v.view.flags_.normalized = Flag::verified_false;
        v.violation = "normalization";
        v.first = v.second = 0;
    }
    // Local conditions suffice: f(S+i) >= f(S), and
    // f(S+i) + f(S+j) >= f(S+i+j) + f(S) for i, j outside S.
    for (Mask s = 0; s < t.size(); ++s) {
        for (std::size_t i = 0; i < n; ++i) {
            if (contains(s, i)) continue;
            const Mask si = s | (Mask{1} << i);
            if (t[si] < t[s] - kSetTol && v.view.flags_.monotone == Flag::verified_true) {
                v.view.flags_.monotone = Flag::verified_false;
                if (v.violation.empty()) {
                    v.violation = "monotonicity";
                    v.first = s;
                    v.second = si;
                }
            }
            for (std::size_t j = i + 1; j < n; ++j) {
                if (contains(s, j)) continue;
                const Mask sj = s | (Mask{1} << j);
                if (t[si] + t[sj] < t[si | sj] + t[s] - kSetTol &&
                    v.view.flags_.submodular == Flag::verified_true) {
                    v.view.flags_.submodular = Flag::verified_false;
                    if (v.violation.empty()) {
                        v.violation = "submodularity";
                        v.first = si;
                        v.second = sj;
                    }
                }
            }
        }
    }
    v.ok = v.violation.empty();
    return v;
}

SubsetMin min_combined_tables(const std::vector<double>& phi, const std::vector<double>& psi) {
    if (phi.size() != psi.size()) throw InvalidInput("min_combined: mismatched ground sizes");
    const Mask full = static_cast<Mask>(phi.size() - 1);
    SubsetMin best{kInf, 0};
    for (Mask s = 0; s < phi.size(); ++s) {
        const double v = phi[full & ~s] + psi[s];
        // Masks are visited in increasing order, so at equal value and equal
        // cardinality the earlier mask already holds the slot.
        if (v < best.value - 1e-12 ||
            (std::abs(v - best.value) <= 1e-12 && cardinality(s) < cardinality(best.argmin))) {
            best = {v, s};
        }
    }
    return best;
}

SubsetMin min_combined(const SetFunctionView& phi, const SetFunctionView& psi) {
    if (phi.ground_size() != psi.ground_size()) throw InvalidInput("min_combined: mismatched ground sizes");
    require_enumerable(phi.ground_size(), "min_combined");
    return min_combined_tables(tabulate(phi), tabulate(psi));
}

BaseVector greedy_base(const SetFunctionView& phi, const std::vector<std::size_t>& order) {
    if (!phi.is_polymatroid()) throw PreconditionError("greedy_base: set function is not a verified polymatroid");
    const std::size_t n = phi.ground_size();
    if (order.size() != n) throw InvalidInput("greedy_base: order is not a permutation of the ground set");
    std::vector<char> seen(n, 0);
    for (std::size_t e : order) {
        if (e >= n || seen[e]) throw InvalidInput("greedy_base: order is not a permutation of the ground set");
        seen[e] = 1;
    }
    BaseVector b{std::vector<double>(n, 0.0)};
    std::vector<std::size_t> prefix;
    prefix.reserve(n);
    double prev = phi(prefix);
    for (std::size_t e : order) {
        prefix.push_back(e);
        std::vector<std::size_t> sorted = prefix;
        std::sort(sorted.begin(), sorted.end());
        const double cur = phi(sorted);
        b.y[e] = cur - prev;
        prev = cur;
    }
    return b;
}

BaseVector cyclic_average_base(const SetFunctionView& phi) {
    const std::size_t n = phi.ground_size();
    BaseVector avg{std::vector<double>(n, 0.0)};
    if (n == 0) return avg;
    std::vector<std::size_t> order = identity_order(n);
    for (std::size_t shift = 0; shift < n; ++shift) {
        const BaseVector b = greedy_base(phi, order);
        for (std::size_t i = 0; i < n; ++i) avg.y[i] += b.y[i];
        std::rotate(order.begin(), order.begin() + 1, order.end());
    }
    for (double& v : avg.y) v /= static_cast<double>(n);
    return avg;
}

double polymatroid_excess(const std::vector<double>& table, const std::vector<double>& x) {
    if (table.size() != (std::size_t{1} << x.size())) throw InvalidInput("polymatroid_excess: size mismatch");
    double worst = -kInf;
    for (double v : x) worst = std::max(worst, -v);
    const auto sums = subset_sums(x);
    for (Mask a = 1; a < table.size(); ++a) worst = std::max(worst, sums[a] - table[a]);
    return worst;
}

BaseVector repair_base_to_floor(const SetFunctionView& phi, const BaseVector& y, double floor) {
    if (!phi.is_polymatroid()) throw PreconditionError("repair_base_to_floor: set function is not a verified polymatroid");
    if (!(floor >= 0.0)) throw InvalidInput("repair_base_to_floor: floor must be nonnegative");
    const std::size_t n = phi.ground_size();
    require_enumerable(n, "repair_base_to_floor");
    if (y.y.size() != n) throw InvalidInput("repair_base_to_floor: base vector size mismatch");

    const auto t = tabulate(phi);
    const Mask full = full_mask(n);
    const double need = static_cast<double>(n) * floor;
    if (t[full] < need - kSetTol) {
        throw Infeasible("repair_base_to_floor: phi([L]) is below L * floor", need - t[full]);
    }

    BaseVector out = y;
    std::vector<double>& v = out.y;
    const std::size_t max_moves = n * n * n + 16;
    for (std::size_t move = 0; move <= max_moves; ++move) {
        std::size_t r = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (v[i] < floor - kCapTol) {
                r = i;
                break;
            }
        }
        if (r == n) return out;
        if (move == max_moves) break;

        const auto sums = subset_sums(v);
        // Raising r by d and lowering a donor must respect every set that
        // contains r but not the donor.
        std::vector<double> cap(n, kInf);
        for (Mask a = 1; a < t.size(); ++a) {
            if (!contains(a, r)) continue;
            const double slack = t[a] - sums[a];
            for (std::size_t d = 0; d < n; ++d)
                if (!contains(a, d)) cap[d] = std::min(cap[d], slack);
        }
        std::size_t donor = n;
        for (std::size_t d = 0; d < n; ++d) {
            if (d == r || v[d] <= floor + kCapTol || cap[d] <= kCapTol) continue;
            if (donor == n || v[d] > v[donor]) donor = d;
        }
        if (donor == n) {
            throw Infeasible("repair_base_to_floor: no base vector of phi meets the floor",
                             floor - v[r]);
        }
        const double amount = std::min({v[donor] - floor, floor - v[r], cap[donor]});
        v[donor] -= amount;
        v[r] += amount;
    }
    throw Error("repair_base_to_floor: exchange sequence did not converge");
}

namespace {

// Lexicographic greedy point of Pr(phi) ∩ Pr(psi): each coordinate in turn
// is raised as far as both polymatroids allow given the earlier ones.
std::vector<double> greedy_common_point(const std::vector<double>& t1, const std::vector<double>& t2,
                                        std::size_t n) {
    std::vector<double> x(n, 0.0);
    std::vector<double> sums(t1.size(), 0.0);
    for (std::size_t e = 0; e < n; ++e) {
        const Mask bit = Mask{1} << e;
        double best = kInf;
        for (Mask a = 0; a < bit; ++a) {
            const Mask ae = a | bit;
            best = std::min(best, std::min(t1[ae], t2[ae]) - sums[a]);
        }
        x[e] = std::max(0.0, best);
        for (Mask a = 0; a < bit; ++a) sums[a | bit] = sums[a] + x[e];
    }
    return x;
}

}  // namespace

EdmondsResult edmonds_max(const SetFunctionView& phi, const SetFunctionView& psi) {
    if (phi.ground_size() != psi.ground_size()) throw InvalidInput("edmonds_max: mismatched ground sizes");
    if (!phi.is_polymatroid() || !psi.is_polymatroid())
        throw PreconditionError("edmonds_max: both set functions must be verified polymatroids");
    const std::size_t n = phi.ground_size();
    require_enumerable(n, "edmonds_max");

    const auto t1 = tabulate(phi);
    const auto t2 = tabulate(psi);
    // min_S phi(S) + psi(S^c) is the same minimum as min_S phi(S^c) + psi(S).
    const SubsetMin m = min_combined_tables(t1, t2);
    EdmondsResult res{m.value, m.argmin, {}};

    std::vector<double> x = greedy_common_point(t1, t2, n);
    auto total = [&] { return std::accumulate(x.begin(), x.end(), 0.0); };

    // Augmenting paths in the exchange graph: an element whose increase is
    // free in Pr(phi), then alternating psi-exchanges and phi-exchanges,
    // ending at an element whose increase is free in Pr(psi).
    const std::size_t max_rounds = 2000 + 200 * n * n;
    for (std::size_t round = 0; round < max_rounds && total() < res.value - 1e-11; ++round) {
        const auto sums = subset_sums(x);
        std::vector<double> s1(t1.size()), s2(t2.size());
        for (Mask a = 0; a < t1.size(); ++a) {
            s1[a] = t1[a] - sums[a];
            s2[a] = t2[a] - sums[a];
        }
        const auto c1 = exchange_capacities(s1, x);
        const auto c2 = exchange_capacities(s2, x);

        // States: element e in "raise" role (2e) or "lower" role (2e+1).
        const std::size_t none = std::numeric_limits<std::size_t>::max();
        std::vector<std::size_t> parent(2 * n, none);
        std::vector<char> seen(2 * n, 0);
        std::deque<std::size_t> queue;
        for (std::size_t u = 0; u < n; ++u) {
            if (c1[u * n + u] > kCapTol) {
                seen[2 * u] = 1;
                queue.push_back(2 * u);
            }
        }
        std::size_t sink = none;
        while (!queue.empty() && sink == none) {
            const std::size_t st = queue.front();
            queue.pop_front();
            const std::size_t e = st / 2;
            if (st % 2 == 0) {
                if (c2[e * n + e] > kCapTol) {
                    sink = st;
                    break;
                }
                for (std::size_t w = 0; w < n; ++w) {
                    if (w == e || seen[2 * w + 1] || c2[e * n + w] <= kCapTol) continue;
                    seen[2 * w + 1] = 1;
                    parent[2 * w + 1] = st;
                    queue.push_back(2 * w + 1);
                }
            } else {
                for (std::size_t u = 0; u < n; ++u) {
                    if (u == e || seen[2 * u] || c1[u * n + e] <= kCapTol) continue;
                    seen[2 * u] = 1;
                    parent[2 * u] = st;
                    queue.push_back(2 * u);
                }
            }
        }
        if (sink == none) break;

        std::vector<std::size_t> path;
        for (std::size_t st = sink; st != none; st = parent[st]) path.push_back(st);
        std::reverse(path.begin(), path.end());

        double eps = std::min(c1[(path.front() / 2) * n + path.front() / 2],
                              c2[(path.back() / 2) * n + path.back() / 2]);
        for (std::size_t i = 1; i < path.size(); i += 2) {
            const std::size_t w = path[i] / 2;
            const std::size_t before = path[i - 1] / 2;
            const std::size_t after = path[i + 1] / 2;
            eps = std::min({eps, c2[before * n + w], c1[after * n + w]});
        }
        eps = std::min(eps, res.value - total());

        bool applied = false;
        for (int shrink = 0; shrink < 60 && eps > 0.0; ++shrink, eps *= 0.5) {
            std::vector<double> trial = x;
            for (std::size_t i = 0; i < path.size(); ++i) {
                const std::size_t e = path[i] / 2;
                trial[e] += (path[i] % 2 == 0) ? eps : -eps;
            }
            if (polymatroid_excess(t1, trial) <= 1e-12 && polymatroid_excess(t2, trial) <= 1e-12) {
                x = std::move(trial);
                applied = true;
                break;
            }
        }
        if (!applied) break;
    }

    if (total() < res.value - kSetTol) {
        throw Error("edmonds_max: witness construction stopped short of the min-cut value");
    }
    res.witness = std::move(x);
    return res;
}

}  // namespace cran
