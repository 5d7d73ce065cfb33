#include "cran/numkernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cran/errors.hpp"

namespace cran {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

RealMatrix smaller_gram(const RealMatrix& m) {
    if (m.rows() <= m.cols()) return m * m.transpose();
    return m.transpose() * m;
}

}  // namespace

void require_finite(const RealMatrix& m, const char* what) {
    if (!m.allFinite()) throw InvalidInput(std::string(what) + ": non-finite entry");
}

double logdet_gram(const RealMatrix& m, double scale) {
    if (!(scale >= 0.0) || !std::isfinite(scale)) {
        throw InvalidInput("logdet_gram: scale must be finite and nonnegative");
    }
    require_finite(m, "logdet_gram");
    if (m.size() == 0 || scale == 0.0) return 0.0;

    RealMatrix a = smaller_gram(m) * scale;
    a.diagonal().array() += 1.0;
    Eigen::LLT<RealMatrix> llt(a);
    if (llt.info() != Eigen::Success) {
        // I + sM M^T is positive definite in exact arithmetic; fall back on
        // the spectrum if rounding broke the factorization.
        return log2_det_from_spectrum(gram_eigenvalues(m), scale);
    }
    const auto diag = llt.matrixLLT().diagonal();
    double sum = 0.0;
    for (Index i = 0; i < diag.size(); ++i) sum += std::log(diag(i));
    return std::max(0.0, 2.0 * sum / kLn2);
}

Eigen::VectorXd gram_eigenvalues(const RealMatrix& m) {
    if (m.size() == 0) return Eigen::VectorXd();
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(smaller_gram(m), Eigen::EigenvaluesOnly);
    Eigen::VectorXd ev = es.eigenvalues();
    return ev.cwiseMax(0.0);
}

double log2_det_from_spectrum(const Eigen::VectorXd& lambda, double scale) {
    double sum = 0.0;
    for (Index i = 0; i < lambda.size(); ++i) sum += std::log1p(scale * lambda(i));
    return sum / kLn2;
}

bool is_psd(const RealMatrix& a) {
    if (a.rows() != a.cols() || !a.allFinite()) return false;
    if (a.size() == 0) return true;
    const double norm = a.cwiseAbs().maxCoeff();
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(norm, 1.0)) return false;
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(a, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const double scale = ev.cwiseAbs().maxCoeff();
    return ev.minCoeff() >= -1e-9 * scale;
}

PsdMatrix psd_sqrt(const PsdMatrix& a) {
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(a);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

RealMatrix select(const RealMatrix& m, const std::vector<Index>& rows,
                  const std::vector<Index>& cols) {
    RealMatrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            out(static_cast<Index>(i), static_cast<Index>(j)) = m(rows[i], cols[j]);
    return out;
}

PsdMatrix schur_conditional(const PsdMatrix& gamma, const std::vector<Index>& s) {
    if (s.empty()) throw InvalidInput("schur_conditional: empty index set");
    if (gamma.rows() != gamma.cols()) throw InvalidInput("schur_conditional: matrix not square");
    require_finite(gamma, "schur_conditional");
    const Index n = gamma.rows();
    std::vector<char> in_s(static_cast<std::size_t>(n), 0);
    for (Index i : s) {
        if (i < 0 || i >= n) throw InvalidInput("schur_conditional: index out of range");
        if (in_s[static_cast<std::size_t>(i)]) throw InvalidInput("schur_conditional: duplicate index");
        in_s[static_cast<std::size_t>(i)] = 1;
    }
    std::vector<Index> sc;
    for (Index i = 0; i < n; ++i)
        if (!in_s[static_cast<std::size_t>(i)]) sc.push_back(i);

    RealMatrix gss = select(gamma, s, s);
    if (sc.empty()) return gss;
    RealMatrix gsc = select(gamma, s, sc);
    RealMatrix gcc = select(gamma, sc, sc);

    Eigen::SelfAdjointEigenSolver<RealMatrix> es(gcc);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double cutoff = 1e-12 * ev.cwiseAbs().maxCoeff();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
    for (Index i = 0; i < ev.size(); ++i)
        if (ev(i) > cutoff) inv(i) = 1.0 / ev(i);
    RealMatrix pinv = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();

    RealMatrix out = gss - gsc * pinv * gsc.transpose();
    return 0.5 * (out + out.transpose());
}

std::vector<double> water_fill(const std::vector<double>& gains, double budget) {
    if (!(budget > 0.0) || !std::isfinite(budget)) throw InvalidInput("water_fill: budget must be positive");
    for (double g : gains)
        if (!(g >= 0.0) || !std::isfinite(g)) throw InvalidInput("water_fill: gains must be finite and nonnegative");

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < gains.size(); ++i)
        if (gains[i] > 0.0) order.push_back(i);
    if (order.empty()) throw InvalidInput("water_fill: all gains are zero");
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return gains[a] > gains[b]; });

    // Grow the active set while the water level stays above the next floor.
    double inv_sum = 0.0;
    double level = 0.0;
    std::size_t active = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const double floor_k = 1.0 / gains[order[k]];
        const double candidate = (budget + inv_sum + floor_k) / static_cast<double>(k + 1);
        if (k > 0 && candidate <= floor_k) break;
        inv_sum += floor_k;
        level = candidate;
        active = k + 1;
    }

    std::vector<double> p(gains.size(), 0.0);
    for (std::size_t k = 0; k < active; ++k) {
        const std::size_t i = order[k];
        p[i] = std::max(0.0, level - 1.0 / gains[i]);
    }
    return p;
}

double binary_entropy(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("binary_entropy: p outside [0,1]");
    auto term = [](double x) { return x > 0.0 ? -x * std::log2(x) : 0.0; };
    return term(p) + term(1.0 - p);
}

std::pair<double, double> mp_edges(double rho) {
    if (!(rho >= 1.0) || !std::isfinite(rho)) throw InvalidInput("mp_edges: rho must be at least 1");
    const double r = std::sqrt(rho);
    return {(r - 1.0) * (r - 1.0), (r + 1.0) * (r + 1.0)};
}

}  // namespace cran
