#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace cran {

using RealMatrix = Eigen::MatrixXd;
using PsdMatrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// log2 |I + scale * M * M^T|, evaluated on whichever Gram orientation is
// smaller through a Cholesky factorization.
double logdet_gram(const RealMatrix& m, double scale);

// Gamma_{S,S} - Gamma_{S,Sc} pinv(Gamma_{Sc,Sc}) Gamma_{Sc,S}; `s` holds row
// indices (0-based, any order, no duplicates).
PsdMatrix schur_conditional(const PsdMatrix& gamma, const std::vector<Index>& s);

// Powers maximizing sum log2(1 + g_i p_i) subject to sum p_i = budget.
std::vector<double> water_fill(const std::vector<double>& gains, double budget);

double binary_entropy(double p);

// Marchenko-Pastur support edges ((sqrt(rho)-1)^2, (sqrt(rho)+1)^2).
std::pair<double, double> mp_edges(double rho);

// ---- helpers shared by the bound modules ----

// Eigenvalues of the smaller Gram matrix of m, negatives clamped to zero.
Eigen::VectorXd gram_eigenvalues(const RealMatrix& m);

// sum_i log2(1 + scale * lambda_i).
double log2_det_from_spectrum(const Eigen::VectorXd& lambda, double scale);

// Symmetric within 1e-10 (relative) and no eigenvalue below -1e-9 * max|eig|.
bool is_psd(const RealMatrix& a);

// Symmetric square root with negative eigenvalues clamped to zero.
PsdMatrix psd_sqrt(const PsdMatrix& a);

RealMatrix select(const RealMatrix& m, const std::vector<Index>& rows,
                  const std::vector<Index>& cols);

void require_finite(const RealMatrix& m, const char* what);

}  // namespace cran
