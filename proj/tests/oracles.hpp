#pragma once

// Reference computations that share no code with the library: they are
// slow, direct and use different numerical routes (SVD instead of QR,
// LU or cofactor expansion instead of Cholesky, bisection on erfc instead
// of a quantile routine).

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace oracle {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Standard normal quantile by bisection on Phi(x) = erfc(-x / sqrt 2) / 2.
inline double normal_quantile(double p) {
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = 0.5 * std::erfc(-mid / std::sqrt(2.0));
    (cdf < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Residuals of Y on X through the SVD pseudo-inverse.
inline MatrixXd residuals(const MatrixXd& Y, const MatrixXd& X) {
  Eigen::JacobiSVD<MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-10);
  return Y - X * svd.solve(Y);
}

inline double rss(const VectorXd& y, const MatrixXd& X) { return residuals(y, X).squaredNorm(); }

inline double cofactor_det(const MatrixXd& m) {
  const Index n = m.rows();
  if (n == 1) return m(0, 0);
  if (n == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  double det = 0.0;
  for (Index j = 0; j < n; ++j) {
    MatrixXd minor(n - 1, n - 1);
    for (Index r = 1; r < n; ++r) {
      Index cc = 0;
      for (Index c = 0; c < n; ++c)
        if (c != j) minor(r - 1, cc++) = m(r, c);
    }
    det += ((j % 2 == 0) ? 1.0 : -1.0) * m(0, j) * cofactor_det(minor);
  }
  return det;
}

/// log10 |M| by cofactor expansion for small matrices, full-pivot LU otherwise.
inline double log10_det(const MatrixXd& m) {
  if (m.rows() <= 6) return std::log10(cofactor_det(m));
  return std::log10(Eigen::FullPivLU<MatrixXd>(m).determinant());
}

/// Haley-Knott design [1, P(RR) - P(BB), P(BR)] from an n x 3 probability block.
inline MatrixXd hk_design(const MatrixXd& probs) {
  MatrixXd X(probs.rows(), 3);
  X.col(0).setOnes();
  X.col(1) = probs.col(2) - probs.col(0);
  X.col(2) = probs.col(1);
  return X;
}

/// (n/2) log10(RSS0 / RSS1) with an intercept-only null.
inline double univariate_lod(const VectorXd& y, const MatrixXd& X) {
  const double n = static_cast<double>(y.size());
  const double rss0 = (y.array() - y.mean()).matrix().squaredNorm();
  return n / 2.0 * std::log10(rss0 / rss(y, X));
}

/// Multivariate LOD of the split model: trait k follows X_left when
/// left[k] and X_right otherwise; intercept-only null.
inline double split_lod(const MatrixXd& Y, const std::vector<bool>& left, const MatrixXd& X_left,
                        const MatrixXd& X_right) {
  const MatrixXd yc = Y.rowwise() - Y.colwise().mean();
  MatrixXd E(Y.rows(), Y.cols());
  for (Index k = 0; k < Y.cols(); ++k) E.col(k) = residuals(Y.col(k), left[k] ? X_left : X_right);
  const double n = static_cast<double>(Y.rows());
  return n / 2.0 * (log10_det(yc.transpose() * yc) - log10_det(E.transpose() * E));
}

inline double haldane(double d_cM) { return 0.5 * (1.0 - std::exp(-2.0 * d_cM / 100.0)); }

/// Carter-Falconer map distance in cM for recombination fraction r.
inline double carter_falconer_cM(double r) { return 25.0 * (std::atanh(2.0 * r) + std::atan(2.0 * r)); }

/// F2 transition probability from genotype i to j (0 BB, 1 BR, 2 RR) over recombination fraction r.
inline double f2_transition(int i, int j, double r) {
  // Genotype i means i of the two haplotypes carry R at the left locus;
  // each haplotype switches allele independently with probability r.
  const double s = 1.0 - r;
  double total = 0.0;
  const int left[2] = {i >= 1 ? 1 : 0, i >= 2 ? 1 : 0};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const int h0 = a ? 1 - left[0] : left[0];
      const int h1 = b ? 1 - left[1] : left[1];
      if (h0 + h1 == j) total += (a ? r : s) * (b ? r : s);
    }
  return total;
}

}  // namespace oracle
