#pragma once

#include "hotdissect/common.hpp"
#include "hotdissect/core_model.hpp"

#include <cmath>

namespace hotdissect {

/// Relative pivot threshold below which a design column counts as collinear.
inline constexpr double kRankTolerance = 1e-10;

/// Orthonormal basis (n x rank) for the column space of X, found by
/// column-pivoted Householder QR. Collinear columns are dropped.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> orthonormal_basis(
    const Eigen::MatrixBase<Derived>& X, Index* rank_out = nullptr) {
  using Mat = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Eigen::ColPivHouseholderQR<Mat> qr(X);
  qr.setThreshold(kRankTolerance);
  const Index r = qr.rank();
  if (rank_out) *rank_out = r;
  Mat q = Mat::Identity(X.rows(), r);
  q.applyOnTheLeft(qr.householderQ());
  return q;
}

/// log10 of the determinant of a symmetric positive-definite matrix, via
/// Cholesky. Returns false when the matrix is not numerically positive definite.
template <typename Derived>
bool log10_det_spd(const Eigen::MatrixBase<Derived>& S, typename Derived::Scalar& out) {
  using Scalar = typename Derived::Scalar;
  Eigen::LLT<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> llt(S);
  if (llt.info() != Eigen::Success) return false;
  const auto diag = llt.matrixLLT().diagonal();
  const Scalar scale = S.diagonal().cwiseAbs().maxCoeff();
  if (!(diag.minCoeff() > 0) || diag.array().square().minCoeff() <= Scalar(1e-13) * scale) return false;
  out = Scalar(2) * diag.array().log10().sum();
  return true;
}

/// In-place variant for the hot path: factorizes `work` (overwritten).
inline bool log10_det_spd_inplace(Eigen::Ref<MatrixXd> work, double& out) {
  const double scale = work.diagonal().cwiseAbs().maxCoeff();
  Eigen::LLT<Eigen::Ref<MatrixXd>> llt(work);
  if (llt.info() != Eigen::Success) return false;
  double acc = 0.0;
  for (Index i = 0; i < work.rows(); ++i) {
    const double d = work(i, i);
    if (!(d > 0.0) || d * d <= 1e-13 * scale) return false;
    acc += std::log10(d);
  }
  out = 2.0 * acc;
  return true;
}

/// Additive and dominance codings from genotype probabilities:
/// a = P(RR) - P(BB), d = P(BR).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 2> genotype_codings(const Eigen::MatrixBase<Derived>& probs) {
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 2> out(probs.rows(), 2);
  out.col(0) = probs.col(2) - probs.col(0);
  out.col(1) = probs.col(1);
  return out;
}

/// [1, additive covariates] or, with `include_interactive`, also the
/// interactive covariates.
MatrixXd null_design(const CovariateSet& cov, bool include_interactive = false);

/// [1, additive, interactive, a, d, interactive * a, interactive * d].
template <typename Derived>
MatrixXd qtl_design(const Eigen::MatrixBase<Derived>& probs, const CovariateSet& cov) {
  const Index n = probs.rows();
  const Index ka = cov.additive.cols();
  const Index ki = cov.interactive.cols();
  MatrixXd X(n, 1 + ka + ki + 2 + 2 * ki);
  const auto codes = genotype_codings(probs);
  X.col(0).setOnes();
  X.middleCols(1, ka) = cov.additive;
  X.middleCols(1 + ka, ki) = cov.interactive;
  X.middleCols(1 + ka + ki, 2) = codes;
  for (Index k = 0; k < ki; ++k) {
    X.col(3 + ka + ki + 2 * k) = cov.interactive.col(k).cwiseProduct(codes.col(0));
    X.col(4 + ka + ki + 2 * k) = cov.interactive.col(k).cwiseProduct(codes.col(1));
  }
  return X;
}

}  // namespace hotdissect
