#pragma once

#include "hotdissect/genoprob.hpp"
#include "hotdissect/linalg.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hotdissect {

// ---------------------------------------------------------------------------
// Direct multivariate least squares.

template <typename Scalar>
struct MvModelFitT {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Index n = 0;
  Index p = 0;
  Index q = 0;  // rank of the design actually used
  Matrix beta_hat;  // columns of X x p; dropped columns get zero rows
  Matrix rss;       // p x p residual cross-products
  Scalar log10_det_rss = 0;
};

using MvModelFit = MvModelFitT<double>;

/// Fits Y = X B + E by least squares and returns E'E with its log10
/// determinant. Collinear design columns are dropped. Throws ComputeError
/// when the residual matrix is singular.
template <typename DerivedY, typename DerivedX>
MvModelFitT<typename DerivedY::Scalar> mv_fit(const Eigen::MatrixBase<DerivedY>& Y,
                                              const Eigen::MatrixBase<DerivedX>& X) {
  using Scalar = typename DerivedY::Scalar;
  using Matrix = typename MvModelFitT<Scalar>::Matrix;
  if (Y.rows() != X.rows()) throw InputError("Y and X row counts differ");
  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  qr.setThreshold(kRankTolerance);
  MvModelFitT<Scalar> fit;
  fit.n = Y.rows();
  fit.p = Y.cols();
  fit.q = qr.rank();
  if (fit.n - fit.q <= fit.p)
    throw InputError("too many traits for the sample size: need n - q > p");
  fit.beta_hat = qr.solve(Y.eval());
  const Matrix resid = Y - X * fit.beta_hat;
  fit.rss = resid.transpose() * resid;
  if (!log10_det_spd(fit.rss, fit.log10_det_rss))
    throw ComputeError("residual sum of squares matrix is singular; use fewer or less correlated traits");
  return fit;
}

/// (n/2) (log10|RSS_null| - log10|RSS_alt|).
double mv_lod(const MvModelFit& null_fit, const MvModelFit& alt_fit);

// ---------------------------------------------------------------------------
// Interval machinery. Designs depend only on genotypes and covariates, so
// their orthonormal bases are built once and reused for every phenotype
// matrix (observed data, bootstrap and permutation replicates).

/// Genotype probabilities and covariates for the individuals and interval
/// positions entering a dissection.
struct DissectionProblem {
  std::vector<Index> positions;    // global grid indices
  std::vector<double> pos;         // cM
  std::vector<std::string> position_ids;
  std::vector<ProbMatrix> probs;   // rows = individuals used
  CovariateSet covariates;         // rows = individuals used
  bool null_includes_interactive = false;

  Index n_rows() const { return covariates.additive.rows(); }
  Index n_positions() const { return static_cast<Index>(positions.size()); }

  /// Positions of `gp` inside `interval`, restricted to `rows`.
  static DissectionProblem from_genoprob(const GenoProb& gp, const GenomicInterval& interval,
                                         const std::vector<Index>& rows, const CovariateSet& covars);
};

class ProjectionBasis {
 public:
  explicit ProjectionBasis(const DissectionProblem& problem);

  Index n_rows() const { return q_all_.rows(); }
  Index n_positions() const { return static_cast<Index>(rank_.size()); }
  Index rank(Index j) const { return rank_[j]; }
  Index offset(Index j) const { return offset_[j]; }
  Index max_rank() const { return max_rank_; }

  /// Orthonormal basis of the QTL design at position j (n x rank(j)).
  auto basis(Index j) const { return q_all_.middleCols(offset_[j], rank_[j]); }
  const MatrixXd& all_bases() const { return q_all_; }
  const MatrixXd& null_basis() const { return q_null_; }
  /// Q_i' Q_j for all position pairs, stacked.
  const MatrixXd& gram() const { return gram_; }

 private:
  std::vector<Index> rank_;
  std::vector<Index> offset_;
  Index max_rank_ = 0;
  MatrixXd q_all_;
  MatrixXd q_null_;
  MatrixXd gram_;
};

/// Sufficient statistics of one phenotype matrix over the interval.
class IntervalModel {
 public:
  /// `Y` is complete, rows aligned with the problem's individuals.
  IntervalModel(const ProjectionBasis& basis, const Eigen::Ref<const MatrixXd>& Y);

  Index n() const { return n_; }
  Index p() const { return p_; }
  Index n_positions() const { return basis_->n_positions(); }
  const ProjectionBasis& basis() const { return *basis_; }

  /// Single-QTL multivariate LOD at position j.
  double lod1(Index j) const { return lod1_[j]; }
  const VectorXd& lod1_curve() const { return lod1_; }
  /// Univariate LOD of trait t at position j.
  double trait_lod(Index j, Index t) const { return trait_lod_(j, t); }
  /// p x p residual cross-products of the single-QTL fit at j.
  const MatrixXd& rss(Index j) const { return rss_[j]; }
  double log10_det_null() const { return ld_null_; }

  /// Two-QTL LOD: the first c traits follow the QTL at j1, the rest the QTL at j2.
  double lod2(Index j1, Index j2, Index c) const;

  /// Model with trait columns permuted: column k of the result is column order[k].
  IntervalModel reordered(const std::vector<Index>& order) const;

 private:
  IntervalModel() = default;
  void finish();

  const ProjectionBasis* basis_ = nullptr;
  Index n_ = 0;
  Index p_ = 0;
  MatrixXd yty_;           // p x p, centered
  MatrixXd a_;             // sum(rank) x p, Q_j' Yc stacked
  std::vector<MatrixXd> rss_;
  double ld_null_ = 0.0;
  VectorXd lod1_;
  MatrixXd trait_lod_;
};

struct SingleQtlScan {
  VectorXd lod;
  double max_lod = 0.0;
  Index argmax = 0;  // index into the interval grid, leftmost on ties
};

SingleQtlScan mv_scan1(const IntervalModel& model);

/// Trait order ascending by position; exact ties are shuffled with `seed`.
std::vector<Index> order_traits(const std::vector<double>& positions, std::uint64_t seed);

enum class SearchMode { Exhaustive, Coordinate };

std::string_view to_string(SearchMode m);
SearchMode parse_search_mode(std::string_view name);

struct SearchOptions {
  SearchMode mode = SearchMode::Coordinate;
  int starts = 5;          // coordinate mode: single-QTL estimate + (starts - 1) random positions
  int max_iterations = 20;
  std::uint64_t seed = 1;  // random starts and tie shuffles
  int threads = 1;         // across cut-points
};

struct CutScan {
  double max_lod = 0.0;
  Index left = 0;
  Index right = 0;
};

/// max over (j1, j2) of lod2(j1, j2, c); ties resolve to the
/// lexicographically smallest (j1, j2).
CutScan mv_scan2_cut(const IntervalModel& model, Index c, const SearchOptions& opts, Index single_qtl_argmax);

struct TraitAssignment {
  std::string id;
  bool left = true;
  double univariate_pos = 0.0;
  double univariate_lod = 0.0;
};

struct TwoVsOneResult {
  double m1 = 0.0;
  Index lambda_1qtl_index = 0;
  double lambda_1qtl = 0.0;
  double m2 = 0.0;
  Index c_hat = 0;  // number of traits assigned to the left QTL
  Index lambda1_index = 0;
  Index lambda2_index = 0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lod_2v1 = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> per_cutpoint;  // M2^(c) for c = 1..p-1
  VectorXd lod1_curve;
  VectorXd profile_left;
  VectorXd profile_right;
  std::vector<double> grid_pos;
  std::vector<TraitAssignment> traits;  // in sorted order
  std::optional<double> pvalue;
};

/// One-vs-two QTL comparison for traits already in position order.
TwoVsOneResult test_2v1(const IntervalModel& model, const std::vector<std::string>& trait_ids,
                        const std::vector<double>& grid_pos, const SearchOptions& opts);

/// LOD_2^(c)(j1, j2_fixed) over j1, and LOD_2^(c)(j1_fixed, j2) over j2.
std::pair<VectorXd, VectorXd> profile_curves(const IntervalModel& model, Index c, Index j1, Index j2);

/// Complete analysis of one phenotype matrix: univariate peaks, trait
/// ordering, single-QTL scan and cut-point search.
TwoVsOneResult dissect(const ProjectionBasis& basis, const DissectionProblem& problem,
                       const Eigen::Ref<const MatrixXd>& Y, const std::vector<std::string>& trait_ids,
                       const SearchOptions& opts);

/// Largest number of traits the interval design supports (n - q - 2).
Index max_traits(const ProjectionBasis& basis);

}  // namespace hotdissect
