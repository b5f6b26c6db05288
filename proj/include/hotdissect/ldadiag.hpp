#pragma once

#include "hotdissect/genoprob.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hotdissect {

enum class LdaClass : std::int8_t { BB = 0, BR = 1, RR = 2, Recombinant = 3 };

std::string_view to_string(LdaClass c);

inline LdaClass lda_class(Genotype g) { return static_cast<LdaClass>(static_cast<std::int8_t>(g)); }

struct LdaProjection {
  MatrixXd coords;               // individuals x 2
  std::vector<LdaClass> classes;
  MatrixXd basis;                // traits x 2; an unused second column is zero
  VectorXd center;               // grand mean of the training rows
  MatrixXd class_means;          // 3 x 2, NaN rows for absent classes
  VectorXd eigenvalues;          // leading two, descending
  Index n_discriminants = 2;
  /// Pooled within-class covariance of the training coordinates.
  Eigen::Matrix2d within_cov = Eigen::Matrix2d::Identity();
};

/// Fits discriminants on the non-recombinant rows of Y and projects every row.
/// Directions solve B v = l (W + ridge I) v with v' (W + ridge I) v = 1, W the
/// pooled within-class covariance and B the between-class covariance. Each
/// direction is oriented so the RR mean (or the last class present) is >= 0.
LdaProjection lda_fit_project(const Eigen::Ref<const MatrixXd>& Y, const std::vector<LdaClass>& classes,
                              double ridge = 0.0);

/// Mahalanobis distances in discriminant space, metric `within_cov`.
struct LdaDistances {
  MatrixXd to_class;              // individuals x 3, NaN for absent classes
  VectorXd nearest;               // min over present classes
  std::vector<LdaClass> nearest_class;
};

LdaDistances class_distances(const LdaProjection& proj);

using TwoLocusLabel = std::pair<Genotype, Genotype>;

/// Imputed genotypes at two grid positions for every individual.
std::vector<TwoLocusLabel> two_locus_labels(const GenoProb& gp, Index lambda1, Index lambda2);

struct LdaDiagnostic {
  std::vector<std::string> individuals;  // complete-case rows actually used
  std::vector<Index> rows;               // their cross row indices
  std::vector<std::string> traits;
  LdaProjection projection;
  std::optional<std::vector<TwoLocusLabel>> labels;
};

/// Classifies individuals on `interval`, keeps those observed on every
/// selected trait and runs lda_fit_project. `lambdas` adds two-locus labels.
LdaDiagnostic lda_diagnostic(const Cross& cross, const GenoProb& gp, const GenomicInterval& interval,
                             const std::vector<std::string>& trait_ids, double ridge = 0.0,
                             std::optional<std::pair<Index, Index>> lambdas = std::nullopt);

}  // namespace hotdissect
