#pragma once

#include "hotdissect/mvdissect.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hotdissect {

enum class NullMethod { Bootstrap, Permutation };

std::string_view to_string(NullMethod m);
NullMethod parse_null_method(std::string_view name);

struct NullReplicateSet {
  NullMethod method = NullMethod::Bootstrap;
  std::vector<double> stats;  // LOD_2v1 of each replicate
  Index n_reps = 0;
  std::uint64_t seed = 0;
};

struct NullOptions {
  Index n_reps = 1000;
  std::uint64_t seed = 1;
  int threads = 1;  // across replicates
  /// Permutation only: move covariate rows together with phenotype rows
  /// instead of leaving them attached to the genotypes.
  bool permute_covariates = false;
};

/// Replicates Y* = X b + E*, with X b the single-QTL fit at `lambda_index`
/// and rows of E* drawn from N(0, RSS/n). Each replicate is analysed from
/// scratch with `analysis` (trait re-ordering included).
NullReplicateSet parametric_bootstrap(const ProjectionBasis& basis, const DissectionProblem& problem,
                                      const Eigen::Ref<const MatrixXd>& Y, const std::vector<std::string>& trait_ids,
                                      Index lambda_index, const SearchOptions& analysis, const NullOptions& opts);

/// Replicates permute phenotype rows within the genotype classes `strata`
/// (one entry per row of Y). Classes with fewer than two members stay fixed.
NullReplicateSet stratified_permutation(const ProjectionBasis& basis, const DissectionProblem& problem,
                                        const Eigen::Ref<const MatrixXd>& Y,
                                        const std::vector<std::string>& trait_ids,
                                        const std::vector<Genotype>& strata, const SearchOptions& analysis,
                                        const NullOptions& opts);

/// Fraction of replicate statistics >= observed; (r + 1) / (N + 1) with
/// `plus_one`. Throws InputError for an empty replicate set.
double pvalue(double observed, const NullReplicateSet& nulls, bool plus_one = false);

}  // namespace hotdissect
