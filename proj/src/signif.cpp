#include "hotdissect/signif.hpp"

#include "hotdissect/parallel.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace hotdissect {

std::string_view to_string(NullMethod m) { return m == NullMethod::Bootstrap ? "bootstrap" : "permutation"; }

NullMethod parse_null_method(std::string_view name) {
  if (name == "bootstrap") return NullMethod::Bootstrap;
  if (name == "permutation") return NullMethod::Permutation;
  throw InputError("unknown significance method '" + std::string(name) + "'");
}

NullReplicateSet parametric_bootstrap(const ProjectionBasis& basis, const DissectionProblem& problem,
                                      const Eigen::Ref<const MatrixXd>& Y, const std::vector<std::string>& trait_ids,
                                      Index lambda_index, const SearchOptions& analysis, const NullOptions& opts) {
  if (lambda_index < 0 || lambda_index >= basis.n_positions()) throw InputError("QTL position outside the interval");
  if (opts.n_reps < 0) throw InputError("number of replicates must be non-negative");
  const Index n = Y.rows();
  const Index p = Y.cols();
  const Eigen::RowVectorXd mean = Y.colwise().mean();
  const MatrixXd yc = Y.rowwise() - mean;
  const auto q = basis.basis(lambda_index);
  const MatrixXd fitted_c = q * (q.transpose() * yc);
  const MatrixXd resid = yc - fitted_c;
  const MatrixXd sigma = resid.transpose() * resid / static_cast<double>(n);
  const Eigen::LLT<MatrixXd> llt(sigma);
  double ld = 0.0;
  if (llt.info() != Eigen::Success || !log10_det_spd(sigma, ld))
    throw ComputeError("estimated residual covariance is singular; cannot simulate the single-QTL model");
  const MatrixXd lower = llt.matrixL();
  const MatrixXd fitted = fitted_c.rowwise() + mean;

  NullReplicateSet out{NullMethod::Bootstrap, std::vector<double>(static_cast<std::size_t>(opts.n_reps)),
                       opts.n_reps, opts.seed};
  SearchOptions inner = analysis;
  inner.threads = 1;
  parallel_for(opts.n_reps, opts.threads, [&](std::int64_t r) {
    auto rng = derived_rng(opts.seed, static_cast<std::uint64_t>(r), 0xb007);
    std::normal_distribution<double> normal;
    MatrixXd z(n, p);
    for (Index i = 0; i < n; ++i)
      for (Index k = 0; k < p; ++k) z(i, k) = normal(rng);
    MatrixXd ystar = fitted;
    ystar.noalias() += z * lower.transpose();
    out.stats[r] = dissect(basis, problem, ystar, trait_ids, inner).lod_2v1;
  });
  return out;
}

NullReplicateSet stratified_permutation(const ProjectionBasis& basis, const DissectionProblem& problem,
                                        const Eigen::Ref<const MatrixXd>& Y,
                                        const std::vector<std::string>& trait_ids,
                                        const std::vector<Genotype>& strata, const SearchOptions& analysis,
                                        const NullOptions& opts) {
  if (static_cast<Index>(strata.size()) != Y.rows()) throw InputError("strata do not match phenotype rows");
  if (opts.n_reps < 0) throw InputError("number of replicates must be non-negative");
  std::vector<std::vector<Index>> groups(3);
  for (Index i = 0; i < Y.rows(); ++i) {
    if (strata[i] == Genotype::Missing) throw InputError("stratum genotypes must be complete");
    groups[static_cast<int>(strata[i])].push_back(i);
  }
  for (int g = 0; g < 3; ++g)
    if (groups[g].size() == 1)
      warn("genotype class " + std::string(to_string(static_cast<Genotype>(g))) +
           " has a single individual; left unpermuted");

  NullReplicateSet out{NullMethod::Permutation, std::vector<double>(static_cast<std::size_t>(opts.n_reps)),
                       opts.n_reps, opts.seed};
  SearchOptions inner = analysis;
  inner.threads = 1;
  parallel_for(opts.n_reps, opts.threads, [&](std::int64_t r) {
    auto rng = derived_rng(opts.seed, static_cast<std::uint64_t>(r), 0x9e47);
    std::vector<Index> perm(static_cast<std::size_t>(Y.rows()));
    std::iota(perm.begin(), perm.end(), Index{0});
    for (const auto& grp : groups) {
      if (grp.size() < 2) continue;
      auto shuffled = grp;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      for (std::size_t k = 0; k < grp.size(); ++k) perm[grp[k]] = shuffled[k];
    }
    const MatrixXd ystar = Y(perm, Eigen::all);
    if (!opts.permute_covariates) {
      out.stats[r] = dissect(basis, problem, ystar, trait_ids, inner).lod_2v1;
      return;
    }
    DissectionProblem moved = problem;
    moved.covariates = problem.covariates.rows(perm);
    const ProjectionBasis moved_basis(moved);
    out.stats[r] = dissect(moved_basis, moved, ystar, trait_ids, inner).lod_2v1;
  });
  return out;
}

double pvalue(double observed, const NullReplicateSet& nulls, bool plus_one) {
  if (nulls.stats.empty()) throw InputError("p-value needs at least one replicate");
  const auto hits = std::count_if(nulls.stats.begin(), nulls.stats.end(), [&](double s) { return s >= observed; });
  const auto total = static_cast<double>(nulls.stats.size());
  return plus_one ? (static_cast<double>(hits) + 1.0) / (total + 1.0) : static_cast<double>(hits) / total;
}

}  // namespace hotdissect
