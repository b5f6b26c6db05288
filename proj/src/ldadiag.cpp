#include "hotdissect/ldadiag.hpp"

#include "hotdissect/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>

namespace hotdissect {

std::string_view to_string(LdaClass c) {
  switch (c) {
    case LdaClass::BB: return "BB";
    case LdaClass::BR: return "BR";
    case LdaClass::RR: return "RR";
    case LdaClass::Recombinant: return "recombinant";
  }
  return "?";
}

LdaProjection lda_fit_project(const Eigen::Ref<const MatrixXd>& Y, const std::vector<LdaClass>& classes,
                              double ridge) {
  const Index n = Y.rows();
  const Index p = Y.cols();
  if (static_cast<Index>(classes.size()) != n) throw InputError("class labels do not match expression rows");
  if (ridge < 0.0 || !std::isfinite(ridge)) throw InputError("ridge must be a finite non-negative number");
  if (p < 1) throw InputError("LDA needs at least one trait");
  if (!Y.allFinite()) throw InputError("expression matrix has missing values");

  std::array<Index, 3> count{0, 0, 0};
  for (auto c : classes)
    if (c != LdaClass::Recombinant) ++count[static_cast<int>(c)];
  std::vector<int> present;
  for (int k = 0; k < 3; ++k) {
    if (count[k] == 0) {
      warn("no non-recombinant individuals with genotype " +
           std::string(to_string(static_cast<LdaClass>(k))) + "; fitting with the remaining classes");
      continue;
    }
    if (count[k] < 3)
      throw InputError("genotype class " + std::string(to_string(static_cast<LdaClass>(k))) +
                       " has fewer than 3 non-recombinant individuals");
    present.push_back(k);
  }
  if (present.size() < 2) throw InputError("LDA needs at least two genotype classes among non-recombinants");
  const Index n_classes = static_cast<Index>(present.size());
  const Index n_train = count[0] + count[1] + count[2];
  if (n_train - n_classes < 1) throw InputError("too few non-recombinant individuals for LDA");

  MatrixXd means = MatrixXd::Zero(3, p);
  VectorXd center = VectorXd::Zero(p);
  for (Index i = 0; i < n; ++i) {
    if (classes[i] == LdaClass::Recombinant) continue;
    means.row(static_cast<int>(classes[i])) += Y.row(i);
    center += Y.row(i).transpose();
  }
  center /= static_cast<double>(n_train);
  for (int k : present) means.row(k) /= static_cast<double>(count[k]);

  MatrixXd within = MatrixXd::Zero(p, p);
  for (Index i = 0; i < n; ++i) {
    if (classes[i] == LdaClass::Recombinant) continue;
    const VectorXd dev = Y.row(i).transpose() - means.row(static_cast<int>(classes[i])).transpose();
    within.selfadjointView<Eigen::Lower>().rankUpdate(dev);
  }
  within = within.selfadjointView<Eigen::Lower>();
  within /= static_cast<double>(n_train - n_classes);
  within.diagonal().array() += ridge;

  MatrixXd between = MatrixXd::Zero(p, p);
  for (int k : present) {
    const VectorXd dev = means.row(k).transpose() - center;
    between.noalias() += static_cast<double>(count[k]) * dev * dev.transpose();
  }
  between /= static_cast<double>(n_classes - 1);

  double ld = 0.0;
  if (!log10_det_spd(within, ld))
    throw ComputeError("within-class scatter is singular; use a ridge > 0 or fewer traits");

  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> solver(between, within,
                                                            Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success) throw ComputeError("LDA eigenproblem failed to converge");

  LdaProjection out;
  out.classes = classes;
  out.center = center;
  out.n_discriminants = std::min<Index>(2, n_classes - 1);
  out.basis = MatrixXd::Zero(p, 2);
  out.eigenvalues = VectorXd::Zero(2);
  // Eigenvalues come back ascending.
  for (Index k = 0; k < out.n_discriminants && k < p; ++k) {
    out.basis.col(k) = solver.eigenvectors().col(p - 1 - k);
    out.eigenvalues(k) = solver.eigenvalues()(p - 1 - k);
  }
  const int anchor = present.back();
  for (Index k = 0; k < out.n_discriminants; ++k) {
    const double m = (means.row(anchor).transpose() - center).dot(out.basis.col(k));
    if (m < 0.0) out.basis.col(k) = -out.basis.col(k);
  }

  out.coords = (Y.rowwise() - center.transpose()) * out.basis;
  out.class_means = MatrixXd::Constant(3, 2, kMissing);
  for (int k : present) out.class_means.row(k) = (means.row(k) - center.transpose()) * out.basis;

  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (Index i = 0; i < n; ++i) {
    if (classes[i] == LdaClass::Recombinant) continue;
    const Eigen::RowVector2d dev = out.coords.row(i) - out.class_means.row(static_cast<int>(classes[i]));
    cov.noalias() += dev.transpose() * dev;
  }
  cov /= static_cast<double>(n_train - n_classes);
  if (out.n_discriminants < 2) {
    cov(0, 1) = cov(1, 0) = 0.0;
    cov(1, 1) = 1.0;
  }
  out.within_cov = cov;
  return out;
}

LdaDistances class_distances(const LdaProjection& proj) {
  const Index n = proj.coords.rows();
  LdaDistances out;
  out.to_class = MatrixXd::Constant(n, 3, kMissing);
  out.nearest = VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  out.nearest_class.assign(static_cast<std::size_t>(n), LdaClass::Recombinant);
  const Eigen::Matrix2d metric = proj.within_cov.inverse();
  for (int k = 0; k < 3; ++k) {
    if (is_missing(proj.class_means(k, 0))) continue;
    for (Index i = 0; i < n; ++i) {
      const Eigen::RowVector2d dev = proj.coords.row(i) - proj.class_means.row(k);
      const double d = std::sqrt(std::max(0.0, (dev * metric * dev.transpose())(0, 0)));
      out.to_class(i, k) = d;
      if (d < out.nearest(i)) {
        out.nearest(i) = d;
        out.nearest_class[i] = static_cast<LdaClass>(k);
      }
    }
  }
  return out;
}

std::vector<TwoLocusLabel> two_locus_labels(const GenoProb& gp, Index lambda1, Index lambda2) {
  if (lambda1 < 0 || lambda1 >= gp.n_positions() || lambda2 < 0 || lambda2 >= gp.n_positions())
    throw InputError("two-locus positions outside the grid");
  const auto g1 = impute_genotype(gp, lambda1);
  const auto g2 = impute_genotype(gp, lambda2);
  std::vector<TwoLocusLabel> out(g1.size());
  for (std::size_t i = 0; i < g1.size(); ++i) out[i] = {g1[i], g2[i]};
  return out;
}

LdaDiagnostic lda_diagnostic(const Cross& cross, const GenoProb& gp, const GenomicInterval& interval,
                             const std::vector<std::string>& trait_ids, double ridge,
                             std::optional<std::pair<Index, Index>> lambdas) {
  if (trait_ids.empty()) throw InputError("no traits selected for LDA");
  std::vector<Index> cols;
  for (const auto& id : trait_ids) cols.push_back(cross.trait_index(id));
  const auto calls = classify_recombinants(cross, gp, interval);

  LdaDiagnostic out;
  out.traits = trait_ids;
  Index dropped = 0;
  for (Index i = 0; i < cross.n_individuals(); ++i) {
    bool complete = true;
    for (Index c : cols) complete = complete && !is_missing(cross.phenotypes(i, c));
    if (!complete) {
      ++dropped;
      continue;
    }
    out.rows.push_back(i);
    out.individuals.push_back(cross.individuals[i]);
  }
  if (dropped > 0) warn(std::to_string(dropped) + " individuals with missing expression values left out of LDA");

  const MatrixXd Y = cross.phenotypes(out.rows, cols);
  std::vector<LdaClass> classes;
  classes.reserve(out.rows.size());
  for (Index r : out.rows)
    classes.push_back(calls[r].recombinant ? LdaClass::Recombinant : lda_class(calls[r].genotype));
  out.projection = lda_fit_project(Y, classes, ridge);

  if (lambdas) {
    const auto all = two_locus_labels(gp, lambdas->first, lambdas->second);
    std::vector<TwoLocusLabel> used;
    used.reserve(out.rows.size());
    for (Index r : out.rows) used.push_back(all[r]);
    out.labels = std::move(used);
  }
  return out;
}

}  // namespace hotdissect
