#pragma once

#include "hotdissect/genoprob.hpp"
#include "hotdissect/linalg.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hotdissect {

struct EffectEstimate {
  double mu_bb = 0.0;
  double mu_br = 0.0;
  double mu_rr = 0.0;
  double a = 0.0;  // (mu_RR - mu_BB) / 2
  double d = 0.0;  // mu_BR - (mu_BB + mu_RR) / 2

  static EffectEstimate from_means(double bb, double br, double rr) {
    return {bb, br, rr, (rr - bb) / 2.0, br - (bb + rr) / 2.0};
  }
};

struct ScanOptions {
  /// Put the interactive covariates in the null model as well. Off by
  /// default: the null holds the intercept and additive covariates only.
  bool null_includes_interactive = false;
  double rss_floor = 1e-12;
  /// Restrict the scan to these chromosomes (all when empty).
  std::vector<std::string> chromosomes;
};

struct ChromosomePeak {
  std::string chr;
  Index position = -1;  // global grid index
  double pos = 0.0;
  double lod = 0.0;
  double signed_lod = 0.0;
  std::optional<EffectEstimate> effects;
};

struct TraitScan {
  std::string trait_id;
  Index n_used = 0;
  std::vector<std::string> chromosomes;
  std::vector<VectorXd> curves;  // per scanned chromosome, over its grid
  std::vector<ChromosomePeak> peaks;  // one per scanned chromosome

  /// Highest peak across chromosomes (first on ties).
  const ChromosomePeak& best() const;
};

/// Haley-Knott genome scan of one trait; rows with a missing value are dropped.
TraitScan scan1(const Eigen::Ref<const VectorXd>& trait, const GenoProb& gp, const CovariateSet& covars,
                const ScanOptions& opts = {}, std::string trait_id = {});

/// Genotype-class means after imputing the genotype at `position`.
EffectEstimate estimate_effects(const Eigen::Ref<const VectorXd>& trait, const GenoProb& gp, Index position);

/// lod carrying the sign of the additive effect (zero counts as positive).
inline double signed_lod(double lod, double additive) { return additive < 0.0 ? -lod : lod; }
inline double signed_lod(const ChromosomePeak& peak) {
  return signed_lod(peak.lod, peak.effects ? peak.effects->a : 0.0);
}

struct PeakRecord {
  std::string trait;
  std::string chr;
  Index position = -1;
  double pos = 0.0;
  double lod = 0.0;
  double signed_lod = 0.0;
  double a = kMissing;
  double d = kMissing;
};

/// Scans every trait and keeps per-chromosome peaks with lod >= lod_min,
/// ordered by trait id and then chromosome. Full scans are returned through
/// `scans` when given (ordered by trait id as well).
std::vector<PeakRecord> scan_all(const Cross& cross, const GenoProb& gp, double lod_min,
                                 const ScanOptions& opts = {}, int threads = 1,
                                 std::vector<TraitScan>* scans = nullptr);

/// LOD matrix (positions x traits) for traits observed on the same rows.
/// `traits` holds those rows only (rows.size() x T, no missing values);
/// `covars` is indexed by individual and subset internally.
MatrixXd haley_knott_lod(const Eigen::Ref<const MatrixXd>& traits, const GenoProb& gp,
                         const std::vector<Index>& positions, const std::vector<Index>& rows,
                         const CovariateSet& covars, const ScanOptions& opts = {}, int threads = 1);

}  // namespace hotdissect
