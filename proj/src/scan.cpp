#include "hotdissect/scan.hpp"

#include "hotdissect/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>

namespace hotdissect {

MatrixXd null_design(const CovariateSet& cov, bool include_interactive) {
  const Index n = cov.additive.rows();
  const Index ka = cov.additive.cols();
  const Index ki = include_interactive ? cov.interactive.cols() : 0;
  MatrixXd X(n, 1 + ka + ki);
  X.col(0).setOnes();
  X.middleCols(1, ka) = cov.additive;
  if (ki > 0) X.middleCols(1 + ka, ki) = cov.interactive;
  return X;
}

const ChromosomePeak& TraitScan::best() const {
  if (peaks.empty()) throw InputError("trait " + trait_id + " has no scanned chromosomes");
  std::size_t best = 0;
  for (std::size_t k = 1; k < peaks.size(); ++k)
    if (peaks[k].lod > peaks[best].lod) best = k;
  return peaks[best];
}

namespace {

/// Residual sums of squares of every column of Y after projecting out X.
/// Computed from the trailing rows of Q'Y, which avoids cancellation.
VectorXd residual_ss(const MatrixXd& X, const Eigen::Ref<const MatrixXd>& Y, Index& rank) {
  Eigen::ColPivHouseholderQR<MatrixXd> qr(X);
  qr.setThreshold(kRankTolerance);
  rank = qr.rank();
  MatrixXd qty = Y;
  qty.applyOnTheLeft(qr.householderQ().adjoint());
  return qty.bottomRows(Y.rows() - rank).colwise().squaredNorm().transpose();
}

std::vector<Index> scan_positions(const GenoProb& gp, const ScanOptions& opts, std::vector<Index>& chr_index) {
  std::vector<Index> positions;
  chr_index.clear();
  for (std::size_t c = 0; c < gp.grid.chromosomes.size(); ++c) {
    const auto& gc = gp.grid.chromosomes[c];
    if (!opts.chromosomes.empty() &&
        std::find(opts.chromosomes.begin(), opts.chromosomes.end(), gc.name) == opts.chromosomes.end())
      continue;
    chr_index.push_back(static_cast<Index>(c));
    for (Index k = 0; k < gc.size(); ++k) positions.push_back(gc.offset + k);
  }
  for (const auto& name : opts.chromosomes)
    if (gp.grid.find_chromosome(name) < 0) throw InputError("unknown chromosome " + name);
  return positions;
}

void fill_trait_scan(TraitScan& ts, const Eigen::Ref<const VectorXd>& lod, const Eigen::Ref<const VectorXd>& trait,
                     const GenoProb& gp, const std::vector<Index>& chr_index) {
  Index cursor = 0;
  for (auto c : chr_index) {
    const auto& gc = gp.grid.chromosomes[c];
    VectorXd curve = lod.segment(cursor, gc.size());
    cursor += gc.size();
    Index arg = 0;
    for (Index k = 1; k < curve.size(); ++k)
      if (curve[k] > curve[arg]) arg = k;
    ChromosomePeak peak{gc.name, gc.offset + arg, gc.points[arg].pos, curve[arg], curve[arg], std::nullopt};
    try {
      peak.effects = estimate_effects(trait, gp, peak.position);
    } catch (const ComputeError& e) {
      warn("trait " + ts.trait_id + ": " + e.what() + "; effects left undefined");
    }
    peak.signed_lod = signed_lod(peak);
    ts.chromosomes.push_back(gc.name);
    ts.curves.push_back(std::move(curve));
    ts.peaks.push_back(std::move(peak));
  }
}

constexpr Index kMinObserved = 10;

}  // namespace

MatrixXd haley_knott_lod(const Eigen::Ref<const MatrixXd>& traits, const GenoProb& gp,
                         const std::vector<Index>& positions, const std::vector<Index>& rows,
                         const CovariateSet& covars, const ScanOptions& opts, int threads) {
  const Index n = static_cast<Index>(rows.size());
  if (traits.rows() != n) throw InputError("trait rows do not match the row subset");
  const CovariateSet cov = covars.rows(rows);
  Index rank0 = 0;
  const MatrixXd X0 = null_design(cov, opts.null_includes_interactive);
  const VectorXd rss0 = residual_ss(X0, traits, rank0);
  if (rank0 < X0.cols()) warn("null design is rank deficient; collinear covariate columns dropped");

  const auto log_ratio = [&](double r0, double r1) {
    return static_cast<double>(n) / 2.0 * std::log10(std::max(r0, opts.rss_floor) / std::max(r1, opts.rss_floor));
  };
  MatrixXd lod(static_cast<Index>(positions.size()), traits.cols());
  std::atomic<Index> deficient{0};
  parallel_for(static_cast<std::int64_t>(positions.size()), threads, [&](std::int64_t k) {
    const ProbMatrix probs = gp.probs[positions[k]](rows, Eigen::all);
    const MatrixXd X = qtl_design(probs, cov);
    Index rank = 0;
    const VectorXd rss1 = residual_ss(X, traits, rank);
    if (rank < X.cols()) deficient.fetch_add(1);
    for (Index t = 0; t < traits.cols(); ++t) lod(k, t) = std::max(0.0, log_ratio(rss0[t], rss1[t]));
  });
  if (deficient > 0)
    warn("QTL design rank deficient at " + std::to_string(deficient.load()) +
         " grid positions; collinear columns dropped");
  return lod;
}

TraitScan scan1(const Eigen::Ref<const VectorXd>& trait, const GenoProb& gp, const CovariateSet& covars,
                const ScanOptions& opts, std::string trait_id) {
  std::vector<Index> rows;
  for (Index i = 0; i < trait.size(); ++i)
    if (!is_missing(trait[i])) rows.push_back(i);
  if (rows.empty()) throw InputError("trait " + trait_id + " has no observed values");
  if (static_cast<Index>(rows.size()) < kMinObserved)
    throw InputError("trait " + trait_id + " has fewer than 10 observed values");
  std::vector<Index> chr_index;
  const auto positions = scan_positions(gp, opts, chr_index);
  const VectorXd y = trait(rows);
  const MatrixXd lod = haley_knott_lod(y, gp, positions, rows, covars, opts);
  TraitScan ts;
  ts.trait_id = std::move(trait_id);
  ts.n_used = static_cast<Index>(rows.size());
  fill_trait_scan(ts, lod.col(0), trait, gp, chr_index);
  return ts;
}

EffectEstimate estimate_effects(const Eigen::Ref<const VectorXd>& trait, const GenoProb& gp, Index position) {
  const auto geno = impute_genotype(gp, position);
  if (static_cast<Index>(geno.size()) != trait.size()) throw InputError("trait length does not match individuals");
  double sum[3] = {0, 0, 0};
  Index count[3] = {0, 0, 0};
  for (Index i = 0; i < trait.size(); ++i) {
    if (is_missing(trait[i])) continue;
    const auto g = static_cast<int>(geno[i]);
    sum[g] += trait[i];
    ++count[g];
  }
  for (int g = 0; g < 3; ++g)
    if (count[g] == 0)
      throw ComputeError("no individuals with genotype " + std::string(to_string(static_cast<Genotype>(g))) +
                         " at " + gp.grid.point(position).id);
  return EffectEstimate::from_means(sum[0] / count[0], sum[1] / count[1], sum[2] / count[2]);
}

std::vector<PeakRecord> scan_all(const Cross& cross, const GenoProb& gp, double lod_min, const ScanOptions& opts,
                                 int threads, std::vector<TraitScan>* scans) {
  std::vector<Index> chr_index;
  const auto positions = scan_positions(gp, opts, chr_index);

  // Traits sharing a missingness pattern share one set of designs.
  std::map<std::vector<bool>, std::vector<Index>> groups;
  std::vector<std::vector<bool>> order;
  for (Index t = 0; t < cross.n_traits(); ++t) {
    std::vector<bool> mask(static_cast<std::size_t>(cross.n_individuals()));
    for (Index i = 0; i < cross.n_individuals(); ++i) mask[i] = !is_missing(cross.phenotypes(i, t));
    auto [it, inserted] = groups.try_emplace(mask);
    if (inserted) order.push_back(mask);
    it->second.push_back(t);
  }

  std::vector<std::optional<TraitScan>> results(static_cast<std::size_t>(cross.n_traits()));
  for (const auto& mask : order) {
    const auto& traits = groups[mask];
    std::vector<Index> rows;
    for (Index i = 0; i < cross.n_individuals(); ++i)
      if (mask[i]) rows.push_back(i);
    if (static_cast<Index>(rows.size()) < kMinObserved) {
      for (auto t : traits) warn("trait " + cross.trait_ids[t] + " has fewer than 10 observed values; skipped");
      continue;
    }
    const MatrixXd Y = cross.phenotypes(rows, traits);
    const MatrixXd lod = haley_knott_lod(Y, gp, positions, rows, cross.covariates, opts, threads);
    parallel_for(static_cast<std::int64_t>(traits.size()), threads, [&](std::int64_t k) {
      const Index t = traits[k];
      TraitScan ts;
      ts.trait_id = cross.trait_ids[t];
      ts.n_used = static_cast<Index>(rows.size());
      fill_trait_scan(ts, lod.col(k), cross.phenotypes.col(t), gp, chr_index);
      results[t] = std::move(ts);
    });
  }

  std::vector<Index> by_id;
  for (Index t = 0; t < cross.n_traits(); ++t)
    if (results[t]) by_id.push_back(t);
  std::stable_sort(by_id.begin(), by_id.end(),
                   [&](Index a, Index b) { return cross.trait_ids[a] < cross.trait_ids[b]; });

  std::vector<PeakRecord> out;
  if (scans) scans->clear();
  for (auto t : by_id) {
    const auto& ts = *results[t];
    for (const auto& pk : ts.peaks) {
      if (!(pk.lod >= lod_min)) continue;
      PeakRecord rec{ts.trait_id, pk.chr, pk.position, pk.pos, pk.lod, pk.signed_lod, kMissing, kMissing};
      if (pk.effects) {
        rec.a = pk.effects->a;
        rec.d = pk.effects->d;
      }
      out.push_back(std::move(rec));
    }
    if (scans) scans->push_back(ts);
  }
  return out;
}

}  // namespace hotdissect
