#include "hotdissect/simcross.hpp"

#include "hotdissect/parallel.hpp"
#include "hotdissect/signif.hpp"

#include <cmath>
#include <numeric>

namespace hotdissect {

namespace {

constexpr std::uint64_t kSimSalt = 0x51a1;
constexpr std::uint64_t kBootSalt = 0xb0b0;

}  // namespace

GeneticMap simulation_map(Index n_markers, double length) {
  if (n_markers < 2) throw InputError("simulation map needs at least two markers");
  if (!(length > 0.0)) throw InputError("chromosome length must be positive");
  ChromosomeMap chr{"1", {}};
  for (Index k = 0; k < n_markers; ++k)
    chr.markers.push_back({"m" + std::to_string(k + 1), length * static_cast<double>(k) / static_cast<double>(n_markers - 1)});
  return GeneticMap{{std::move(chr)}};
}

Cross sim_f2(Index n_ind, const GeneticMap& map, MapFunction f, std::mt19937_64& rng) {
  if (n_ind < 1) throw InputError("number of individuals must be positive");
  map.validate();
  Cross cross;
  cross.map = map;
  const Index m = map.n_markers();
  cross.genotypes.resize(n_ind, m);
  std::vector<double> recfrac;  // per adjacent pair within a chromosome, in column order
  std::vector<bool> first;
  for (const auto& chr : map.chromosomes)
    for (std::size_t k = 0; k < chr.markers.size(); ++k) {
      first.push_back(k == 0);
      recfrac.push_back(k == 0 ? 0.5 : map_to_recfrac(chr.markers[k].pos - chr.markers[k - 1].pos, f));
    }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Index i = 0; i < n_ind; ++i) {
    cross.individuals.push_back("ind" + std::to_string(i + 1));
    int allele[2] = {0, 0};
    for (Index j = 0; j < m; ++j) {
      for (int& g : allele) {
        if (first[j])
          g = unif(rng) < 0.5 ? 1 : 0;
        else if (unif(rng) < recfrac[j])
          g = 1 - g;
      }
      cross.genotypes(i, j) = static_cast<std::int8_t>(allele[0] + allele[1]);
    }
  }
  cross.phenotypes.resize(n_ind, 0);
  cross.covariates = CovariateSet::none(n_ind);
  return cross;
}

Index nearest_marker(const GeneticMap& map, std::string_view chr, double pos) {
  const Index c = map.find_chromosome(chr);
  if (c < 0) throw InputError("unknown chromosome '" + std::string(chr) + "'");
  const auto& markers = map.chromosomes[c].markers;
  std::size_t best = 0;
  for (std::size_t k = 1; k < markers.size(); ++k)
    if (std::abs(markers[k].pos - pos) < std::abs(markers[best].pos - pos)) best = k;
  return map.marker_offset(c) + static_cast<Index>(best);
}

MatrixXd sim_traits(const GenotypeMatrix& genotypes, const std::vector<Index>& qtl_marker, double a,
                    std::mt19937_64& rng) {
  const Index n = genotypes.rows();
  const Index p = static_cast<Index>(qtl_marker.size());
  for (Index q : qtl_marker)
    if (q < 0 || q >= genotypes.cols()) throw InputError("QTL marker outside the genotype matrix");
  std::normal_distribution<double> normal;
  MatrixXd y(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) {
      const auto g = genotypes(i, qtl_marker[j]);
      const double code = g < 0 ? 0.0 : static_cast<double>(g) - 1.0;
      y(i, j) = a * code + normal(rng);
    }
  return y;
}

std::string PowerScenario::split() const { return std::to_string(left_count) + ":" + std::to_string(right_count()); }

void PowerScenario::validate() const {
  if (n_ind < 10) throw InputError("power scenario needs at least 10 individuals");
  if (n_markers < 2) throw InputError("power scenario needs at least 2 markers");
  if (!(chr_length > 0.0)) throw InputError("chromosome length must be positive");
  if (p < 1) throw InputError("number of traits must be positive");
  if (left_count < 0 || left_count > p) throw InputError("left trait count must lie in [0, p]");
  if (right_count() < 1) throw InputError("right trait count must be positive");
  if (!(distance >= 0.0)) throw InputError("QTL distance must be non-negative");
  if (left_qtl < 0.0 || left_qtl + distance > chr_length) throw InputError("QTL positions fall off the chromosome");
  if (!std::isfinite(a)) throw InputError("effect size must be finite");
  if (n_reps < 1 || null_reps < 1) throw InputError("replicate counts must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
  hmm.validate();
}

Cross simulate_replicate(const PowerScenario& s, Index rep) {
  auto rng = derived_rng(s.seed, static_cast<std::uint64_t>(rep), kSimSalt);
  const GeneticMap map = simulation_map(s.n_markers, s.chr_length);
  Cross cross = sim_f2(s.n_ind, map, s.hmm.map_function, rng);
  const Index left = nearest_marker(map, "1", s.left_qtl);
  const Index right = nearest_marker(map, "1", s.left_qtl + s.distance);
  std::vector<Index> qtl(static_cast<std::size_t>(s.p), right);
  std::fill_n(qtl.begin(), s.left_count, left);
  cross.phenotypes = sim_traits(cross.genotypes, qtl, s.a, rng);
  for (Index j = 0; j < s.p; ++j) {
    cross.trait_ids.push_back("t" + std::to_string(j + 1));
    cross.trait_meta.push_back({cross.trait_ids.back(), std::nullopt, std::nullopt});
  }
  return cross;
}

PowerRecord analyse_replicate(const PowerScenario& s, const Cross& cross, Index rep) {
  const GenoProb gp = calc_genoprob(cross, s.hmm, 1);
  const auto& chr = cross.map.chromosomes.front();
  std::vector<Index> rows(static_cast<std::size_t>(cross.n_individuals()));
  std::iota(rows.begin(), rows.end(), Index{0});
  const auto problem = DissectionProblem::from_genoprob(gp, {chr.name, chr.start(), chr.end()}, rows, cross.covariates);
  const ProjectionBasis basis(problem);
  SearchOptions search = s.search;
  search.threads = 1;
  const auto result = dissect(basis, problem, cross.phenotypes, cross.trait_ids, search);

  NullOptions nopts;
  nopts.n_reps = s.null_reps;
  nopts.seed = derived_seed(s.seed, static_cast<std::uint64_t>(rep), kBootSalt);
  nopts.threads = 1;
  const auto nulls =
      parametric_bootstrap(basis, problem, cross.phenotypes, cross.trait_ids, result.lambda_1qtl_index, search, nopts);
  return {rep, result.lod_2v1, pvalue(result.lod_2v1, nulls, s.plus_one), result.lambda1, result.lambda2,
          result.c_hat};
}

PowerResult run_power(const PowerScenario& s, int threads) {
  s.validate();
  PowerResult out;
  out.scenario = s;
  out.records.resize(static_cast<std::size_t>(s.n_reps));
  parallel_for(s.n_reps, threads, [&](std::int64_t r) {
    const Cross cross = simulate_replicate(s, r);
    out.records[r] = analyse_replicate(s, cross, r);
  });
  Index hits = 0;
  for (const auto& rec : out.records)
    if (rec.pvalue <= s.alpha) ++hits;
  out.power = static_cast<double>(hits) / static_cast<double>(s.n_reps);
  out.std_error = std::sqrt(out.power * (1.0 - out.power) / static_cast<double>(s.n_reps));
  return out;
}

}  // namespace hotdissect
