#pragma once

#include "hotdissect/genoprob.hpp"
#include "hotdissect/mvdissect.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace hotdissect {

/// One chromosome "1" of n_markers equally spaced markers m1..mN on [0, length].
GeneticMap simulation_map(Index n_markers = 100, double length = 100.0);

/// F2 genotypes without crossover interference: each gamete starts with a
/// fair allele and switches between adjacent markers with probability
/// r(gap). Individuals are named ind1..indN. No phenotypes.
Cross sim_f2(Index n_ind, const GeneticMap& map, MapFunction f, std::mt19937_64& rng);

/// Marker column nearest to `pos` on chromosome `chr` (left one on ties).
Index nearest_marker(const GeneticMap& map, std::string_view chr, double pos);

/// trait_j = a * g + e with g = -1, 0, +1 for BB, BR, RR at marker
/// `qtl_marker[j]` and e standard normal. Missing genotypes count as BR.
MatrixXd sim_traits(const GenotypeMatrix& genotypes, const std::vector<Index>& qtl_marker, double a,
                    std::mt19937_64& rng);

struct PowerScenario {
  std::string id = "scenario";
  Index n_ind = 500;
  Index n_markers = 100;
  double chr_length = 100.0;
  Index p = 10;
  Index left_count = 5;  // traits on the left QTL; the rest follow the right one
  double a = 0.5;
  double distance = 10.0;  // cM between the QTL
  double left_qtl = 50.0;
  Index n_reps = 100;
  Index null_reps = 1000;
  std::uint64_t seed = 1;
  double alpha = 0.05;
  bool plus_one = false;
  /// HMM used for both simulation (map function) and analysis.
  HmmConfig hmm{0.002, MapFunction::Haldane, 0.5};
  SearchOptions search{};

  Index right_count() const { return p - left_count; }
  std::string split() const;
  void validate() const;
};

struct PowerRecord {
  Index rep = 0;
  double lod_2v1 = 0.0;
  double pvalue = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  Index c_hat = 0;
};

struct PowerResult {
  PowerScenario scenario;
  std::vector<PowerRecord> records;
  double power = 0.0;     // fraction of replicates with pvalue <= alpha
  double std_error = 0.0; // binomial Monte Carlo error
  bool is_null() const { return scenario.distance == 0.0 || scenario.left_count == 0 || scenario.a == 0.0; }
};

/// Simulates one replicate's cross with phenotypes t1..tp attached.
Cross simulate_replicate(const PowerScenario& s, Index rep);

/// Full dissection of one simulated cross on its whole chromosome plus a
/// bootstrap p-value.
PowerRecord analyse_replicate(const PowerScenario& s, const Cross& cross, Index rep);

/// Replicates run in parallel over `threads`; results do not depend on it.
PowerResult run_power(const PowerScenario& s, int threads = 1);

}  // namespace hotdissect
