#pragma once

#include "hotdissect/core_model.hpp"

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hotdissect {

enum class MapFunction { Haldane, CarterFalconer };

std::string_view to_string(MapFunction f);
MapFunction parse_map_function(std::string_view name);

struct HmmConfig {
  double error_rate = 0.002;
  MapFunction map_function = MapFunction::CarterFalconer;
  double step = 0.5;  // cM between adjacent grid positions, at most

  void validate() const;
};

/// Haldane: r = (1 - exp(-2d))/2 with d in Morgans.
template <typename Scalar>
Scalar haldane_recfrac(Scalar d_cM) {
  using std::exp;
  return (Scalar(1) - exp(Scalar(-2) * d_cM / Scalar(100))) / Scalar(2);
}

/// Carter-Falconer map distance in Morgans: m(r) = [atanh(2r) + atan(2r)] / 4.
template <typename Scalar>
Scalar carter_falconer_distance(Scalar r) {
  using std::atan;
  using std::atanh;
  return (atanh(Scalar(2) * r) + atan(Scalar(2) * r)) / Scalar(4);
}

/// Recombination fraction for a distance in cM. Carter-Falconer is inverted
/// by bisection to |m(r) - d| < 1e-12. Throws InputError for d < 0.
double map_to_recfrac(double d_cM, MapFunction f);

struct GridPoint {
  std::string id;
  double pos = 0.0;    // cM
  Index marker = -1;   // genotype-matrix column, or -1 for a pseudomarker
  bool is_marker() const { return marker >= 0; }
};

struct GridChromosome {
  std::string name;
  Index offset = 0;  // global index of the first point
  std::vector<GridPoint> points;

  Index size() const { return static_cast<Index>(points.size()); }
};

/// Analysis positions: every marker plus pseudomarkers, chromosome-major.
struct Grid {
  std::vector<GridChromosome> chromosomes;

  Index size() const;
  const GridPoint& point(Index global) const;
  /// Chromosome holding global position `global`.
  const GridChromosome& chromosome_of(Index global) const;
  Index find_chromosome(std::string_view name) const;
  /// Global indices of points on `chr` with lo <= pos <= hi.
  std::vector<Index> indices_in(std::string_view chr, double lo, double hi) const;
};

/// Adds equally spaced pseudomarkers so adjacent points are <= step apart.
/// Pseudomarker ids are c<chr>.loc<pos>.
Grid insert_pseudomarkers(const GeneticMap& map, double step);

struct GenoProb {
  Grid grid;
  std::vector<ProbMatrix> probs;  // one n x 3 block per grid position

  Index n_individuals() const { return probs.empty() ? 0 : probs.front().rows(); }
  Index n_positions() const { return static_cast<Index>(probs.size()); }
};

/// Forward-backward smoothing of F2 genotypes on the pseudomarker grid.
GenoProb calc_genoprob(const Cross& cross, const HmmConfig& cfg, int threads = 1);

/// Argmax genotype per individual; ties go to BB, then BR.
std::vector<Genotype> impute_genotype(const GenoProb& gp, Index position);

struct GenomicInterval {
  std::string chr;
  double lo = 0.0;
  double hi = 0.0;
};

/// Parses "chr:lo-hi".
GenomicInterval parse_interval(std::string_view text);

struct RecombinantCall {
  bool recombinant = false;
  Genotype genotype = Genotype::Missing;  // set for non-recombinants
};

/// Recombinant iff the observed marker genotypes inside the interval disagree.
/// Individuals with fewer than two observed markers fall back on the imputed
/// genotypes at the interval's first and last grid points.
std::vector<RecombinantCall> classify_recombinants(const Cross& cross, const GenoProb& gp,
                                                   const GenomicInterval& interval);

struct GenoProbCacheKey {
  HmmConfig config;
  std::vector<std::string> individuals;
  std::vector<std::string> markers;
};

/// Writes <path> (magic "GPRB1", three little-endian uint64 dims
/// individuals/positions/3, then the row-major float64 tensor) and
/// <path>.json with the grid and the cache key.
void save_genoprob_cache(const std::filesystem::path& path, const GenoProb& gp, const GenoProbCacheKey& key);

/// Loads a cache written by save_genoprob_cache; std::nullopt if missing or
/// if the key does not match.
std::optional<GenoProb> load_genoprob_cache(const std::filesystem::path& path, const GenoProbCacheKey& key);

GenoProbCacheKey cache_key(const Cross& cross, const HmmConfig& cfg);

}  // namespace hotdissect
