#pragma once

#include "hotdissect/common.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hotdissect {

struct Marker {
  std::string id;
  double pos = 0.0;  // cM
};

struct ChromosomeMap {
  std::string name;
  std::vector<Marker> markers;

  double start() const { return markers.front().pos; }
  double end() const { return markers.back().pos; }
};

/// Chromosomes in file order; markers ordered by position within each.
/// Genotype matrix columns follow this chromosome-major order.
struct GeneticMap {
  std::vector<ChromosomeMap> chromosomes;

  Index n_markers() const;
  /// Index of the chromosome named `name`, or -1.
  Index find_chromosome(std::string_view name) const;
  /// Global column of the first marker on chromosome `c`.
  Index marker_offset(Index c) const;

  /// Checks monotone positions, unique ids, non-empty chromosomes.
  void validate() const;
};

struct TraitInfo {
  std::string id;
  std::optional<std::string> chr;
  std::optional<double> pos;  // cM
};

/// Real-valued covariate design columns, rows aligned with Cross::individuals.
/// Categorical columns are already expanded to indicators (first level dropped).
struct CovariateSet {
  MatrixXd additive;
  MatrixXd interactive;
  std::vector<std::string> additive_names;
  std::vector<std::string> interactive_names;

  static CovariateSet none(Index n) {
    return {MatrixXd(n, 0), MatrixXd(n, 0), {}, {}};
  }
  CovariateSet rows(const std::vector<Index>& idx) const;
};

struct Cross {
  std::vector<std::string> individuals;
  GeneticMap map;
  GenotypeMatrix genotypes;  // individuals x markers
  std::vector<std::string> trait_ids;
  MatrixXd phenotypes;  // individuals x traits, NaN = missing
  std::vector<TraitInfo> trait_meta;  // parallel to trait_ids
  CovariateSet covariates;

  Index n_individuals() const { return static_cast<Index>(individuals.size()); }
  Index n_traits() const { return static_cast<Index>(trait_ids.size()); }
  /// Throws InputError if the trait is unknown.
  Index trait_index(std::string_view id) const;

  void validate() const;
};

struct CrossFiles {
  std::filesystem::path geno;
  std::filesystem::path map;
  std::filesystem::path pheno;
  std::optional<std::filesystem::path> covar;
  std::optional<std::filesystem::path> trait_meta;
};

struct CovariateSpec {
  std::vector<std::string> additive;
  std::vector<std::string> interactive;
};

GeneticMap load_map(const std::filesystem::path& path);

/// Trait annotations from a trait,chr,pos_cM file (NA allowed in chr/pos).
std::vector<TraitInfo> load_trait_meta(const std::filesystem::path& path);

/// Loads and validates a cross. Individuals are the intersection of all
/// files, in genotype-file order; dropped individuals produce warnings.
Cross load_cross(const CrossFiles& files, const CovariateSpec& spec = {});

/// Replaces each non-missing value by Phi^-1((rank - 0.5) / n), with average
/// ranks for ties and n the non-missing count. Missing values stay missing.
VectorXd quantile_normalize(const Eigen::Ref<const VectorXd>& values);

/// quantile_normalize applied to every trait column.
void normalize_phenotypes(Cross& cross);

/// Canonical JSON text of the in-memory model.
std::string serialize_cross(const Cross& cross);

}  // namespace hotdissect
