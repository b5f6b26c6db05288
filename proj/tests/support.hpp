#pragma once

#include "hotdissect/core_model.hpp"
#include "hotdissect/genoprob.hpp"
#include "hotdissect/mvdissect.hpp"
#include "hotdissect/simcross.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <random>
#include <unistd.h>
#include <string>
#include <vector>

namespace testsupport {

namespace fs = std::filesystem;
using namespace hotdissect;

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("hotdissect_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
}

inline std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

/// Equally spaced markers on several chromosomes; ids c<k>m<j>.
inline GeneticMap multi_chr_map(int n_chr, Index markers_per_chr, double length) {
  GeneticMap map;
  for (int c = 1; c <= n_chr; ++c) {
    ChromosomeMap chr{std::to_string(c), {}};
    for (Index j = 0; j < markers_per_chr; ++j)
      chr.markers.push_back({"c" + std::to_string(c) + "m" + std::to_string(j + 1),
                             length * static_cast<double>(j) / static_cast<double>(markers_per_chr - 1)});
    map.chromosomes.push_back(std::move(chr));
  }
  return map;
}

/// Simulated F2 with traits trait_qtl[j] (marker column) scaled by `a`;
/// a negative column gives pure noise.
inline Cross simulated_cross(Index n, const GeneticMap& map, const std::vector<Index>& trait_qtl, double a,
                             std::uint64_t seed, MapFunction f = MapFunction::Haldane) {
  std::mt19937_64 rng(seed);
  Cross cross = sim_f2(n, map, f, rng);
  std::vector<Index> cols;
  for (Index q : trait_qtl) cols.push_back(q < 0 ? 0 : q);
  MatrixXd y = sim_traits(cross.genotypes, cols, a, rng);
  std::normal_distribution<double> normal;
  for (std::size_t j = 0; j < trait_qtl.size(); ++j)
    if (trait_qtl[j] < 0)
      for (Index i = 0; i < n; ++i) y(i, static_cast<Index>(j)) = normal(rng);
  cross.phenotypes = y;
  for (std::size_t j = 0; j < trait_qtl.size(); ++j) {
    cross.trait_ids.push_back("t" + std::to_string(j + 1));
    cross.trait_meta.push_back({cross.trait_ids.back(), std::nullopt, std::nullopt});
  }
  return cross;
}

/// Writes a cross in the CSV input formats; returns the file set.
inline CrossFiles write_cross(const Cross& cross, const fs::path& dir, bool with_meta = true) {
  CrossFiles files{dir / "geno.csv", dir / "map.csv", dir / "pheno.csv", std::nullopt, std::nullopt};
  std::string map = "marker,chr,pos_cM\n";
  std::string geno = "id";
  for (const auto& c : cross.map.chromosomes)
    for (const auto& m : c.markers) {
      map += m.id + "," + c.name + "," + fmt_real(m.pos) + "\n";
      geno += "," + m.id;
    }
  geno += "\n";
  for (Index i = 0; i < cross.n_individuals(); ++i) {
    geno += cross.individuals[i];
    for (Index j = 0; j < cross.genotypes.cols(); ++j)
      geno += "," + std::string(to_string(static_cast<Genotype>(cross.genotypes(i, j))));
    geno += "\n";
  }
  std::string pheno = "id";
  for (const auto& t : cross.trait_ids) pheno += "," + t;
  pheno += "\n";
  for (Index i = 0; i < cross.n_individuals(); ++i) {
    pheno += cross.individuals[i];
    for (Index j = 0; j < cross.n_traits(); ++j) {
      const double v = cross.phenotypes(i, j);
      if (is_missing(v)) {
        pheno += ",NA";
      } else {
        pheno += "," + fmt_real(v);
      }
    }
    pheno += "\n";
  }
  write_text(files.map, map);
  write_text(files.geno, geno);
  write_text(files.pheno, pheno);
  if (with_meta) {
    std::string meta = "trait,chr,pos_cM\n";
    for (const auto& m : cross.trait_meta)
      meta += m.id + "," + (m.chr ? *m.chr : "NA") + "," + (m.pos ? fmt_real(*m.pos) : "NA") + "\n";
    files.trait_meta = dir / "trait_meta.csv";
    write_text(*files.trait_meta, meta);
  }
  return files;
}

/// Interval machinery for all individuals of a cross; kept behind pointers
/// because the model refers to its basis.
struct IntervalFixture {
  DissectionProblem problem;
  std::unique_ptr<ProjectionBasis> basis;
  std::unique_ptr<IntervalModel> model;

  IntervalFixture(const GenoProb& gp, const GenomicInterval& iv, const MatrixXd& Y, const CovariateSet& cov) {
    std::vector<Index> rows(static_cast<std::size_t>(Y.rows()));
    std::iota(rows.begin(), rows.end(), Index{0});
    problem = DissectionProblem::from_genoprob(gp, iv, rows, cov);
    basis = std::make_unique<ProjectionBasis>(problem);
    model = std::make_unique<IntervalModel>(*basis, Y);
  }
};

inline std::vector<std::string> trait_names(Index p) {
  std::vector<std::string> out;
  for (Index k = 0; k < p; ++k) out.push_back("t" + std::to_string(k + 1));
  return out;
}

}  // namespace testsupport
