#include "hotdissect/core_model.hpp"

#include "csv.hpp"

#include <boost/math/distributions/normal.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace hotdissect {

using detail::CsvTable;
using detail::parse_real;
using detail::read_csv;

Index GeneticMap::n_markers() const {
  Index n = 0;
  for (const auto& c : chromosomes) n += static_cast<Index>(c.markers.size());
  return n;
}

Index GeneticMap::find_chromosome(std::string_view name) const {
  for (std::size_t i = 0; i < chromosomes.size(); ++i)
    if (chromosomes[i].name == name) return static_cast<Index>(i);
  return -1;
}

Index GeneticMap::marker_offset(Index c) const {
  Index off = 0;
  for (Index i = 0; i < c; ++i) off += static_cast<Index>(chromosomes[i].markers.size());
  return off;
}

void GeneticMap::validate() const {
  std::unordered_set<std::string> ids;
  for (const auto& chr : chromosomes) {
    if (chr.markers.empty()) throw InputError("chromosome " + chr.name + " has no markers");
    for (std::size_t i = 0; i < chr.markers.size(); ++i) {
      if (!ids.insert(chr.markers[i].id).second)
        throw InputError("duplicate marker id " + chr.markers[i].id);
      if (i > 0 && chr.markers[i].pos < chr.markers[i - 1].pos)
        throw InputError("marker positions decrease on chromosome " + chr.name + " at " + chr.markers[i].id);
    }
  }
}

CovariateSet CovariateSet::rows(const std::vector<Index>& idx) const {
  CovariateSet out;
  out.additive = additive(idx, Eigen::all);
  out.interactive = interactive(idx, Eigen::all);
  out.additive_names = additive_names;
  out.interactive_names = interactive_names;
  return out;
}

Index Cross::trait_index(std::string_view id) const {
  for (std::size_t i = 0; i < trait_ids.size(); ++i)
    if (trait_ids[i] == id) return static_cast<Index>(i);
  throw InputError("unknown trait " + std::string(id));
}

void Cross::validate() const {
  map.validate();
  const Index n = n_individuals();
  if (genotypes.rows() != n || genotypes.cols() != map.n_markers())
    throw InputError("genotype matrix does not match individuals x markers");
  if (phenotypes.rows() != n || phenotypes.cols() != n_traits())
    throw InputError("phenotype matrix does not match individuals x traits");
  if (trait_meta.size() != trait_ids.size()) throw InputError("trait metadata size mismatch");
  if (covariates.additive.rows() != n || covariates.interactive.rows() != n)
    throw InputError("covariate rows do not match individuals");
  std::unordered_set<std::string> seen(trait_ids.begin(), trait_ids.end());
  if (seen.size() != trait_ids.size()) throw InputError("duplicate trait ids");
}

GeneticMap load_map(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  if (t.header.size() != 3 || t.header[0] != "marker" || t.header[1] != "chr" || t.header[2] != "pos_cM")
    t.fail_header("map header must be marker,chr,pos_cM");
  GeneticMap map;
  std::unordered_set<std::string> ids;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    double pos = 0;
    if (!parse_real(row[2], pos) || is_missing(pos)) t.fail(r, "invalid position '" + row[2] + "'");
    if (!ids.insert(row[0]).second) t.fail(r, "duplicate marker id " + row[0]);
    Index c = map.find_chromosome(row[1]);
    if (c < 0) {
      map.chromosomes.push_back({row[1], {}});
      c = static_cast<Index>(map.chromosomes.size()) - 1;
    }
    auto& markers = map.chromosomes[c].markers;
    if (!markers.empty() && pos < markers.back().pos)
      t.fail(r, "marker positions must be non-decreasing within chromosome " + row[1] + " (" +
                    row[0] + " follows " + markers.back().id + ")");
    markers.push_back({row[0], pos});
  }
  if (map.chromosomes.empty()) throw InputError(path.string() + ": no markers");
  return map;
}

namespace {

std::unordered_map<std::string, std::size_t> index_rows(const CsvTable& t) {
  std::unordered_map<std::string, std::size_t> idx;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    if (!idx.emplace(t.rows[r][0], r).second) t.fail(r, "duplicate id " + t.rows[r][0]);
  return idx;
}

struct CovariateColumn {
  std::size_t col;
  bool numeric = true;
};

CovariateColumn locate_covariate(const CsvTable& t, const std::string& name) {
  auto it = std::find(t.header.begin() + 1, t.header.end(), name);
  if (it == t.header.end()) t.fail_header("covariate column " + name + " not found");
  CovariateColumn cc{static_cast<std::size_t>(it - t.header.begin())};
  for (const auto& row : t.rows) {
    double v;
    if (row[cc.col] != "NA" && !parse_real(row[cc.col], v)) {
      cc.numeric = false;
      break;
    }
  }
  return cc;
}

void expand_covariates(const CsvTable& t, const std::vector<std::string>& names,
                       const std::vector<std::size_t>& rows, MatrixXd& out,
                       std::vector<std::string>& out_names) {
  std::vector<VectorXd> cols;
  for (const auto& name : names) {
    const auto cc = locate_covariate(t, name);
    if (cc.numeric) {
      VectorXd v(static_cast<Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) parse_real(t.rows[rows[i]][cc.col], v[i]);
      cols.push_back(std::move(v));
      out_names.push_back(name);
      continue;
    }
    std::set<std::string> levels;
    for (auto r : rows) levels.insert(t.rows[r][cc.col]);
    bool first = true;
    for (const auto& level : levels) {
      if (first) {
        first = false;
        continue;
      }
      VectorXd v(static_cast<Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) v[i] = t.rows[rows[i]][cc.col] == level ? 1.0 : 0.0;
      cols.push_back(std::move(v));
      out_names.push_back(name + "=" + level);
    }
  }
  out.resize(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = cols[j];
}

}  // namespace

std::vector<TraitInfo> load_trait_meta(const std::filesystem::path& path) {
  const CsvTable meta = read_csv(path);
  if (meta.header.size() != 3 || meta.header[0] != "trait" || meta.header[1] != "chr" || meta.header[2] != "pos_cM")
    meta.fail_header("trait metadata header must be trait,chr,pos_cM");
  std::vector<TraitInfo> out;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 0; r < meta.rows.size(); ++r) {
    const auto& row = meta.rows[r];
    if (!seen.insert(row[0]).second) meta.fail(r, "duplicate trait id " + row[0]);
    TraitInfo info{row[0], std::nullopt, std::nullopt};
    if (row[1] != "NA") info.chr = row[1];
    double pos;
    if (!parse_real(row[2], pos)) meta.fail(r, "invalid position '" + row[2] + "'");
    if (!is_missing(pos)) info.pos = pos;
    out.push_back(std::move(info));
  }
  return out;
}

Cross load_cross(const CrossFiles& files, const CovariateSpec& spec) {
  Cross cross;
  cross.map = load_map(files.map);
  cross.map.validate();

  // Genotype columns -> map order.
  const CsvTable geno = read_csv(files.geno);
  if (geno.header.empty() || geno.header[0] != "id") geno.fail_header("genotype header must start with id");
  std::unordered_map<std::string, Index> map_col;
  {
    Index k = 0;
    for (const auto& chr : cross.map.chromosomes)
      for (const auto& m : chr.markers) map_col[m.id] = k++;
  }
  std::vector<Index> geno_to_map(geno.header.size(), -1);
  std::vector<bool> covered(static_cast<std::size_t>(cross.map.n_markers()), false);
  for (std::size_t j = 1; j < geno.header.size(); ++j) {
    auto it = map_col.find(geno.header[j]);
    if (it == map_col.end()) geno.fail_header("marker " + geno.header[j] + " is absent from the map");
    if (covered[it->second]) geno.fail_header("duplicate marker column " + geno.header[j]);
    covered[it->second] = true;
    geno_to_map[j] = it->second;
  }
  for (const auto& [id, k] : map_col)
    if (!covered[k]) geno.fail_header("map marker " + id + " has no genotype column");
  const auto geno_index = index_rows(geno);

  const CsvTable pheno = read_csv(files.pheno);
  if (pheno.header.empty() || pheno.header[0] != "id") pheno.fail_header("phenotype header must start with id");
  {
    std::unordered_set<std::string> traits;
    for (std::size_t j = 1; j < pheno.header.size(); ++j)
      if (!traits.insert(pheno.header[j]).second) pheno.fail_header("duplicate trait id " + pheno.header[j]);
  }
  const auto pheno_index = index_rows(pheno);

  const bool want_covar = !spec.additive.empty() || !spec.interactive.empty();
  if (want_covar && !files.covar) throw InputError("covariates requested but no covariate file given");
  std::optional<CsvTable> covar;
  std::unordered_map<std::string, std::size_t> covar_index;
  std::vector<std::size_t> covar_cols;
  if (files.covar) {
    covar = read_csv(*files.covar);
    if (covar->header.empty() || covar->header[0] != "id") covar->fail_header("covariate header must start with id");
    covar_index = index_rows(*covar);
    for (const auto* names : {&spec.additive, &spec.interactive})
      for (const auto& name : *names) covar_cols.push_back(locate_covariate(*covar, name).col);
  }

  std::vector<std::size_t> geno_rows, pheno_rows, covar_rows;
  for (std::size_t r = 0; r < geno.rows.size(); ++r) {
    const auto& id = geno.rows[r][0];
    auto p = pheno_index.find(id);
    if (p == pheno_index.end()) {
      warn("individual " + id + " has no phenotype row; dropped");
      continue;
    }
    std::size_t crow = 0;
    if (covar) {
      auto c = covar_index.find(id);
      if (c == covar_index.end()) {
        warn("individual " + id + " has no covariate row; dropped");
        continue;
      }
      crow = c->second;
      bool missing = false;
      for (auto col : covar_cols) missing = missing || covar->rows[crow][col] == "NA";
      if (missing) {
        warn("individual " + id + " has a missing covariate; dropped");
        continue;
      }
    }
    geno_rows.push_back(r);
    pheno_rows.push_back(p->second);
    covar_rows.push_back(crow);
  }
  for (const auto& [id, r] : pheno_index)
    if (!geno_index.contains(id)) warn("phenotyped individual " + id + " is absent from the genotype file; dropped");
  if (geno_rows.empty()) throw InputError("no individuals common to genotype and phenotype files");

  const Index n = static_cast<Index>(geno_rows.size());
  cross.individuals.reserve(geno_rows.size());
  cross.genotypes.resize(n, cross.map.n_markers());
  for (Index i = 0; i < n; ++i) {
    const std::size_t r = geno_rows[i];
    cross.individuals.push_back(geno.rows[r][0]);
    for (std::size_t j = 1; j < geno.header.size(); ++j) {
      Genotype g;
      try {
        g = parse_genotype(geno.rows[r][j]);
      } catch (const InputError& e) {
        geno.fail(r, e.what());
      }
      cross.genotypes(i, geno_to_map[j]) = static_cast<std::int8_t>(g);
    }
  }

  const Index t = static_cast<Index>(pheno.header.size()) - 1;
  cross.trait_ids.assign(pheno.header.begin() + 1, pheno.header.end());
  cross.phenotypes.resize(n, t);
  for (Index i = 0; i < n; ++i) {
    const std::size_t r = pheno_rows[i];
    for (Index j = 0; j < t; ++j) {
      const auto& cell = pheno.rows[r][j + 1];
      if (!parse_real(cell, cross.phenotypes(i, j))) pheno.fail(r, "invalid phenotype value '" + cell + "'");
    }
  }

  cross.trait_meta.resize(static_cast<std::size_t>(t));
  for (Index j = 0; j < t; ++j) cross.trait_meta[j].id = cross.trait_ids[j];
  if (files.trait_meta) {
    std::unordered_map<std::string, Index> tix;
    for (Index j = 0; j < t; ++j) tix[cross.trait_ids[j]] = j;
    for (auto& info : load_trait_meta(*files.trait_meta)) {
      auto it = tix.find(info.id);
      if (it != tix.end()) cross.trait_meta[it->second] = std::move(info);
    }
  }

  if (covar) {
    expand_covariates(*covar, spec.additive, covar_rows, cross.covariates.additive, cross.covariates.additive_names);
    expand_covariates(*covar, spec.interactive, covar_rows, cross.covariates.interactive,
                      cross.covariates.interactive_names);
  } else {
    cross.covariates = CovariateSet::none(n);
  }
  cross.validate();
  return cross;
}

VectorXd quantile_normalize(const Eigen::Ref<const VectorXd>& values) {
  std::vector<Index> idx;
  for (Index i = 0; i < values.size(); ++i)
    if (!is_missing(values[i])) idx.push_back(i);
  const auto n = static_cast<Index>(idx.size());
  if (n < 2) throw InputError("quantile normalization needs at least 2 non-missing values");
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return values[a] < values[b]; });

  const boost::math::normal_distribution<double> normal;
  VectorXd out = VectorXd::Constant(values.size(), kMissing);
  for (Index lo = 0; lo < n;) {
    Index hi = lo;
    while (hi + 1 < n && values[idx[hi + 1]] == values[idx[lo]]) ++hi;
    const double rank = 0.5 * static_cast<double>(lo + hi) + 1.0;  // mid rank, 1-based
    const double q = boost::math::quantile(normal, (rank - 0.5) / static_cast<double>(n));
    for (Index k = lo; k <= hi; ++k) out[idx[k]] = q;
    lo = hi + 1;
  }
  return out;
}

void normalize_phenotypes(Cross& cross) {
  for (Index j = 0; j < cross.n_traits(); ++j) {
    const VectorXd col = cross.phenotypes.col(j);
    Index present = 0;
    for (Index i = 0; i < col.size(); ++i) present += is_missing(col[i]) ? 0 : 1;
    if (present < 2) {
      warn("trait " + cross.trait_ids[j] + " has fewer than 2 values; left untransformed");
      continue;
    }
    cross.phenotypes.col(j) = quantile_normalize(col);
  }
}

std::string serialize_cross(const Cross& cross) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["individuals"] = cross.individuals;
  ordered_json chrs = ordered_json::array();
  for (const auto& c : cross.map.chromosomes) {
    ordered_json markers = ordered_json::array();
    for (const auto& m : c.markers) markers.push_back({{"id", m.id}, {"pos", m.pos}});
    chrs.push_back({{"chr", c.name}, {"markers", markers}});
  }
  j["map"] = chrs;
  ordered_json geno = ordered_json::array();
  for (Index i = 0; i < cross.genotypes.rows(); ++i) {
    std::string row;
    for (Index k = 0; k < cross.genotypes.cols(); ++k) {
      if (k) row.push_back(',');
      row += to_string(genotype_from_code(cross.genotypes(i, k)));
    }
    geno.push_back(row);
  }
  j["genotypes"] = geno;
  j["traits"] = cross.trait_ids;
  ordered_json pheno = ordered_json::array();
  for (Index i = 0; i < cross.phenotypes.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Index k = 0; k < cross.phenotypes.cols(); ++k) {
      const double v = cross.phenotypes(i, k);
      if (is_missing(v)) row.push_back(nullptr);
      else row.push_back(v);
    }
    pheno.push_back(row);
  }
  j["phenotypes"] = pheno;
  ordered_json meta = ordered_json::array();
  for (const auto& m : cross.trait_meta) {
    ordered_json e{{"trait", m.id}};
    e["chr"] = m.chr ? ordered_json(*m.chr) : ordered_json(nullptr);
    e["pos"] = m.pos ? ordered_json(*m.pos) : ordered_json(nullptr);
    meta.push_back(e);
  }
  j["trait_meta"] = meta;
  auto dump_matrix = [](const MatrixXd& m) {
    ordered_json rows = ordered_json::array();
    for (Index i = 0; i < m.rows(); ++i) {
      ordered_json row = ordered_json::array();
      for (Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
      rows.push_back(row);
    }
    return rows;
  };
  j["covariates"] = {{"additive_names", cross.covariates.additive_names},
                     {"additive", dump_matrix(cross.covariates.additive)},
                     {"interactive_names", cross.covariates.interactive_names},
                     {"interactive", dump_matrix(cross.covariates.interactive)}};
  return j.dump();
}

}  // namespace hotdissect
