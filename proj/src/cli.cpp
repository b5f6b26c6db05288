#include "hotdissect/cli.hpp"

#include "hotdissect/hotspot.hpp"
#include "hotdissect/ldadiag.hpp"
#include "hotdissect/mvdissect.hpp"
#include "hotdissect/scan.hpp"
#include "hotdissect/signif.hpp"
#include "hotdissect/simcross.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

namespace hotdissect::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct Global {
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = ".";
};

struct DataOpts {
  std::string geno, map, pheno, covar, trait_meta, cache;
  std::vector<std::string> additive, interactive;
  double error_rate = 0.002;
  std::string map_function = "carter-falconer";
  double step = 0.5;
  bool no_normalize = false;

  HmmConfig hmm() const { return {error_rate, parse_map_function(map_function), step}; }

  ordered_json to_json() const {
    ordered_json j;
    j["geno"] = geno;
    j["map"] = map;
    j["pheno"] = pheno;
    j["covar"] = covar.empty() ? ordered_json() : ordered_json(covar);
    j["trait_meta"] = trait_meta.empty() ? ordered_json() : ordered_json(trait_meta);
    j["additive"] = additive;
    j["interactive"] = interactive;
    j["error_rate"] = error_rate;
    j["map_function"] = std::string(to_string(parse_map_function(map_function)));
    j["step"] = step;
    j["normalize"] = !no_normalize;
    return j;
  }
};

struct SelectOpts {
  std::string interval;
  std::vector<std::string> traits;
  std::string peaks;
  double lod_min = 10.0;
  double local_exclusion = 10.0;
  Index top = 50;
  bool exclude_same_chr = true;

  ordered_json to_json() const {
    ordered_json j;
    j["interval"] = interval;
    j["traits"] = traits;
    j["peaks"] = peaks.empty() ? ordered_json() : ordered_json(peaks);
    j["lod_min"] = lod_min;
    j["local_exclusion"] = local_exclusion;
    j["top"] = top;
    j["exclude_same_chr"] = exclude_same_chr;
    return j;
  }
};

std::string num(double v) {
  if (is_missing(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

ordered_json jnum(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(); }

ordered_json jvec(const VectorXd& v) {
  auto a = ordered_json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(jnum(v(i)));
  return a;
}

void write_file(const Global& g, const std::string& name, const std::string& text, std::ostream& out) {
  const fs::path dir(g.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path path = dir / name;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path.string());
  f << text;
  if (!f) throw InputError("failed writing " + path.string());
  out << "wrote " << path.string() << "\n";
}

std::string json_text(ordered_json j) { return j.dump(2) + "\n"; }

std::string csv_preamble(const ordered_json& config) { return "# config: " + config.dump() + "\n"; }

ordered_json base_config(const std::string& command, const Global& g) {
  ordered_json c;
  c["command"] = command;
  c["seed"] = g.seed;
  return c;
}

void add_data_options(CLI::App* cmd, DataOpts& d, bool required) {
  auto* geno = cmd->add_option("--geno", d.geno, "genotype CSV (id,<markers>...)");
  auto* map = cmd->add_option("--map", d.map, "genetic map CSV (marker,chr,pos_cM)");
  auto* pheno = cmd->add_option("--pheno", d.pheno, "phenotype CSV (id,<traits>...)");
  if (required) {
    geno->required();
    pheno->required();
  }
  map->required();
  cmd->add_option("--covar", d.covar, "covariate CSV (id,<columns>...)");
  cmd->add_option("--trait-meta", d.trait_meta, "trait positions CSV (trait,chr,pos_cM)");
  cmd->add_option("--additive", d.additive, "additive covariate columns")->delimiter(',');
  cmd->add_option("--interactive", d.interactive, "interactive covariate columns")->delimiter(',');
  cmd->add_option("--error-rate", d.error_rate, "genotyping error rate")->check(CLI::Range(0.0, 0.4999));
  cmd->add_option("--map-function", d.map_function, "haldane or carter-falconer")
      ->check(CLI::IsMember({"haldane", "carter-falconer", "carter_falconer"}));
  cmd->add_option("--step", d.step, "pseudomarker spacing in cM")->check(CLI::Range(1e-3, 100.0));
  cmd->add_flag("--no-normalize", d.no_normalize, "skip the rank-based normal transform");
  cmd->add_option("--genoprob-cache", d.cache, "genotype probability cache file");
}

void add_select_options(CLI::App* cmd, SelectOpts& s, Index default_top) {
  s.top = default_top;
  cmd->add_option("--interval", s.interval, "analysis interval chr:lo-hi")->required();
  cmd->add_option("--traits", s.traits, "explicit trait ids (skips selection)")->delimiter(',');
  cmd->add_option("--peaks", s.peaks, "peaks JSON from the scan command");
  cmd->add_option("--lod-min", s.lod_min, "LOD threshold for hotspot traits")->check(CLI::NonNegativeNumber);
  cmd->add_option("--local-exclusion", s.local_exclusion, "cM within which a peak counts as local")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--top", s.top, "number of highest-LOD traits")->check(CLI::PositiveNumber);
  cmd->add_flag("--exclude-same-chr,!--include-same-chr", s.exclude_same_chr,
                "skip traits annotated on the hotspot chromosome");
}

Cross load_data(const DataOpts& d) {
  CrossFiles files{d.geno, d.map, d.pheno, std::nullopt, std::nullopt};
  if (!d.covar.empty()) files.covar = d.covar;
  if (!d.trait_meta.empty()) files.trait_meta = d.trait_meta;
  Cross cross = load_cross(files, {d.additive, d.interactive});
  if (!d.no_normalize) normalize_phenotypes(cross);
  return cross;
}

GenoProb genoprob(const Cross& cross, const DataOpts& d, int threads) {
  const HmmConfig cfg = d.hmm();
  if (d.cache.empty()) return calc_genoprob(cross, cfg, threads);
  const auto key = cache_key(cross, cfg);
  if (auto cached = load_genoprob_cache(d.cache, key)) return std::move(*cached);
  GenoProb gp = calc_genoprob(cross, cfg, threads);
  save_genoprob_cache(d.cache, gp, key);
  return gp;
}

ordered_json peak_json(const PeakRecord& p) {
  ordered_json j;
  j["trait"] = p.trait;
  j["chr"] = p.chr;
  j["pos"] = p.pos;
  j["lod"] = p.lod;
  j["signed_lod"] = p.signed_lod;
  j["a"] = jnum(p.a);
  j["d"] = jnum(p.d);
  return j;
}

double json_real(const ordered_json& j) { return j.is_null() ? kMissing : j.get<double>(); }

std::vector<PeakRecord> read_peaks(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open " + path);
  ordered_json doc;
  try {
    doc = ordered_json::parse(f);
    std::vector<PeakRecord> out;
    for (const auto& p : doc.at("peaks")) {
      PeakRecord r;
      r.trait = p.at("trait").get<std::string>();
      r.chr = p.at("chr").get<std::string>();
      r.pos = p.at("pos").get<double>();
      r.lod = p.at("lod").get<double>();
      r.signed_lod = p.at("signed_lod").get<double>();
      r.a = json_real(p.at("a"));
      r.d = json_real(p.at("d"));
      out.push_back(std::move(r));
    }
    return out;
  } catch (const ordered_json::exception& e) {
    throw InputError(path + ": malformed peaks file (" + e.what() + ")");
  }
}

/// Trait list for dissect and lda: explicit ids, or the top hotspot traits
/// with peaks inside the interval.
std::vector<std::string> choose_traits(const Cross& cross, const GenoProb& gp, const GenomicInterval& iv,
                                       const SelectOpts& s, int threads) {
  if (!s.traits.empty()) {
    for (const auto& id : s.traits) cross.trait_index(id);
    if (static_cast<Index>(s.traits.size()) > s.top)
      return {s.traits.begin(), s.traits.begin() + s.top};
    return s.traits;
  }
  std::vector<PeakRecord> peaks;
  if (!s.peaks.empty()) {
    peaks = read_peaks(s.peaks);
  } else {
    ScanOptions so;
    so.chromosomes = {iv.chr};
    peaks = scan_all(cross, gp, s.lod_min, so, threads);
  }
  const auto meta = index_trait_meta(cross.trait_meta);
  HotspotInterval h;
  h.chr = iv.chr;
  h.lo = iv.lo;
  h.hi = iv.hi;
  for (const auto& p : peaks)
    if (p.chr == iv.chr && p.pos >= iv.lo && p.pos <= iv.hi && p.lod >= s.lod_min &&
        !is_local(p, meta, s.local_exclusion))
      h.traits.push_back({p.trait, p.lod, p.pos});
  auto ids = select_top_traits(h, meta, s.top, s.exclude_same_chr);
  for (const auto& id : ids) cross.trait_index(id);
  return ids;
}

/// Individuals observed on every listed trait.
std::vector<Index> complete_rows(const Cross& cross, const std::vector<Index>& cols) {
  std::vector<Index> rows;
  for (Index i = 0; i < cross.n_individuals(); ++i) {
    bool ok = true;
    for (Index c : cols) ok = ok && !is_missing(cross.phenotypes(i, c));
    if (ok) rows.push_back(i);
  }
  const Index dropped = cross.n_individuals() - static_cast<Index>(rows.size());
  if (dropped > 0) warn(std::to_string(dropped) + " individuals with missing values on the selected traits dropped");
  return rows;
}

// --- scan -----------------------------------------------------------------

struct ScanCmd {
  DataOpts data;
  double lod_min = 5.0;
  std::vector<std::string> chromosomes;
  bool curves = false;
};

void cmd_scan(const ScanCmd& c, const Global& g, std::ostream& out) {
  const Cross cross = load_data(c.data);
  const GenoProb gp = genoprob(cross, c.data, g.threads);
  ScanOptions so;
  so.chromosomes = c.chromosomes;
  std::vector<TraitScan> scans;
  const auto peaks = scan_all(cross, gp, c.lod_min, so, g.threads, c.curves ? &scans : nullptr);

  ordered_json config = base_config("scan", g);
  config["data"] = c.data.to_json();
  config["lod_min"] = c.lod_min;
  config["chromosomes"] = c.chromosomes;
  ordered_json doc;
  doc["config"] = config;
  doc["peaks"] = ordered_json::array();
  for (const auto& p : peaks) doc["peaks"].push_back(peak_json(p));
  write_file(g, "scan_peaks.json", json_text(doc), out);
  out << peaks.size() << " peaks\n";

  if (c.curves) {
    std::string csv = csv_preamble(config) + "trait,chr,pos,lod\n";
    for (const auto& s : scans)
      for (std::size_t k = 0; k < s.chromosomes.size(); ++k) {
        const auto& gc = gp.grid.chromosomes[gp.grid.find_chromosome(s.chromosomes[k])];
        for (Index j = 0; j < gc.size(); ++j)
          csv += s.trait_id + "," + gc.name + "," + num(gc.points[j].pos) + "," + num(s.curves[k](j)) + "\n";
      }
    write_file(g, "scan_curves.csv", csv, out);
  }
}

// --- hotspots -------------------------------------------------------------

struct HotspotCmd {
  DataOpts data;
  std::string peaks;
  HotspotOptions opts;
};

void cmd_hotspots(const HotspotCmd& c, const Global& g, std::ostream& out) {
  std::vector<PeakRecord> peaks;
  std::vector<TraitInfo> meta;
  Grid grid;
  if (!c.peaks.empty()) {
    peaks = read_peaks(c.peaks);
    grid = insert_pseudomarkers(load_map(c.data.map), c.data.step);
    if (!c.data.trait_meta.empty()) meta = load_trait_meta(c.data.trait_meta);
  } else {
    if (c.data.geno.empty() || c.data.pheno.empty())
      throw InputError("hotspots needs --peaks, or --geno and --pheno to run the scan");
    const Cross cross = load_data(c.data);
    const GenoProb gp = genoprob(cross, c.data, g.threads);
    peaks = scan_all(cross, gp, c.opts.lod_min, {}, g.threads);
    grid = gp.grid;
    meta = cross.trait_meta;
  }
  const auto mindex = index_trait_meta(meta);
  const auto counts = count_trans_eqtl(peaks, mindex, grid, c.opts);
  const auto spots = define_hotspots(counts, peaks, mindex, c.opts);

  ordered_json config = base_config("hotspots", g);
  config["data"] = c.data.to_json();
  config["peaks"] = c.peaks.empty() ? ordered_json() : ordered_json(c.peaks);
  config["lod_min"] = c.opts.lod_min;
  config["window"] = c.opts.window;
  config["local_exclusion"] = c.opts.local_exclusion;
  config["count_min"] = c.opts.count_min;
  config["pad"] = c.opts.pad;

  ordered_json doc;
  doc["config"] = config;
  doc["hotspots"] = ordered_json::array();
  for (const auto& h : spots) {
    ordered_json j;
    j["chr"] = h.chr;
    j["lo"] = h.lo;
    j["hi"] = h.hi;
    j["peak_pos"] = h.center;
    j["peak_count"] = h.peak_count;
    j["traits"] = ordered_json::array();
    for (const auto& t : h.traits) j["traits"].push_back({{"id", t.id}, {"lod", t.lod}, {"pos", t.pos}});
    doc["hotspots"].push_back(j);
  }
  write_file(g, "hotspots.json", json_text(doc), out);

  std::string csv = csv_preamble(config) + "chr,pos,count\n";
  for (const auto& cc : counts)
    for (std::size_t k = 0; k < cc.pos.size(); ++k)
      csv += cc.chr + "," + num(cc.pos[k]) + "," + std::to_string(cc.count[k]) + "\n";
  write_file(g, "hotspot_counts.csv", csv, out);

  if (spots.empty()) out << "no hotspot\n";
  for (const auto& h : spots)
    out << "hotspot " << h.chr << ":" << num(h.lo) << "-" << num(h.hi) << " (" << h.traits.size() << " traits)\n";
}

// --- dissect --------------------------------------------------------------

struct DissectCmd {
  DataOpts data;
  SelectOpts select;
  std::string mode = "coordinate";
  int starts = 5;
  int max_iterations = 20;
  std::string method = "none";
  Index n_reps = 1000;
  bool plus_one = false;
  bool permute_covariates = false;
};

ordered_json dissection_json(const TwoVsOneResult& r) {
  ordered_json j;
  j["M1"] = r.m1;
  j["lambda_1qtl"] = r.lambda_1qtl;
  j["M2"] = r.m2;
  j["c_hat"] = r.c_hat;
  j["lambda1"] = r.lambda1;
  j["lambda2"] = r.lambda2;
  j["lod_2v1"] = r.lod_2v1;
  j["seed"] = r.seed;
  j["per_cutpoint"] = ordered_json::array();
  for (std::size_t k = 0; k < r.per_cutpoint.size(); ++k)
    j["per_cutpoint"].push_back(
        {{"c", k + 1}, {"M2", r.per_cutpoint[k]}, {"lod_2v1", r.per_cutpoint[k] - r.m1}});
  j["grid"] = r.grid_pos;
  j["lod1"] = jvec(r.lod1_curve);
  j["profiles"] = {{"left", jvec(r.profile_left)}, {"right", jvec(r.profile_right)}};
  j["traits"] = ordered_json::array();
  for (const auto& t : r.traits)
    j["traits"].push_back({{"id", t.id},
                           {"side", t.left ? "left" : "right"},
                           {"univariate_pos", t.univariate_pos},
                           {"univariate_lod", t.univariate_lod}});
  j["pvalue"] = r.pvalue ? ordered_json(*r.pvalue) : ordered_json();
  return j;
}

void cmd_dissect(const DissectCmd& c, const Global& g, std::ostream& out) {
  const Cross cross = load_data(c.data);
  const GenoProb gp = genoprob(cross, c.data, g.threads);
  const GenomicInterval iv = parse_interval(c.select.interval);
  const auto ids = choose_traits(cross, gp, iv, c.select, g.threads);
  if (ids.size() < 2) throw InputError("dissection needs at least two traits; found " + std::to_string(ids.size()));
  std::vector<Index> cols;
  for (const auto& id : ids) cols.push_back(cross.trait_index(id));
  const auto rows = complete_rows(cross, cols);
  const MatrixXd Y = cross.phenotypes(rows, cols);
  const auto problem = DissectionProblem::from_genoprob(gp, iv, rows, cross.covariates);
  const ProjectionBasis basis(problem);

  SearchOptions search;
  search.mode = parse_search_mode(c.mode);
  search.starts = c.starts;
  search.max_iterations = c.max_iterations;
  search.seed = g.seed;
  search.threads = g.threads;
  TwoVsOneResult result = dissect(basis, problem, Y, ids, search);

  ordered_json config = base_config("dissect", g);
  config["data"] = c.data.to_json();
  config["select"] = c.select.to_json();
  config["mode"] = c.mode;
  config["starts"] = c.starts;
  config["max_iterations"] = c.max_iterations;
  config["method"] = c.method;
  config["n_reps"] = c.n_reps;
  config["plus_one"] = c.plus_one;
  config["permute_covariates"] = c.permute_covariates;

  if (c.method != "none") {
    NullOptions nopts;
    nopts.n_reps = c.n_reps;
    nopts.seed = g.seed;
    nopts.threads = g.threads;
    nopts.permute_covariates = c.permute_covariates;
    const NullMethod method = parse_null_method(c.method);
    NullReplicateSet nulls;
    if (method == NullMethod::Bootstrap) {
      nulls = parametric_bootstrap(basis, problem, Y, ids, result.lambda_1qtl_index, search, nopts);
    } else {
      const auto all = impute_genotype(gp, problem.positions[result.lambda_1qtl_index]);
      std::vector<Genotype> strata;
      for (Index r : rows) strata.push_back(all[r]);
      nulls = stratified_permutation(basis, problem, Y, ids, strata, search, nopts);
    }
    result.pvalue = pvalue(result.lod_2v1, nulls, c.plus_one);
    ordered_json sig;
    sig["config"] = config;
    sig["method"] = std::string(to_string(nulls.method));
    sig["n_reps"] = nulls.n_reps;
    sig["seed"] = nulls.seed;
    sig["observed"] = result.lod_2v1;
    sig["pvalue"] = *result.pvalue;
    sig["null_stats"] = nulls.stats;
    write_file(g, "significance.json", json_text(sig), out);
  }

  ordered_json doc;
  doc["config"] = config;
  doc["interval"] = {{"chr", iv.chr}, {"lo", iv.lo}, {"hi", iv.hi}};
  doc["n_individuals"] = static_cast<Index>(rows.size());
  const ordered_json body = dissection_json(result);
  for (const auto& [k, v] : body.items()) doc[k] = v;
  write_file(g, "dissect.json", json_text(doc), out);
  out << "LOD_2v1 = " << num(result.lod_2v1) << " (c_hat = " << result.c_hat << ", lambda = " << num(result.lambda1)
      << ", " << num(result.lambda2) << ")";
  if (result.pvalue) out << ", p = " << num(*result.pvalue);
  out << "\n";
}

// --- lda ------------------------------------------------------------------

struct LdaCmd {
  DataOpts data;
  SelectOpts select;
  double ridge = 0.0;
  std::optional<double> lambda1, lambda2;
};

Index nearest_grid_point(const GenoProb& gp, const GenomicInterval& iv, double pos) {
  const auto idx = gp.grid.indices_in(iv.chr, iv.lo, iv.hi);
  if (idx.empty()) throw InputError("interval " + iv.chr + " contains no grid positions");
  Index best = idx.front();
  for (Index k : idx)
    if (std::abs(gp.grid.point(k).pos - pos) < std::abs(gp.grid.point(best).pos - pos)) best = k;
  return best;
}

void cmd_lda(const LdaCmd& c, const Global& g, std::ostream& out) {
  if (c.lambda1.has_value() != c.lambda2.has_value())
    throw InputError("--lambda1 and --lambda2 must be given together");
  const Cross cross = load_data(c.data);
  const GenoProb gp = genoprob(cross, c.data, g.threads);
  const GenomicInterval iv = parse_interval(c.select.interval);
  const auto ids = choose_traits(cross, gp, iv, c.select, g.threads);
  std::optional<std::pair<Index, Index>> lambdas;
  if (c.lambda1) lambdas = std::pair{nearest_grid_point(gp, iv, *c.lambda1), nearest_grid_point(gp, iv, *c.lambda2)};
  const auto diag = lda_diagnostic(cross, gp, iv, ids, c.ridge, lambdas);

  ordered_json config = base_config("lda", g);
  config["data"] = c.data.to_json();
  config["select"] = c.select.to_json();
  config["ridge"] = c.ridge;
  config["lambda1"] = c.lambda1 ? ordered_json(*c.lambda1) : ordered_json();
  config["lambda2"] = c.lambda2 ? ordered_json(*c.lambda2) : ordered_json();
  config["traits_used"] = ids;

  const auto& proj = diag.projection;
  std::string csv = csv_preamble(config) + "id,ld1,ld2,class,geno_l1,geno_l2\n";
  for (std::size_t i = 0; i < diag.individuals.size(); ++i) {
    csv += diag.individuals[i] + "," + num(proj.coords(i, 0)) + "," + num(proj.coords(i, 1)) + "," +
           std::string(to_string(proj.classes[i]));
    if (diag.labels) {
      csv += "," + std::string(to_string((*diag.labels)[i].first)) + "," +
             std::string(to_string((*diag.labels)[i].second));
    } else {
      csv += ",NA,NA";
    }
    csv += "\n";
  }
  write_file(g, "lda.csv", csv, out);
  out << ids.size() << " traits, " << diag.individuals.size() << " individuals\n";
}

// --- power ----------------------------------------------------------------

struct PowerCmd {
  std::vector<double> a{0.5};
  std::vector<double> distance{10.0};
  std::string split = "5:5";
  Index n_ind = 500;
  Index n_markers = 100;
  double chr_length = 100.0;
  double left_qtl = 50.0;
  Index n_reps = 100;
  Index null_reps = 1000;
  double alpha = 0.05;
  double step = 0.5;
  double error_rate = 0.002;
  std::string mode = "coordinate";
  int starts = 5;
  bool plus_one = false;
};

std::pair<Index, Index> parse_split(const std::string& text) {
  const auto colon = text.find(':');
  Index l = -1, r = -1;
  if (colon != std::string::npos) {
    const auto* b = text.data();
    auto e1 = std::from_chars(b, b + colon, l);
    auto e2 = std::from_chars(b + colon + 1, b + text.size(), r);
    if (e1.ec != std::errc() || e1.ptr != b + colon || e2.ec != std::errc() || e2.ptr != b + text.size()) l = -1;
  }
  if (l < 0 || r < 1) throw InputError("split must look like L:R with L >= 0 and R >= 1, got '" + text + "'");
  return {l, r};
}

void cmd_power(const PowerCmd& c, const Global& g, std::ostream& out) {
  const auto [left, right] = parse_split(c.split);
  ordered_json config = base_config("power", g);
  config["a"] = c.a;
  config["distance"] = c.distance;
  config["split"] = c.split;
  config["n_ind"] = c.n_ind;
  config["n_markers"] = c.n_markers;
  config["chr_length"] = c.chr_length;
  config["left_qtl"] = c.left_qtl;
  config["n_reps"] = c.n_reps;
  config["null_reps"] = c.null_reps;
  config["alpha"] = c.alpha;
  config["step"] = c.step;
  config["error_rate"] = c.error_rate;
  config["map_function"] = "haldane";
  config["mode"] = c.mode;
  config["starts"] = c.starts;
  config["plus_one"] = c.plus_one;

  std::string records = csv_preamble(config) +
                        "scenario_id,a,distance,p,split,rep,lod_2v1,pvalue,lambda1,lambda2,c_hat\n";
  std::string summary = csv_preamble(config) + "scenario_id,a,distance,p,split,n_reps,null_reps,power,std_error,null\n";
  for (double a : c.a)
    for (double d : c.distance) {
      PowerScenario s;
      s.id = "a" + num(a) + "_d" + num(d) + "_p" + std::to_string(left + right) + "_s" + std::to_string(left) + "-" +
             std::to_string(right);
      s.n_ind = c.n_ind;
      s.n_markers = c.n_markers;
      s.chr_length = c.chr_length;
      s.p = left + right;
      s.left_count = left;
      s.a = a;
      s.distance = d;
      s.left_qtl = c.left_qtl;
      s.n_reps = c.n_reps;
      s.null_reps = c.null_reps;
      s.seed = g.seed;
      s.alpha = c.alpha;
      s.plus_one = c.plus_one;
      s.hmm = {c.error_rate, MapFunction::Haldane, c.step};
      s.search.mode = parse_search_mode(c.mode);
      s.search.starts = c.starts;
      s.search.seed = g.seed;
      const auto res = run_power(s, g.threads);
      const std::string head = s.id + "," + num(a) + "," + num(d) + "," + std::to_string(s.p) + "," + s.split() + ",";
      for (const auto& r : res.records)
        records += head + std::to_string(r.rep) + "," + num(r.lod_2v1) + "," + num(r.pvalue) + "," + num(r.lambda1) +
                   "," + num(r.lambda2) + "," + std::to_string(r.c_hat) + "\n";
      summary += head + std::to_string(s.n_reps) + "," + std::to_string(s.null_reps) + "," + num(res.power) + "," +
                 num(res.std_error) + "," + (res.is_null() ? "true" : "false") + "\n";
      out << s.id << ": power " << num(res.power) << (res.is_null() ? " (null scenario)" : "") << "\n";
    }
  write_file(g, "power.csv", records, out);
  write_file(g, "power_summary.csv", summary, out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dissection of trans-eQTL hotspots in experimental crosses", "hotdissect"};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::Range(1, 1024));
  app.add_option("--out-dir", g.out_dir, "output directory");

  ScanCmd scan;
  auto* scan_cmd = app.add_subcommand("scan", "single-trait genome scans");
  add_data_options(scan_cmd, scan.data, true);
  scan_cmd->add_option("--lod-min", scan.lod_min, "report peaks with LOD >= this")->check(CLI::NonNegativeNumber);
  scan_cmd->add_option("--chr", scan.chromosomes, "chromosomes to scan")->delimiter(',');
  scan_cmd->add_flag("--curves", scan.curves, "also write full LOD curves");

  HotspotCmd hot;
  auto* hot_cmd = app.add_subcommand("hotspots", "sliding-window trans-eQTL counts and hotspot intervals");
  add_data_options(hot_cmd, hot.data, false);
  hot_cmd->add_option("--peaks", hot.peaks, "peaks JSON from the scan command");
  hot_cmd->add_option("--lod-min", hot.opts.lod_min, "LOD threshold")->check(CLI::NonNegativeNumber);
  hot_cmd->add_option("--window", hot.opts.window, "window width in cM")->check(CLI::PositiveNumber);
  hot_cmd->add_option("--local-exclusion", hot.opts.local_exclusion, "cM within which a peak counts as local")
      ->check(CLI::NonNegativeNumber);
  hot_cmd->add_option("--count-min", hot.opts.count_min, "counts must exceed this")->check(CLI::NonNegativeNumber);
  hot_cmd->add_option("--pad", hot.opts.pad, "cM added on each side")->check(CLI::NonNegativeNumber);

  DissectCmd dis;
  auto* dis_cmd = app.add_subcommand("dissect", "one versus two QTL test on an interval");
  add_data_options(dis_cmd, dis.data, true);
  add_select_options(dis_cmd, dis.select, 50);
  dis_cmd->add_option("--mode", dis.mode, "2D search: coordinate or exhaustive")
      ->check(CLI::IsMember({"coordinate", "exhaustive"}));
  dis_cmd->add_option("--starts", dis.starts, "coordinate-ascent starts")->check(CLI::Range(1, 10000));
  dis_cmd->add_option("--max-iterations", dis.max_iterations, "coordinate-ascent iteration cap")
      ->check(CLI::Range(1, 10000));
  dis_cmd->add_option("--method", dis.method, "significance: none, bootstrap or permutation")
      ->check(CLI::IsMember({"none", "bootstrap", "permutation"}));
  dis_cmd->add_option("--n-reps", dis.n_reps, "significance replicates")->check(CLI::Range(Index{1}, Index{10000000}));
  dis_cmd->add_flag("--plus-one", dis.plus_one, "report (r + 1) / (N + 1)");
  dis_cmd->add_flag("--permute-covariates", dis.permute_covariates, "permute covariate rows with phenotypes");

  LdaCmd lda;
  auto* lda_cmd = app.add_subcommand("lda", "discriminant scatter of recombinants versus non-recombinants");
  add_data_options(lda_cmd, lda.data, true);
  add_select_options(lda_cmd, lda.select, 100);
  lda_cmd->add_option("--ridge", lda.ridge, "ridge added to the within-class covariance")
      ->check(CLI::NonNegativeNumber);
  lda_cmd->add_option("--lambda1", lda.lambda1, "left QTL position (cM) for two-locus labels");
  lda_cmd->add_option("--lambda2", lda.lambda2, "right QTL position (cM) for two-locus labels");

  PowerCmd pow;
  auto* pow_cmd = app.add_subcommand("power", "simulation study of the one versus two QTL test");
  pow_cmd->add_option("--a", pow.a, "additive effects")->delimiter(',');
  pow_cmd->add_option("--distance", pow.distance, "QTL distances in cM")->delimiter(',')->check(CLI::NonNegativeNumber);
  pow_cmd->add_option("--split", pow.split, "traits on left:right QTL");
  pow_cmd->add_option("--n-ind", pow.n_ind, "individuals")->check(CLI::Range(Index{10}, Index{1000000}));
  pow_cmd->add_option("--n-markers", pow.n_markers, "markers")->check(CLI::Range(Index{2}, Index{100000}));
  pow_cmd->add_option("--chr-length", pow.chr_length, "chromosome length in cM")->check(CLI::PositiveNumber);
  pow_cmd->add_option("--left-qtl", pow.left_qtl, "left QTL position in cM")->check(CLI::NonNegativeNumber);
  pow_cmd->add_option("--n-reps", pow.n_reps, "simulation replicates")->check(CLI::Range(Index{1}, Index{1000000}));
  pow_cmd->add_option("--null-reps", pow.null_reps, "bootstrap replicates")
      ->check(CLI::Range(Index{1}, Index{1000000}));
  pow_cmd->add_option("--alpha", pow.alpha, "nominal level")->check(CLI::Range(1e-9, 0.999999));
  pow_cmd->add_option("--step", pow.step, "pseudomarker spacing in cM")->check(CLI::Range(1e-3, 100.0));
  pow_cmd->add_option("--error-rate", pow.error_rate, "genotyping error rate")->check(CLI::Range(0.0, 0.4999));
  pow_cmd->add_option("--mode", pow.mode, "2D search: coordinate or exhaustive")
      ->check(CLI::IsMember({"coordinate", "exhaustive"}));
  pow_cmd->add_option("--starts", pow.starts, "coordinate-ascent starts")->check(CLI::Range(1, 10000));
  pow_cmd->add_flag("--plus-one", pow.plus_one, "report (r + 1) / (N + 1)");

  std::vector<std::string> argv_store = args;
  if (argv_store.empty()) argv_store.push_back("hotdissect");
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  auto previous = set_warning_sink([&err](const std::string& msg) { err << "warning: " << msg << "\n"; });
  struct Restore {
    WarningSink sink;
    ~Restore() { set_warning_sink(std::move(sink)); }
  } restore{std::move(previous)};

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (*scan_cmd) cmd_scan(scan, g, out);
    else if (*hot_cmd) cmd_hotspots(hot, g, out);
    else if (*dis_cmd) cmd_dissect(dis, g, out);
    else if (*lda_cmd) cmd_lda(lda, g, out);
    else if (*pow_cmd) cmd_power(pow, g, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ComputeError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace hotdissect::cli
