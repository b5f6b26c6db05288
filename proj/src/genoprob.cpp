#include "hotdissect/genoprob.hpp"

#include "csv.hpp"
#include "hotdissect/parallel.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <set>

namespace hotdissect {

static_assert(std::endian::native == std::endian::little, "cache format assumes a little-endian host");

std::string_view to_string(MapFunction f) {
  return f == MapFunction::Haldane ? "haldane" : "carter_falconer";
}

MapFunction parse_map_function(std::string_view name) {
  if (name == "haldane") return MapFunction::Haldane;
  if (name == "carter_falconer" || name == "carter-falconer") return MapFunction::CarterFalconer;
  throw InputError("unknown map function '" + std::string(name) + "'");
}

void HmmConfig::validate() const {
  if (!(error_rate >= 0.0 && error_rate < 0.5)) throw InputError("error rate must lie in [0, 0.5)");
  if (!(step > 0.0)) throw InputError("grid step must be positive");
}

double map_to_recfrac(double d_cM, MapFunction f) {
  if (!(d_cM >= 0.0)) throw InputError("genetic distance must be non-negative");
  if (d_cM == 0.0) return 0.0;
  if (f == MapFunction::Haldane) return haldane_recfrac(d_cM);
  const double target = d_cM / 100.0;
  double lo = 0.0, hi = 0.5;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double m = carter_falconer_distance(mid);
    if (std::abs(m - target) < 1e-12) return mid;
    (m < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Index Grid::size() const {
  Index n = 0;
  for (const auto& c : chromosomes) n += c.size();
  return n;
}

const GridChromosome& Grid::chromosome_of(Index global) const {
  for (const auto& c : chromosomes)
    if (global >= c.offset && global < c.offset + c.size()) return c;
  throw InputError("grid index out of range");
}

const GridPoint& Grid::point(Index global) const {
  const auto& c = chromosome_of(global);
  return c.points[static_cast<std::size_t>(global - c.offset)];
}

Index Grid::find_chromosome(std::string_view name) const {
  for (std::size_t i = 0; i < chromosomes.size(); ++i)
    if (chromosomes[i].name == name) return static_cast<Index>(i);
  return -1;
}

std::vector<Index> Grid::indices_in(std::string_view chr, double lo, double hi) const {
  std::vector<Index> out;
  const Index c = find_chromosome(chr);
  if (c < 0) return out;
  const auto& gc = chromosomes[c];
  for (Index k = 0; k < gc.size(); ++k) {
    const double p = gc.points[k].pos;
    if (p >= lo && p <= hi) out.push_back(gc.offset + k);
  }
  return out;
}

namespace {

std::string format_pos(double pos) {
  char buf[64];
  const double rounded = std::round(pos * 1e4) / 1e4;
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, rounded, std::chars_format::fixed, 4);
  std::string s(buf, ptr);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

}  // namespace

Grid insert_pseudomarkers(const GeneticMap& map, double step) {
  if (!(step > 0.0)) throw InputError("grid step must be positive");
  Grid grid;
  Index offset = 0;
  Index marker_col = 0;
  for (const auto& chr : map.chromosomes) {
    GridChromosome gc{chr.name, offset, {}};
    for (std::size_t i = 0; i < chr.markers.size(); ++i) {
      if (i > 0) {
        const double left = chr.markers[i - 1].pos;
        const double gap = chr.markers[i].pos - left;
        const auto pieces = static_cast<long>(std::ceil(gap / step - 1e-9));
        for (long k = 1; k < pieces; ++k) {
          const double pos = left + gap * static_cast<double>(k) / static_cast<double>(pieces);
          gc.points.push_back({"c" + chr.name + ".loc" + format_pos(pos), pos, -1});
        }
      }
      gc.points.push_back({chr.markers[i].id, chr.markers[i].pos, marker_col++});
    }
    offset += gc.size();
    grid.chromosomes.push_back(std::move(gc));
  }
  return grid;
}

namespace {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

Mat3 f2_transition(double r) {
  const double s = 1.0 - r;
  Mat3 t;
  t << s * s, 2 * r * s, r * r,
       r * s, s * s + r * r, r * s,
       r * r, 2 * r * s, s * s;
  return t;
}

Vec3 emission(std::int8_t obs, double eps) {
  if (obs < 0) return Vec3::Ones();
  Vec3 e = Vec3::Constant(eps / 2.0);
  e[obs] = 1.0 - eps;
  return e;
}

void normalize_or_reset(Vec3& v, const Vec3& fallback) {
  const double s = v.sum();
  if (s > 0.0 && std::isfinite(s)) {
    v /= s;
  } else {
    v = fallback / fallback.sum();
  }
}

}  // namespace

GenoProb calc_genoprob(const Cross& cross, const HmmConfig& cfg, int threads) {
  cfg.validate();
  GenoProb gp;
  gp.grid = insert_pseudomarkers(cross.map, cfg.step);
  const Index n = cross.n_individuals();
  gp.probs.assign(static_cast<std::size_t>(gp.grid.size()), ProbMatrix(n, 3));

  const Vec3 prior(0.25, 0.5, 0.25);
  for (const auto& chr : gp.grid.chromosomes) {
    const Index k_len = chr.size();
    std::vector<Mat3> trans(static_cast<std::size_t>(k_len));
    for (Index k = 1; k < k_len; ++k)
      trans[k] = f2_transition(map_to_recfrac(chr.points[k].pos - chr.points[k - 1].pos, cfg.map_function));

    parallel_for(n, threads, [&](std::int64_t i) {
      std::vector<Vec3> alpha(static_cast<std::size_t>(k_len)), beta(static_cast<std::size_t>(k_len)),
          emit(static_cast<std::size_t>(k_len));
      for (Index k = 0; k < k_len; ++k) {
        const auto& pt = chr.points[k];
        emit[k] = pt.is_marker() ? emission(cross.genotypes(i, pt.marker), cfg.error_rate) : Vec3::Ones();
      }
      alpha[0] = prior.cwiseProduct(emit[0]);
      normalize_or_reset(alpha[0], prior);
      for (Index k = 1; k < k_len; ++k) {
        alpha[k] = (trans[k].transpose() * alpha[k - 1]).cwiseProduct(emit[k]);
        normalize_or_reset(alpha[k], trans[k].transpose() * alpha[k - 1]);
      }
      beta[k_len - 1] = Vec3::Ones();
      for (Index k = k_len - 2; k >= 0; --k) {
        beta[k] = trans[k + 1] * emit[k + 1].cwiseProduct(beta[k + 1]);
        normalize_or_reset(beta[k], Vec3::Ones());
      }
      for (Index k = 0; k < k_len; ++k) {
        Vec3 post = alpha[k].cwiseProduct(beta[k]);
        normalize_or_reset(post, alpha[k]);
        gp.probs[chr.offset + k].row(i) = post.transpose();
      }
    });
  }
  return gp;
}

std::vector<Genotype> impute_genotype(const GenoProb& gp, Index position) {
  if (position < 0 || position >= gp.n_positions()) throw InputError("grid position out of range");
  const auto& p = gp.probs[position];
  std::vector<Genotype> out(static_cast<std::size_t>(p.rows()));
  for (Index i = 0; i < p.rows(); ++i) {
    Index best = 0;
    for (Index g = 1; g < 3; ++g)
      if (p(i, g) > p(i, best)) best = g;
    out[i] = static_cast<Genotype>(best);
  }
  return out;
}

GenomicInterval parse_interval(std::string_view text) {
  const auto colon = text.rfind(':');
  const auto bad = [&] { return InputError("interval must look like chr:lo-hi, got '" + std::string(text) + "'"); };
  if (colon == std::string_view::npos || colon == 0) throw bad();
  const auto range = text.substr(colon + 1);
  const auto dash = range.find('-', 1);
  if (dash == std::string_view::npos) throw bad();
  GenomicInterval iv{std::string(text.substr(0, colon)), 0, 0};
  if (!detail::parse_real(range.substr(0, dash), iv.lo) || !detail::parse_real(range.substr(dash + 1), iv.hi) ||
      is_missing(iv.lo) || is_missing(iv.hi))
    throw bad();
  if (!(iv.lo <= iv.hi)) throw bad();
  return iv;
}

std::vector<RecombinantCall> classify_recombinants(const Cross& cross, const GenoProb& gp,
                                                   const GenomicInterval& interval) {
  const auto idx = gp.grid.indices_in(interval.chr, interval.lo, interval.hi);
  if (idx.empty()) throw InputError("interval " + interval.chr + " contains no grid positions");
  std::vector<Index> markers;
  for (auto k : idx)
    if (gp.grid.point(k).is_marker()) markers.push_back(gp.grid.point(k).marker);
  if (markers.empty()) throw InputError("interval contains no genotyped marker");

  const auto left = impute_genotype(gp, idx.front());
  const auto right = impute_genotype(gp, idx.back());
  std::vector<RecombinantCall> out(static_cast<std::size_t>(cross.n_individuals()));
  for (Index i = 0; i < cross.n_individuals(); ++i) {
    std::set<std::int8_t> seen;
    int observed = 0;
    for (auto m : markers) {
      const auto g = cross.genotypes(i, m);
      if (g < 0) continue;
      ++observed;
      seen.insert(g);
    }
    auto& call = out[i];
    if (seen.size() >= 2) {
      call.recombinant = true;
    } else if (observed >= 2) {
      call.genotype = static_cast<Genotype>(*seen.begin());
    } else if (left[i] != right[i]) {
      call.recombinant = true;
    } else {
      call.genotype = left[i];
    }
  }
  return out;
}

GenoProbCacheKey cache_key(const Cross& cross, const HmmConfig& cfg) {
  GenoProbCacheKey key{cfg, cross.individuals, {}};
  for (const auto& c : cross.map.chromosomes)
    for (const auto& m : c.markers) key.markers.push_back(c.name + ":" + m.id + "@" + format_pos(m.pos));
  return key;
}

namespace {

using nlohmann::ordered_json;

ordered_json key_json(const GenoProbCacheKey& key) {
  return {{"error_rate", key.config.error_rate},
          {"map_function", to_string(key.config.map_function)},
          {"step", key.config.step},
          {"individuals", key.individuals},
          {"markers", key.markers}};
}

constexpr char kMagic[5] = {'G', 'P', 'R', 'B', '1'};

}  // namespace

void save_genoprob_cache(const std::filesystem::path& path, const GenoProb& gp, const GenoProbCacheKey& key) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  const std::array<std::uint64_t, 3> dims{static_cast<std::uint64_t>(gp.n_individuals()),
                                          static_cast<std::uint64_t>(gp.n_positions()), 3};
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(dims.data()), sizeof(std::uint64_t) * dims.size());
  std::vector<double> row(static_cast<std::size_t>(gp.n_positions()) * 3);
  for (Index i = 0; i < gp.n_individuals(); ++i) {
    for (Index k = 0; k < gp.n_positions(); ++k)
      for (Index g = 0; g < 3; ++g) row[static_cast<std::size_t>(k * 3 + g)] = gp.probs[k](i, g);
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (!out) throw InputError("failed writing " + path.string());

  ordered_json side{{"format", "GPRB1"}, {"key", key_json(key)}};
  ordered_json grid = ordered_json::array();
  for (const auto& c : gp.grid.chromosomes) {
    ordered_json pts = ordered_json::array();
    for (const auto& p : c.points) pts.push_back({{"id", p.id}, {"pos", p.pos}, {"marker", p.marker}});
    grid.push_back({{"chr", c.name}, {"points", pts}});
  }
  side["grid"] = grid;
  std::ofstream js(path.string() + ".json");
  js << side.dump(1) << '\n';
}

std::optional<GenoProb> load_genoprob_cache(const std::filesystem::path& path, const GenoProbCacheKey& key) {
  std::ifstream js(path.string() + ".json");
  std::ifstream in(path, std::ios::binary);
  if (!js || !in) return std::nullopt;
  ordered_json side;
  try {
    side = ordered_json::parse(js);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (side.value("format", "") != "GPRB1" || side["key"] != key_json(key)) return std::nullopt;

  char magic[5];
  std::array<std::uint64_t, 3> dims{};
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(dims.data()), sizeof(std::uint64_t) * dims.size());
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0 || dims[2] != 3) return std::nullopt;

  GenoProb gp;
  Index offset = 0;
  for (const auto& c : side["grid"]) {
    GridChromosome gc{c["chr"].get<std::string>(), offset, {}};
    for (const auto& p : c["points"])
      gc.points.push_back({p["id"].get<std::string>(), p["pos"].get<double>(), p["marker"].get<Index>()});
    offset += gc.size();
    gp.grid.chromosomes.push_back(std::move(gc));
  }
  const auto n = static_cast<Index>(dims[0]);
  const auto m = static_cast<Index>(dims[1]);
  if (m != gp.grid.size() || n != static_cast<Index>(key.individuals.size())) return std::nullopt;
  gp.probs.assign(static_cast<std::size_t>(m), ProbMatrix(n, 3));
  std::vector<double> row(static_cast<std::size_t>(m) * 3);
  for (Index i = 0; i < n; ++i) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (!in) return std::nullopt;
    for (Index k = 0; k < m; ++k)
      for (Index g = 0; g < 3; ++g) gp.probs[k](i, g) = row[static_cast<std::size_t>(k * 3 + g)];
  }
  return gp;
}

}  // namespace hotdissect
