#include "hotdissect/hotspot.hpp"

#include <algorithm>
#include <cmath>

namespace hotdissect {

TraitMetaIndex index_trait_meta(const std::vector<TraitInfo>& meta) {
  TraitMetaIndex idx;
  for (const auto& m : meta) idx.emplace(m.id, m);
  return idx;
}

bool is_local(const PeakRecord& peak, const TraitMetaIndex& meta, double local_exclusion) {
  auto it = meta.find(peak.trait);
  if (it == meta.end() || !it->second.chr || !it->second.pos) return false;
  return *it->second.chr == peak.chr && std::abs(*it->second.pos - peak.pos) < local_exclusion;
}

namespace {

bool qualifies(const PeakRecord& p, const TraitMetaIndex& meta, const HotspotOptions& opts) {
  return p.lod >= opts.lod_min && !is_local(p, meta, opts.local_exclusion);
}

}  // namespace

std::vector<CountCurve> count_trans_eqtl(const std::vector<PeakRecord>& peaks, const TraitMetaIndex& meta,
                                         const Grid& grid, const HotspotOptions& opts) {
  std::vector<CountCurve> out;
  const double half = opts.window / 2.0;
  for (const auto& gc : grid.chromosomes) {
    CountCurve cc{gc.name, {}, {}};
    std::vector<double> hits;
    for (const auto& p : peaks)
      if (p.chr == gc.name && qualifies(p, meta, opts)) hits.push_back(p.pos);
    std::sort(hits.begin(), hits.end());
    for (const auto& pt : gc.points) {
      const auto lo = std::lower_bound(hits.begin(), hits.end(), pt.pos - half);
      const auto hi = std::upper_bound(hits.begin(), hits.end(), pt.pos + half);
      cc.pos.push_back(pt.pos);
      cc.count.push_back(static_cast<int>(hi - lo));
    }
    out.push_back(std::move(cc));
  }
  return out;
}

std::vector<HotspotInterval> define_hotspots(const std::vector<CountCurve>& counts,
                                             const std::vector<PeakRecord>& peaks, const TraitMetaIndex& meta,
                                             const HotspotOptions& opts) {
  std::vector<HotspotInterval> out;
  for (const auto& cc : counts) {
    if (cc.pos.empty()) continue;
    const double chr_lo = cc.pos.front();
    const double chr_hi = cc.pos.back();
    const std::size_t m = cc.count.size();
    for (std::size_t k = 0; k < m;) {
      if (cc.count[k] <= opts.count_min) {
        ++k;
        continue;
      }
      std::size_t end = k;
      std::size_t top = k;
      while (end + 1 < m && cc.count[end + 1] > opts.count_min) {
        ++end;
        if (cc.count[end] > cc.count[top]) top = end;
      }
      HotspotInterval h;
      h.chr = cc.chr;
      h.center = cc.pos[top];
      h.peak_count = cc.count[top];
      h.lo = std::max(chr_lo, cc.pos[k] - opts.pad);
      h.hi = std::min(chr_hi, cc.pos[end] + opts.pad);
      h.counts = cc;
      for (const auto& p : peaks)
        if (p.chr == h.chr && p.pos >= h.lo && p.pos <= h.hi && qualifies(p, meta, opts))
          h.traits.push_back({p.trait, p.lod, p.pos});
      std::sort(h.traits.begin(), h.traits.end(), [](const HotspotTrait& a, const HotspotTrait& b) {
        return a.lod != b.lod ? a.lod > b.lod : a.id < b.id;
      });
      out.push_back(std::move(h));
      k = end + 1;
    }
  }
  return out;
}

std::vector<std::string> select_top_traits(const HotspotInterval& h, const TraitMetaIndex& meta, Index k,
                                           bool exclude_same_chr) {
  if (k < 1) throw InputError("number of traits to select must be at least 1");
  if (h.traits.empty()) throw InputError("hotspot on chromosome " + h.chr + " has no traits");
  auto sorted = h.traits;
  std::stable_sort(sorted.begin(), sorted.end(), [](const HotspotTrait& a, const HotspotTrait& b) {
    return a.lod != b.lod ? a.lod > b.lod : a.id < b.id;
  });
  std::vector<std::string> out;
  for (const auto& t : sorted) {
    if (static_cast<Index>(out.size()) >= k) break;
    if (exclude_same_chr) {
      auto it = meta.find(t.id);
      if (it != meta.end() && it->second.chr && *it->second.chr == h.chr) continue;
    }
    out.push_back(t.id);
  }
  if (out.empty()) throw InputError("no traits left after excluding those on chromosome " + h.chr);
  return out;
}

}  // namespace hotdissect
