#pragma once

#include "hotdissect/scan.hpp"

#include <string>
#include <unordered_map>
#include <vector>

namespace hotdissect {

struct HotspotOptions {
  double lod_min = 10.0;
  double window = 10.0;           // cM, full width of the sliding window
  double local_exclusion = 10.0;  // cM
  int count_min = 50;             // counts must exceed this
  double pad = 5.0;               // cM added on each side
};

/// Number of trans-eQTL within window/2 of each grid position on one chromosome.
struct CountCurve {
  std::string chr;
  std::vector<double> pos;
  std::vector<int> count;
};

using TraitMetaIndex = std::unordered_map<std::string, TraitInfo>;

TraitMetaIndex index_trait_meta(const std::vector<TraitInfo>& meta);

/// A peak is local when its trait sits on the same chromosome within
/// `local_exclusion` cM. Traits without a known position are never local.
bool is_local(const PeakRecord& peak, const TraitMetaIndex& meta, double local_exclusion);

std::vector<CountCurve> count_trans_eqtl(const std::vector<PeakRecord>& peaks, const TraitMetaIndex& meta,
                                         const Grid& grid, const HotspotOptions& opts = {});

struct HotspotTrait {
  std::string id;
  double lod = 0.0;
  double pos = 0.0;
};

struct HotspotInterval {
  std::string chr;
  double center = 0.0;  // position of the highest count (leftmost on ties)
  int peak_count = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<HotspotTrait> traits;  // descending lod, then id
  CountCurve counts;                 // the whole chromosome's curve

  GenomicInterval interval() const { return {chr, lo, hi}; }
};

/// One hotspot per maximal run of positions with count > count_min, padded
/// and clipped to the chromosome ends, ordered by chromosome then position.
/// An empty result means "no hotspot".
std::vector<HotspotInterval> define_hotspots(const std::vector<CountCurve>& counts,
                                             const std::vector<PeakRecord>& peaks, const TraitMetaIndex& meta,
                                             const HotspotOptions& opts = {});

/// First min(k, size) trait ids by descending lod (ties by id). With
/// `exclude_same_chr`, traits annotated on the hotspot's chromosome are skipped.
std::vector<std::string> select_top_traits(const HotspotInterval& h, const TraitMetaIndex& meta, Index k,
                                           bool exclude_same_chr = false);

}  // namespace hotdissect
