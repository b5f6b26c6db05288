#include <doctest.h>

#include "hotdissect/scan.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <numeric>

using namespace hotdissect;

namespace {

struct Sim {
  Cross cross;
  GenoProb gp;
};

Sim simulate(Index n, std::vector<Index> qtl, double a, std::uint64_t seed, double step = 2.0) {
  Sim s;
  s.cross = testsupport::simulated_cross(n, testsupport::multi_chr_map(2, 26, 100.0), qtl, a, seed);
  s.gp = calc_genoprob(s.cross, {0.002, MapFunction::Haldane, step});
  return s;
}

}  // namespace

TEST_CASE("scan1 LOD equals a direct least-squares oracle at every position") {
  auto s = simulate(150, {10, -1}, 0.6, 21);
  for (Index t = 0; t < 2; ++t) {
    const auto scan = scan1(s.cross.phenotypes.col(t), s.gp, s.cross.covariates);
    for (std::size_t c = 0; c < scan.chromosomes.size(); ++c) {
      const auto& gc = s.gp.grid.chromosomes[c];
      for (Index j = 0; j < gc.size(); ++j) {
        const double expect = oracle::univariate_lod(s.cross.phenotypes.col(t), oracle::hk_design(s.gp.probs[gc.offset + j]));
        CHECK(std::abs(scan.curves[c](j) - std::max(0.0, expect)) < 1e-8);
      }
      CHECK(scan.peaks[c].lod == scan.curves[c].maxCoeff());
    }
  }
}

TEST_CASE("scan1 peaks: leftmost argmax, signed LOD and effects") {
  auto s = simulate(300, {10}, 1.0, 4);
  const auto scan = scan1(s.cross.phenotypes.col(0), s.gp, s.cross.covariates);
  const auto& pk = scan.peaks[0];
  Index arg = 0;
  for (Index j = 1; j < scan.curves[0].size(); ++j)
    if (scan.curves[0](j) > scan.curves[0](arg)) arg = j;
  CHECK(pk.position == arg);
  CHECK(std::abs(pk.pos - 40.0) <= 5.0);
  REQUIRE(pk.effects);
  CHECK(pk.effects->a > 0.0);
  CHECK(std::abs(pk.signed_lod) == pk.lod);
  CHECK(scan.best().lod == pk.lod);
}

// The direct least-squares oracle localises the same simulations at the
// same rate (about 0.90 over 1000 runs), so the bound is 85.
TEST_CASE("planted QTL (a = 1, n = 100) is located within 5 cM in most replicates") {
  int hits = 0;
  const auto map = testsupport::multi_chr_map(1, 51, 100.0);
  for (int rep = 0; rep < 100; ++rep) {
    Cross c = testsupport::simulated_cross(100, map, {30}, 1.0, 1000 + rep);
    const auto gp = calc_genoprob(c, {0.002, MapFunction::Haldane, 2.0});
    const auto scan = scan1(c.phenotypes.col(0), gp, c.covariates);
    if (std::abs(scan.peaks[0].pos - 60.0) <= 5.0) ++hits;
  }
  CHECK(hits >= 85);
}

TEST_CASE("null traits give small LODs at n = 500") {
  auto s = simulate(500, std::vector<Index>(20, -1), 0.0, 8);
  Index below = 0, total = 0;
  for (Index t = 0; t < 20; ++t) {
    const auto scan = scan1(s.cross.phenotypes.col(t), s.gp, s.cross.covariates);
    for (const auto& c : scan.curves) {
      below += (c.array() < 2.0).count();
      total += c.size();
    }
  }
  // Pointwise P(LOD >= 2) is about 0.01 for two degrees of freedom.
  CHECK(static_cast<double>(below) / static_cast<double>(total) >= 0.97);
}

TEST_CASE("perfect fit floors the RSS and stays finite") {
  auto s = simulate(60, {-1}, 0.0, 2);
  const auto& probs = s.gp.probs[5];
  const VectorXd y = probs.col(2) - probs.col(0);
  const auto scan = scan1(y, s.gp, s.cross.covariates);
  CHECK(std::isfinite(scan.curves[0](5)));
  CHECK(scan.curves[0](5) > 100.0);
}

TEST_CASE("LOD is invariant to affine transforms of the trait") {
  auto s = simulate(120, {20}, 0.5, 9);
  const VectorXd y = s.cross.phenotypes.col(0);
  const auto a = scan1(y, s.gp, s.cross.covariates);
  const VectorXd z = (-3.5 * y).array() + 12.0;
  const auto b = scan1(z, s.gp, s.cross.covariates);
  for (std::size_t c = 0; c < a.curves.size(); ++c) CHECK((a.curves[c] - b.curves[c]).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("R-squared identity at a fully informative marker without covariates") {
  auto s = simulate(200, {12}, 0.4, 10);
  HmmConfig cfg{0.0, MapFunction::Haldane, 2.0};
  const auto gp = calc_genoprob(s.cross, cfg);
  const VectorXd y = s.cross.phenotypes.col(0);
  const auto scan = scan1(y, gp, s.cross.covariates);
  Index k = 0;
  while (gp.grid.point(k).marker != 12) ++k;
  const MatrixXd X = oracle::hk_design(gp.probs[k]);
  const double tss = (y.array() - y.mean()).matrix().squaredNorm();
  const double r2 = 1.0 - oracle::rss(y, X) / tss;
  CHECK(std::abs(scan.curves[0](k) - 100.0 * std::log10(1.0 / (1.0 - r2))) < 1e-8);
}

TEST_CASE("covariates: interactive terms can only improve the full fit and missing rows are dropped") {
  auto s = simulate(150, {8}, 0.5, 12);
  std::mt19937_64 rng(1);
  std::bernoulli_distribution coin(0.5);
  CovariateSet cov = CovariateSet::none(150);
  cov.interactive.resize(150, 1);
  for (Index i = 0; i < 150; ++i) cov.interactive(i, 0) = coin(rng) ? 1.0 : 0.0;
  cov.interactive_names = {"sex"};
  const VectorXd y = s.cross.phenotypes.col(0);
  // Same null for both fits, so a larger full-model fit means a larger LOD.
  const auto plain = scan1(y, s.gp, s.cross.covariates);
  const auto inter = scan1(y, s.gp, cov);
  for (std::size_t c = 0; c < plain.curves.size(); ++c)
    CHECK((inter.curves[c] - plain.curves[c]).minCoeff() >= -1e-8);

  VectorXd with_na = y;
  with_na[3] = kMissing;
  with_na[77] = kMissing;
  const auto dropped = scan1(with_na, s.gp, s.cross.covariates);
  CHECK(dropped.n_used == 148);
  VectorXd all_na = VectorXd::Constant(150, kMissing);
  CHECK_THROWS_AS(scan1(all_na, s.gp, s.cross.covariates), InputError);
}

TEST_CASE("estimate_effects and signed_lod arithmetic") {
  const auto e1 = EffectEstimate::from_means(0, 1, 2);
  CHECK(e1.a == 1.0);
  CHECK(e1.d == 0.0);
  const auto e2 = EffectEstimate::from_means(0, 2, 2);
  CHECK(e2.a == 1.0);
  CHECK(e2.d == 1.0);
  const auto e3 = EffectEstimate::from_means(0, 0, 2);
  CHECK(e3.a == 1.0);
  CHECK(e3.d == -1.0);
  CHECK(signed_lod(12.0, -0.3) == -12.0);
  CHECK(signed_lod(7.0, 0.3) == 7.0);
  CHECK(signed_lod(5.0, 0.0) == 5.0);

  GenoProb gp;
  gp.grid.chromosomes.push_back({"1", 0, {{"m1", 0.0, 0}}});
  ProbMatrix p(4, 3);
  p << 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 1;
  gp.probs.push_back(p);
  VectorXd y(4);
  y << 1, 2, 3, 5;
  const auto est = estimate_effects(y, gp, 0);
  CHECK(est.mu_bb == 1.0);
  CHECK(est.mu_br == 2.0);
  CHECK(est.mu_rr == 4.0);
  CHECK(est.a == 1.5);
  CHECK(est.d == doctest::Approx(-0.5));
  ProbMatrix q(2, 3);
  q << 1, 0, 0, 0, 0, 1;
  gp.probs[0] = q;
  VectorXd y2(2);
  y2 << 1, 2;
  CHECK_THROWS_AS(estimate_effects(y2, gp, 0), ComputeError);
}

TEST_CASE("scan_all filtering and ordering") {
  auto s = simulate(500, {-1, 30}, 1.0, 13);
  s.cross.trait_ids = {"zeta", "alpha"};
  const auto none = scan_all(s.cross, s.gp, std::numeric_limits<double>::infinity());
  CHECK(none.empty());
  const auto all = scan_all(s.cross, s.gp, 0.0);
  REQUIRE(all.size() == 4);  // 2 traits x 2 chromosomes
  CHECK(all[0].trait == "alpha");
  CHECK(all[3].trait == "zeta");
  const auto strong = scan_all(s.cross, s.gp, 5.0, {}, 2);
  REQUIRE(strong.size() == 1);
  CHECK(strong[0].trait == "alpha");
  CHECK(strong[0].chr == "2");
}

TEST_CASE("scan_all does not depend on the thread count") {
  auto s = simulate(80, {3, 30, -1, 40}, 0.5, 14);
  s.cross.phenotypes(5, 1) = kMissing;
  const auto a = scan_all(s.cross, s.gp, 0.0, {}, 1);
  const auto b = scan_all(s.cross, s.gp, 0.0, {}, 3);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].trait == b[k].trait);
    CHECK(a[k].lod == b[k].lod);
    CHECK(a[k].pos == b[k].pos);
  }
}
