#include <doctest.h>

#include "oracles.hpp"
#include "support.hpp"

#include <algorithm>

using namespace hotdissect;
using testsupport::TempDir;
using testsupport::write_text;

namespace {

struct Toy {
  TempDir dir;
  CrossFiles files;

  Toy() {
    files = {dir / "geno.csv", dir / "map.csv", dir / "pheno.csv", std::nullopt, std::nullopt};
    write_text(files.map, "marker,chr,pos_cM\nm1,1,0\nm2,1,10\n");
    write_text(files.geno, "id,m2,m1\nA,BB,BR\nB,RR,NA\nC,BR,BB\n");
    write_text(files.pheno, "id,t1,t2\nA,1.5,NA\nB,2,3\nC,-1,4\n");
  }
};

std::vector<std::string> capture_warnings(const std::function<void()>& fn) {
  std::vector<std::string> seen;
  auto prev = set_warning_sink([&](const std::string& m) { seen.push_back(m); });
  try {
    fn();
  } catch (...) {
    set_warning_sink(prev);
    throw;
  }
  set_warning_sink(prev);
  return seen;
}

}  // namespace

TEST_CASE("load_cross reads the toy files into map order") {
  Toy toy;
  const Cross c = load_cross(toy.files);
  REQUIRE(c.n_individuals() == 3);
  REQUIRE(c.genotypes.rows() == 3);
  REQUIRE(c.genotypes.cols() == 2);
  CHECK(c.map.chromosomes.size() == 1);
  CHECK(c.map.chromosomes[0].markers[0].id == "m1");
  CHECK(c.genotypes(0, 0) == static_cast<std::int8_t>(Genotype::BR));
  CHECK(c.genotypes(0, 1) == static_cast<std::int8_t>(Genotype::BB));
  CHECK(c.genotypes(1, 0) == static_cast<std::int8_t>(Genotype::Missing));
  CHECK(c.individuals == std::vector<std::string>{"A", "B", "C"});
  CHECK(is_missing(c.phenotypes(0, 1)));
  CHECK(c.phenotypes(2, 0) == -1.0);
  CHECK(c.covariates.additive.rows() == 3);
}

TEST_CASE("map positions must not decrease within a chromosome") {
  TempDir dir;
  write_text(dir / "map.csv", "marker,chr,pos_cM\na,1,5.0\nb,1,3.0\n");
  try {
    load_map(dir / "map.csv");
    FAIL("expected an error");
  } catch (const InputError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("map.csv:3") != std::string::npos);
  }
}

TEST_CASE("phenotyped individual missing from the genotype file is dropped with a warning") {
  Toy toy;
  write_text(toy.files.pheno, "id,t1,t2\nA,1.5,NA\nB,2,3\nC,-1,4\nZ,0,0\n");
  Cross c;
  const auto warnings = capture_warnings([&] { c = load_cross(toy.files); });
  CHECK(c.n_individuals() == 3);
  CHECK(std::any_of(warnings.begin(), warnings.end(), [](const std::string& w) { return w.find("Z") != std::string::npos; }));
}

TEST_CASE("load errors name the file and line") {
  Toy toy;
  SUBCASE("bad genotype code") {
    write_text(toy.files.geno, "id,m2,m1\nA,BB,BR\nB,XX,NA\n");
    try {
      load_cross(toy.files);
      FAIL("expected an error");
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find("geno.csv:3") != std::string::npos);
    }
  }
  SUBCASE("duplicate individual") {
    write_text(toy.files.geno, "id,m2,m1\nA,BB,BR\nA,BB,NA\n");
    CHECK_THROWS_AS(load_cross(toy.files), InputError);
  }
  SUBCASE("marker absent from the map") {
    write_text(toy.files.geno, "id,m2,m9\nA,BB,BR\n");
    CHECK_THROWS_AS(load_cross(toy.files), InputError);
  }
  SUBCASE("ragged row") {
    write_text(toy.files.pheno, "id,t1,t2\nA,1.5\n");
    CHECK_THROWS_AS(load_cross(toy.files), InputError);
  }
  SUBCASE("missing file names the path") {
    toy.files.pheno = toy.dir / "nope.csv";
    try {
      load_cross(toy.files);
      FAIL("expected an error");
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find("nope.csv") != std::string::npos);
    }
  }
}

TEST_CASE("covariates: categorical expansion and missing rows") {
  Toy toy;
  toy.files.covar = toy.dir / "covar.csv";
  write_text(*toy.files.covar, "id,batch,sex\nA,b2,1\nB,b1,0\nC,b3,NA\n");
  Cross c;
  const auto warnings = capture_warnings([&] { c = load_cross(toy.files, {{"batch"}, {"sex"}}); });
  REQUIRE(c.n_individuals() == 2);  // C has a missing covariate
  CHECK(!warnings.empty());
  // Levels among kept rows are b1, b2; b1 is the dropped reference.
  REQUIRE(c.covariates.additive.cols() == 1);
  CHECK(c.covariates.additive_names[0] == "batch=b2");
  CHECK(c.covariates.additive(0, 0) == 1.0);
  CHECK(c.covariates.additive(1, 0) == 0.0);
  CHECK(c.covariates.interactive.cols() == 1);
  CHECK(c.covariates.interactive(0, 0) == 1.0);
  CHECK(c.covariates.interactive(1, 0) == 0.0);
  for (Index i = 0; i < c.covariates.additive.rows(); ++i)
    CHECK(c.covariates.additive.row(i).sum() <= 1.0);
}

TEST_CASE("quantile_normalize matches an independent normal quantile") {
  VectorXd v(3);
  v << 10, 20, 30;
  const VectorXd q = quantile_normalize(v);
  CHECK(q[0] == doctest::Approx(oracle::normal_quantile(1.0 / 6.0)).epsilon(1e-12));
  CHECK(q[0] == doctest::Approx(-0.9674).epsilon(1e-4));
  CHECK(q[1] == 0.0);
  CHECK(q[2] == doctest::Approx(oracle::normal_quantile(5.0 / 6.0)).epsilon(1e-12));
}

TEST_CASE("quantile_normalize: ties, missing values and errors") {
  VectorXd tied(2);
  tied << 5, 5;
  const VectorXd q = quantile_normalize(tied);
  CHECK(q[0] == 0.0);
  CHECK(q[1] == 0.0);

  VectorXd with_na(4);
  with_na << 3, kMissing, 1, 2;
  const VectorXd r = quantile_normalize(with_na);
  CHECK(is_missing(r[1]));
  CHECK(r[3] == 0.0);
  CHECK(r[2] == doctest::Approx(oracle::normal_quantile(1.0 / 6.0)).epsilon(1e-12));

  VectorXd single(2);
  single << 1, kMissing;
  CHECK_THROWS_AS(quantile_normalize(single), InputError);
}

TEST_CASE("quantile_normalize is idempotent on distinct data and commutes with permutations") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  VectorXd v(41);
  for (Index i = 0; i < v.size(); ++i) v[i] = normal(rng) * 3 + 1;
  const VectorXd once = quantile_normalize(v);
  const VectorXd twice = quantile_normalize(once);
  CHECK((once - twice).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(once[std::min_element(v.data(), v.data() + v.size()) - v.data()] == once.minCoeff());

  std::vector<Index> perm(static_cast<std::size_t>(v.size()));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  const VectorXd permuted = v(perm);
  const VectorXd qp = quantile_normalize(permuted);
  for (Index i = 0; i < v.size(); ++i) CHECK(qp[i] == once[perm[i]]);
}

TEST_CASE("load_cross is deterministic down to the serialized bytes") {
  Toy toy;
  const std::string a = serialize_cross(load_cross(toy.files));
  const std::string b = serialize_cross(load_cross(toy.files));
  CHECK(a == b);
  CHECK(a.find("\"individuals\"") != std::string::npos);
}

TEST_CASE("trait metadata with NA positions") {
  Toy toy;
  toy.files.trait_meta = toy.dir / "meta.csv";
  write_text(*toy.files.trait_meta, "trait,chr,pos_cM\nt1,5,40\nt2,NA,NA\n");
  const Cross c = load_cross(toy.files);
  REQUIRE(c.trait_meta.size() == 2);
  CHECK(*c.trait_meta[0].chr == "5");
  CHECK(*c.trait_meta[0].pos == 40.0);
  CHECK(!c.trait_meta[1].chr);
  CHECK(!c.trait_meta[1].pos);
}
