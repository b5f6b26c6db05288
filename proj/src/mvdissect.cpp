#include "hotdissect/mvdissect.hpp"

#include "hotdissect/parallel.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <unordered_map>

namespace hotdissect {

double mv_lod(const MvModelFit& null_fit, const MvModelFit& alt_fit) {
  if (null_fit.n != alt_fit.n || null_fit.p != alt_fit.p)
    throw InputError("null and alternative fits have different dimensions");
  return static_cast<double>(null_fit.n) / 2.0 * (null_fit.log10_det_rss - alt_fit.log10_det_rss);
}

DissectionProblem DissectionProblem::from_genoprob(const GenoProb& gp, const GenomicInterval& interval,
                                                   const std::vector<Index>& rows, const CovariateSet& covars) {
  DissectionProblem prob;
  prob.positions = gp.grid.indices_in(interval.chr, interval.lo, interval.hi);
  if (prob.positions.empty())
    throw InputError("interval " + interval.chr + ":" + std::to_string(interval.lo) + "-" +
                     std::to_string(interval.hi) + " contains no grid positions");
  for (auto k : prob.positions) {
    const auto& pt = gp.grid.point(k);
    prob.pos.push_back(pt.pos);
    prob.position_ids.push_back(pt.id);
    prob.probs.push_back(gp.probs[k](rows, Eigen::all));
  }
  prob.covariates = covars.rows(rows);
  return prob;
}

ProjectionBasis::ProjectionBasis(const DissectionProblem& problem) {
  const Index n = problem.n_rows();
  const Index m = problem.n_positions();
  if (m == 0) throw InputError("dissection interval has no positions");
  std::vector<MatrixXd> bases(static_cast<std::size_t>(m));
  Index total = 0;
  Index deficient = 0;
  for (Index j = 0; j < m; ++j) {
    const MatrixXd X = qtl_design(problem.probs[j], problem.covariates);
    Index r = 0;
    bases[j] = orthonormal_basis(X, &r);
    if (r < X.cols()) ++deficient;
    rank_.push_back(r);
    offset_.push_back(total);
    total += r;
    max_rank_ = std::max(max_rank_, r);
  }
  if (deficient > 0)
    warn("QTL design rank deficient at " + std::to_string(deficient) + " interval positions; collinear columns dropped");
  q_all_.resize(n, total);
  for (Index j = 0; j < m; ++j) q_all_.middleCols(offset_[j], rank_[j]) = bases[j];

  gram_.setZero(total, total);
  gram_.selfadjointView<Eigen::Lower>().rankUpdate(q_all_.transpose());
  gram_.triangularView<Eigen::StrictlyUpper>() = gram_.transpose();

  Index r0 = 0;
  const MatrixXd X0 = null_design(problem.covariates, problem.null_includes_interactive);
  q_null_ = orthonormal_basis(X0, &r0);
  if (r0 < X0.cols()) warn("null design is rank deficient; collinear covariate columns dropped");
}

Index max_traits(const ProjectionBasis& basis) { return basis.n_rows() - basis.max_rank() - 2; }

namespace {

constexpr double kRssFloor = 1e-12;

}  // namespace

IntervalModel::IntervalModel(const ProjectionBasis& basis, const Eigen::Ref<const MatrixXd>& Y) : basis_(&basis) {
  n_ = Y.rows();
  p_ = Y.cols();
  if (n_ != basis.n_rows()) throw InputError("phenotype rows do not match the dissection individuals");
  if (p_ < 1) throw InputError("no traits to analyse");
  if (p_ > max_traits(basis))
    throw InputError("too many traits (" + std::to_string(p_) + ") for " + std::to_string(n_) +
                     " individuals; at most " + std::to_string(max_traits(basis)) + " are supported");
  for (Index i = 0; i < Y.size(); ++i)
    if (is_missing(Y.data()[i])) throw InputError("dissection phenotypes must be complete");

  const MatrixXd yc = Y.rowwise() - Y.colwise().mean();
  yty_.noalias() = yc.transpose() * yc;
  a_.noalias() = basis.all_bases().transpose() * yc;

  const MatrixXd a0 = basis.null_basis().transpose() * yc;
  MatrixXd rss0 = yty_;
  rss0.noalias() -= a0.transpose() * a0;
  if (!log10_det_spd(rss0, ld_null_))
    throw ComputeError("null residual matrix is singular; use fewer or less correlated traits");

  const Index m = basis.n_positions();
  rss_.resize(static_cast<std::size_t>(m));
  for (Index j = 0; j < m; ++j) {
    const auto aj = a_.middleRows(basis.offset(j), basis.rank(j));
    rss_[j] = yty_;
    rss_[j].noalias() -= aj.transpose() * aj;
  }
  trait_lod_.resize(m, p_);
  for (Index j = 0; j < m; ++j)
    for (Index t = 0; t < p_; ++t)
      trait_lod_(j, t) = std::max(0.0, static_cast<double>(n_) / 2.0 *
                                           std::log10(std::max(rss0(t, t), kRssFloor) /
                                                      std::max(rss_[j](t, t), kRssFloor)));
  finish();
}

void IntervalModel::finish() {
  const Index m = basis_->n_positions();
  lod1_.resize(m);
  for (Index j = 0; j < m; ++j) {
    double ld = 0.0;
    if (!log10_det_spd(rss_[j], ld))
      throw ComputeError("residual matrix is singular at interval position " + std::to_string(j) +
                         "; use fewer or less correlated traits");
    lod1_[j] = static_cast<double>(n_) / 2.0 * (ld_null_ - ld);
  }
}

IntervalModel IntervalModel::reordered(const std::vector<Index>& order) const {
  if (static_cast<Index>(order.size()) != p_) throw InputError("trait order has the wrong length");
  IntervalModel out;
  out.basis_ = basis_;
  out.n_ = n_;
  out.p_ = p_;
  out.yty_ = yty_(order, order);
  out.a_ = a_(Eigen::all, order);
  out.rss_.reserve(rss_.size());
  for (const auto& r : rss_) out.rss_.push_back(r(order, order));
  out.ld_null_ = ld_null_;
  out.lod1_ = lod1_;
  out.trait_lod_ = trait_lod_(Eigen::all, order);
  return out;
}

double IntervalModel::lod2(Index j1, Index j2, Index c) const {
  const Index L = c;
  const Index R = p_ - c;
  thread_local MatrixXd work;
  thread_local MatrixXd tmp;
  work.resize(p_, p_);
  const auto& basis = *basis_;
  const Index o1 = basis.offset(j1), q1 = basis.rank(j1);
  const Index o2 = basis.offset(j2), q2 = basis.rank(j2);

  work.topLeftCorner(L, L) = rss_[j1].topLeftCorner(L, L);
  work.bottomRightCorner(R, R) = rss_[j2].bottomRightCorner(R, R);
  if (L > 0 && R > 0) {
    // Left-block residuals at j1 against right-block residuals at j2:
    // Y_L'(I - H1)(I - H2)Y_R expressed through the stored projections.
    tmp.noalias() = basis.gram().block(o1, o2, q1, q2) * a_.block(o2, L, q2, R);
    auto cross = work.topRightCorner(L, R);
    cross = rss_[j1].topRightCorner(L, R) + rss_[j2].topRightCorner(L, R) - yty_.topRightCorner(L, R);
    cross.noalias() += a_.block(o1, 0, q1, L).transpose() * tmp;
    work.bottomLeftCorner(R, L) = cross.transpose();
  }
  double ld = 0.0;
  if (!log10_det_spd_inplace(work, ld))
    throw ComputeError("two-QTL residual matrix is singular; use fewer or less correlated traits");
  return static_cast<double>(n_) / 2.0 * (ld_null_ - ld);
}

SingleQtlScan mv_scan1(const IntervalModel& model) {
  SingleQtlScan out;
  out.lod = model.lod1_curve();
  Index arg = 0;
  for (Index j = 1; j < out.lod.size(); ++j)
    if (out.lod[j] > out.lod[arg]) arg = j;
  out.argmax = arg;
  out.max_lod = out.lod[arg];
  return out;
}

std::vector<Index> order_traits(const std::vector<double>& positions, std::uint64_t seed) {
  std::vector<Index> order(positions.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return positions[a] < positions[b]; });
  auto rng = derived_rng(seed, 0, 0x7a11);
  for (std::size_t lo = 0; lo < order.size();) {
    std::size_t hi = lo + 1;
    while (hi < order.size() && positions[order[hi]] == positions[order[lo]]) ++hi;
    if (hi - lo > 1) std::shuffle(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                  order.begin() + static_cast<std::ptrdiff_t>(hi), rng);
    lo = hi;
  }
  return order;
}

std::string_view to_string(SearchMode m) { return m == SearchMode::Exhaustive ? "exhaustive" : "coordinate"; }

SearchMode parse_search_mode(std::string_view name) {
  if (name == "exhaustive") return SearchMode::Exhaustive;
  if (name == "coordinate") return SearchMode::Coordinate;
  throw InputError("unknown search mode '" + std::string(name) + "'");
}

namespace {

bool better(double v, Index a, Index b, const CutScan& best) {
  if (v != best.max_lod) return v > best.max_lod;
  return std::pair(a, b) < std::pair(best.left, best.right);
}

}  // namespace

CutScan mv_scan2_cut(const IntervalModel& model, Index c, const SearchOptions& opts, Index single_qtl_argmax) {
  const Index p = model.p();
  const Index m = model.n_positions();
  if (c < 1 || c > p - 1) throw InputError("cut-point must lie in 1..p-1");

  if (opts.mode == SearchMode::Exhaustive) {
    CutScan best{model.lod2(0, 0, c), 0, 0};
    for (Index j1 = 0; j1 < m; ++j1)
      for (Index j2 = 0; j2 < m; ++j2) {
        const double v = model.lod2(j1, j2, c);
        if (v > best.max_lod) best = {v, j1, j2};
      }
    return best;
  }

  std::unordered_map<Index, std::pair<Index, double>> left_memo, right_memo;
  auto best_left = [&](Index j2) {
    auto it = left_memo.find(j2);
    if (it != left_memo.end()) return it->second;
    std::pair<Index, double> best{0, model.lod2(0, j2, c)};
    for (Index j1 = 1; j1 < m; ++j1) {
      const double v = model.lod2(j1, j2, c);
      if (v > best.second) best = {j1, v};
    }
    return left_memo[j2] = best;
  };
  auto best_right = [&](Index j1) {
    auto it = right_memo.find(j1);
    if (it != right_memo.end()) return it->second;
    std::pair<Index, double> best{0, model.lod2(j1, 0, c)};
    for (Index j2 = 1; j2 < m; ++j2) {
      const double v = model.lod2(j1, j2, c);
      if (v > best.second) best = {j2, v};
    }
    return right_memo[j1] = best;
  };

  std::vector<Index> starts{std::clamp<Index>(single_qtl_argmax, 0, m - 1)};
  auto rng = derived_rng(opts.seed, static_cast<std::uint64_t>(c), 0x57a7);
  std::uniform_int_distribution<Index> pick(0, m - 1);
  for (int s = 1; s < opts.starts; ++s) starts.push_back(pick(rng));

  CutScan best{-std::numeric_limits<double>::infinity(), 0, 0};
  for (const Index s : starts) {
    Index l1 = s, l2 = s;
    double value = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < std::max(opts.max_iterations, 1); ++it) {
      const Index n1 = best_left(l2).first;
      const auto [n2, v] = best_right(n1);
      const bool converged = n1 == l1 && n2 == l2;
      l1 = n1;
      l2 = n2;
      value = v;
      if (converged) break;
    }
    if (better(value, l1, l2, best)) best = {value, l1, l2};
  }
  return best;
}

std::pair<VectorXd, VectorXd> profile_curves(const IntervalModel& model, Index c, Index j1, Index j2) {
  const Index m = model.n_positions();
  VectorXd left(m), right(m);
  for (Index k = 0; k < m; ++k) {
    left[k] = model.lod2(k, j2, c);
    right[k] = model.lod2(j1, k, c);
  }
  return {left, right};
}

TwoVsOneResult test_2v1(const IntervalModel& model, const std::vector<std::string>& trait_ids,
                        const std::vector<double>& grid_pos, const SearchOptions& opts) {
  const Index p = model.p();
  if (p < 2) throw InputError("the two-QTL test needs at least 2 traits");
  if (static_cast<Index>(trait_ids.size()) != p) throw InputError("trait ids do not match the phenotype columns");
  if (static_cast<Index>(grid_pos.size()) != model.n_positions()) throw InputError("grid does not match the model");

  TwoVsOneResult res;
  res.seed = opts.seed;
  res.grid_pos = grid_pos;
  const auto one = mv_scan1(model);
  res.m1 = one.max_lod;
  res.lambda_1qtl_index = one.argmax;
  res.lambda_1qtl = grid_pos[one.argmax];
  res.lod1_curve = one.lod;

  std::vector<CutScan> cuts(static_cast<std::size_t>(p - 1));
  parallel_for(p - 1, opts.threads, [&](std::int64_t k) { cuts[k] = mv_scan2_cut(model, k + 1, opts, one.argmax); });

  std::size_t best = 0;
  for (std::size_t k = 0; k < cuts.size(); ++k) {
    res.per_cutpoint.push_back(cuts[k].max_lod);
    if (cuts[k].max_lod > cuts[best].max_lod) best = k;
  }
  res.c_hat = static_cast<Index>(best) + 1;
  res.m2 = cuts[best].max_lod;
  res.lambda1_index = cuts[best].left;
  res.lambda2_index = cuts[best].right;
  res.lambda1 = grid_pos[res.lambda1_index];
  res.lambda2 = grid_pos[res.lambda2_index];
  res.lod_2v1 = res.m2 - res.m1;
  std::tie(res.profile_left, res.profile_right) =
      profile_curves(model, res.c_hat, res.lambda1_index, res.lambda2_index);

  for (Index t = 0; t < p; ++t) {
    Index arg = 0;
    for (Index j = 1; j < model.n_positions(); ++j)
      if (model.trait_lod(j, t) > model.trait_lod(arg, t)) arg = j;
    res.traits.push_back({trait_ids[t], t < res.c_hat, grid_pos[arg], model.trait_lod(arg, t)});
  }
  return res;
}

TwoVsOneResult dissect(const ProjectionBasis& basis, const DissectionProblem& problem,
                       const Eigen::Ref<const MatrixXd>& Y, const std::vector<std::string>& trait_ids,
                       const SearchOptions& opts) {
  const IntervalModel raw(basis, Y);
  std::vector<double> peak_pos(static_cast<std::size_t>(raw.p()));
  for (Index t = 0; t < raw.p(); ++t) {
    Index arg = 0;
    for (Index j = 1; j < raw.n_positions(); ++j)
      if (raw.trait_lod(j, t) > raw.trait_lod(arg, t)) arg = j;
    peak_pos[t] = problem.pos[arg];
  }
  const auto order = order_traits(peak_pos, opts.seed);
  std::vector<std::string> sorted_ids;
  for (auto k : order) sorted_ids.push_back(trait_ids.at(k));
  return test_2v1(raw.reordered(order), sorted_ids, problem.pos, opts);
}

}  // namespace hotdissect
