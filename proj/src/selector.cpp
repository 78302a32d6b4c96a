// Copyright 2026 The OGRS Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ogrs/selector.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <unordered_set>

#include <Eigen/Eigenvalues>

namespace ogrs::select {

using data::LabeledSample;
using data::PoolView;

const char* to_string(InitPolicy policy) {
  return policy == InitPolicy::kUniformRandom ? "uniform_random" : "lowest_recent_loss";
}

const char* to_string(ResetPolicy policy) {
  switch (policy) {
    case ResetPolicy::kNever: return "never";
    case ResetPolicy::kPerSlot: return "per_slot";
    case ResetPolicy::kDecay: return "decay";
  }
  return "never";
}

double SelectorConfig::effective_dual_step() const {
  return dual_step.value_or(std::pow(static_cast<double>(iterations), -0.25));
}

void SelectorConfig::validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  require(samples_per_slot >= 1, ErrorKind::kValidation, "selector.K must be >= 1");
  require(iterations >= 1, ErrorKind::kValidation, "selector.M must be >= 1");
  require(window >= 1, ErrorKind::kValidation, "selector.window must be >= 1");
  require(positive(primal_step), ErrorKind::kValidation, "selector.alpha must be > 0");
  require(!dual_step || positive(*dual_step), ErrorKind::kValidation, "selector.gamma must be > 0");
  require(positive(repeat_threshold), ErrorKind::kValidation, "selector.zeta must be > 0");
  require(!bandwidth || positive(*bandwidth), ErrorKind::kValidation, "selector.bandwidth must be > 0");
  require(positive(bandwidth_scale), ErrorKind::kValidation, "selector.bandwidth_scale must be > 0");
  require(init_candidates >= 1, ErrorKind::kValidation, "selector.init_candidates must be >= 1");
  require(decay > 0.0 && decay < 1.0, ErrorKind::kValidation, "selector.decay must lie in (0, 1)");
}

// ---------------------------------------------------------------------------

SnapshotWindow::SnapshotWindow(std::size_t capacity) : capacity_(capacity) {
  require(capacity >= 1, ErrorKind::kInvalidArgument, "snapshot window needs capacity >= 1");
}

void SnapshotWindow::push(model::ModelParams params) {
  entries_.push_front(Entry{next_serial_++, std::move(params)});
  if (entries_.size() > capacity_) entries_.pop_back();
}

SelectionCounts::SelectionCounts(double bandwidth, double threshold, ResetPolicy policy, double decay)
    : bandwidth_(bandwidth), threshold_(threshold), policy_(policy), decay_(decay) {
  require(bandwidth > 0.0 && std::isfinite(bandwidth), ErrorKind::kInvalidArgument, "bandwidth must be > 0");
  require(threshold > 0.0 && std::isfinite(threshold), ErrorKind::kInvalidArgument, "threshold must be > 0");
  require(policy != ResetPolicy::kDecay || (decay > 0.0 && decay < 1.0), ErrorKind::kInvalidArgument,
          "decay must lie in (0, 1)");
}

void SelectionCounts::set_bandwidth(double h) {
  require(h > 0.0 && std::isfinite(h), ErrorKind::kInvalidArgument, "bandwidth must be > 0");
  bandwidth_ = h;
}

void SelectionCounts::record_selection(const PoolView& pool, std::size_t position) {
  require(position < pool.size(), ErrorKind::kInvalidArgument, "selected position outside the pool");
  const auto [it, inserted] = index_.try_emplace(position, entries_.size());
  if (inserted) entries_.push_back(Entry{position, pool[position].id, 0.0});
  entries_[it->second].count += 1.0;
}

void SelectionCounts::begin_slot() {
  switch (policy_) {
    case ResetPolicy::kNever: break;
    case ResetPolicy::kPerSlot:
      entries_.clear();
      index_.clear();
      break;
    case ResetPolicy::kDecay:
      for (Entry& e : entries_) e.count *= decay_;
      break;
  }
}

double SelectionCounts::count_at(std::size_t position) const {
  const auto it = index_.find(position);
  return it == index_.end() ? 0.0 : entries_[it->second].count;
}

double SelectionCounts::total() const {
  double sum = 0.0;
  for (const Entry& e : entries_) sum += e.count;
  return sum;
}

DualState dual_update(DualState dual, double g) {
  const double step = dual.step * g;
  const double bound = std::abs(step);
  double next = dual.mu + step;
  if (!(next > 0.0)) {
    dual.mu = 0.0;
    return dual;
  }
  // Round toward the previous value so |mu' - mu| <= gamma |g| also holds in
  // floating point, not only in exact arithmetic.
  while (std::abs(next - dual.mu) > bound) next = std::nextafter(next, dual.mu);
  dual.mu = next;
  return dual;
}

// ---------------------------------------------------------------------------

namespace {

// Plain loops keep summation order fixed, so every code path that measures a
// distance gets the same bits.
double sq_dist(const double* a, const double* b, Eigen::Index d) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    const double t = a[k] - b[k];
    s += t * t;
  }
  return s;
}

// Stops once the partial sum exceeds `limit`; the result is then only known
// to be larger than `limit`. Otherwise it equals sq_dist bit for bit.
double sq_dist_until(const double* a, const double* b, Eigen::Index d, double limit) {
  double s = 0.0;
  Eigen::Index k = 0;
  while (k < d) {
    const Eigen::Index stop = std::min<Eigen::Index>(d, k + 32);
    for (; k < stop; ++k) {
      const double t = a[k] - b[k];
      s += t * t;
    }
    if (s > limit) return s;
  }
  return s;
}

const double* row_ptr(const PoolView& pool, std::size_t position) {
  return pool.pool()->feature_matrix().row(static_cast<Eigen::Index>(position)).data();
}

void check_window(const SnapshotWindow& window) {
  require(!window.empty(), ErrorKind::kInvalidArgument, "local loss needs at least one snapshot (run warm-up first)");
}

void check_pool(const PoolView& pool) {
  require(!pool.empty(), ErrorKind::kEmptyDataset, "selection over an empty pool");
}

FieldValue field_eval(const SelectionCounts& counts, const double* x, Eigen::Index d, const PoolView& pool,
                      bool with_grad) {
  FieldValue out;
  if (with_grad) out.grad = Vector::Zero(d);
  const double h2 = counts.bandwidth() * counts.bandwidth();
  // Beyond this squared distance the kernel underflows to exactly zero.
  const double cutoff = 2.0 * h2 * 760.0;
  for (const SelectionCounts::Entry& e : counts.entries()) {
    if (!(e.count > 0.0)) continue;
    require(e.position < pool.size(), ErrorKind::kInvalidArgument, "counted sample outside the pool");
    const double* s = row_ptr(pool, e.position);
    const double r2 = sq_dist_until(x, s, d, cutoff);
    if (r2 > cutoff) continue;
    const double w = e.count * std::exp(-r2 / (2.0 * h2));
    out.value += w;
    if (with_grad && w != 0.0) {
      const double scale = w / h2;
      for (Eigen::Index k = 0; k < d; ++k) out.grad[k] += scale * (s[k] - x[k]);
    }
  }
  return out;
}

Vector proposal_point(const Vector& features, const Vector& loss_grad, const Vector* constraint_grad,
                      double mu_next, double alpha) {
  Vector x(features.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    double h = loss_grad[k];
    if (mu_next > 0.0) h += mu_next * (*constraint_grad)[k];
    x[k] = features[k] - alpha * h;
  }
  return x;
}

std::size_t brute_force_project(const double* x, const PoolView& pool) {
  check_pool(pool);
  const Eigen::Index d = pool.dimension();
  std::size_t best = 0;
  double best_d = sq_dist(x, row_ptr(pool, 0), d);
  for (std::size_t i = 1; i < pool.size(); ++i) {
    const double di = sq_dist_until(x, row_ptr(pool, i), d, best_d);
    if (di < best_d || (di == best_d && pool[i].id < pool[best].id)) {
      best = i;
      best_d = di;
    }
  }
  return best;
}

// The shared iteration loop. The providers supply L_w / grad L_w at a pool
// position and the projection, so cached and reference paths run the same
// arithmetic in the same order.
struct Providers {
  std::function<Vector(std::size_t, double*)> local_grad;
  std::function<std::size_t(const Vector&, std::size_t)> project;
};

SelectionOutcome run_selection(const PoolView& pool, const SelectionCounts& counts, std::size_t start, int iterations,
                               double dual_step, double alpha, bool full_trace, const Providers& p) {
  const Eigen::Index d = pool.dimension();
  SelectionOutcome out;
  out.trace.expected_rows = iterations;
  out.trace.rows.reserve(static_cast<std::size_t>(iterations));
  std::size_t position = start;
  DualState dual{0.0, dual_step};
  for (int i = 1; i <= iterations; ++i) {
    const double* x = row_ptr(pool, position);
    const double g = field_eval(counts, x, d, pool, false).value - counts.threshold();
    const DualState next = dual_update(dual, g);

    TraceRow row;
    row.iteration = i;
    row.position = position;
    row.sample_id = pool[position].id;
    row.mu = dual.mu;
    row.mu_next = next.mu;
    row.g = g;
    row.loss_grad = p.local_grad(position, &row.local_loss);
    if (full_trace || dual.mu > 0.0 || next.mu > 0.0) {
      row.constraint_grad = field_eval(counts, x, d, pool, true).grad;
    }

    const Vector proposal =
        proposal_point(pool[position].features, row.loss_grad, &row.constraint_grad, next.mu, alpha);
    position = p.project(proposal, position);
    dual = next;
    out.trace.rows.push_back(std::move(row));
  }
  out.position = position;
  out.sample = &pool[position];
  out.mu_final = dual.mu;
  return out;
}

std::size_t pick_initial(const PoolView& pool, const SelectorConfig& config, Rng& rng,
                         const std::function<double(std::size_t)>& local_loss_at) {
  check_pool(pool);
  if (config.init == InitPolicy::kUniformRandom) return uniform_index(rng, pool.size());
  std::size_t best = uniform_index(rng, pool.size());
  double best_loss = local_loss_at(best);
  for (int c = 1; c < config.init_candidates; ++c) {
    const std::size_t cand = uniform_index(rng, pool.size());
    const double l = local_loss_at(cand);
    if (l < best_loss || (l == best_loss && pool[cand].id < pool[best].id)) {
      best = cand;
      best_loss = l;
    }
  }
  return best;
}

}  // namespace

double local_loss(const SnapshotWindow& window, const LabeledSample& sample) {
  check_window(window);
  double sum = 0.0;
  for (std::size_t j = 0; j < window.size(); ++j) sum += model::loss(window.at(j), sample);
  return sum / static_cast<double>(window.size());
}

namespace {

Vector reference_local_grad(const SnapshotWindow& window, const LabeledSample& sample, double* loss_out) {
  check_window(window);
  Vector sum;
  Vector g;
  double loss_sum = 0.0;
  for (std::size_t j = 0; j < window.size(); ++j) {
    loss_sum += model::loss_and_grad_features(window.at(j), sample, g);
    if (j == 0) {
      sum = g;
    } else {
      sum += g;
    }
  }
  const double n = static_cast<double>(window.size());
  if (loss_out) *loss_out = loss_sum / n;
  return sum / n;
}

}  // namespace

Vector local_loss_grad(const SnapshotWindow& window, const LabeledSample& sample) {
  return reference_local_grad(window, sample, nullptr);
}

FieldValue count_field(const SelectionCounts& counts, const Vector& point, const PoolView& pool) {
  require(point.size() == pool.dimension() || counts.entries().empty(), ErrorKind::kInvalidArgument,
          "point dimension does not match the pool");
  return field_eval(counts, point.data(), point.size(), pool, true);
}

FieldValue constraint(const SelectionCounts& counts, const Vector& point, const PoolView& pool) {
  FieldValue f = count_field(counts, point, pool);
  f.value -= counts.threshold();
  return f;
}

std::size_t project(const Vector& point, const PoolView& pool) {
  check_pool(pool);
  require(point.size() == pool.dimension(), ErrorKind::kInvalidArgument, "point dimension does not match the pool");
  return brute_force_project(point.data(), pool);
}

std::size_t primal_step(std::size_t iterate, double mu_next, const SnapshotWindow& window,
                        const SelectionCounts& counts, const PoolView& pool, double alpha) {
  require(alpha > 0.0, ErrorKind::kInvalidArgument, "primal step size must be positive");
  require(iterate < pool.size(), ErrorKind::kInvalidArgument, "iterate outside the pool");
  const Vector grad_l = local_loss_grad(window, pool[iterate]);
  Vector grad_g;
  if (mu_next > 0.0) grad_g = count_field(counts, pool[iterate].features, pool).grad;
  return project(proposal_point(pool[iterate].features, grad_l, &grad_g, mu_next, alpha), pool);
}

double local_regret(const SelectorTrace& trace) {
  require(trace.complete(), ErrorKind::kIncompleteTrace, "trace has " + std::to_string(trace.rows.size()) + " of " +
                                                             std::to_string(trace.expected_rows) + " rows");
  double sum = 0.0;
  for (const TraceRow& r : trace.rows) sum += r.loss_grad.squaredNorm();
  return sum;
}

double lagrangian_regret(const SelectorTrace& trace) {
  require(trace.complete(), ErrorKind::kIncompleteTrace, "trace has " + std::to_string(trace.rows.size()) + " of " +
                                                             std::to_string(trace.expected_rows) + " rows");
  Vector sum = Vector::Zero(trace.rows.front().loss_grad.size());
  for (const TraceRow& r : trace.rows) {
    sum += r.loss_grad;
    if (r.mu > 0.0) {
      require(r.constraint_grad.size() == sum.size(), ErrorKind::kIncompleteTrace,
              "trace row with mu > 0 lacks its constraint gradient");
      sum += r.mu * r.constraint_grad;
    }
  }
  return sum.norm();
}

double median_pairwise_distance(const PoolView& pool, std::size_t subsample, Rng& rng) {
  check_pool(pool);
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t m = std::min(subsample, idx.size());
  for (std::size_t i = 0; i < m && idx.size() > m; ++i) {
    std::swap(idx[i], idx[i + uniform_index(rng, idx.size() - i)]);
  }
  idx.resize(m);
  std::vector<double> dist;
  dist.reserve(m * (m - 1) / 2);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      dist.push_back(std::sqrt(sq_dist(row_ptr(pool, idx[a]), row_ptr(pool, idx[b]), pool.dimension())));
    }
  }
  if (dist.empty()) return 0.0;
  const std::size_t mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid), dist.end());
  const double upper = dist[mid];
  if (dist.size() % 2 == 1) return upper;
  const double lower = *std::max_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

// ---------------------------------------------------------------------------

std::shared_ptr<const PoolGeometry> PoolGeometry::build(const data::StreamPool& stream) {
  require(!stream.empty(), ErrorKind::kEmptyDataset, "geometry over an empty stream");
  auto geometry = std::make_shared<PoolGeometry>();
  const Matrix& x = stream.feature_matrix();
  geometry->features_ = x;
  const Eigen::Index d = x.cols();
  const Eigen::Index rank = std::min<Eigen::Index>(kMaxRank, d);

  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  // Eigenvalues come out ascending; keep the largest.
  geometry->basis_ = eig.eigenvectors().rightCols(rank).rowwise().reverse().transpose();
  geometry->embedded_ = x * geometry->basis_.transpose();
  const Matrix outside = x - geometry->embedded_ * geometry->basis_;
  geometry->residual_ = outside.rowwise().norm();
  const Eigen::Index coarse = std::min<Eigen::Index>(kCoarseRank, rank);
  const Matrix outside_coarse = x - geometry->embedded_.leftCols(coarse) * geometry->basis_.topRows(coarse);
  geometry->coarse_residual_ = outside_coarse.rowwise().norm();
  geometry->scale_ = x.rowwise().squaredNorm().maxCoeff();

  const std::size_t n = stream.size();
  geometry->nearest_other_.resize(static_cast<Eigen::Index>(n));
  auto id_of = [&](std::size_t i) { return stream[i].id; };
  for (std::size_t a = 0; a < n; ++a) {
    const double* xa = x.row(static_cast<Eigen::Index>(a)).data();
    if (n == 1) {
      geometry->nearest_other_[0] = std::numeric_limits<double>::infinity();
      break;
    }
    const std::size_t start = a == 0 ? 1 : a - 1;
    const std::size_t b = geometry->search(xa, n, start, a, id_of);
    geometry->nearest_other_[static_cast<Eigen::Index>(a)] = sq_dist(xa, x.row(static_cast<Eigen::Index>(b)).data(), d);
  }
  return geometry;
}

bool PoolGeometry::covers(const PoolView& pool) const {
  if (!pool.pool() || pool.dimension() != features_.cols() || pool.size() > size()) return false;
  const auto rows = static_cast<Eigen::Index>(pool.size());
  return std::equal(features_.data(), features_.data() + rows * features_.cols(),
                    pool.pool()->feature_matrix().data());
}

namespace {

// Squared distance from r to the interval [lo, hi].
double gap_sq(double r, double lo, double hi) {
  const double g = r < lo ? lo - r : (r > hi ? r - hi : 0.0);
  return g * g;
}

// Bounds on the norm of x outside the leading `k` basis directions, from
// |x|^2 - |U_k x|^2 with room for cancellation.
std::pair<double, double> residual_interval(double xx, const Vector& ux, Eigen::Index k) {
  const double r2 = xx - ux.head(k).squaredNorm();
  const double err = 1e-12 * xx;
  return {std::sqrt(std::max(0.0, r2 - err)), std::sqrt(std::max(0.0, r2 + err))};
}

}  // namespace

std::size_t PoolGeometry::search(const double* x, std::size_t n, std::size_t best, std::size_t exclude,
                                 const std::function<std::int64_t(std::size_t)>& id_of) const {
  const Eigen::Index d = features_.cols();
  const Eigen::Index rank = basis_.rows();
  const Eigen::Index coarse = std::min<Eigen::Index>(kCoarseRank, rank);
  const Eigen::Map<const Vector> point(x, d);
  const Vector ux = basis_ * point;
  const double xx = point.squaredNorm();
  const auto [lo_c, hi_c] = residual_interval(xx, ux, coarse);
  const auto [lo_f, hi_f] = residual_interval(xx, ux, rank);
  const double slack = 1e-9 * (1.0 + xx + scale_);

  double best_d = sq_dist(x, features_.row(static_cast<Eigen::Index>(best)).data(), d);
  const double limit = best_d + slack;
  std::vector<std::pair<double, std::size_t>> candidates;
  for (std::size_t b = 0; b < n; ++b) {
    if (b == exclude || b == best) continue;
    const auto row = static_cast<Eigen::Index>(b);
    const double* e = embedded_.row(row).data();
    double head = 0.0;
    for (Eigen::Index j = 0; j < coarse; ++j) {
      const double t = e[j] - ux[j];
      head += t * t;
    }
    if (head + gap_sq(coarse_residual_[row], lo_c, hi_c) > limit) continue;
    double full = head;
    for (Eigen::Index j = coarse; j < rank; ++j) {
      const double t = e[j] - ux[j];
      full += t * t;
    }
    const double lb = full + gap_sq(residual_[row], lo_f, hi_f);
    if (lb <= limit) candidates.emplace_back(lb, b);
  }
  std::sort(candidates.begin(), candidates.end());
  for (const auto& [lb, b] : candidates) {
    if (lb > best_d + slack) break;
    const double db = sq_dist_until(x, features_.row(static_cast<Eigen::Index>(b)).data(), d, best_d);
    if (db < best_d || (db == best_d && id_of(b) < id_of(best))) {
      best = b;
      best_d = db;
    }
  }
  return best;
}

std::size_t PoolGeometry::nearest(const Vector& x, const PoolView& pool, std::size_t hint) const {
  check_pool(pool);
  return search(x.data(), pool.size(), hint, pool.size(), [&](std::size_t i) { return pool[i].id; });
}

OgrsSelector::OgrsSelector(SelectorConfig config, std::shared_ptr<const PoolGeometry> geometry)
    : config_(std::move(config)),
      counts_(config_.bandwidth.value_or(1.0), config_.repeat_threshold, config_.reset, config_.decay),
      geometry_(std::move(geometry)) {
  config_.validate();
  bandwidth_resolved_ = config_.bandwidth.has_value();
}

void OgrsSelector::begin_slot(const PoolView& pool, Rng& rng) {
  if (!bandwidth_resolved_) {
    double h = config_.bandwidth_scale * median_pairwise_distance(pool, 256, rng);
    if (!(h > 0.0)) h = 1.0;  // every sampled point coincides
    counts_.set_bandwidth(h);
    bandwidth_resolved_ = true;
  }
  counts_.begin_slot();
}

void OgrsSelector::evict_stale(const SnapshotWindow& window) {
  if (cache_.size() <= window.size()) return;
  std::unordered_set<std::uint64_t> live;
  for (std::size_t j = 0; j < window.size(); ++j) live.insert(window.serial(j));
  std::erase_if(cache_, [&](const auto& kv) { return !live.contains(kv.first); });
}

const OgrsSelector::CachedPoint& OgrsSelector::snapshot_point(const SnapshotWindow& window, std::size_t j,
                                                              const PoolView& pool, std::size_t position) {
  auto& per_snapshot = cache_[window.serial(j)];
  auto it = per_snapshot.find(position);
  if (it == per_snapshot.end()) {
    CachedPoint point;
    point.loss = model::loss_and_grad_features(window.at(j), pool[position], point.grad);
    it = per_snapshot.emplace(position, std::move(point)).first;
  }
  return it->second;
}

double OgrsSelector::cached_local_loss(const SnapshotWindow& window, const PoolView& pool, std::size_t position) {
  double loss = 0.0;
  cached_local_loss_grad(window, pool, position, &loss);
  return loss;
}

Vector OgrsSelector::cached_local_loss_grad(const SnapshotWindow& window, const PoolView& pool, std::size_t position,
                                            double* loss_out) {
  check_window(window);
  Vector sum;
  double loss_sum = 0.0;
  for (std::size_t j = 0; j < window.size(); ++j) {
    const CachedPoint& point = snapshot_point(window, j, pool, position);
    loss_sum += point.loss;
    if (j == 0) {
      sum = point.grad;
    } else {
      sum += point.grad;
    }
  }
  const double n = static_cast<double>(window.size());
  if (loss_out) *loss_out = loss_sum / n;
  return sum / n;
}

std::size_t OgrsSelector::fast_project(const Vector& point, std::size_t from, const PoolView& pool) const {
  if (!geometry_) return brute_force_project(point.data(), pool);
  // Every other sample is more than 2r from `from`, hence farther than r from
  // the point, so the projection stays put.
  const double r2 = sq_dist(point.data(), row_ptr(pool, from), pool.dimension());
  const double slack = 1e-9 * (1.0 + r2);
  if (4.0 * r2 * (1.0 + 1e-12) + slack < geometry_->nearest_other_sq(from)) return from;
  return geometry_->nearest(point, pool, from);
}

std::size_t OgrsSelector::initial_iterate(const PoolView& pool, const SnapshotWindow& window, Rng& rng) {
  return pick_initial(pool, config_, rng,
                      [&](std::size_t position) { return cached_local_loss(window, pool, position); });
}

SelectionOutcome OgrsSelector::select_one_with(const PoolView& pool, const SnapshotWindow& window, int iterations,
                                               double dual_step, Rng& rng) {
  check_pool(pool);
  check_window(window);
  require(iterations >= 1, ErrorKind::kInvalidArgument, "iterations must be >= 1");
  evict_stale(window);
  if (!geometry_checked_) {
    if (geometry_ && !geometry_->covers(data::whole(*pool.pool()))) geometry_.reset();
    geometry_checked_ = true;
  }
  const std::size_t start = initial_iterate(pool, window, rng);
  Providers p;
  p.local_grad = [&](std::size_t position, double* loss) {
    return cached_local_loss_grad(window, pool, position, loss);
  };
  p.project = [&](const Vector& x, std::size_t from) { return fast_project(x, from, pool); };
  return run_selection(pool, counts_, start, iterations, dual_step, config_.primal_step, config_.full_trace, p);
}

SelectionOutcome OgrsSelector::select_one(const PoolView& pool, const SnapshotWindow& window, Rng& rng) {
  return select_one_with(pool, window, config_.iterations, config_.effective_dual_step(), rng);
}

std::vector<SelectionOutcome> OgrsSelector::select_set(const PoolView& pool, const SnapshotWindow& window, Rng& rng) {
  std::vector<SelectionOutcome> out;
  out.reserve(static_cast<std::size_t>(config_.samples_per_slot));
  for (int k = 0; k < config_.samples_per_slot; ++k) {
    out.push_back(select_one(pool, window, rng));
    counts_.record_selection(pool, out.back().position);
  }
  return out;
}

SelectionOutcome select_one(const PoolView& pool, const SnapshotWindow& window, const SelectionCounts& counts,
                            const SelectorConfig& config, Rng& rng) {
  config.validate();
  check_pool(pool);
  check_window(window);
  const std::size_t start =
      pick_initial(pool, config, rng, [&](std::size_t position) { return local_loss(window, pool[position]); });
  Providers p;
  p.local_grad = [&](std::size_t position, double* loss) {
    return reference_local_grad(window, pool[position], loss);
  };
  p.project = [&](const Vector& x, std::size_t) { return brute_force_project(x.data(), pool); };
  return run_selection(pool, counts, start, config.iterations, config.effective_dual_step(), config.primal_step,
                       config.full_trace, p);
}

std::vector<SelectionOutcome> select_set(const PoolView& pool, const SnapshotWindow& window, SelectionCounts& counts,
                                         const SelectorConfig& config, Rng& rng) {
  std::vector<SelectionOutcome> out;
  out.reserve(static_cast<std::size_t>(config.samples_per_slot));
  for (int k = 0; k < config.samples_per_slot; ++k) {
    out.push_back(select_one(pool, window, counts, config, rng));
    counts.record_selection(pool, out.back().position);
  }
  return out;
}

// ---------------------------------------------------------------------------

double fit_slope(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorKind::kInvalidArgument, "slope fit needs >= 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  require(sxx > 0.0, ErrorKind::kInvalidArgument, "slope fit needs distinct x values");
  return sxy / sxx;
}

AuditResult regret_audit(const PoolView& pool, const SnapshotWindow& window, const SelectionCounts& counts_template,
                         const SelectorConfig& config_base, std::span<const int> m_grid, int trials, Rng& rng) {
  require(m_grid.size() >= 4, ErrorKind::kInvalidArgument, "regret audit needs at least 4 grid points");
  for (std::size_t i = 0; i < m_grid.size(); ++i) {
    require(m_grid[i] >= 1 && (i == 0 || m_grid[i] > m_grid[i - 1]), ErrorKind::kInvalidArgument,
            "regret audit grid must be strictly increasing and positive");
  }
  require(trials >= 10, ErrorKind::kInvalidArgument, "regret audit needs at least 10 trials per grid point");

  SelectorConfig config = config_base;
  config.bandwidth = counts_template.bandwidth();
  config.full_trace = true;
  OgrsSelector selector(config);
  selector.counts() = counts_template;

  AuditResult result;
  for (const int m : m_grid) {
    const double gamma = std::pow(static_cast<double>(m), -0.25);
    std::vector<double> rl(static_cast<std::size_t>(trials));
    double rw_sum = 0.0;
    for (int t = 0; t < trials; ++t) {
      SelectionOutcome out = selector.select_one_with(pool, window, m, gamma, rng);
      rl[static_cast<std::size_t>(t)] = lagrangian_regret(out.trace);
      rw_sum += local_regret(out.trace);
      for (const TraceRow& r : out.trace.rows) {
        result.max_abs_g = std::max(result.max_abs_g, std::abs(r.g));
        if (std::abs(r.mu_next - r.mu) > gamma * std::abs(r.g)) result.dual_step_bound_held = false;
      }
      if (t == 0) result.sample_traces.push_back(std::move(out.trace));
    }
    const double mean = std::accumulate(rl.begin(), rl.end(), 0.0) / trials;
    double var = 0.0;
    for (double v : rl) var += (v - mean) * (v - mean);
    var /= std::max(1, trials - 1);
    result.rows.push_back(AuditRow{m, gamma, mean, std::sqrt(var / trials), rw_sum / trials, trials});
  }

  std::vector<double> lx;
  std::vector<double> ly;
  for (const AuditRow& r : result.rows) {
    if (r.mean_rl > 1e-12) {
      lx.push_back(std::log(static_cast<double>(r.iterations)));
      ly.push_back(std::log(r.mean_rl));
    }
  }
  if (lx.size() < 2) {
    result.flat = true;
    result.slope = std::numeric_limits<double>::quiet_NaN();
  } else {
    result.slope = fit_slope(lx, ly);
  }
  return result;
}

}  // namespace ogrs::select
