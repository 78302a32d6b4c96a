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

// Gradient-based robust sample selection.
//
// One selection solves, for a fixed number M of iterations,
//
//   min_{d in D_t} L_w(d)   s.t.   g(d) = p(d) - zeta <= 0
//
// where L_w is the loss averaged over the last w model snapshots and p is a
// Gaussian-kernel smoothing of how often each sample has already been picked.
// Each iteration observes g at the current iterate, takes a projected dual
// step mu <- [mu + gamma g]^+, then a projected primal step
//
//   d <- P_{D_t}[ d - alpha (grad L_w(d) + mu grad g(d)) ]
//
// where P_{D_t} snaps a point to its nearest pool sample. Every iteration is
// recorded so the local regret sum ||grad L_w||^2 and the Lagrangian regret
// ||sum_i grad L_w + mu_i grad g_i|| can be audited afterwards.

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "ogrs/common.hpp"
#include "ogrs/datastream.hpp"
#include "ogrs/models.hpp"

namespace ogrs::select {

enum class InitPolicy { kUniformRandom, kLowestRecentLoss };
enum class ResetPolicy { kNever, kPerSlot, kDecay };

const char* to_string(InitPolicy policy);
const char* to_string(ResetPolicy policy);

struct SelectorConfig {
  int samples_per_slot = 32;   // K
  int iterations = 20;         // M
  double primal_step = 0.5;    // alpha, feature-space units
  /// gamma; unset means M^(-1/4).
  std::optional<double> dual_step;
  int window = 5;              // w
  double repeat_threshold = 5.0;  // zeta
  /// Kernel bandwidth h; unset means bandwidth_scale times the median pairwise
  /// distance of a 256-sample subsample of the pool.
  std::optional<double> bandwidth;
  double bandwidth_scale = 1.0;
  InitPolicy init = InitPolicy::kUniformRandom;
  /// Candidates drawn for kLowestRecentLoss.
  int init_candidates = 8;
  ResetPolicy reset = ResetPolicy::kNever;
  double decay = 0.5;
  /// Evaluate grad g on every iteration, even when mu is zero on both sides of
  /// the step and it cannot influence the iterate or the regret.
  bool full_trace = false;

  double effective_dual_step() const;
  void validate() const;

  bool operator==(const SelectorConfig&) const = default;
};

// ---------------------------------------------------------------------------

/// The last w parameter snapshots, newest first.
class SnapshotWindow {
 public:
  explicit SnapshotWindow(std::size_t capacity);

  void push(model::ModelParams params);
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }
  /// j = 0 is the newest snapshot.
  const model::ModelParams& at(std::size_t j) const { return entries_.at(j).params; }
  /// Distinct for every snapshot ever pushed into this window.
  std::uint64_t serial(std::size_t j) const { return entries_.at(j).serial; }

 private:
  struct Entry {
    std::uint64_t serial;
    model::ModelParams params;
  };
  std::size_t capacity_;
  std::uint64_t next_serial_ = 0;
  std::deque<Entry> entries_;
};

/// Selection tallies per pool sample and the kernel that smooths them into a
/// differentiable field.
class SelectionCounts {
 public:
  SelectionCounts(double bandwidth, double threshold, ResetPolicy policy = ResetPolicy::kNever, double decay = 0.5);

  /// The only way counts grow.
  void record_selection(const data::PoolView& pool, std::size_t position);
  /// Applies the reset policy at a slot boundary.
  void begin_slot();

  double count_at(std::size_t position) const;
  double total() const;
  double bandwidth() const { return bandwidth_; }
  double threshold() const { return threshold_; }
  ResetPolicy policy() const { return policy_; }
  void set_bandwidth(double h);

  struct Entry {
    std::size_t position;
    std::int64_t id;
    double count;
  };
  /// Counted samples in first-selection order.
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  double bandwidth_;
  double threshold_;
  ResetPolicy policy_;
  double decay_;
  std::vector<Entry> entries_;
  std::unordered_map<std::size_t, std::size_t> index_;
};

struct DualState {
  double mu = 0.0;
  double step = 1.0;  // gamma
};

/// mu' = max(0, mu + gamma g); gamma unchanged.
DualState dual_update(DualState dual, double g);

struct FieldValue {
  double value = 0.0;
  Vector grad;
};

/// L_w(d): mean loss over the held snapshots.
double local_loss(const SnapshotWindow& window, const data::LabeledSample& sample);

/// grad_d L_w(d): mean feature gradient over the held snapshots.
Vector local_loss_grad(const SnapshotWindow& window, const data::LabeledSample& sample);

/// p(x) = sum_s c(s) exp(-||x - s||^2 / (2 h^2)) and its gradient.
FieldValue count_field(const SelectionCounts& counts, const Vector& point, const data::PoolView& pool);

/// g = p - zeta, grad g = grad p.
FieldValue constraint(const SelectionCounts& counts, const Vector& point, const data::PoolView& pool);

/// Nearest pool sample by Euclidean distance; ties go to the smaller id.
/// Returns its position in the pool.
std::size_t project(const Vector& point, const data::PoolView& pool);

/// project(d - alpha (grad L_w(d) + mu_next grad g(d))). Returns a position.
std::size_t primal_step(std::size_t iterate, double mu_next, const SnapshotWindow& window,
                        const SelectionCounts& counts, const data::PoolView& pool, double alpha);

// ---------------------------------------------------------------------------

struct TraceRow {
  int iteration = 0;  // 1-based
  std::size_t position = 0;
  std::int64_t sample_id = 0;
  double mu = 0.0;       // mu^i, before this iteration's dual update
  double mu_next = 0.0;  // mu^{i+1}
  double local_loss = 0.0;
  Vector loss_grad;   // grad L_w(d^i)
  double g = 0.0;     // g(d^i)
  /// grad g(d^i); empty when it was not evaluated (mu^i = mu^{i+1} = 0 and
  /// full_trace off), in which case it contributes nothing.
  Vector constraint_grad;
};

struct SelectorTrace {
  int expected_rows = 0;
  std::vector<TraceRow> rows;

  bool complete() const { return static_cast<int>(rows.size()) == expected_rows && expected_rows > 0; }
};

struct SelectionOutcome {
  std::size_t position = 0;
  const data::LabeledSample* sample = nullptr;
  double mu_final = 0.0;
  SelectorTrace trace;
};

/// R_w(M) = sum_i ||grad L_w(d^i)||^2.
double local_regret(const SelectorTrace& trace);

/// RL(M) = || sum_i grad L_w(d^i) + mu^i grad g(d^i) ||.
double lagrangian_regret(const SelectorTrace& trace);

/// Median pairwise distance over a subsample of at most `subsample` points.
double median_pairwise_distance(const data::PoolView& pool, std::size_t subsample, Rng& rng);

// ---------------------------------------------------------------------------

/// Exact nearest-neighbour search over the features of one stream. Samples
/// are embedded in their leading principal directions; embedding distance plus
/// the gap between residual norms is a lower bound on the true distance, so
/// most samples are ruled out without touching every coordinate. Results match
/// the brute-force scan bit for bit.
class PoolGeometry {
 public:
  static constexpr int kMaxRank = 64;
  static constexpr int kCoarseRank = 16;

  static std::shared_ptr<const PoolGeometry> build(const data::StreamPool& stream);

  std::size_t size() const { return static_cast<std::size_t>(features_.rows()); }
  int rank() const { return static_cast<int>(basis_.rows()); }

  /// The pool's features are a prefix of the ones this geometry indexes.
  bool covers(const data::PoolView& pool) const;

  /// Position of the pool sample nearest to x, ties to the smaller id. `hint`
  /// is any pool position; a near one prunes faster.
  std::size_t nearest(const Vector& x, const data::PoolView& pool, std::size_t hint) const;

  /// Squared distance from sample a to the nearest other sample in the stream.
  double nearest_other_sq(std::size_t a) const { return nearest_other_[static_cast<Eigen::Index>(a)]; }

 private:
  std::size_t search(const double* x, std::size_t n, std::size_t best, std::size_t exclude,
                     const std::function<std::int64_t(std::size_t)>& id_of) const;

  Matrix features_;
  Matrix basis_;     // rank x d, orthonormal rows
  Matrix embedded_;  // n x rank
  Vector residual_;         // norm of each sample outside the basis span
  Vector coarse_residual_;  // same, outside the leading kCoarseRank directions
  Vector nearest_other_;
  double scale_ = 0.0;
};

/// Stateful selector used by the trainer: owns the counts, caches per-snapshot
/// losses and gradients, and uses PoolGeometry when available. Produces the
/// same selections as the free functions below, only faster.
class OgrsSelector {
 public:
  OgrsSelector(SelectorConfig config, std::shared_ptr<const PoolGeometry> geometry = nullptr);

  const SelectorConfig& config() const { return config_; }
  SelectionCounts& counts() { return counts_; }
  const SelectionCounts& counts() const { return counts_; }

  /// Resolves the bandwidth (once) and applies the count reset policy.
  void begin_slot(const data::PoolView& pool, Rng& rng);

  SelectionOutcome select_one(const data::PoolView& pool, const SnapshotWindow& window, Rng& rng);
  std::vector<SelectionOutcome> select_set(const data::PoolView& pool, const SnapshotWindow& window, Rng& rng);

  /// Overrides M and gamma for one selection; used by the regret audit.
  SelectionOutcome select_one_with(const data::PoolView& pool, const SnapshotWindow& window, int iterations,
                                   double dual_step, Rng& rng);

 private:
  struct CachedPoint {
    double loss;
    Vector grad;
  };
  const CachedPoint& snapshot_point(const SnapshotWindow& window, std::size_t j, const data::PoolView& pool,
                                    std::size_t position);
  double cached_local_loss(const SnapshotWindow& window, const data::PoolView& pool, std::size_t position);
  Vector cached_local_loss_grad(const SnapshotWindow& window, const data::PoolView& pool, std::size_t position,
                                double* loss_out);
  std::size_t fast_project(const Vector& point, std::size_t from, const data::PoolView& pool) const;
  std::size_t initial_iterate(const data::PoolView& pool, const SnapshotWindow& window, Rng& rng);
  void evict_stale(const SnapshotWindow& window);

  SelectorConfig config_;
  SelectionCounts counts_;
  std::shared_ptr<const PoolGeometry> geometry_;
  bool bandwidth_resolved_ = false;
  bool geometry_checked_ = false;
  std::unordered_map<std::uint64_t, std::unordered_map<std::size_t, CachedPoint>> cache_;
};

/// Reference form of one selection: uncached, unpruned. Bandwidth must
/// already be set on `counts`.
SelectionOutcome select_one(const data::PoolView& pool, const SnapshotWindow& window, const SelectionCounts& counts,
                            const SelectorConfig& config, Rng& rng);

/// K reference selections; each final pick is recorded in `counts`.
std::vector<SelectionOutcome> select_set(const data::PoolView& pool, const SnapshotWindow& window,
                                         SelectionCounts& counts, const SelectorConfig& config, Rng& rng);

// ---------------------------------------------------------------------------

struct AuditRow {
  int iterations = 0;  // M
  double dual_step = 0.0;
  double mean_rl = 0.0;
  double stderr_rl = 0.0;
  double mean_rw = 0.0;
  int trials = 0;
};

struct AuditResult {
  std::vector<AuditRow> rows;
  /// Least-squares slope of log(mean RL) against log(M); NaN when flat.
  double slope = 0.0;
  /// Every mean RL is numerically zero, so no slope exists.
  bool flat = false;
  /// Largest |g| observed: the empirical G of the per-step dual bound.
  double max_abs_g = 0.0;
  /// |mu^{i+1} - mu^i| <= gamma |g^i| held on every recorded step.
  bool dual_step_bound_held = true;
  /// One representative trace per M (the first trial).
  std::vector<SelectorTrace> sample_traces;
};

/// For each M runs `trials` independent selections with gamma = M^(-1/4) from
/// a copy of `counts_template`, averages RL(M) and fits the log-log slope.
AuditResult regret_audit(const data::PoolView& pool, const SnapshotWindow& window,
                         const SelectionCounts& counts_template, const SelectorConfig& config_base,
                         std::span<const int> m_grid, int trials, Rng& rng);

/// Least-squares slope of y on x.
double fit_slope(std::span<const double> x, std::span<const double> y);

}  // namespace ogrs::select
