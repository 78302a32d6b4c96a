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

// The online training loop: naive warm-up, then one selection and SGD update
// per slot, with test accuracy sampled every eval_stride slots.

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "ogrs/baselines.hpp"
#include "ogrs/datastream.hpp"
#include "ogrs/models.hpp"
#include "ogrs/selector.hpp"

namespace ogrs::train {

struct TrainerOptions {
  model::Architecture architecture;
  int warmup_rounds = 50;
  /// Total slots T, warm-up included. May run past the last arrival, in which
  /// case the pool simply stops growing.
  std::int64_t total_slots = 200;
  int samples_per_slot = 32;  // K for every selector
  double learning_rate = 0.05;
  int steps_per_slot = 1;
  int eval_stride = 50;
  select::SelectorConfig selector;
  std::uint64_t seed = 0;

  void validate() const;
};

struct MetricsRow {
  std::int64_t slot = 0;
  double test_accuracy = 0.0;
  double selection_clean_fraction = 0.0;
  double mean_rl = 0.0;
  double mean_rw = 0.0;
  double mean_mu_final = 0.0;
  double train_loss = 0.0;
  /// Accuracy was measured on this slot rather than carried forward.
  bool evaluated = false;
};

/// Fraction of test samples whose argmax class (ties to the smallest index)
/// equals the true label.
double evaluate(const model::ModelParams& params, const data::StreamPool& test);

/// Learning rate used when a config leaves it unset: 0.05 for logistic
/// regression, 0.01 for the MLP.
double default_learning_rate(const model::Architecture& arch);

struct SlotSelection {
  std::vector<model::SampleRef> batch;
  std::vector<select::SelectionOutcome> outcomes;  // OGRS only
};

class Trainer {
 public:
  /// `geometry` may be null; it only speeds up OGRS projections.
  Trainer(const data::StreamPool& train, const data::StreamPool& test, baseline::SelectorKind kind,
          TrainerOptions options, std::shared_ptr<const select::PoolGeometry> geometry = nullptr);

  /// Naive selection plus SGD for `rounds` slots. Fails when the stream has
  /// fewer than `rounds` slots.
  std::vector<MetricsRow> warmup(int rounds);

  /// One selective slot. Requires a populated snapshot window.
  MetricsRow run_slot();

  /// Slot the next call to run_slot / warmup will process.
  std::int64_t next_slot() const { return slot_; }
  const model::ModelParams& params() const { return params_; }
  const select::SnapshotWindow& window() const { return window_; }
  const select::OgrsSelector* ogrs() const { return ogrs_ ? &*ogrs_ : nullptr; }
  const data::StreamPool& train_pool() const { return train_; }

  /// Called with each selective slot's selection before the update.
  using SelectionObserver = std::function<void(std::int64_t slot, const SlotSelection&)>;
  void set_selection_observer(SelectionObserver observer) { observer_ = std::move(observer); }

 private:
  data::PoolView current_pool() const;
  SlotSelection select_batch(const data::PoolView& pool);
  MetricsRow finish_slot(const SlotSelection& selection);
  bool should_evaluate(std::int64_t slot) const;

  const data::StreamPool& train_;
  const data::StreamPool& test_;
  baseline::SelectorKind kind_;
  TrainerOptions options_;
  model::ModelParams params_;
  select::SnapshotWindow window_;
  std::optional<select::OgrsSelector> ogrs_;
  SelectionObserver observer_;
  Rng warmup_rng_;
  Rng select_rng_;
  std::int64_t slot_ = 1;
  double last_accuracy_ = 0.0;
};

/// Warm-up then selective slots up to T. `on_row` sees each row as it is
/// produced; rows produced before a failure have already been delivered.
std::vector<MetricsRow> run(const data::StreamPool& train, const data::StreamPool& test,
                            const baseline::SelectorKind& kind, const TrainerOptions& options,
                            std::shared_ptr<const select::PoolGeometry> geometry = nullptr,
                            const std::function<void(const MetricsRow&)>& on_row = {});

double final_accuracy(const std::vector<MetricsRow>& rows);
/// Mean of test_accuracy over all rows.
double mean_accuracy(const std::vector<MetricsRow>& rows);
/// Mean selection_clean_fraction over the rows after warm-up.
double mean_selective_clean_fraction(const std::vector<MetricsRow>& rows, int warmup_rounds);

}  // namespace ogrs::train
