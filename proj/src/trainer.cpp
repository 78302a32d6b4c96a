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

#include "ogrs/trainer.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace ogrs::train {

using baseline::SelectorKind;
using data::PoolView;

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kInitStream = 0x696e6974;
constexpr std::uint64_t kWarmupStream = 0x7761726d;
constexpr std::uint64_t kSelectStream = 0x73656c65;

}  // namespace

void TrainerOptions::validate() const {
  architecture.validate();
  require(warmup_rounds >= 1, ErrorKind::kValidation, "training.warmup_rounds must be >= 1");
  require(total_slots >= warmup_rounds, ErrorKind::kValidation, "training.T must be >= training.warmup_rounds");
  require(samples_per_slot >= 1, ErrorKind::kValidation, "training.K must be >= 1");
  require(learning_rate > 0.0 && std::isfinite(learning_rate), ErrorKind::kValidation,
          "training.learning_rate must be > 0");
  require(steps_per_slot >= 1, ErrorKind::kValidation, "training.steps_per_slot must be >= 1");
  require(eval_stride >= 1, ErrorKind::kValidation, "training.eval_stride must be >= 1");
  selector.validate();
}

double evaluate(const model::ModelParams& params, const data::StreamPool& test) {
  require(!test.empty(), ErrorKind::kEmptyDataset, "evaluation needs a nonempty test pool");
  const std::vector<int> predicted = model::predict_classes(params, test.feature_matrix());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (predicted[i] == test[i].true_label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

double default_learning_rate(const model::Architecture& arch) {
  return arch.kind == model::ArchKind::kMlp ? 0.01 : 0.05;
}

Trainer::Trainer(const data::StreamPool& train, const data::StreamPool& test, SelectorKind kind,
                 TrainerOptions options, std::shared_ptr<const select::PoolGeometry> geometry)
    : train_(train),
      test_(test),
      kind_(kind),
      options_(std::move(options)),
      params_(model::init_params(options_.architecture, derive_seed(options_.seed, kInitStream))),
      window_(static_cast<std::size_t>(options_.selector.window)),
      warmup_rng_(make_rng(options_.seed, kWarmupStream)),
      select_rng_(make_rng(options_.seed, kSelectStream)) {
  options_.validate();
  kind_.validate();
  require(!train_.empty(), ErrorKind::kEmptyDataset, "training stream is empty");
  require(train_.dimension() == options_.architecture.input_dim, ErrorKind::kValidation,
          fmt::format("model input_dim {} does not match data dimension {}", options_.architecture.input_dim,
                      train_.dimension()));
  require(train_.num_classes() <= options_.architecture.num_classes, ErrorKind::kValidation,
          fmt::format("model has {} classes but the data has {}", options_.architecture.num_classes,
                      train_.num_classes()));
  if (kind_.tag == SelectorKind::Tag::kOgrs) ogrs_.emplace(options_.selector, std::move(geometry));
}

PoolView Trainer::current_pool() const {
  return PoolView(train_, train_.count_through(slot_), slot_);
}

bool Trainer::should_evaluate(std::int64_t slot) const {
  return slot == 1 || slot % options_.eval_stride == 0 || slot == options_.warmup_rounds ||
         slot == options_.total_slots;
}

MetricsRow Trainer::finish_slot(const SlotSelection& selection) {
  MetricsRow row;
  row.slot = slot_;
  std::size_t clean = 0;
  for (model::SampleRef s : selection.batch) clean += s->is_clean() ? 1 : 0;
  row.selection_clean_fraction = static_cast<double>(clean) / static_cast<double>(selection.batch.size());
  row.train_loss = model::mean_loss(params_, selection.batch);
  if (!selection.outcomes.empty()) {
    double rl = 0.0;
    double rw = 0.0;
    double mu = 0.0;
    for (const select::SelectionOutcome& o : selection.outcomes) {
      rl += select::lagrangian_regret(o.trace);
      rw += select::local_regret(o.trace);
      mu += o.mu_final;
    }
    const double n = static_cast<double>(selection.outcomes.size());
    row.mean_rl = rl / n;
    row.mean_rw = rw / n;
    row.mean_mu_final = mu / n;
  }

  for (int step = 0; step < options_.steps_per_slot; ++step) {
    params_ = model::sgd_step(params_, selection.batch, options_.learning_rate);
  }
  window_.push(params_);

  if (should_evaluate(slot_)) {
    last_accuracy_ = evaluate(params_, test_);
    row.evaluated = true;
  }
  row.test_accuracy = last_accuracy_;
  ++slot_;
  return row;
}

std::vector<MetricsRow> Trainer::warmup(int rounds) {
  require(rounds >= 1, ErrorKind::kInvalidArgument, "warm-up needs rounds >= 1");
  require(slot_ + rounds - 1 <= train_.max_slot(), ErrorKind::kInvalidArgument,
          fmt::format("stream exhausted: warm-up to slot {} but the last arrival is at slot {}", slot_ + rounds - 1,
                      train_.max_slot()));
  std::vector<MetricsRow> rows;
  rows.reserve(static_cast<std::size_t>(rounds));
  for (int r = 0; r < rounds; ++r) {
    SlotSelection selection;
    selection.batch = baseline::naive_select(current_pool(), options_.samples_per_slot, warmup_rng_);
    rows.push_back(finish_slot(selection));
  }
  return rows;
}

SlotSelection Trainer::select_batch(const PoolView& pool) {
  SlotSelection out;
  const int k = options_.samples_per_slot;
  switch (kind_.tag) {
    case SelectorKind::Tag::kOgrs: {
      ogrs_->begin_slot(pool, select_rng_);
      out.outcomes = ogrs_->select_set(pool, window_, select_rng_);
      out.batch.reserve(out.outcomes.size());
      for (const select::SelectionOutcome& o : out.outcomes) out.batch.push_back(o.sample);
      break;
    }
    case SelectorKind::Tag::kItlm:
      out.batch = baseline::itlm_select(pool, params_, kind_.phi_hat, k, select_rng_);
      break;
    case SelectorKind::Tag::kNaive:
      out.batch = baseline::naive_select(pool, k, select_rng_);
      break;
    case SelectorKind::Tag::kOracle:
      out.batch = baseline::oracle_select(pool, k, select_rng_);
      break;
  }
  return out;
}

MetricsRow Trainer::run_slot() {
  require(!window_.empty(), ErrorKind::kInvalidArgument, "run_slot before warm-up");
  const PoolView pool = current_pool();
  const SlotSelection selection = select_batch(pool);
  if (observer_) observer_(slot_, selection);
  return finish_slot(selection);
}

std::vector<MetricsRow> run(const data::StreamPool& train, const data::StreamPool& test, const SelectorKind& kind,
                            const TrainerOptions& options, std::shared_ptr<const select::PoolGeometry> geometry,
                            const std::function<void(const MetricsRow&)>& on_row) {
  Trainer trainer(train, test, kind, options, std::move(geometry));
  std::vector<MetricsRow> rows;
  rows.reserve(static_cast<std::size_t>(options.total_slots));
  for (const MetricsRow& row : trainer.warmup(options.warmup_rounds)) {
    rows.push_back(row);
    if (on_row) on_row(row);
  }
  while (trainer.next_slot() <= options.total_slots) {
    rows.push_back(trainer.run_slot());
    if (on_row) on_row(rows.back());
  }
  return rows;
}

double final_accuracy(const std::vector<MetricsRow>& rows) {
  require(!rows.empty(), ErrorKind::kInvalidArgument, "no metric rows");
  return rows.back().test_accuracy;
}

double mean_accuracy(const std::vector<MetricsRow>& rows) {
  require(!rows.empty(), ErrorKind::kInvalidArgument, "no metric rows");
  double sum = 0.0;
  for (const MetricsRow& r : rows) sum += r.test_accuracy;
  return sum / static_cast<double>(rows.size());
}

double mean_selective_clean_fraction(const std::vector<MetricsRow>& rows, int warmup_rounds) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const MetricsRow& r : rows) {
    if (r.slot > warmup_rounds) {
      sum += r.selection_clean_fraction;
      ++n;
    }
  }
  require(n > 0, ErrorKind::kInvalidArgument, "no selective slots");
  return sum / static_cast<double>(n);
}

}  // namespace ogrs::train
