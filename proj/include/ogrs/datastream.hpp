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

// Labeled sample streams: generation, CSV ingestion, label-noise injection and
// the slot-indexed view D_t = {samples that arrived at or before slot t}.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ogrs/common.hpp"

namespace ogrs::data {

struct LabeledSample {
  std::int64_t id = 0;
  Vector features;
  int observed_label = 0;
  /// Ground truth. Only the oracle selector and the metrics may read it.
  int true_label = 0;
  std::int64_t arrival_slot = 1;

  bool is_clean() const { return observed_label == true_label; }
};

class PoolView;

/// Append-only, immutable-after-construction sequence of samples ordered by
/// arrival slot. Keeps a contiguous row-major copy of the features for batch
/// evaluation.
class StreamPool {
 public:
  StreamPool() = default;
  /// Validates ids (unique), arrival slots (>= 1, non-decreasing), feature
  /// dimension (uniform, > 0) and labels (in [0, num_classes)).
  StreamPool(std::vector<LabeledSample> samples, int num_classes);

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  int dimension() const { return dimension_; }
  int num_classes() const { return num_classes_; }
  std::int64_t max_slot() const { return samples_.empty() ? 0 : samples_.back().arrival_slot; }

  const std::vector<LabeledSample>& samples() const { return samples_; }
  const LabeledSample& operator[](std::size_t i) const { return samples_[i]; }
  auto begin() const { return samples_.begin(); }
  auto end() const { return samples_.end(); }
  const Matrix& feature_matrix() const { return *features_; }

  /// Number of samples with arrival_slot <= t (t may exceed max_slot).
  std::size_t count_through(std::int64_t t) const;

  /// Stable fingerprint of ids, labels, slots and feature bytes.
  std::uint64_t fingerprint() const;

 private:
  std::vector<LabeledSample> samples_;
  std::shared_ptr<const Matrix> features_ = std::make_shared<const Matrix>();
  int dimension_ = 0;
  int num_classes_ = 0;
};

/// Read-only prefix of a StreamPool: the pool as it stands at one slot.
class PoolView {
 public:
  PoolView() = default;
  PoolView(const StreamPool& pool, std::size_t count, std::int64_t slot)
      : pool_(&pool), count_(count), slot_(slot) {}

  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  std::int64_t slot() const { return slot_; }
  int dimension() const { return pool_ ? pool_->dimension() : 0; }
  int num_classes() const { return pool_ ? pool_->num_classes() : 0; }

  const LabeledSample& operator[](std::size_t i) const { return pool_->samples()[i]; }
  std::span<const LabeledSample> samples() const {
    return pool_ ? std::span<const LabeledSample>(pool_->samples().data(), count_)
                 : std::span<const LabeledSample>();
  }
  auto begin() const { return samples().begin(); }
  auto end() const { return samples().end(); }

  /// First size() rows of the pool feature matrix.
  Eigen::Ref<const Matrix> feature_rows() const {
    return pool_->feature_matrix().topRows(static_cast<Eigen::Index>(count_));
  }
  const StreamPool* pool() const { return pool_; }

 private:
  const StreamPool* pool_ = nullptr;
  std::size_t count_ = 0;
  std::int64_t slot_ = 0;
};

/// D_t. Requires 1 <= t <= pool.max_slot().
PoolView pool_at(const StreamPool& pool, std::int64_t t);

/// Whole pool as a view, slot = max_slot.
PoolView whole(const StreamPool& pool);

double clean_fraction(std::span<const LabeledSample> samples);

// ---------------------------------------------------------------------------
// Noise schedules

struct ScheduleSegment {
  std::int64_t start_slot = 1;
  std::int64_t end_slot = 1;
  /// Fraction of labels left untouched in this segment.
  double clean_ratio = 1.0;

  bool operator==(const ScheduleSegment&) const = default;
};

class NoiseSchedule {
 public:
  const std::vector<ScheduleSegment>& segments() const { return segments_; }
  std::int64_t last_slot() const { return segments_.back().end_slot; }
  /// Throws kScheduleGap when the slot is not covered.
  double clean_ratio_at(std::int64_t slot) const;

  bool operator==(const NoiseSchedule&) const = default;

 private:
  friend NoiseSchedule make_schedule(std::vector<ScheduleSegment> segments);
  std::vector<ScheduleSegment> segments_;
};

/// Segments must start at slot 1, be sorted and contiguous, and carry ratios
/// in [0, 1]. Errors name the offending segment index.
NoiseSchedule make_schedule(std::vector<ScheduleSegment> segments);

NoiseSchedule constant_schedule(std::int64_t last_slot, double clean_ratio);

// ---------------------------------------------------------------------------
// Sources

/// Two-class 2-D mixture: y=1 ~ N([1,1], [[5,1],[1,5]]),
/// y=0 ~ N([-1,-1], [[10,1],[1,3]]). Balanced, shuffled, one arrival per slot.
StreamPool generate_gaussian_mixture(std::int64_t n, std::uint64_t seed);

/// Ten-class 28x28 stroke-rendered digits (784 features in [0, 1]) with random
/// affine jitter, stroke width and pixel noise. Used as the MNIST-style corpus.
StreamPool generate_stroke_digits(std::int64_t n, std::uint64_t seed);

/// Symmetric label flipping: with probability 1 - phi(slot) the observed label
/// is replaced by one drawn uniformly from the C - 1 classes other than the
/// true label. Features, ids and true labels are untouched.
StreamPool inject_label_noise(const StreamPool& pool, const NoiseSchedule& schedule, int num_classes,
                              std::uint64_t seed);

struct CsvOptions {
  /// Column holding the integer label; negative counts from the end.
  int label_column = -1;
  bool has_header = false;
  std::int64_t arrivals_per_slot = 1;
  /// 0 infers max(label) + 1 (at least 2).
  int num_classes = 0;
};

StreamPool load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

/// Writes features then label (last column), no header. Uses shortest
/// round-trip formatting so load_csv reproduces the features exactly.
void write_csv(const StreamPool& pool, const std::filesystem::path& path);

/// Copies samples and renumbers arrival slots: sample i arrives at slot
/// i / per_slot + 1. Ids are kept.
StreamPool restream(std::span<const LabeledSample> samples, int num_classes, std::int64_t per_slot);

}  // namespace ogrs::data
