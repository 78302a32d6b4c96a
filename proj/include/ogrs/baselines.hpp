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

// Reference selectors: trimmed-loss (ITLM), uniform (naive) and ground-truth
// clean (oracle). All sample with replacement.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ogrs/datastream.hpp"
#include "ogrs/models.hpp"

namespace ogrs::baseline {

struct SelectorKind {
  enum class Tag { kOgrs, kItlm, kNaive, kOracle };
  Tag tag = Tag::kOgrs;
  /// Assumed clean ratio; ITLM only.
  double phi_hat = 1.0;

  static SelectorKind ogrs() { return {Tag::kOgrs, 1.0}; }
  static SelectorKind itlm(double phi_hat) { return {Tag::kItlm, phi_hat}; }
  static SelectorKind naive() { return {Tag::kNaive, 1.0}; }
  static SelectorKind oracle() { return {Tag::kOracle, 1.0}; }

  void validate() const;
  /// "ogrs", "itlm(0.5)", "naive", "oracle".
  std::string label() const;

  bool operator==(const SelectorKind&) const = default;
};

const char* to_string(SelectorKind::Tag tag);

using model::SampleRef;

/// max(1, floor(phi_hat * n)).
std::size_t kept_set_size(std::size_t pool_size, double phi_hat);

/// Positions of the kept set, ordered by (loss under params, id).
std::vector<std::size_t> itlm_kept_set(const data::PoolView& pool, const model::ModelParams& params, double phi_hat);

/// Keeps the lowest-loss samples, then draws K of them uniformly.
std::vector<SampleRef> itlm_select(const data::PoolView& pool, const model::ModelParams& params, double phi_hat,
                                   int k, Rng& rng);

std::vector<SampleRef> naive_select(const data::PoolView& pool, int k, Rng& rng);

/// K draws from the samples whose observed label is correct.
std::vector<SampleRef> oracle_select(const data::PoolView& pool, int k, Rng& rng);

/// Exhaustive minimiser of the summed loss over subsets of size m. Ties go to
/// the lexicographically smallest sorted id list. Returns sorted ids.
std::vector<std::int64_t> brute_force_min_subset(const data::PoolView& pool, const model::ModelParams& params,
                                                 std::size_t m);

constexpr std::size_t kBruteForceMaxPool = 22;

}  // namespace ogrs::baseline
