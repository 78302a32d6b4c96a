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

#include "ogrs/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

namespace ogrs::baseline {

using data::PoolView;

const char* to_string(SelectorKind::Tag tag) {
  switch (tag) {
    case SelectorKind::Tag::kOgrs: return "ogrs";
    case SelectorKind::Tag::kItlm: return "itlm";
    case SelectorKind::Tag::kNaive: return "naive";
    case SelectorKind::Tag::kOracle: return "oracle";
  }
  return "ogrs";
}

void SelectorKind::validate() const {
  if (tag == Tag::kItlm) {
    require(phi_hat >= 0.0 && phi_hat <= 1.0, ErrorKind::kValidation,
            fmt::format("itlm phi_hat must lie in [0, 1], got {}", phi_hat));
  }
}

std::string SelectorKind::label() const {
  if (tag == Tag::kItlm) return fmt::format("itlm({})", phi_hat);
  return to_string(tag);
}

std::size_t kept_set_size(std::size_t pool_size, double phi_hat) {
  const auto kept = static_cast<std::size_t>(std::floor(phi_hat * static_cast<double>(pool_size)));
  return std::clamp<std::size_t>(kept, 1, std::max<std::size_t>(pool_size, 1));
}

std::vector<std::size_t> itlm_kept_set(const PoolView& pool, const model::ModelParams& params, double phi_hat) {
  require(!pool.empty(), ErrorKind::kEmptyDataset, "itlm over an empty pool");
  SelectorKind::itlm(phi_hat).validate();
  std::vector<int> labels(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) labels[i] = pool[i].observed_label;
  const Vector losses = model::batch_losses(params, pool.feature_rows(), labels);

  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t m = kept_set_size(pool.size(), phi_hat);
  auto less = [&](std::size_t a, std::size_t b) {
    const double la = losses[static_cast<Eigen::Index>(a)];
    const double lb = losses[static_cast<Eigen::Index>(b)];
    return la < lb || (la == lb && pool[a].id < pool[b].id);
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m), order.end(), less);
  order.resize(m);
  return order;
}

std::vector<SampleRef> itlm_select(const PoolView& pool, const model::ModelParams& params, double phi_hat, int k,
                                   Rng& rng) {
  require(k >= 1, ErrorKind::kInvalidArgument, "K must be >= 1");
  const std::vector<std::size_t> kept = itlm_kept_set(pool, params, phi_hat);
  std::vector<SampleRef> out(static_cast<std::size_t>(k));
  for (SampleRef& s : out) s = &pool[kept[uniform_index(rng, kept.size())]];
  return out;
}

std::vector<SampleRef> naive_select(const PoolView& pool, int k, Rng& rng) {
  require(!pool.empty(), ErrorKind::kEmptyDataset, "naive selection over an empty pool");
  require(k >= 1, ErrorKind::kInvalidArgument, "K must be >= 1");
  std::vector<SampleRef> out(static_cast<std::size_t>(k));
  for (SampleRef& s : out) s = &pool[uniform_index(rng, pool.size())];
  return out;
}

std::vector<SampleRef> oracle_select(const PoolView& pool, int k, Rng& rng) {
  require(k >= 1, ErrorKind::kInvalidArgument, "K must be >= 1");
  std::vector<SampleRef> clean;
  for (const data::LabeledSample& s : pool) {
    if (s.is_clean()) clean.push_back(&s);
  }
  require(!clean.empty(), ErrorKind::kEmptyDataset, "oracle selection needs at least one clean sample");
  std::vector<SampleRef> out(static_cast<std::size_t>(k));
  for (SampleRef& s : out) s = clean[uniform_index(rng, clean.size())];
  return out;
}

std::vector<std::int64_t> brute_force_min_subset(const PoolView& pool, const model::ModelParams& params,
                                                 std::size_t m) {
  const std::size_t n = pool.size();
  require(n <= kBruteForceMaxPool, ErrorKind::kGuard,
          fmt::format("exhaustive subset search limited to {} samples, got {}", kBruteForceMaxPool, n));
  require(m >= 1 && m <= n, ErrorKind::kInvalidArgument, "subset size must lie in [1, pool size]");

  // Enumerate in id order so the first minimum found is lexicographically smallest.
  std::vector<std::size_t> by_id(n);
  std::iota(by_id.begin(), by_id.end(), std::size_t{0});
  std::sort(by_id.begin(), by_id.end(), [&](std::size_t a, std::size_t b) { return pool[a].id < pool[b].id; });
  std::vector<double> loss(n);
  for (std::size_t i = 0; i < n; ++i) loss[i] = model::loss(params, pool[by_id[i]]);

  // Bit i of the mask stands for by_id[n - 1 - i], so visiting masks in
  // decreasing order walks subsets in lexicographic id order.
  std::uint32_t best_mask = 0;
  double best = std::numeric_limits<double>::infinity();
  const std::uint32_t top = (1u << n) - 1u;
  std::uint32_t mask = top ^ ((1u << (n - m)) - 1u);
  for (;;) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << (n - 1 - i))) sum += loss[i];
    }
    if (sum < best) {
      best = sum;
      best_mask = mask;
    }
    // Step to the previous mask with the same popcount: ...1 0^z 1^t becomes
    // ...0 1^(t+1) 0^(z-1).
    std::uint32_t trailing_ones = 0;
    std::uint32_t v = mask;
    while (v & 1u) {
      ++trailing_ones;
      v >>= 1;
    }
    if (v == 0) break;
    std::uint32_t zeros = 0;
    while (!(v & 1u)) {
      ++zeros;
      v >>= 1;
    }
    const std::uint32_t pos = trailing_ones + zeros;
    const std::uint32_t ones = trailing_ones + 1;
    mask = (mask & ~((2u << pos) - 1u)) | (((1u << ones) - 1u) << (pos - ones));
  }

  std::vector<std::int64_t> ids;
  for (std::size_t i = 0; i < n; ++i) {
    if (best_mask & (1u << (n - 1 - i))) ids.push_back(pool[by_id[i]].id);
  }
  return ids;
}

}  // namespace ogrs::baseline
