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

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <doctest.h>

#include "ogrs/common.hpp"
#include "ogrs/datastream.hpp"
#include "ogrs/models.hpp"

namespace ogrs::test {

#define CHECK_ERROR_KIND(expr, expected_kind)              \
  do {                                                     \
    bool thrown_ = false;                                  \
    try {                                                  \
      (void)(expr);                                        \
    } catch (const ::ogrs::Error& e_) {                    \
      thrown_ = true;                                      \
      CHECK_MESSAGE(e_.kind() == (expected_kind), e_.what()); \
    }                                                      \
    CHECK_MESSAGE(thrown_, "expected an ogrs::Error");     \
  } while (0)

inline data::LabeledSample sample(std::int64_t id, std::vector<double> x, int observed, int truth,
                                  std::int64_t slot) {
  data::LabeledSample s;
  s.id = id;
  s.features = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
  s.observed_label = observed;
  s.true_label = truth;
  s.arrival_slot = slot;
  return s;
}

/// n samples in d dimensions with N(0, scale^2) features, one per slot.
inline data::StreamPool random_pool(std::size_t n, int d, int classes, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::vector<data::LabeledSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(static_cast<std::size_t>(d));
    for (double& v : x) v = scale * standard_normal(rng);
    const int y = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(classes)));
    out.push_back(sample(static_cast<std::int64_t>(i), x, y, y, static_cast<std::int64_t>(i) + 1));
  }
  return data::StreamPool(std::move(out), classes);
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("ogrs_lab_tests_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace ogrs::test
