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

#include "ogrs/datastream.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <unordered_set>

#include <Eigen/Cholesky>

namespace ogrs::data {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_mix(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= kFnvPrime;
  }
}

template <typename T>
void fnv_mix_value(std::uint64_t& h, const T& v) {
  fnv_mix(h, &v, sizeof(T));
}

}  // namespace

StreamPool::StreamPool(std::vector<LabeledSample> samples, int num_classes)
    : samples_(std::move(samples)), num_classes_(num_classes) {
  require(num_classes_ >= 1, ErrorKind::kInvalidArgument, "pool needs at least one class");
  if (samples_.empty()) return;
  dimension_ = static_cast<int>(samples_.front().features.size());
  require(dimension_ > 0, ErrorKind::kInvalidArgument, "samples must have at least one feature");

  std::unordered_set<std::int64_t> ids;
  ids.reserve(samples_.size());
  std::int64_t previous_slot = 1;
  auto matrix = std::make_shared<Matrix>(static_cast<Eigen::Index>(samples_.size()), dimension_);
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const LabeledSample& s = samples_[i];
    const std::string where = "sample " + std::to_string(s.id);
    require(ids.insert(s.id).second, ErrorKind::kInvalidArgument, "duplicate id " + std::to_string(s.id));
    require(s.features.size() == dimension_, ErrorKind::kInvalidArgument,
            where + " has dimension " + std::to_string(s.features.size()) + ", expected " +
                std::to_string(dimension_));
    require(s.observed_label >= 0 && s.observed_label < num_classes_ && s.true_label >= 0 &&
                s.true_label < num_classes_,
            ErrorKind::kInvalidArgument, where + " has a label outside [0, " + std::to_string(num_classes_) + ")");
    require(s.arrival_slot >= previous_slot, ErrorKind::kInvalidArgument,
            where + " arrives out of order (slot " + std::to_string(s.arrival_slot) + ")");
    previous_slot = s.arrival_slot;
    matrix->row(static_cast<Eigen::Index>(i)) = s.features.transpose();
  }
  features_ = std::move(matrix);
}

std::size_t StreamPool::count_through(std::int64_t t) const {
  const auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                                   [](std::int64_t slot, const LabeledSample& s) { return slot < s.arrival_slot; });
  return static_cast<std::size_t>(it - samples_.begin());
}

std::uint64_t StreamPool::fingerprint() const {
  std::uint64_t h = kFnvOffset;
  fnv_mix_value(h, num_classes_);
  fnv_mix_value(h, dimension_);
  for (const LabeledSample& s : samples_) {
    fnv_mix_value(h, s.id);
    fnv_mix_value(h, s.observed_label);
    fnv_mix_value(h, s.true_label);
    fnv_mix_value(h, s.arrival_slot);
    fnv_mix(h, s.features.data(), sizeof(double) * static_cast<std::size_t>(s.features.size()));
  }
  return h;
}

PoolView pool_at(const StreamPool& pool, std::int64_t t) {
  require(!pool.empty(), ErrorKind::kEmptyDataset, "pool_at on an empty pool");
  require(t >= 1 && t <= pool.max_slot(), ErrorKind::kInvalidArgument,
          "slot " + std::to_string(t) + " outside [1, " + std::to_string(pool.max_slot()) + "]");
  return PoolView(pool, pool.count_through(t), t);
}

PoolView whole(const StreamPool& pool) { return PoolView(pool, pool.size(), pool.max_slot()); }

double clean_fraction(std::span<const LabeledSample> samples) {
  if (samples.empty()) return 0.0;
  const auto clean = std::count_if(samples.begin(), samples.end(), [](const LabeledSample& s) { return s.is_clean(); });
  return static_cast<double>(clean) / static_cast<double>(samples.size());
}

// ---------------------------------------------------------------------------

double NoiseSchedule::clean_ratio_at(std::int64_t slot) const {
  const auto it = std::upper_bound(segments_.begin(), segments_.end(), slot,
                                   [](std::int64_t s, const ScheduleSegment& seg) { return s < seg.start_slot; });
  if (it == segments_.begin() || std::prev(it)->end_slot < slot) {
    fail(ErrorKind::kScheduleGap, "no noise segment covers slot " + std::to_string(slot));
  }
  return std::prev(it)->clean_ratio;
}

NoiseSchedule make_schedule(std::vector<ScheduleSegment> segments) {
  require(!segments.empty(), ErrorKind::kValidation, "schedule has no segments");
  std::int64_t expected_start = 1;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const ScheduleSegment& seg = segments[i];
    const std::string where = "segment " + std::to_string(i);
    if (!(seg.clean_ratio >= 0.0 && seg.clean_ratio <= 1.0)) {
      fail(ErrorKind::kValidation, where + ": clean ratio " + std::to_string(seg.clean_ratio) + " outside [0, 1]");
    }
    if (seg.end_slot < seg.start_slot) {
      fail(ErrorKind::kValidation, where + ": end slot " + std::to_string(seg.end_slot) + " precedes start slot " +
                                       std::to_string(seg.start_slot));
    }
    if (seg.start_slot > expected_start) {
      fail(ErrorKind::kScheduleGap, where + ": gap at slot " + std::to_string(expected_start));
    }
    if (seg.start_slot < expected_start) {
      fail(ErrorKind::kValidation, where + ": overlaps previous segment at slot " + std::to_string(seg.start_slot));
    }
    expected_start = seg.end_slot + 1;
  }
  NoiseSchedule schedule;
  schedule.segments_ = std::move(segments);
  return schedule;
}

NoiseSchedule constant_schedule(std::int64_t last_slot, double clean_ratio) {
  return make_schedule({{1, last_slot, clean_ratio}});
}

// ---------------------------------------------------------------------------

StreamPool generate_gaussian_mixture(std::int64_t n, std::uint64_t seed) {
  require(n >= 2, ErrorKind::kInvalidArgument, "gaussian mixture needs n >= 2, got " + std::to_string(n));
  Rng rng = make_rng(seed, 0x6d6978ULL);

  Eigen::Matrix2d cov1;
  cov1 << 5.0, 1.0, 1.0, 5.0;
  Eigen::Matrix2d cov0;
  cov0 << 10.0, 1.0, 1.0, 3.0;
  const Eigen::Matrix2d chol1 = cov1.llt().matrixL();
  const Eigen::Matrix2d chol0 = cov0.llt().matrixL();
  const Eigen::Vector2d mean1(1.0, 1.0);
  const Eigen::Vector2d mean0(-1.0, -1.0);

  std::vector<int> labels(static_cast<std::size_t>(n));
  const std::int64_t ones = n / 2;
  for (std::int64_t i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i < ones ? 1 : 0;
  for (std::size_t i = labels.size() - 1; i > 0; --i) {
    std::swap(labels[i], labels[uniform_index(rng, i + 1)]);
  }

  std::vector<LabeledSample> samples;
  samples.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Eigen::Vector2d z(standard_normal(rng), standard_normal(rng));
    const Eigen::Vector2d x = labels[i] == 1 ? Eigen::Vector2d(mean1 + chol1 * z) : Eigen::Vector2d(mean0 + chol0 * z);
    LabeledSample s;
    s.id = static_cast<std::int64_t>(i);
    s.features = x;
    s.observed_label = s.true_label = labels[i];
    s.arrival_slot = static_cast<std::int64_t>(i) + 1;
    samples.push_back(std::move(s));
  }
  return StreamPool(std::move(samples), 2);
}

StreamPool inject_label_noise(const StreamPool& pool, const NoiseSchedule& schedule, int num_classes,
                              std::uint64_t seed) {
  require(num_classes >= 2, ErrorKind::kInvalidArgument, "label noise needs at least two classes");
  require(pool.num_classes() <= num_classes, ErrorKind::kInvalidArgument,
          "pool has more classes than the noise model");
  Rng rng = make_rng(seed, 0x6e6f697365ULL);
  std::vector<LabeledSample> out = pool.samples();
  for (LabeledSample& s : out) {
    const double phi = schedule.clean_ratio_at(s.arrival_slot);
    const double u = uniform01(rng);
    if (u < phi) {
      s.observed_label = s.true_label;
      continue;
    }
    // Uniform over the other C - 1 classes: draw in [0, C-1) and skip the truth.
    int label = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(num_classes - 1)));
    if (label >= s.true_label) ++label;
    s.observed_label = label;
  }
  return StreamPool(std::move(out), num_classes);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

StreamPool load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  require(options.arrivals_per_slot >= 1, ErrorKind::kInvalidArgument, "arrivals_per_slot must be >= 1");
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot open " + path.string());

  std::vector<LabeledSample> samples;
  std::string line;
  std::size_t line_number = 0;
  int dimension = -1;
  int max_label = -1;
  bool skipped_header = !options.has_header;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    const auto fields = split_fields(text);
    const std::string where = path.string() + ":" + std::to_string(line_number);
    if (fields.size() < 2) fail(ErrorKind::kParse, where + ": expected at least one feature and a label");
    const int columns = static_cast<int>(fields.size());
    const int label_col = options.label_column < 0 ? columns + options.label_column : options.label_column;
    if (label_col < 0 || label_col >= columns) {
      fail(ErrorKind::kParse, where + ": label column " + std::to_string(options.label_column) + " out of range");
    }
    if (dimension < 0) dimension = columns - 1;
    if (columns - 1 != dimension) {
      fail(ErrorKind::kParse, where + ": row has " + std::to_string(columns - 1) + " features, expected " +
                                  std::to_string(dimension));
    }

    LabeledSample s;
    s.features.resize(dimension);
    int k = 0;
    for (int c = 0; c < columns; ++c) {
      const std::string_view field = trim(fields[static_cast<std::size_t>(c)]);
      if (c == label_col) {
        int label = 0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), label);
        if (ec != std::errc() || ptr != field.data() + field.size() || label < 0) {
          fail(ErrorKind::kParse, where + ": bad label '" + std::string(field) + "'");
        }
        s.observed_label = s.true_label = label;
        max_label = std::max(max_label, label);
        continue;
      }
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
      if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(value)) {
        fail(ErrorKind::kParse, where + ": bad number '" + std::string(field) + "' in column " + std::to_string(c + 1));
      }
      s.features[k++] = value;
    }
    s.id = static_cast<std::int64_t>(samples.size());
    s.arrival_slot = s.id / options.arrivals_per_slot + 1;
    samples.push_back(std::move(s));
  }
  require(!samples.empty(), ErrorKind::kEmptyDataset, path.string() + " contains no samples");
  int num_classes = options.num_classes > 0 ? options.num_classes : std::max(2, max_label + 1);
  require(max_label < num_classes, ErrorKind::kParse,
          path.string() + ": label " + std::to_string(max_label) + " exceeds num_classes");
  return StreamPool(std::move(samples), num_classes);
}

void write_csv(const StreamPool& pool, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + path.string());
  char buffer[64];
  std::string row;
  for (const LabeledSample& s : pool.samples()) {
    row.clear();
    for (Eigen::Index k = 0; k < s.features.size(); ++k) {
      const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), s.features[k]);
      row.append(buffer, ptr);
      row.push_back(',');
    }
    row += std::to_string(s.observed_label);
    row.push_back('\n');
    out << row;
  }
  require(static_cast<bool>(out), ErrorKind::kIo, "write failed for " + path.string());
}

StreamPool restream(std::span<const LabeledSample> samples, int num_classes, std::int64_t per_slot) {
  require(per_slot >= 1, ErrorKind::kInvalidArgument, "arrivals per slot must be >= 1");
  std::vector<LabeledSample> out(samples.begin(), samples.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].arrival_slot = static_cast<std::int64_t>(i) / per_slot + 1;
  }
  return StreamPool(std::move(out), num_classes);
}

}  // namespace ogrs::data
