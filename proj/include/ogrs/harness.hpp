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

// Experiment configs, seeded multi-method runs, comparison tables, the regret
// audit and their CSV / JSON / SVG artifacts.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ogrs/baselines.hpp"
#include "ogrs/datastream.hpp"
#include "ogrs/models.hpp"
#include "ogrs/selector.hpp"
#include "ogrs/trainer.hpp"

namespace ogrs::harness {

enum class DatasetKind { kGaussianMixture, kStrokeDigits, kCsv };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::kGaussianMixture;
  /// Samples generated; ignored for csv.
  std::int64_t n = 300;
  /// Trailing samples held out as the clean test set.
  std::int64_t test_size = 100;
  std::int64_t arrivals_per_slot = 1;
  /// Generator seed; unset means each run seed draws its own dataset.
  std::optional<std::uint64_t> seed;
  std::string path;  // csv only
  int label_column = -1;
  bool has_header = false;
  int num_classes = 0;  // csv only; 0 infers

  bool operator==(const DatasetSpec&) const = default;
};

struct SelectorSpec {
  baseline::SelectorKind kind;
  /// Unique within a config; defaults to kind.label().
  std::string label;
  select::SelectorConfig ogrs;

  bool operator==(const SelectorSpec&) const = default;
};

struct AuditSpec {
  std::vector<int> m_grid = {8, 16, 32, 64, 128, 256};
  int trials = 30;
  double slope_max = 0.75;

  bool operator==(const AuditSpec&) const = default;
};

struct ExperimentConfig {
  std::string name = "experiment";
  DatasetSpec dataset;
  /// Training-stream clean ratio schedule.
  std::vector<data::ScheduleSegment> noise;
  /// Constant-ratio shorthand spanning the whole stream; exclusive with noise.
  std::optional<double> clean_ratio = 0.6;
  model::ArchKind model = model::ArchKind::kLogisticRegression;
  int hidden_width = 64;
  std::int64_t total_slots = 200;
  int warmup_rounds = 50;
  int samples_per_slot = 32;
  /// Unset means the architecture default.
  std::optional<double> learning_rate;
  int steps_per_slot = 1;
  int eval_stride = 50;
  select::SelectorConfig ogrs;
  std::vector<SelectorSpec> selectors;
  std::vector<std::uint64_t> seeds = {1};
  std::string output_dir = "out";
  bool selector_traces = false;
  /// Columns of the comparison table; empty means one column at the
  /// configured noise.
  std::vector<double> compare_clean_ratios;
  AuditSpec audit;

  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

/// Strict YAML parse: unknown keys, bad types and out-of-range values fail
/// with kParse / kValidation naming the line and field.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<string>");
ExperimentConfig load_config(const std::filesystem::path& path);
/// Every field spelled out, defaults included; parse_config inverts it.
std::string serialize_config(const ExperimentConfig& config);

/// "itlm(0.5)" -> "itlm-0.5": safe for file names.
std::string file_label(const std::string& label);

/// Train and test streams for one run seed. The training noise follows the
/// config schedule, or a constant clean_ratio_override when given.
struct PreparedData {
  data::StreamPool train;
  data::StreamPool test;
  std::shared_ptr<const select::PoolGeometry> geometry;
};
PreparedData prepare_data(const ExperimentConfig& config, std::uint64_t seed,
                          std::optional<double> clean_ratio_override = std::nullopt);

model::Architecture architecture_for(const ExperimentConfig& config, const data::StreamPool& train);
train::TrainerOptions trainer_options(const ExperimentConfig& config, const SelectorSpec& selector,
                                      const data::StreamPool& train, std::uint64_t seed);

struct RunResult {
  std::string selector;
  std::uint64_t seed = 0;
  /// Comparison column: "phi=0.9", or "configured" for the config noise.
  std::string setting;
  std::vector<train::MetricsRow> rows;
  std::uint64_t pool_fingerprint = 0;
  bool failed = false;
  std::string error_kind;
  std::string error;
};

struct ComparisonCell {
  std::string selector;
  std::string setting;
  double mean = 0.0;
  double stddev = 0.0;
  int seeds = 0;
  bool not_available = false;
  bool best = false;
};

struct ComparisonTable {
  std::vector<std::string> selectors;
  std::vector<std::string> settings;
  /// Row-major: selectors x settings.
  std::vector<ComparisonCell> cells;
  const ComparisonCell& at(std::size_t selector, std::size_t setting) const;
};

/// Cells whose mean final accuracy is below 1/C + 0.02 are N/A; the best
/// remaining cell per column is flagged.
ComparisonTable make_table(const std::vector<RunResult>& runs, const std::vector<std::string>& selectors,
                           const std::vector<std::string>& settings, int num_classes);

struct Outcome {
  int exit_code = 0;
  std::vector<RunResult> runs;
  std::optional<ComparisonTable> table;
  std::optional<select::AuditResult> audit;
  std::vector<std::filesystem::path> files;
};

/// Every selector x seed; writes one trace CSV per run, summary.json,
/// accuracy.svg and manifest.json. Exit code 1 when any run failed.
Outcome run_experiment(const ExperimentConfig& config);

/// As run_experiment over every clean ratio column, then comparison.csv and
/// comparison.json.
Outcome compare(const ExperimentConfig& config);

/// Warm-up on the first seed's stream, then the regret audit over the grid.
/// Writes audit.csv and audit.json; exit code 1 when the slope exceeds
/// slope_max.
Outcome audit(const ExperimentConfig& config);

/// Parallel worker cap: OGRS_LAB_THREADS when set, else the hardware count.
unsigned worker_count();

}  // namespace ogrs::harness
