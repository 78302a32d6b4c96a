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

#include "ogrs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>
#include <variant>

#include <fmt/format.h>
#include <json.hpp>

#include "svg.hpp"

namespace ogrs::harness {

namespace fs = std::filesystem;
using baseline::SelectorKind;
using json = nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kDataStream = 0x64617461;
constexpr std::uint64_t kNoiseStream = 0x6e6f6973;
constexpr std::uint64_t kAuditStream = 0x61756474;

constexpr const char* kTraceHeader =
    "# schema=1\nslot,test_accuracy,selection_clean_fraction,mean_RL,mean_Rw,mean_mu_final,train_loss\n";
constexpr const char* kSelectorTraceHeader = "# schema=1\nselection_index,iteration,sample_id,mu,grad_norm,g_value\n";

std::string fmt_real(double v) { return fmt::format("{}", v); }

std::string trace_line(const train::MetricsRow& r) {
  return fmt::format("{},{},{},{},{},{},{}\n", r.slot, fmt_real(r.test_accuracy), fmt_real(r.selection_clean_fraction),
                     fmt_real(r.mean_rl), fmt_real(r.mean_rw), fmt_real(r.mean_mu_final), fmt_real(r.train_loss));
}

std::string setting_label(std::optional<double> ratio) {
  return ratio ? fmt::format("phi={}", *ratio) : std::string("configured");
}

std::string setting_prefix(const std::string& setting) {
  return setting == "configured" ? std::string() : file_label(setting) + "_";
}

struct Job {
  std::size_t data_index;
  std::size_t selector;
  std::uint64_t seed;
  std::string setting;
};

/// Messages from workers to the single writing thread.
struct RowEvent {
  std::size_t job;
  train::MetricsRow row;
};
struct SelectionEvent {
  std::size_t job;
  std::string lines;
};
struct DoneEvent {
  std::size_t job;
};
using Event = std::variant<RowEvent, SelectionEvent, DoneEvent>;

class EventQueue {
 public:
  void push(Event e) {
    {
      std::lock_guard lock(mutex_);
      events_.push_back(std::move(e));
    }
    cv_.notify_one();
  }
  Event pop() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return !events_.empty(); });
    Event e = std::move(events_.front());
    events_.pop_front();
    return e;
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Event> events_;
};

template <typename F>
void parallel_for(std::size_t n, F&& body) {
  const std::size_t workers = std::min<std::size_t>(worker_count(), n);
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t i = next++; i < n; i = next++) body(i);
  };
  std::vector<std::jthread> threads;
  for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(loop);
  loop();
}

class Artifacts {
 public:
  explicit Artifacts(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  void declare(const std::string& name, const std::string& kind) {
    entries_.push_back({name, kind});
  }

  void write(const std::string& name, const std::string& kind, const std::string& content) {
    std::ofstream out(path(name), std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::kIo, fmt::format("cannot write '{}'", path(name).string()));
    out << content;
    out.close();
    require(static_cast<bool>(out), ErrorKind::kIo, fmt::format("failed writing '{}'", path(name).string()));
    declare(name, kind);
  }

  std::vector<fs::path> finish() {
    declare("manifest.json", "manifest");
    json files = json::array();
    for (const auto& [name, kind] : entries_) files.push_back({{"path", name}, {"kind", kind}});
    std::ofstream out(path("manifest.json"), std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::kIo, "cannot write manifest.json");
    out << json{{"schema", 1}, {"files", files}}.dump(2) << "\n";
    std::vector<fs::path> paths;
    for (const auto& e : entries_) paths.push_back(path(e.first));
    return paths;
  }

 private:
  fs::path dir_;
  std::vector<std::pair<std::string, std::string>> entries_;
};

struct RunSet {
  std::vector<RunResult> runs;
  std::vector<std::string> settings;
  int num_classes = 2;
  bool any_failed = false;
};

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

bool uses_ogrs(const ExperimentConfig& config) {
  return std::any_of(config.selectors.begin(), config.selectors.end(),
                     [](const SelectorSpec& s) { return s.kind.tag == SelectorKind::Tag::kOgrs; });
}

/// Runs every (setting, seed, selector) and streams trace CSVs through one
/// writer. Data preparation failures mark every run of that stream failed.
RunSet execute(const ExperimentConfig& config, const std::vector<std::optional<double>>& ratios,
               Artifacts& artifacts) {
  RunSet set;
  struct DataSlot {
    std::optional<double> ratio;
    std::uint64_t seed;
    std::optional<PreparedData> data;
    std::string error_kind;
    std::string error;
  };
  std::vector<DataSlot> datasets;
  for (const auto& ratio : ratios) {
    set.settings.push_back(setting_label(ratio));
    for (std::uint64_t seed : config.seeds) datasets.push_back({ratio, seed, std::nullopt, {}, {}});
  }
  parallel_for(datasets.size(), [&](std::size_t i) {
    try {
      datasets[i].data = prepare_data(config, datasets[i].seed, datasets[i].ratio);
    } catch (const Error& e) {
      datasets[i].error_kind = to_string(e.kind());
      datasets[i].error = e.what();
    } catch (const std::exception& e) {
      datasets[i].error_kind = to_string(ErrorKind::kRunFailed);
      datasets[i].error = e.what();
    }
  });
  for (const DataSlot& d : datasets) {
    if (d.data) set.num_classes = std::max(set.num_classes, d.data->train.num_classes());
  }

  std::vector<Job> jobs;
  for (std::size_t di = 0; di < datasets.size(); ++di) {
    for (std::size_t s = 0; s < config.selectors.size(); ++s) {
      jobs.push_back({di, s, datasets[di].seed, setting_label(datasets[di].ratio)});
    }
  }
  set.runs.resize(jobs.size());
  std::vector<std::string> trace_names(jobs.size());
  std::vector<std::string> selector_names(jobs.size());
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const SelectorSpec& spec = config.selectors[jobs[j].selector];
    const std::string stem =
        fmt::format("{}{}_seed{}", setting_prefix(jobs[j].setting), file_label(spec.label), jobs[j].seed);
    trace_names[j] = stem + ".csv";
    if (config.selector_traces && spec.kind.tag == SelectorKind::Tag::kOgrs) {
      selector_names[j] = stem + "_selector.csv";
    }
    RunResult& r = set.runs[j];
    r.selector = spec.label;
    r.seed = jobs[j].seed;
    r.setting = jobs[j].setting;
  }

  EventQueue queue;
  std::jthread writer([&] {
    std::vector<std::ofstream> traces(jobs.size());
    std::vector<std::ofstream> selections(jobs.size());
    std::size_t open = jobs.size();
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      traces[j].open(artifacts.path(trace_names[j]), std::ios::binary | std::ios::trunc);
      traces[j] << kTraceHeader;
      if (!selector_names[j].empty()) {
        selections[j].open(artifacts.path(selector_names[j]), std::ios::binary | std::ios::trunc);
        selections[j] << kSelectorTraceHeader;
      }
    }
    while (open > 0) {
      const Event e = queue.pop();
      if (const auto* row = std::get_if<RowEvent>(&e)) {
        traces[row->job] << trace_line(row->row);
        if (row->row.evaluated) traces[row->job].flush();
      } else if (const auto* sel = std::get_if<SelectionEvent>(&e)) {
        selections[sel->job] << sel->lines;
      } else {
        const std::size_t j = std::get<DoneEvent>(e).job;
        traces[j].close();
        if (selections[j].is_open()) selections[j].close();
        --open;
      }
    }
  });

  parallel_for(jobs.size(), [&](std::size_t j) {
    const Job& job = jobs[j];
    const SelectorSpec& spec = config.selectors[job.selector];
    RunResult& result = set.runs[j];
    const DataSlot& slot = datasets[job.data_index];
    try {
      require(slot.data.has_value(), ErrorKind::kRunFailed, slot.error);
      const PreparedData& data = *slot.data;
      result.pool_fingerprint = data.train.fingerprint();
      const train::TrainerOptions options = trainer_options(config, spec, data.train, job.seed);
      train::Trainer trainer(data.train, data.test, spec.kind, options, data.geometry);
      std::int64_t selection_index = 0;
      if (!selector_names[j].empty()) {
        trainer.set_selection_observer([&](std::int64_t, const train::SlotSelection& selection) {
          std::string lines;
          for (const select::SelectionOutcome& o : selection.outcomes) {
            for (const select::TraceRow& row : o.trace.rows) {
              lines += fmt::format("{},{},{},{},{},{}\n", selection_index, row.iteration, row.sample_id,
                                   fmt_real(row.mu), fmt_real(row.loss_grad.norm()), fmt_real(row.g));
            }
            ++selection_index;
          }
          queue.push(SelectionEvent{j, std::move(lines)});
        });
      }
      auto emit = [&](const train::MetricsRow& row) {
        result.rows.push_back(row);
        queue.push(RowEvent{j, row});
      };
      for (int round = 0; round < options.warmup_rounds; ++round) emit(trainer.warmup(1).front());
      while (trainer.next_slot() <= options.total_slots) emit(trainer.run_slot());
    } catch (const Error& e) {
      result.failed = true;
      result.error_kind = e.kind() == ErrorKind::kRunFailed && !slot.error_kind.empty() ? slot.error_kind
                                                                                         : to_string(e.kind());
      result.error = e.what();
    } catch (const std::exception& e) {
      result.failed = true;
      result.error_kind = to_string(ErrorKind::kRunFailed);
      result.error = e.what();
    }
    queue.push(DoneEvent{j});
  });
  writer.join();

  for (std::size_t j = 0; j < jobs.size(); ++j) {
    artifacts.declare(trace_names[j], "trace");
    if (!selector_names[j].empty()) artifacts.declare(selector_names[j], "selector_trace");
    set.any_failed = set.any_failed || set.runs[j].failed;
  }
  return set;
}

json summary_json(const ExperimentConfig& config, const RunSet& set, const std::string& command) {
  json selectors = json::array();
  for (const std::string& setting : set.settings) {
    for (const SelectorSpec& spec : config.selectors) {
      json seeds = json::array();
      std::vector<double> finals;
      std::vector<double> means;
      for (const RunResult& r : set.runs) {
        if (r.selector != spec.label || r.setting != setting) continue;
        json entry = {{"seed", r.seed}, {"failed", r.failed}};
        if (!r.failed && !r.rows.empty()) {
          const double fin = train::final_accuracy(r.rows);
          const double mean = train::mean_accuracy(r.rows);
          finals.push_back(fin);
          means.push_back(mean);
          entry["final_accuracy"] = fin;
          entry["mean_accuracy"] = mean;
          if (r.rows.back().slot > config.warmup_rounds) {
            entry["selection_clean_fraction"] = train::mean_selective_clean_fraction(r.rows, config.warmup_rounds);
          }
          entry["pool_fingerprint"] = fmt::format("{:016x}", r.pool_fingerprint);
        } else {
          entry["error"] = r.error;
        }
        seeds.push_back(entry);
      }
      selectors.push_back({{"selector", spec.label},
                           {"setting", setting},
                           {"mean_final_accuracy", mean_of(finals)},
                           {"std_final_accuracy", stddev_of(finals)},
                           {"mean_accuracy", mean_of(means)},
                           {"completed_seeds", finals.size()},
                           {"runs", seeds}});
    }
  }
  return {{"schema", 1}, {"name", config.name}, {"command", command}, {"results", selectors}};
}

void write_failures(const RunSet& set, Artifacts& artifacts) {
  if (!set.any_failed) return;
  json failures = json::array();
  for (const RunResult& r : set.runs) {
    if (!r.failed) continue;
    failures.push_back(
        {{"selector", r.selector}, {"seed", r.seed}, {"setting", r.setting}, {"kind", r.error_kind}, {"error", r.error}});
  }
  artifacts.write("failures.json", "failures", json{{"schema", 1}, {"failures", failures}}.dump(2) + "\n");
}

std::string chart_for(const ExperimentConfig& config, const RunSet& set, const std::string& setting) {
  svg::Chart chart;
  chart.title = setting == "configured" ? config.name : fmt::format("{} ({})", config.name, setting);
  chart.x_label = "slot";
  chart.y_label = "test accuracy";
  chart.marker_x = static_cast<double>(config.warmup_rounds);
  for (const SelectorSpec& spec : config.selectors) {
    std::map<std::int64_t, std::pair<double, int>> sums;
    for (const RunResult& r : set.runs) {
      if (r.selector != spec.label || r.setting != setting || r.failed) continue;
      for (const train::MetricsRow& row : r.rows) {
        if (!row.evaluated) continue;
        auto& [sum, count] = sums[row.slot];
        sum += row.test_accuracy;
        ++count;
      }
    }
    svg::Series series;
    series.label = spec.label;
    for (const auto& [slot, sc] : sums) {
      series.points.emplace_back(static_cast<double>(slot), sc.first / static_cast<double>(sc.second));
    }
    chart.series.push_back(std::move(series));
  }
  return chart.render();
}

void write_charts(const ExperimentConfig& config, const RunSet& set, Artifacts& artifacts) {
  for (const std::string& setting : set.settings) {
    artifacts.write(setting_prefix(setting) + "accuracy.svg", "chart", chart_for(config, set, setting));
  }
}

std::string table_csv(const ComparisonTable& table) {
  std::string out = "# schema=1\nselector";
  for (const std::string& s : table.settings) out += fmt::format(",{0}_mean,{0}_std,{0}_best", s);
  out += "\n";
  for (std::size_t i = 0; i < table.selectors.size(); ++i) {
    out += table.selectors[i];
    for (std::size_t j = 0; j < table.settings.size(); ++j) {
      const ComparisonCell& c = table.at(i, j);
      if (c.not_available) {
        out += ",N/A,N/A,0";
      } else {
        out += fmt::format(",{},{},{}", fmt_real(c.mean), fmt_real(c.stddev), c.best ? 1 : 0);
      }
    }
    out += "\n";
  }
  return out;
}

json table_json(const ComparisonTable& table) {
  json rows = json::array();
  for (std::size_t i = 0; i < table.selectors.size(); ++i) {
    json cells = json::object();
    for (std::size_t j = 0; j < table.settings.size(); ++j) {
      const ComparisonCell& c = table.at(i, j);
      json cell = {{"seeds", c.seeds}, {"best", c.best}, {"not_available", c.not_available}};
      cell["mean"] = c.mean;
      cell["std"] = c.stddev;
      cells[table.settings[j]] = cell;
    }
    rows.push_back({{"selector", table.selectors[i]}, {"cells", cells}});
  }
  return {{"schema", 1}, {"settings", table.settings}, {"rows", rows}};
}

}  // namespace

std::string file_label(const std::string& label) {
  std::string out;
  for (char ch : label) {
    if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-' || ch == '_') {
      out += ch;
    } else if (ch == '(' || ch == '=' || ch == ' ' || ch == ',') {
      out += '-';
    }
  }
  return out;
}

unsigned worker_count() {
  if (const char* env = std::getenv("OGRS_LAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

PreparedData prepare_data(const ExperimentConfig& config, std::uint64_t seed, std::optional<double> clean_ratio_override) {
  const DatasetSpec& spec = config.dataset;
  const std::uint64_t data_seed = spec.seed.value_or(derive_seed(seed, kDataStream));
  data::StreamPool all;
  switch (spec.kind) {
    case DatasetKind::kGaussianMixture: all = data::generate_gaussian_mixture(spec.n, data_seed); break;
    case DatasetKind::kStrokeDigits: all = data::generate_stroke_digits(spec.n, data_seed); break;
    case DatasetKind::kCsv: {
      data::CsvOptions options;
      options.label_column = spec.label_column;
      options.has_header = spec.has_header;
      options.num_classes = spec.num_classes;
      all = data::load_csv(spec.path, options);
      break;
    }
  }
  const auto n = static_cast<std::int64_t>(all.size());
  require(spec.test_size < n, ErrorKind::kValidation,
          fmt::format("dataset.test_size {} leaves no training samples out of {}", spec.test_size, n));
  const auto split = all.samples().begin() + (n - spec.test_size);
  const std::span<const data::LabeledSample> train_part(all.samples().data(), static_cast<std::size_t>(n - spec.test_size));
  const std::span<const data::LabeledSample> test_part(&*split, static_cast<std::size_t>(spec.test_size));
  const data::StreamPool clean = data::restream(train_part, all.num_classes(), spec.arrivals_per_slot);

  const std::optional<double> ratio = clean_ratio_override ? clean_ratio_override : config.clean_ratio;
  const data::NoiseSchedule schedule =
      ratio ? data::constant_schedule(clean.max_slot(), *ratio) : data::make_schedule(config.noise);

  PreparedData out;
  out.train = data::inject_label_noise(clean, schedule, all.num_classes(), derive_seed(seed, kNoiseStream));
  out.test = data::restream(test_part, all.num_classes(), 1);
  if (uses_ogrs(config)) out.geometry = select::PoolGeometry::build(out.train);
  return out;
}

model::Architecture architecture_for(const ExperimentConfig& config, const data::StreamPool& train) {
  return config.model == model::ArchKind::kMlp
             ? model::Architecture::mlp(train.dimension(), config.hidden_width, train.num_classes())
             : model::Architecture::logistic_regression(train.dimension(), train.num_classes());
}

train::TrainerOptions trainer_options(const ExperimentConfig& config, const SelectorSpec& selector,
                                      const data::StreamPool& train, std::uint64_t seed) {
  train::TrainerOptions o;
  o.architecture = architecture_for(config, train);
  o.warmup_rounds = config.warmup_rounds;
  o.total_slots = config.total_slots;
  o.samples_per_slot = config.samples_per_slot;
  o.learning_rate = config.learning_rate.value_or(train::default_learning_rate(o.architecture));
  o.steps_per_slot = config.steps_per_slot;
  o.eval_stride = config.eval_stride;
  o.selector = selector.ogrs;
  o.selector.samples_per_slot = config.samples_per_slot;
  o.seed = seed;
  return o;
}

const ComparisonCell& ComparisonTable::at(std::size_t selector, std::size_t setting) const {
  return cells.at(selector * settings.size() + setting);
}

ComparisonTable make_table(const std::vector<RunResult>& runs, const std::vector<std::string>& selectors,
                           const std::vector<std::string>& settings, int num_classes) {
  require(num_classes >= 2, ErrorKind::kInvalidArgument, "comparison needs >= 2 classes");
  ComparisonTable table;
  table.selectors = selectors;
  table.settings = settings;
  const double floor = 1.0 / static_cast<double>(num_classes) + 0.02;
  for (const std::string& sel : selectors) {
    for (const std::string& setting : settings) {
      std::vector<double> finals;
      for (const RunResult& r : runs) {
        if (r.selector == sel && r.setting == setting && !r.failed && !r.rows.empty()) {
          finals.push_back(train::final_accuracy(r.rows));
        }
      }
      ComparisonCell cell;
      cell.selector = sel;
      cell.setting = setting;
      cell.seeds = static_cast<int>(finals.size());
      cell.mean = mean_of(finals);
      cell.stddev = stddev_of(finals);
      cell.not_available = finals.empty() || cell.mean < floor;
      table.cells.push_back(cell);
    }
  }
  for (std::size_t j = 0; j < settings.size(); ++j) {
    double best = -1.0;
    for (std::size_t i = 0; i < selectors.size(); ++i) {
      const ComparisonCell& c = table.at(i, j);
      if (!c.not_available) best = std::max(best, c.mean);
    }
    for (std::size_t i = 0; i < selectors.size(); ++i) {
      ComparisonCell& c = table.cells[i * settings.size() + j];
      c.best = !c.not_available && c.mean == best;
    }
  }
  return table;
}

Outcome run_experiment(const ExperimentConfig& config) {
  config.validate();
  Artifacts artifacts(config.output_dir);
  const RunSet set = execute(config, {std::nullopt}, artifacts);
  artifacts.write("summary.json", "summary", summary_json(config, set, "run").dump(2) + "\n");
  write_charts(config, set, artifacts);
  write_failures(set, artifacts);
  Outcome out;
  out.exit_code = set.any_failed ? 1 : 0;
  out.runs = set.runs;
  out.files = artifacts.finish();
  return out;
}

Outcome compare(const ExperimentConfig& config) {
  config.validate();
  require(config.selectors.size() >= 2, ErrorKind::kValidation, "selectors: compare needs at least 2 selectors");
  std::vector<std::optional<double>> ratios;
  for (double r : config.compare_clean_ratios) ratios.emplace_back(r);
  if (ratios.empty()) ratios.emplace_back(std::nullopt);
  Artifacts artifacts(config.output_dir);
  const RunSet set = execute(config, ratios, artifacts);
  std::vector<std::string> labels;
  for (const SelectorSpec& s : config.selectors) labels.push_back(s.label);
  ComparisonTable table = make_table(set.runs, labels, set.settings, set.num_classes);
  artifacts.write("summary.json", "summary", summary_json(config, set, "compare").dump(2) + "\n");
  artifacts.write("comparison.csv", "comparison", table_csv(table));
  artifacts.write("comparison.json", "comparison", table_json(table).dump(2) + "\n");
  write_charts(config, set, artifacts);
  write_failures(set, artifacts);
  Outcome out;
  out.exit_code = set.any_failed ? 1 : 0;
  out.runs = set.runs;
  out.table = std::move(table);
  out.files = artifacts.finish();
  return out;
}

Outcome audit(const ExperimentConfig& config) {
  config.validate();
  const std::uint64_t seed = config.seeds.front();
  const auto ogrs_spec = std::find_if(config.selectors.begin(), config.selectors.end(),
                                      [](const SelectorSpec& s) { return s.kind.tag == SelectorKind::Tag::kOgrs; });
  SelectorSpec spec = ogrs_spec != config.selectors.end() ? *ogrs_spec
                                                          : SelectorSpec{SelectorKind::ogrs(), "ogrs", config.ogrs};
  spec.ogrs.samples_per_slot = config.samples_per_slot;

  ExperimentConfig data_config = config;
  if (ogrs_spec == config.selectors.end()) data_config.selectors.push_back(spec);
  const PreparedData data = prepare_data(data_config, seed);
  const train::TrainerOptions options = trainer_options(config, spec, data.train, seed);
  train::Trainer trainer(data.train, data.test, SelectorKind::naive(), options);
  trainer.warmup(config.warmup_rounds);
  const data::PoolView pool = data::pool_at(data.train, config.warmup_rounds);

  Rng rng = make_rng(seed, kAuditStream);
  const double h = spec.ogrs.bandwidth.value_or(0.0) > 0.0
                       ? *spec.ogrs.bandwidth
                       : spec.ogrs.bandwidth_scale * select::median_pairwise_distance(pool, 256, rng);
  const select::SelectionCounts counts(h > 0.0 ? h : 1.0, spec.ogrs.repeat_threshold, spec.ogrs.reset,
                                       spec.ogrs.decay);
  select::AuditResult result =
      select::regret_audit(pool, trainer.window(), counts, spec.ogrs, config.audit.m_grid, config.audit.trials, rng);

  Artifacts artifacts(config.output_dir);
  std::string csv = "# schema=1\nM,gamma,mean_RL,stderr_RL,mean_Rw,trials\n";
  for (const select::AuditRow& r : result.rows) {
    csv += fmt::format("{},{},{},{},{},{}\n", r.iterations, fmt_real(r.dual_step), fmt_real(r.mean_rl),
                       fmt_real(r.stderr_rl), fmt_real(r.mean_rw), r.trials);
  }
  artifacts.write("audit.csv", "audit", csv);
  const bool passed = result.flat || result.slope <= config.audit.slope_max;
  json j = {{"schema", 1},
            {"name", config.name},
            {"seed", seed},
            {"flat", result.flat},
            {"slope_max", config.audit.slope_max},
            {"passed", passed},
            {"max_abs_g", result.max_abs_g},
            {"dual_step_bound_held", result.dual_step_bound_held}};
  j["slope"] = result.flat ? json(nullptr) : json(result.slope);
  artifacts.write("audit.json", "audit", j.dump(2) + "\n");

  Outcome out;
  out.exit_code = passed ? 0 : 1;
  out.audit = std::move(result);
  out.files = artifacts.finish();
  return out;
}

}  // namespace ogrs::harness
