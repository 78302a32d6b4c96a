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

// ogrs_lab: run, compare and audit experiments described by a YAML config.
// Exit codes: 0 success, 1 failed runs or audit threshold, 2 usage or config
// errors.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ogrs_lab.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct ConfigDeleter {
  void operator()(ogrs_config* c) const { ogrs_config_free(c); }
};
struct ResultDeleter {
  void operator()(ogrs_result* r) const { ogrs_result_free(r); }
};
using ConfigPtr = std::unique_ptr<ogrs_config, ConfigDeleter>;
using ResultPtr = std::unique_ptr<ogrs_result, ResultDeleter>;

struct Options {
  std::string config_path;
  std::string seed_override;
  std::string out_dir;
  bool print_config = false;
  std::string m_grid;
  std::optional<double> slope_max;
};

bool config_error(ogrs_status s) {
  return s == OGRS_ERR_PARSE || s == OGRS_ERR_VALIDATION || s == OGRS_ERR_SCHEDULE_GAP || s == OGRS_ERR_IO;
}

int report(ogrs_status s, bool running = false) {
  std::cerr << "ogrs_lab: " << ogrs_status_name(s) << ": " << ogrs_last_error() << "\n";
  return config_error(s) && !running ? kExitUsage : kExitFailure;
}

template <typename T>
std::optional<std::vector<T>> split_list(const std::string& text) {
  std::vector<T> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::stringstream parse(item);
    T v{};
    if (!(parse >> v) || !parse.eof()) return std::nullopt;
    out.push_back(v);
  }
  if (out.empty()) return std::nullopt;
  return out;
}

int execute(const std::string& command, const Options& o) {
  ogrs_config* raw = nullptr;
  ogrs_status s = ogrs_config_load(o.config_path.c_str(), &raw);
  if (s != OGRS_OK) return report(s);
  ConfigPtr config(raw);

  if (!o.seed_override.empty()) {
    if (o.seed_override.front() == '-') {
      std::cerr << "ogrs_lab: --seed-override expects non-negative integers\n";
      return kExitUsage;
    }
    const auto seeds = split_list<std::uint64_t>(o.seed_override);
    if (!seeds) {
      std::cerr << "ogrs_lab: --seed-override expects a comma-separated list of integers\n";
      return kExitUsage;
    }
    if ((s = ogrs_config_set_seeds(config.get(), seeds->data(), seeds->size())) != OGRS_OK) return report(s);
  }
  if (!o.out_dir.empty() && (s = ogrs_config_set_output_dir(config.get(), o.out_dir.c_str())) != OGRS_OK) {
    return report(s);
  }
  if (!o.m_grid.empty()) {
    const auto grid = split_list<int>(o.m_grid);
    if (!grid) {
      std::cerr << "ogrs_lab: --m-grid expects a comma-separated list of integers\n";
      return kExitUsage;
    }
    if ((s = ogrs_config_set_m_grid(config.get(), grid->data(), grid->size())) != OGRS_OK) return report(s);
  }
  if (o.slope_max && (s = ogrs_config_set_slope_max(config.get(), *o.slope_max)) != OGRS_OK) return report(s);

  if (o.print_config) {
    char* text = nullptr;
    if ((s = ogrs_config_serialize(config.get(), &text)) != OGRS_OK) return report(s);
    std::cout << text;
    ogrs_string_free(text);
    return kExitOk;
  }

  ogrs_result* result_raw = nullptr;
  if (command == "run") s = ogrs_run(config.get(), &result_raw);
  else if (command == "compare") s = ogrs_compare(config.get(), &result_raw);
  else s = ogrs_audit(config.get(), &result_raw);
  if (s != OGRS_OK) return report(s, s != OGRS_ERR_VALIDATION);
  ResultPtr result(result_raw);

  for (std::size_t i = 0; i < ogrs_result_run_count(result.get()); ++i) {
    const char* selector = nullptr;
    const char* setting = nullptr;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    int failed = 0;
    ogrs_result_run(result.get(), i, &selector, &setting, &seed, &accuracy, &failed);
    std::cout << setting << " " << selector << " seed " << seed << ": ";
    if (failed) std::cout << "FAILED\n";
    else std::cout << "final accuracy " << accuracy << "\n";
  }
  double slope = 0.0;
  int flat = 0;
  int passed = 0;
  if (ogrs_result_audit(result.get(), &slope, &flat, &passed) == OGRS_OK) {
    if (flat) std::cout << "audit: regret is flat (no slope)\n";
    else std::cout << "audit: log-log slope " << slope << (passed ? " (within limit)\n" : " (above limit)\n");
  }
  for (std::size_t i = 0; i < ogrs_result_file_count(result.get()); ++i) {
    std::cout << "wrote " << ogrs_result_file(result.get(), i) << "\n";
  }
  return ogrs_result_exit_code(result.get());
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("config", o.config_path, "Experiment config (YAML)")->required();
  sub->add_option("--seed-override", o.seed_override, "Replace the config seeds (comma-separated)");
  sub->add_option("--out-dir", o.out_dir, "Replace the output directory");
  sub->add_flag("--print-config", o.print_config, "Print the resolved config and exit");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online robust sample selection laboratory"};
  app.set_version_flag("--version", std::string(ogrs_version()));
  app.require_subcommand(1);
  Options o;
  CLI::App* run = app.add_subcommand("run", "Train every selector x seed and write traces, summary and chart");
  CLI::App* cmp = app.add_subcommand("compare", "Run the selector grid and write a comparison table");
  CLI::App* aud = app.add_subcommand("audit", "Measure local Lagrangian regret growth against M");
  add_common(run, o);
  add_common(cmp, o);
  add_common(aud, o);
  aud->add_option("--m-grid", o.m_grid, "Iteration counts, e.g. 8,16,32,64");
  double slope_max = 0.0;
  CLI::Option* slope_opt = aud->add_option("--slope-max", slope_max, "Largest acceptable log-log slope");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  if (slope_opt->count() > 0) o.slope_max = slope_max;

  const std::string command = run->parsed() ? "run" : cmp->parsed() ? "compare" : "audit";
  return execute(command, o);
}
