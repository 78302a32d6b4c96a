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

#include "ogrs_lab.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <new>
#include <string>

#include "ogrs/harness.hpp"

struct ogrs_config {
  ogrs::harness::ExperimentConfig value;
};

struct ogrs_result {
  ogrs::harness::Outcome value;
  std::vector<std::string> files;
};

namespace {

thread_local std::string last_error;

ogrs_status status_of(ogrs::ErrorKind kind) {
  using ogrs::ErrorKind;
  switch (kind) {
    case ErrorKind::kInvalidArgument: return OGRS_ERR_INVALID_ARGUMENT;
    case ErrorKind::kScheduleGap: return OGRS_ERR_SCHEDULE_GAP;
    case ErrorKind::kValidation: return OGRS_ERR_VALIDATION;
    case ErrorKind::kParse: return OGRS_ERR_PARSE;
    case ErrorKind::kEmptyDataset: return OGRS_ERR_EMPTY_DATASET;
    case ErrorKind::kIo: return OGRS_ERR_IO;
    case ErrorKind::kGuard: return OGRS_ERR_GUARD;
    case ErrorKind::kIncompleteTrace: return OGRS_ERR_INCOMPLETE_TRACE;
    case ErrorKind::kRunFailed: return OGRS_ERR_RUN_FAILED;
  }
  return OGRS_ERR_INTERNAL;
}

template <typename F>
ogrs_status guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return OGRS_OK;
  } catch (const ogrs::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return OGRS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return OGRS_ERR_INTERNAL;
  }
}

ogrs_status null_argument(const char* name) {
  last_error = std::string(name) + " must not be null";
  return OGRS_ERR_INVALID_ARGUMENT;
}

template <typename F>
ogrs_status command(const ogrs_config* config, ogrs_result** out, F&& fn) {
  if (!config) return null_argument("config");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    auto* result = new ogrs_result{fn(config->value), {}};
    for (const auto& f : result->value.files) result->files.push_back(f.string());
    *out = result;
  });
}

}  // namespace

extern "C" {

const char* ogrs_version(void) { return "1.0.0"; }

const char* ogrs_status_name(ogrs_status status) {
  switch (status) {
    case OGRS_OK: return "ok";
    case OGRS_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case OGRS_ERR_SCHEDULE_GAP: return "schedule_gap";
    case OGRS_ERR_VALIDATION: return "validation";
    case OGRS_ERR_PARSE: return "parse";
    case OGRS_ERR_EMPTY_DATASET: return "empty_dataset";
    case OGRS_ERR_IO: return "io";
    case OGRS_ERR_GUARD: return "guard";
    case OGRS_ERR_INCOMPLETE_TRACE: return "incomplete_trace";
    case OGRS_ERR_RUN_FAILED: return "run_failed";
    case OGRS_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* ogrs_last_error(void) { return last_error.c_str(); }

ogrs_status ogrs_config_load(const char* path, ogrs_config** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = new ogrs_config{ogrs::harness::load_config(path)}; });
}

ogrs_status ogrs_config_parse(const char* text, ogrs_config** out) {
  if (!text) return null_argument("text");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = new ogrs_config{ogrs::harness::parse_config(text)}; });
}

void ogrs_config_free(ogrs_config* config) { delete config; }

ogrs_status ogrs_config_serialize(const ogrs_config* config, char** out) {
  if (!config) return null_argument("config");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    const std::string text = ogrs::harness::serialize_config(config->value);
    char* buffer = new char[text.size() + 1];
    std::memcpy(buffer, text.c_str(), text.size() + 1);
    *out = buffer;
  });
}

void ogrs_string_free(char* text) { delete[] text; }

ogrs_status ogrs_config_set_seeds(ogrs_config* config, const uint64_t* seeds, size_t count) {
  if (!config) return null_argument("config");
  if (!seeds || count == 0) {
    last_error = "at least one seed is required";
    return OGRS_ERR_VALIDATION;
  }
  return guarded([&] { config->value.seeds.assign(seeds, seeds + count); });
}

ogrs_status ogrs_config_set_output_dir(ogrs_config* config, const char* dir) {
  if (!config) return null_argument("config");
  if (!dir || !*dir) return null_argument("dir");
  return guarded([&] { config->value.output_dir = dir; });
}

ogrs_status ogrs_config_set_m_grid(ogrs_config* config, const int* m_grid, size_t count) {
  if (!config) return null_argument("config");
  if (!m_grid) return null_argument("m_grid");
  return guarded([&] {
    ogrs::harness::AuditSpec audit = config->value.audit;
    audit.m_grid.assign(m_grid, m_grid + count);
    ogrs::harness::ExperimentConfig copy = config->value;
    copy.audit = audit;
    copy.validate();
    config->value = std::move(copy);
  });
}

ogrs_status ogrs_config_set_slope_max(ogrs_config* config, double slope_max) {
  if (!config) return null_argument("config");
  if (!(slope_max > 0.0) || !std::isfinite(slope_max)) {
    last_error = "audit.slope_max: must be > 0";
    return OGRS_ERR_VALIDATION;
  }
  config->value.audit.slope_max = slope_max;
  last_error.clear();
  return OGRS_OK;
}

ogrs_status ogrs_config_equal(const ogrs_config* a, const ogrs_config* b, int* equal) {
  if (!a || !b) return null_argument("config");
  if (!equal) return null_argument("equal");
  *equal = a->value == b->value ? 1 : 0;
  return OGRS_OK;
}

ogrs_status ogrs_run(const ogrs_config* config, ogrs_result** out) {
  return command(config, out, ogrs::harness::run_experiment);
}

ogrs_status ogrs_compare(const ogrs_config* config, ogrs_result** out) {
  return command(config, out, ogrs::harness::compare);
}

ogrs_status ogrs_audit(const ogrs_config* config, ogrs_result** out) {
  return command(config, out, ogrs::harness::audit);
}

void ogrs_result_free(ogrs_result* result) { delete result; }

int ogrs_result_exit_code(const ogrs_result* result) { return result ? result->value.exit_code : 1; }

size_t ogrs_result_file_count(const ogrs_result* result) { return result ? result->files.size() : 0; }

const char* ogrs_result_file(const ogrs_result* result, size_t index) {
  if (!result || index >= result->files.size()) return nullptr;
  return result->files[index].c_str();
}

size_t ogrs_result_run_count(const ogrs_result* result) { return result ? result->value.runs.size() : 0; }

ogrs_status ogrs_result_run(const ogrs_result* result, size_t index, const char** selector, const char** setting,
                            uint64_t* seed, double* final_accuracy, int* failed) {
  if (!result) return null_argument("result");
  if (index >= result->value.runs.size()) {
    last_error = "run index out of range";
    return OGRS_ERR_INVALID_ARGUMENT;
  }
  const ogrs::harness::RunResult& r = result->value.runs[index];
  if (selector) *selector = r.selector.c_str();
  if (setting) *setting = r.setting.c_str();
  if (seed) *seed = r.seed;
  if (final_accuracy) {
    *final_accuracy = r.failed || r.rows.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                 : r.rows.back().test_accuracy;
  }
  if (failed) *failed = r.failed ? 1 : 0;
  return OGRS_OK;
}

ogrs_status ogrs_result_audit(const ogrs_result* result, double* slope, int* flat, int* passed) {
  if (!result) return null_argument("result");
  if (!result->value.audit) {
    last_error = "result does not hold an audit";
    return OGRS_ERR_INVALID_ARGUMENT;
  }
  const ogrs::select::AuditResult& a = *result->value.audit;
  if (slope) *slope = a.flat ? std::numeric_limits<double>::quiet_NaN() : a.slope;
  if (flat) *flat = a.flat ? 1 : 0;
  if (passed) *passed = result->value.exit_code == 0 ? 1 : 0;
  return OGRS_OK;
}

}  // extern "C"
