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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "ogrs/harness.hpp"

namespace ogrs::harness {

using select::InitPolicy;
using select::ResetPolicy;
using select::SelectorConfig;

namespace {

std::string dataset_kind_name(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kGaussianMixture: return "gaussian_mixture";
    case DatasetKind::kStrokeDigits: return "stroke_digits";
    case DatasetKind::kCsv: return "csv";
  }
  return "gaussian_mixture";
}

std::string arch_name(model::ArchKind kind) {
  return kind == model::ArchKind::kMlp ? "mlp" : "logistic_regression";
}

class Parser {
 public:
  explicit Parser(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail_at(const YAML::Node& node, const std::string& field, const std::string& what,
                            ErrorKind kind = ErrorKind::kValidation) const {
    const YAML::Mark mark = node.Mark();
    const int line = mark.is_null() ? 0 : mark.line + 1;
    fail(kind, fmt::format("{}:{}: field '{}': {}", source_, line, field, what));
  }

  /// Rejects keys outside `allowed`; a null node is an empty section.
  void check_map(const YAML::Node& node, const std::string& path, std::initializer_list<const char*> allowed) const {
    if (!node || node.IsNull()) return;
    if (!node.IsMap()) fail_at(node, path, "expected a mapping", ErrorKind::kParse);
    for (const auto& kv : node) {
      const std::string key = kv.first.Scalar();
      const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
      if (!known) fail_at(kv.first, join(path, key), "unknown key", ErrorKind::kParse);
    }
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  template <typename T>
  T scalar(const YAML::Node& node, const std::string& field, const char* expected) const {
    if (!node.IsScalar()) fail_at(node, field, fmt::format("expected {}", expected), ErrorKind::kParse);
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail_at(node, field, fmt::format("expected {}, got '{}'", expected, node.Scalar()), ErrorKind::kParse);
    }
  }

  double real(const YAML::Node& node, const std::string& field) const {
    const double v = scalar<double>(node, field, "a number");
    if (!std::isfinite(v)) fail_at(node, field, "must be finite");
    return v;
  }

  std::int64_t integer(const YAML::Node& node, const std::string& field) const {
    return scalar<std::int64_t>(node, field, "an integer");
  }

  bool boolean(const YAML::Node& node, const std::string& field) const {
    return scalar<bool>(node, field, "true or false");
  }

  std::string text(const YAML::Node& node, const std::string& field) const {
    return scalar<std::string>(node, field, "a string");
  }

  static bool is_null(const YAML::Node& node) { return node.IsNull() || (node.IsScalar() && node.Scalar() == "~"); }

  std::int64_t at_least(const YAML::Node& node, const std::string& field, std::int64_t lo) const {
    const std::int64_t v = integer(node, field);
    if (v < lo) fail_at(node, field, fmt::format("must be >= {}, got {}", lo, v));
    return v;
  }

  int at_least_int(const YAML::Node& node, const std::string& field, std::int64_t lo) const {
    const std::int64_t v = at_least(node, field, lo);
    if (v > std::numeric_limits<int>::max()) fail_at(node, field, "too large");
    return static_cast<int>(v);
  }

  double positive(const YAML::Node& node, const std::string& field) const {
    const double v = real(node, field);
    if (!(v > 0.0)) fail_at(node, field, fmt::format("must be > 0, got {}", v));
    return v;
  }

  double unit(const YAML::Node& node, const std::string& field) const {
    const double v = real(node, field);
    if (v < 0.0 || v > 1.0) fail_at(node, field, fmt::format("must lie in [0, 1], got {}", v));
    return v;
  }

  std::uint64_t seed(const YAML::Node& node, const std::string& field) const {
    return static_cast<std::uint64_t>(at_least(node, field, 0));
  }

  void ogrs(const YAML::Node& node, const std::string& path, SelectorConfig& c) const {
    check_map(node, path, {"M", "alpha", "gamma", "w", "zeta", "h", "bandwidth_scale", "init", "init_candidates",
                           "reset", "decay", "full_trace"});
    if (!node || node.IsNull()) return;
    auto f = [&](const char* key) { return join(path, key); };
    if (auto n = node["M"]) c.iterations = at_least_int(n, f("M"), 1);
    if (auto n = node["alpha"]) c.primal_step = positive(n, f("alpha"));
    if (auto n = node["gamma"]) c.dual_step = is_null(n) ? std::nullopt : std::optional(positive(n, f("gamma")));
    if (auto n = node["w"]) c.window = at_least_int(n, f("w"), 1);
    if (auto n = node["zeta"]) c.repeat_threshold = positive(n, f("zeta"));
    if (auto n = node["h"]) c.bandwidth = is_null(n) ? std::nullopt : std::optional(positive(n, f("h")));
    if (auto n = node["bandwidth_scale"]) c.bandwidth_scale = positive(n, f("bandwidth_scale"));
    if (auto n = node["init"]) {
      const std::string v = text(n, f("init"));
      if (v == "uniform_random") c.init = InitPolicy::kUniformRandom;
      else if (v == "lowest_recent_loss") c.init = InitPolicy::kLowestRecentLoss;
      else fail_at(n, f("init"), fmt::format("expected uniform_random or lowest_recent_loss, got '{}'", v));
    }
    if (auto n = node["init_candidates"]) c.init_candidates = at_least_int(n, f("init_candidates"), 1);
    if (auto n = node["reset"]) {
      const std::string v = text(n, f("reset"));
      if (v == "never") c.reset = ResetPolicy::kNever;
      else if (v == "per_slot") c.reset = ResetPolicy::kPerSlot;
      else if (v == "decay") c.reset = ResetPolicy::kDecay;
      else fail_at(n, f("reset"), fmt::format("expected never, per_slot or decay, got '{}'", v));
    }
    if (auto n = node["decay"]) {
      const double v = real(n, f("decay"));
      if (!(v > 0.0 && v < 1.0)) fail_at(n, f("decay"), fmt::format("must lie in (0, 1), got {}", v));
      c.decay = v;
    }
    if (auto n = node["full_trace"]) c.full_trace = boolean(n, f("full_trace"));
  }

  SelectorSpec selector(const YAML::Node& node, const std::string& path, const SelectorConfig& base) const {
    SelectorSpec spec;
    spec.ogrs = base;
    std::string kind;
    const YAML::Node* kind_node = &node;
    YAML::Node kind_field;
    std::optional<double> phi_hat;
    if (node.IsScalar()) {
      kind = node.Scalar();
      const auto open = kind.find('(');
      if (open != std::string::npos && kind.back() == ')') {
        const std::string inner = kind.substr(open + 1, kind.size() - open - 2);
        kind = kind.substr(0, open);
        try {
          std::size_t used = 0;
          phi_hat = std::stod(inner, &used);
          if (used != inner.size()) throw std::invalid_argument(inner);
        } catch (const std::exception&) {
          fail_at(node, path, fmt::format("cannot read phi_hat from '{}'", node.Scalar()), ErrorKind::kParse);
        }
        if (*phi_hat < 0.0 || *phi_hat > 1.0) {
          fail_at(node, join(path, "phi_hat"), fmt::format("must lie in [0, 1], got {}", *phi_hat));
        }
      }
    } else {
      check_map(node, path, {"kind", "phi_hat", "label", "ogrs"});
      if (!node.IsMap()) fail_at(node, path, "expected a selector name or mapping", ErrorKind::kParse);
      kind_field = node["kind"];
      if (!kind_field) fail_at(node, join(path, "kind"), "missing");
      kind_node = &kind_field;
      kind = text(kind_field, join(path, "kind"));
      if (auto n = node["phi_hat"]) phi_hat = unit(n, join(path, "phi_hat"));
      if (auto n = node["label"]) spec.label = text(n, join(path, "label"));
      if (auto n = node["ogrs"]) {
        if (kind != "ogrs") fail_at(n, join(path, "ogrs"), "only an ogrs selector takes ogrs settings");
        ogrs(n, join(path, "ogrs"), spec.ogrs);
      }
    }
    if (kind == "ogrs") spec.kind = baseline::SelectorKind::ogrs();
    else if (kind == "naive") spec.kind = baseline::SelectorKind::naive();
    else if (kind == "oracle") spec.kind = baseline::SelectorKind::oracle();
    else if (kind == "itlm") spec.kind = baseline::SelectorKind::itlm(1.0);
    else fail_at(*kind_node, join(path, "kind"), fmt::format("expected ogrs, itlm, naive or oracle, got '{}'", kind));
    if (spec.kind.tag == baseline::SelectorKind::Tag::kItlm) {
      if (!phi_hat) fail_at(node, join(path, "phi_hat"), "itlm needs phi_hat");
      spec.kind.phi_hat = *phi_hat;
    } else if (phi_hat) {
      fail_at(node, join(path, "phi_hat"), "only itlm takes phi_hat");
    }
    if (spec.label.empty()) spec.label = spec.kind.label();
    return spec;
  }

  ExperimentConfig parse(const YAML::Node& root) const {
    if (!root.IsMap()) fail_at(root, "<root>", "expected a mapping", ErrorKind::kParse);
    check_map(root, "", {"name", "dataset", "noise", "model", "training", "ogrs", "selectors", "seeds", "output",
                         "compare", "audit"});
    ExperimentConfig c;
    if (auto n = root["name"]) c.name = text(n, "name");

    if (auto d = root["dataset"]) {
      check_map(d, "dataset", {"kind", "n", "test_size", "arrivals_per_slot", "seed", "path", "label_column",
                               "has_header", "num_classes"});
      DatasetSpec& s = c.dataset;
      if (auto n = d["kind"]) {
        const std::string v = text(n, "dataset.kind");
        if (v == "gaussian_mixture") s.kind = DatasetKind::kGaussianMixture;
        else if (v == "stroke_digits") s.kind = DatasetKind::kStrokeDigits;
        else if (v == "csv") s.kind = DatasetKind::kCsv;
        else fail_at(n, "dataset.kind", fmt::format("expected gaussian_mixture, stroke_digits or csv, got '{}'", v));
      }
      if (auto n = d["n"]) s.n = at_least(n, "dataset.n", 2);
      if (auto n = d["test_size"]) s.test_size = at_least(n, "dataset.test_size", 1);
      if (auto n = d["arrivals_per_slot"]) s.arrivals_per_slot = at_least(n, "dataset.arrivals_per_slot", 1);
      if (auto n = d["seed"]) s.seed = is_null(n) ? std::nullopt : std::optional(seed(n, "dataset.seed"));
      if (auto n = d["path"]) s.path = text(n, "dataset.path");
      if (auto n = d["label_column"]) {
        const std::int64_t v = integer(n, "dataset.label_column");
        if (std::abs(v) > 1000000) fail_at(n, "dataset.label_column", "out of range");
        s.label_column = static_cast<int>(v);
      }
      if (auto n = d["has_header"]) s.has_header = boolean(n, "dataset.has_header");
      if (auto n = d["num_classes"]) {
        s.num_classes = at_least_int(n, "dataset.num_classes", 0);
        if (s.num_classes == 1) fail_at(n, "dataset.num_classes", "must be 0 (infer) or >= 2");
      }
      if (s.kind == DatasetKind::kCsv && s.path.empty()) fail_at(d, "dataset.path", "csv datasets need a path");
      if (s.kind != DatasetKind::kCsv && s.test_size >= s.n) {
        fail_at(d["test_size"] ? d["test_size"] : d, "dataset.test_size", "must be smaller than dataset.n");
      }
    }

    if (auto nz = root["noise"]) {
      check_map(nz, "noise", {"clean_ratio", "segments"});
      const YAML::Node ratio = nz["clean_ratio"];
      const YAML::Node segments = nz["segments"];
      if (ratio && segments) fail_at(nz, "noise", "give either clean_ratio or segments, not both");
      if (ratio) c.clean_ratio = unit(ratio, "noise.clean_ratio");
      if (segments) {
        c.clean_ratio.reset();
        if (!segments.IsSequence() || segments.size() == 0) {
          fail_at(segments, "noise.segments", "expected a nonempty list");
        }
        for (std::size_t i = 0; i < segments.size(); ++i) {
          const YAML::Node s = segments[i];
          const std::string p = fmt::format("noise.segments[{}]", i);
          check_map(s, p, {"start", "end", "clean_ratio"});
          if (!s.IsMap() || !s["start"] || !s["end"] || !s["clean_ratio"]) {
            fail_at(s, p, "needs start, end and clean_ratio");
          }
          c.noise.push_back({at_least(s["start"], p + ".start", 1), at_least(s["end"], p + ".end", 1),
                             unit(s["clean_ratio"], p + ".clean_ratio")});
        }
        try {
          data::make_schedule(c.noise);
        } catch (const Error& e) {
          fail_at(segments, "noise.segments", e.what());
        }
      }
    }

    if (auto m = root["model"]) {
      check_map(m, "model", {"kind", "hidden_width"});
      if (auto n = m["kind"]) {
        const std::string v = text(n, "model.kind");
        if (v == "logistic_regression") c.model = model::ArchKind::kLogisticRegression;
        else if (v == "mlp") c.model = model::ArchKind::kMlp;
        else fail_at(n, "model.kind", fmt::format("expected logistic_regression or mlp, got '{}'", v));
      }
      if (auto n = m["hidden_width"]) c.hidden_width = at_least_int(n, "model.hidden_width", 1);
    }

    if (auto t = root["training"]) {
      check_map(t, "training", {"T", "warmup_rounds", "K", "learning_rate", "steps_per_slot", "eval_stride"});
      if (auto n = t["T"]) c.total_slots = at_least(n, "training.T", 1);
      if (auto n = t["warmup_rounds"]) c.warmup_rounds = at_least_int(n, "training.warmup_rounds", 1);
      if (auto n = t["K"]) c.samples_per_slot = at_least_int(n, "training.K", 1);
      if (auto n = t["learning_rate"]) {
        c.learning_rate = is_null(n) ? std::nullopt : std::optional(positive(n, "training.learning_rate"));
      }
      if (auto n = t["steps_per_slot"]) c.steps_per_slot = at_least_int(n, "training.steps_per_slot", 1);
      if (auto n = t["eval_stride"]) c.eval_stride = at_least_int(n, "training.eval_stride", 1);
      if (c.total_slots < c.warmup_rounds) {
        fail_at(t["T"] ? t["T"] : t, "training.T", "must be >= training.warmup_rounds");
      }
    }

    if (auto o = root["ogrs"]) ogrs(o, "ogrs", c.ogrs);
    c.ogrs.samples_per_slot = c.samples_per_slot;

    const YAML::Node sel = root["selectors"];
    if (!sel) fail_at(root, "selectors", "missing; at least one selector is required");
    if (!sel.IsSequence() || sel.size() == 0) fail_at(sel, "selectors", "expected a nonempty list");
    std::set<std::string> labels;
    for (std::size_t i = 0; i < sel.size(); ++i) {
      SelectorSpec s = selector(sel[i], fmt::format("selectors[{}]", i), c.ogrs);
      s.ogrs.samples_per_slot = c.samples_per_slot;
      if (!labels.insert(s.label).second) {
        fail_at(sel[i], fmt::format("selectors[{}].label", i), fmt::format("duplicate selector label '{}'", s.label));
      }
      c.selectors.push_back(std::move(s));
    }

    if (auto s = root["seeds"]) {
      c.seeds.clear();
      if (s.IsScalar()) {
        c.seeds.push_back(seed(s, "seeds"));
      } else if (s.IsSequence() && s.size() > 0) {
        for (std::size_t i = 0; i < s.size(); ++i) c.seeds.push_back(seed(s[i], fmt::format("seeds[{}]", i)));
      } else {
        fail_at(s, "seeds", "expected a seed or a nonempty list of seeds");
      }
    }

    if (auto o = root["output"]) {
      check_map(o, "output", {"dir", "selector_traces"});
      if (auto n = o["dir"]) c.output_dir = text(n, "output.dir");
      if (auto n = o["selector_traces"]) c.selector_traces = boolean(n, "output.selector_traces");
    }

    if (auto cmp = root["compare"]) {
      check_map(cmp, "compare", {"clean_ratios"});
      if (auto r = cmp["clean_ratios"]) {
        if (!r.IsSequence()) fail_at(r, "compare.clean_ratios", "expected a list");
        for (std::size_t i = 0; i < r.size(); ++i) {
          c.compare_clean_ratios.push_back(unit(r[i], fmt::format("compare.clean_ratios[{}]", i)));
        }
      }
    }

    if (auto a = root["audit"]) {
      check_map(a, "audit", {"m_grid", "trials", "slope_max"});
      if (auto g = a["m_grid"]) {
        if (!g.IsSequence()) fail_at(g, "audit.m_grid", "expected a list");
        c.audit.m_grid.clear();
        for (std::size_t i = 0; i < g.size(); ++i) {
          c.audit.m_grid.push_back(at_least_int(g[i], fmt::format("audit.m_grid[{}]", i), 1));
        }
        if (c.audit.m_grid.size() < 4) fail_at(g, "audit.m_grid", "needs at least 4 points");
        if (!std::is_sorted(c.audit.m_grid.begin(), c.audit.m_grid.end(), std::less_equal<>())) {
          fail_at(g, "audit.m_grid", "must be strictly increasing");
        }
      }
      if (auto n = a["trials"]) c.audit.trials = at_least_int(n, "audit.trials", 10);
      if (auto n = a["slope_max"]) c.audit.slope_max = positive(n, "audit.slope_max");
    }

    try {
      c.validate();
    } catch (const Error& e) {
      fail(e.kind(), fmt::format("{}: {}", source_, e.what()));
    }
    return c;
  }

 private:
  std::string source_;
};

std::string num(double v) { return fmt::format("{}", v); }

void emit_ogrs(YAML::Emitter& out, const SelectorConfig& c) {
  out << YAML::BeginMap;
  out << YAML::Key << "M" << YAML::Value << c.iterations;
  out << YAML::Key << "alpha" << YAML::Value << num(c.primal_step);
  out << YAML::Key << "gamma" << YAML::Value;
  if (c.dual_step) out << num(*c.dual_step); else out << YAML::Null;
  out << YAML::Key << "w" << YAML::Value << c.window;
  out << YAML::Key << "zeta" << YAML::Value << num(c.repeat_threshold);
  out << YAML::Key << "h" << YAML::Value;
  if (c.bandwidth) out << num(*c.bandwidth); else out << YAML::Null;
  out << YAML::Key << "bandwidth_scale" << YAML::Value << num(c.bandwidth_scale);
  out << YAML::Key << "init" << YAML::Value << select::to_string(c.init);
  out << YAML::Key << "init_candidates" << YAML::Value << c.init_candidates;
  out << YAML::Key << "reset" << YAML::Value << select::to_string(c.reset);
  out << YAML::Key << "decay" << YAML::Value << num(c.decay);
  out << YAML::Key << "full_trace" << YAML::Value << c.full_trace;
  out << YAML::EndMap;
}

}  // namespace

void ExperimentConfig::validate() const {
  require(!selectors.empty(), ErrorKind::kValidation, "selectors: at least one selector is required");
  require(!seeds.empty(), ErrorKind::kValidation, "seeds: at least one seed is required");
  require(clean_ratio.has_value() != !noise.empty(), ErrorKind::kValidation,
          "noise: give exactly one of clean_ratio or segments");
  if (clean_ratio) {
    require(*clean_ratio >= 0.0 && *clean_ratio <= 1.0, ErrorKind::kValidation,
            "noise.clean_ratio: must lie in [0, 1]");
  } else {
    data::make_schedule(noise);
  }
  require(dataset.n >= 2 && dataset.test_size >= 1 && dataset.arrivals_per_slot >= 1, ErrorKind::kValidation,
          "dataset: n >= 2, test_size >= 1 and arrivals_per_slot >= 1 are required");
  require(dataset.kind == DatasetKind::kCsv || dataset.test_size < dataset.n, ErrorKind::kValidation,
          "dataset.test_size: must be smaller than dataset.n");
  require(dataset.kind != DatasetKind::kCsv || !dataset.path.empty(), ErrorKind::kValidation,
          "dataset.path: csv datasets need a path");
  require(hidden_width >= 1, ErrorKind::kValidation, "model.hidden_width: must be >= 1");
  require(!learning_rate || (*learning_rate > 0.0 && std::isfinite(*learning_rate)), ErrorKind::kValidation,
          "training.learning_rate: must be > 0");
  require(warmup_rounds >= 1 && total_slots >= warmup_rounds, ErrorKind::kValidation,
          "training.T: must be >= training.warmup_rounds >= 1");
  require(samples_per_slot >= 1 && steps_per_slot >= 1 && eval_stride >= 1, ErrorKind::kValidation,
          "training: K, steps_per_slot and eval_stride must be >= 1");
  ogrs.validate();
  std::set<std::string> labels;
  for (const SelectorSpec& s : selectors) {
    s.kind.validate();
    s.ogrs.validate();
    require(!s.label.empty() && labels.insert(s.label).second, ErrorKind::kValidation,
            fmt::format("selectors: label '{}' is empty or repeated", s.label));
  }
  for (double r : compare_clean_ratios) {
    require(r >= 0.0 && r <= 1.0, ErrorKind::kValidation, "compare.clean_ratios: entries must lie in [0, 1]");
  }
  require(audit.m_grid.size() >= 4, ErrorKind::kValidation, "audit.m_grid: needs at least 4 points");
  for (std::size_t i = 0; i < audit.m_grid.size(); ++i) {
    require(audit.m_grid[i] >= 1 && (i == 0 || audit.m_grid[i] > audit.m_grid[i - 1]), ErrorKind::kValidation,
            "audit.m_grid: must be positive and strictly increasing");
  }
  require(audit.trials >= 10, ErrorKind::kValidation, "audit.trials: must be >= 10");
  require(audit.slope_max > 0.0, ErrorKind::kValidation, "audit.slope_max: must be > 0");
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    fail(ErrorKind::kParse, fmt::format("{}:{}: {}", source, e.mark.line + 1, e.msg));
  }
  return Parser(source).parse(root);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kIo, fmt::format("cannot open config '{}'", path.string()));
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

std::string serialize_config(const ExperimentConfig& c) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << c.name;

  out << YAML::Key << "dataset" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << dataset_kind_name(c.dataset.kind);
  out << YAML::Key << "n" << YAML::Value << c.dataset.n;
  out << YAML::Key << "test_size" << YAML::Value << c.dataset.test_size;
  out << YAML::Key << "arrivals_per_slot" << YAML::Value << c.dataset.arrivals_per_slot;
  out << YAML::Key << "seed" << YAML::Value;
  if (c.dataset.seed) out << *c.dataset.seed; else out << YAML::Null;
  out << YAML::Key << "path" << YAML::Value << YAML::DoubleQuoted << c.dataset.path;
  out << YAML::Key << "label_column" << YAML::Value << c.dataset.label_column;
  out << YAML::Key << "has_header" << YAML::Value << c.dataset.has_header;
  out << YAML::Key << "num_classes" << YAML::Value << c.dataset.num_classes;
  out << YAML::EndMap;

  out << YAML::Key << "noise" << YAML::Value << YAML::BeginMap;
  if (c.clean_ratio) {
    out << YAML::Key << "clean_ratio" << YAML::Value << num(*c.clean_ratio);
  } else {
    out << YAML::Key << "segments" << YAML::Value << YAML::BeginSeq;
    for (const data::ScheduleSegment& s : c.noise) {
      out << YAML::Flow << YAML::BeginMap << YAML::Key << "start" << YAML::Value << s.start_slot << YAML::Key << "end"
          << YAML::Value << s.end_slot << YAML::Key << "clean_ratio" << YAML::Value << num(s.clean_ratio)
          << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  out << YAML::EndMap;

  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << arch_name(c.model);
  out << YAML::Key << "hidden_width" << YAML::Value << c.hidden_width;
  out << YAML::EndMap;

  out << YAML::Key << "training" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "T" << YAML::Value << c.total_slots;
  out << YAML::Key << "warmup_rounds" << YAML::Value << c.warmup_rounds;
  out << YAML::Key << "K" << YAML::Value << c.samples_per_slot;
  out << YAML::Key << "learning_rate" << YAML::Value;
  if (c.learning_rate) out << num(*c.learning_rate); else out << YAML::Null;
  out << YAML::Key << "steps_per_slot" << YAML::Value << c.steps_per_slot;
  out << YAML::Key << "eval_stride" << YAML::Value << c.eval_stride;
  out << YAML::EndMap;

  out << YAML::Key << "ogrs" << YAML::Value;
  emit_ogrs(out, c.ogrs);

  out << YAML::Key << "selectors" << YAML::Value << YAML::BeginSeq;
  for (const SelectorSpec& s : c.selectors) {
    out << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << baseline::to_string(s.kind.tag);
    if (s.kind.tag == baseline::SelectorKind::Tag::kItlm) {
      out << YAML::Key << "phi_hat" << YAML::Value << num(s.kind.phi_hat);
    }
    out << YAML::Key << "label" << YAML::Value << YAML::DoubleQuoted << s.label;
    if (s.kind.tag == baseline::SelectorKind::Tag::kOgrs && !(s.ogrs == c.ogrs)) {
      out << YAML::Key << "ogrs" << YAML::Value;
      emit_ogrs(out, s.ogrs);
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "seeds" << YAML::Value << YAML::Flow << c.seeds;

  out << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "dir" << YAML::Value << YAML::DoubleQuoted << c.output_dir;
  out << YAML::Key << "selector_traces" << YAML::Value << c.selector_traces;
  out << YAML::EndMap;

  out << YAML::Key << "compare" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "clean_ratios" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double r : c.compare_clean_ratios) out << num(r);
  out << YAML::EndSeq << YAML::EndMap;

  out << YAML::Key << "audit" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "m_grid" << YAML::Value << YAML::Flow << c.audit.m_grid;
  out << YAML::Key << "trials" << YAML::Value << c.audit.trials;
  out << YAML::Key << "slope_max" << YAML::Value << num(c.audit.slope_max);
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace ogrs::harness
