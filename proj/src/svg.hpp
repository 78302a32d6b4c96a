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

// Minimal SVG line charts: polylines over a labelled axis box.

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ogrs::svg {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  /// Dashed vertical rule, e.g. the end of warm-up.
  std::optional<double> marker_x;
  int width = 800;
  int height = 480;

  std::string render() const;
};

std::string escape(const std::string& text);

}  // namespace ogrs::svg
