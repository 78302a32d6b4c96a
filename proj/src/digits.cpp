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

// Hand-drawn-looking 28x28 digits rendered from polyline skeletons. Each
// sample gets its own vertex jitter, affine warp, stroke width and pixel noise,
// so classes overlap the way handwritten digits do (4/9, 3/5/8, 1/7, ...).

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "ogrs/datastream.hpp"

namespace ogrs::data {

namespace {

constexpr int kSide = 28;

struct Point {
  double x;
  double y;
};

using Stroke = std::vector<Point>;

Stroke ellipse(double cx, double cy, double rx, double ry, int steps, double from = 0.0, double to = 2.0) {
  Stroke s;
  for (int i = 0; i <= steps; ++i) {
    const double a = std::numbers::pi * (from + (to - from) * i / steps);
    s.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
  }
  return s;
}

// Skeletons in the unit box, y pointing down.
std::vector<Stroke> skeleton(int digit) {
  switch (digit) {
    case 0: return {ellipse(0.5, 0.5, 0.27, 0.4, 18)};
    case 1: return {{{0.38, 0.24}, {0.52, 0.1}, {0.52, 0.9}}};
    case 2: return {{{0.26, 0.3}, {0.36, 0.14}, {0.55, 0.1}, {0.72, 0.2}, {0.72, 0.38}, {0.26, 0.9}, {0.78, 0.9}}};
    case 3: return {{{0.26, 0.16}, {0.48, 0.1}, {0.7, 0.2}, {0.66, 0.38}, {0.46, 0.48}, {0.7, 0.6}, {0.72, 0.8},
                     {0.5, 0.92}, {0.26, 0.84}}};
    case 4: return {{{0.62, 0.9}, {0.62, 0.1}, {0.2, 0.64}, {0.8, 0.64}}};
    case 5: return {{{0.74, 0.1}, {0.32, 0.1}, {0.28, 0.46}, {0.52, 0.4}, {0.72, 0.56}, {0.7, 0.8}, {0.48, 0.92},
                     {0.26, 0.84}}};
    case 6: return {{{0.68, 0.12}, {0.46, 0.22}, {0.32, 0.44}, {0.28, 0.7}, {0.4, 0.9}, {0.62, 0.88}, {0.72, 0.7},
                     {0.6, 0.54}, {0.4, 0.56}, {0.3, 0.66}}};
    case 7: return {{{0.22, 0.12}, {0.78, 0.12}, {0.44, 0.9}}};
    case 8: return {ellipse(0.5, 0.29, 0.19, 0.18, 14), ellipse(0.5, 0.7, 0.24, 0.21, 14)};
    case 9: return {ellipse(0.5, 0.32, 0.21, 0.2, 14), {{0.71, 0.34}, {0.64, 0.9}}};
    default: return {};
  }
}

double segment_distance(double px, double py, const Point& a, const Point& b) {
  const double vx = b.x - a.x;
  const double vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((px - a.x) * vx + (py - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (a.x + t * vx);
  const double dy = py - (a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

Vector render(int digit, Rng& rng) {
  auto strokes = skeleton(digit);

  // Per-vertex wobble, then a random affine map of the unit box into pixels.
  const double wobble = 0.035;
  for (Stroke& stroke : strokes) {
    for (Point& p : stroke) {
      p.x += wobble * standard_normal(rng);
      p.y += wobble * standard_normal(rng);
    }
  }
  const double angle = 0.25 * (2.0 * uniform01(rng) - 1.0);
  const double shear = 0.3 * (2.0 * uniform01(rng) - 1.0);
  const double scale_x = 15.0 + 5.0 * uniform01(rng);
  const double scale_y = 17.0 + 4.0 * uniform01(rng);
  const double shift_x = 14.0 + 1.5 * standard_normal(rng);
  const double shift_y = 14.0 + 1.5 * standard_normal(rng);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  for (Stroke& stroke : strokes) {
    for (Point& p : stroke) {
      const double ux = (p.x - 0.5) * scale_x + shear * (p.y - 0.5) * scale_y;
      const double uy = (p.y - 0.5) * scale_y;
      p = {shift_x + c * ux - s * uy, shift_y + s * ux + c * uy};
    }
  }
  const double half_width = 0.7 + 0.6 * uniform01(rng);

  Vector image(kSide * kSide);
  for (int row = 0; row < kSide; ++row) {
    for (int col = 0; col < kSide; ++col) {
      const double px = col + 0.5;
      const double py = row + 0.5;
      double d = 1e9;
      for (const Stroke& stroke : strokes) {
        for (std::size_t k = 1; k < stroke.size(); ++k) {
          d = std::min(d, segment_distance(px, py, stroke[k - 1], stroke[k]));
        }
      }
      double v = std::clamp(1.0 - (d - half_width), 0.0, 1.0);
      v += 0.04 * standard_normal(rng);
      image[row * kSide + col] = std::clamp(v, 0.0, 1.0);
    }
  }
  return image;
}

}  // namespace

StreamPool generate_stroke_digits(std::int64_t n, std::uint64_t seed) {
  require(n >= 1, ErrorKind::kInvalidArgument, "digit corpus needs n >= 1");
  Rng rng = make_rng(seed, 0x646967ULL);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 10);
  for (std::size_t i = labels.size() - 1; i > 0; --i) std::swap(labels[i], labels[uniform_index(rng, i + 1)]);

  std::vector<LabeledSample> samples;
  samples.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    LabeledSample s;
    s.id = static_cast<std::int64_t>(i);
    s.features = render(labels[i], rng);
    s.observed_label = s.true_label = labels[i];
    s.arrival_slot = s.id + 1;
    samples.push_back(std::move(s));
  }
  return StreamPool(std::move(samples), 10);
}

}  // namespace ogrs::data
