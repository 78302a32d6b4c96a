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
#include <limits>
#include <numeric>
#include <vector>

#include <doctest.h>

#include "helpers.hpp"
#include "ogrs/selector.hpp"

namespace ogrs::test {

using model::Architecture;
using model::ModelParams;
using select::SelectionCounts;
using select::SelectorConfig;
using select::SelectorTrace;
using select::SnapshotWindow;
using select::TraceRow;

namespace {

/// Two-class logistic regression with W = [w0; w1] and biases b.
ModelParams lr2(std::vector<double> w0, std::vector<double> w1, std::vector<double> b) {
  const int d = static_cast<int>(w0.size());
  Vector w(2 * d + 2);
  for (int k = 0; k < d; ++k) {
    w[k] = w0[static_cast<std::size_t>(k)];
    w[d + k] = w1[static_cast<std::size_t>(k)];
  }
  w[2 * d] = b[0];
  w[2 * d + 1] = b[1];
  return ModelParams(Architecture::logistic_regression(d, 2), w);
}

/// Zero weights and biases (0, beta): label 0 has loss log(1 + e^beta).
ModelParams with_label0_loss(int d, double target) {
  const double beta = std::log(std::expm1(target));
  return lr2(std::vector<double>(static_cast<std::size_t>(d), 0.0), std::vector<double>(static_cast<std::size_t>(d), 0.0),
             {0.0, beta});
}

SnapshotWindow window_of(std::vector<ModelParams> newest_last, std::size_t capacity) {
  SnapshotWindow w(capacity);
  for (auto& p : newest_last) w.push(std::move(p));
  return w;
}

data::StreamPool pool_of(const std::vector<std::vector<double>>& points, std::vector<std::int64_t> ids = {},
                         std::vector<int> labels = {}) {
  std::vector<data::LabeledSample> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::int64_t id = ids.empty() ? static_cast<std::int64_t>(i) : ids[i];
    const int y = labels.empty() ? 0 : labels[i];
    out.push_back(sample(id, points[i], y, y, 1));
  }
  return data::StreamPool(std::move(out), 2);
}

std::size_t scan_nearest(const Vector& x, const data::PoolView& pool) {
  std::size_t best = 0;
  long double best_d = std::numeric_limits<long double>::infinity();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    long double d = 0;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      const long double t = static_cast<long double>(x[k]) - pool[i].features[k];
      d += t * t;
    }
    if (d < best_d || (d == best_d && pool[i].id < pool[best].id)) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

TraceRow row_with(int i, std::vector<double> grad, double mu, std::vector<double> cgrad) {
  TraceRow r;
  r.iteration = i;
  r.mu = mu;
  r.loss_grad = Eigen::Map<const Vector>(grad.data(), static_cast<Eigen::Index>(grad.size()));
  if (!cgrad.empty()) r.constraint_grad = Eigen::Map<const Vector>(cgrad.data(), static_cast<Eigen::Index>(cgrad.size()));
  return r;
}

SelectorTrace trace_of(std::vector<TraceRow> rows) {
  SelectorTrace t;
  t.expected_rows = static_cast<int>(rows.size());
  t.rows = std::move(rows);
  return t;
}

/// Loss decreases along the first coordinate for every sample labelled 0.
ModelParams rightward() { return lr2({1.0, 0.0}, {-1.0, 0.0}, {0.0, 0.0}); }

}  // namespace

TEST_CASE("selector config validation") {
  SelectorConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.effective_dual_step() == doctest::Approx(std::pow(20.0, -0.25)));
  c.dual_step = 0.3;
  CHECK(c.effective_dual_step() == 0.3);
  SelectorConfig bad;
  bad.iterations = 0;
  CHECK_ERROR_KIND(bad.validate(), ErrorKind::kValidation);
  bad = {};
  bad.primal_step = 0.0;
  CHECK_ERROR_KIND(bad.validate(), ErrorKind::kValidation);
  bad = {};
  bad.repeat_threshold = -1.0;
  CHECK_ERROR_KIND(bad.validate(), ErrorKind::kValidation);
  bad = {};
  bad.bandwidth = 0.0;
  CHECK_ERROR_KIND(bad.validate(), ErrorKind::kValidation);
  bad = {};
  bad.window = 0;
  CHECK_ERROR_KIND(bad.validate(), ErrorKind::kValidation);
}

TEST_CASE("snapshot window keeps the newest w snapshots newest first") {
  SnapshotWindow w(3);
  for (int i = 0; i < 5; ++i) {
    w.push(with_label0_loss(1, 0.1 * (i + 1)));
    CHECK(w.size() == static_cast<std::size_t>(std::min(i + 1, 3)));
  }
  const auto s = sample(0, {0.0}, 0, 0, 1);
  CHECK(model::loss(w.at(0), s) == doctest::Approx(0.5));
  CHECK(model::loss(w.at(1), s) == doctest::Approx(0.4));
  CHECK(model::loss(w.at(2), s) == doctest::Approx(0.3));
  CHECK(w.serial(0) != w.serial(1));
  CHECK_ERROR_KIND(SnapshotWindow(0), ErrorKind::kInvalidArgument);
}

TEST_CASE("local loss is the mean over held snapshots") {
  const auto s = sample(0, {0.3, -0.7}, 0, 0, 1);
  SUBCASE("single snapshot equals the model loss") {
    const ModelParams p = model::init_params(Architecture::logistic_regression(2, 2), 4);
    const auto w = window_of({p}, 1);
    CHECK(select::local_loss(w, s) == doctest::Approx(model::loss(p, s)).epsilon(1e-15));
    CHECK((select::local_loss_grad(w, s) - model::grad_features(p, s)).norm() < 1e-15);
  }
  SUBCASE("identical snapshots") {
    const ModelParams p = model::init_params(Architecture::logistic_regression(2, 2), 5);
    const auto w = window_of({p, p, p}, 3);
    CHECK(select::local_loss(w, s) == doctest::Approx(model::loss(p, s)).epsilon(1e-14));
  }
  SUBCASE("known losses 0.2, 0.4, 0.9 average to 0.5") {
    const auto w = window_of({with_label0_loss(2, 0.2), with_label0_loss(2, 0.4), with_label0_loss(2, 0.9)}, 3);
    const double oracle = (0.2 + 0.4 + 0.9) / 3.0;
    CHECK(oracle == doctest::Approx(0.5));
    CHECK(select::local_loss(w, s) == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("partial window divides by the number held") {
    const auto w = window_of({with_label0_loss(2, 0.2), with_label0_loss(2, 0.6)}, 5);
    CHECK(select::local_loss(w, s) == doctest::Approx(0.4).epsilon(1e-12));
  }
  SUBCASE("zero-weight snapshots give a zero gradient") {
    const ModelParams z = model::zero_params(Architecture::logistic_regression(2, 2));
    const auto w = window_of({z, z}, 2);
    CHECK(select::local_loss_grad(w, s).norm() == 0.0);
  }
  SUBCASE("empty window is an error") {
    SnapshotWindow w(2);
    CHECK_ERROR_KIND(select::local_loss(w, s), ErrorKind::kInvalidArgument);
    CHECK_ERROR_KIND(select::local_loss_grad(w, s), ErrorKind::kInvalidArgument);
  }
}

TEST_CASE("local loss gradient matches central differences") {
  Rng rng(77);
  for (const Architecture& arch : {Architecture::logistic_regression(4, 3), Architecture::mlp(4, 6, 3)}) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<ModelParams> snaps;
      for (int j = 0; j < 3; ++j) snaps.push_back(model::init_params(arch, rng()));
      const auto w = window_of(snaps, 3);
      std::vector<double> x(4);
      for (double& v : x) v = standard_normal(rng);
      const int y = static_cast<int>(uniform_index(rng, 3));
      const auto s = sample(0, x, y, y, 1);
      const Vector g = select::local_loss_grad(w, s);
      double worst = 0.0;
      const double h = 1e-5;
      for (int k = 0; k < 4; ++k) {
        auto plus = s;
        auto minus = s;
        plus.features[k] += h;
        minus.features[k] -= h;
        const double fd = (select::local_loss(w, plus) - select::local_loss(w, minus)) / (2 * h);
        worst = std::max(worst, std::abs(fd - g[k]) / std::max(1.0, std::abs(g[k])));
      }
      CHECK(worst <= 1e-4);
    }
  }
}

TEST_CASE("count field") {
  const auto stream = pool_of({{0.0, 0.0}, {2.0, 0.0}, {5.0, 5.0}});
  const auto pool = data::whole(stream);
  SUBCASE("no counts gives zero") {
    SelectionCounts c(1.0, 5.0);
    const auto f = select::count_field(c, Vector::Constant(2, 0.4), pool);
    CHECK(f.value == 0.0);
    CHECK(f.grad.norm() == 0.0);
    const auto g = select::constraint(c, Vector::Constant(2, 0.4), pool);
    CHECK(g.value == -5.0);
  }
  SUBCASE("peak at a sample counted three times") {
    SelectionCounts c(0.7, 5.0);
    for (int i = 0; i < 3; ++i) c.record_selection(pool, 2);
    const auto f = select::count_field(c, stream[2].features, pool);
    CHECK(f.value == doctest::Approx(3.0));
    CHECK(f.grad.norm() == 0.0);
    CHECK(select::constraint(c, stream[2].features, pool).value == doctest::Approx(-2.0));
    SelectionCounts at_boundary(0.7, 3.0);
    for (int i = 0; i < 3; ++i) at_boundary.record_selection(pool, 2);
    CHECK(select::constraint(at_boundary, stream[2].features, pool).value == doctest::Approx(0.0));
  }
  SUBCASE("midway between two counted samples") {
    const double h = 1.3;
    SelectionCounts c(h, 5.0);
    c.record_selection(pool, 0);
    c.record_selection(pool, 1);
    c.record_selection(pool, 1);
    Vector x(2);
    x << 1.0, 0.25;
    long double p = 0;
    long double gx = 0;
    long double gy = 0;
    const long double pts[2][3] = {{0.0L, 0.0L, 1.0L}, {2.0L, 0.0L, 2.0L}};
    for (const auto& s : pts) {
      const long double dx = s[0] - 1.0L;
      const long double dy = s[1] - 0.25L;
      const long double w = s[2] * std::exp(-(dx * dx + dy * dy) / (2.0L * h * h));
      p += w;
      gx += w * dx / (h * h);
      gy += w * dy / (h * h);
    }
    const auto f = select::count_field(c, x, pool);
    CHECK(f.value == doctest::Approx(static_cast<double>(p)).epsilon(1e-13));
    CHECK(f.grad[0] == doctest::Approx(static_cast<double>(gx)).epsilon(1e-12));
    CHECK(f.grad[1] == doctest::Approx(static_cast<double>(gy)).epsilon(1e-12));
  }
  SUBCASE("gradient matches central differences") {
    SelectionCounts c(1.1, 5.0);
    c.record_selection(pool, 0);
    c.record_selection(pool, 1);
    Vector x(2);
    x << 0.6, 0.9;
    const auto f = select::count_field(c, x, pool);
    for (int k = 0; k < 2; ++k) {
      Vector a = x;
      Vector b = x;
      a[k] += 1e-6;
      b[k] -= 1e-6;
      const double fd = (select::count_field(c, a, pool).value - select::count_field(c, b, pool).value) / 2e-6;
      CHECK(fd == doctest::Approx(f.grad[k]).epsilon(1e-6));
    }
  }
}

TEST_CASE("selection counts bookkeeping and reset policies") {
  const auto stream = pool_of({{0.0}, {1.0}, {2.0}});
  const auto pool = data::whole(stream);
  SelectionCounts never(1.0, 5.0);
  never.record_selection(pool, 1);
  never.record_selection(pool, 1);
  never.begin_slot();
  CHECK(never.count_at(1) == 2.0);
  CHECK(never.total() == 2.0);
  CHECK(never.entries().front().id == 1);

  SelectionCounts per_slot(1.0, 5.0, select::ResetPolicy::kPerSlot);
  per_slot.record_selection(pool, 0);
  per_slot.begin_slot();
  CHECK(per_slot.total() == 0.0);
  CHECK(per_slot.count_at(0) == 0.0);

  SelectionCounts decay(1.0, 5.0, select::ResetPolicy::kDecay, 0.25);
  decay.record_selection(pool, 2);
  decay.record_selection(pool, 2);
  decay.begin_slot();
  CHECK(decay.count_at(2) == 0.5);

  CHECK_ERROR_KIND(never.record_selection(pool, 3), ErrorKind::kInvalidArgument);
  CHECK_ERROR_KIND(SelectionCounts(0.0, 5.0), ErrorKind::kInvalidArgument);
  CHECK_ERROR_KIND(SelectionCounts(1.0, 0.0), ErrorKind::kInvalidArgument);
  CHECK_ERROR_KIND(SelectionCounts(1.0, 1.0, select::ResetPolicy::kDecay, 1.0), ErrorKind::kInvalidArgument);
}

TEST_CASE("dual update") {
  auto mu0 = select::dual_update({0.0, 0.1}, -1.0);
  CHECK(mu0.mu == 0.0);
  CHECK(mu0.step == 0.1);
  CHECK(select::dual_update({0.5, 0.1}, 2.0).mu == doctest::Approx(0.7));
  CHECK(select::dual_update({0.5, 0.1}, 0.0).mu == 0.5);

  Rng rng(2024);
  for (int i = 0; i < 20000; ++i) {
    const double mu = uniform01(rng) < 0.2 ? 0.0 : std::exp(20.0 * uniform01(rng) - 10.0);
    const double gamma = std::exp(10.0 * uniform01(rng) - 5.0);
    const double g = (uniform01(rng) - 0.5) * std::exp(16.0 * uniform01(rng) - 8.0);
    const auto next = select::dual_update({mu, gamma}, g);
    REQUIRE(next.mu >= 0.0);
    REQUIRE(std::abs(next.mu - mu) <= gamma * std::abs(g));
    REQUIRE(next.step == gamma);
    const double exact = std::max(0.0, mu + gamma * g);
    const double scale = std::max({1.0, mu, std::abs(gamma * g)});
    REQUIRE(std::abs(next.mu - exact) <= 4.0 * std::numeric_limits<double>::epsilon() * scale);
  }
}

TEST_CASE("projection onto the pool") {
  SUBCASE("a pool point projects to itself") {
    const auto stream = random_pool(30, 3, 2, 8);
    const auto pool = data::whole(stream);
    for (std::size_t i = 0; i < pool.size(); ++i) CHECK(select::project(pool[i].features, pool) == i);
  }
  SUBCASE("equidistant pair goes to the lower id") {
    const auto stream = pool_of({{1.0, 0.0}, {-1.0, 0.0}, {9.0, 9.0}}, {7, 3, 1});
    const auto pool = data::whole(stream);
    CHECK(select::project(Vector::Zero(2), pool) == 1);
  }
  SUBCASE("matches an exhaustive scan") {
    const auto stream = random_pool(50, 4, 2, 21);
    const auto pool = data::whole(stream);
    Rng rng(3);
    for (int trial = 0; trial < 500; ++trial) {
      Vector x(4);
      for (Eigen::Index k = 0; k < 4; ++k) x[k] = 1.5 * standard_normal(rng);
      CHECK(select::project(x, pool) == scan_nearest(x, pool));
    }
  }
  SUBCASE("empty pool is an error") {
    const auto stream = random_pool(3, 2, 2, 1);
    const data::PoolView empty(stream, 0, 1);
    CHECK_ERROR_KIND(select::project(Vector::Zero(2), empty), ErrorKind::kEmptyDataset);
  }
}

TEST_CASE("pool geometry agrees with the exhaustive scan") {
  for (const int d : {2, 7, 40}) {
    std::vector<data::LabeledSample> samples;
    Rng rng(static_cast<std::uint64_t>(d));
    for (int i = 0; i < 400; ++i) {
      std::vector<double> x(static_cast<std::size_t>(d));
      for (double& v : x) v = standard_normal(rng) * (1.0 + (i % 3));
      // Duplicates and low-rank structure exercise ties and pruning.
      if (i % 17 == 5 && !samples.empty()) {
        for (int k = 0; k < d; ++k) x[static_cast<std::size_t>(k)] = samples.back().features[k];
      }
      samples.push_back(sample(1000 - i, x, 0, 0, i / 4 + 1));
    }
    const data::StreamPool stream(std::move(samples), 2);
    const auto geometry = select::PoolGeometry::build(stream);
    CHECK(geometry->size() == 400);
    CHECK(geometry->rank() <= select::PoolGeometry::kMaxRank);
    for (const std::int64_t slot : {std::int64_t{1}, std::int64_t{10}, std::int64_t{100}}) {
      const auto view = data::pool_at(stream, slot);
      REQUIRE(geometry->covers(view));
      for (int trial = 0; trial < 200; ++trial) {
        Vector x(d);
        if (trial % 4 == 0) {
          x = view[uniform_index(rng, view.size())].features;
        } else {
          for (Eigen::Index k = 0; k < d; ++k) x[k] = 2.0 * standard_normal(rng);
        }
        const std::size_t hint = uniform_index(rng, view.size());
        CHECK(geometry->nearest(x, view, hint) == scan_nearest(x, view));
      }
    }
  }
}

TEST_CASE("primal step") {
  // Iterate (0, 1), label 0. Logits are equal there, so grad L = 0.5 (w0 + w1) - w0 = (-1, 0).
  const auto stream = pool_of({{0.0, 1.0}, {1.0, 1.1}, {2.0, 1.0}, {0.0, 0.0}, {-1.0, 1.0}});
  const auto pool = data::whole(stream);
  const auto window = window_of({rightward()}, 1);
  SelectionCounts counts(1.0, 5.0);
  CHECK((select::local_loss_grad(window, pool[0]) - Vector{{-1.0, 0.0}}).norm() < 1e-15);

  SUBCASE("hand-computed step without the constraint") {
    // (0, 1) - 1 * (-1, 0) = (1, 1); nearest is (1, 1.1).
    CHECK(select::primal_step(0, 0.0, window, counts, pool, 1.0) == 1);
  }
  SUBCASE("hand-computed step with an active multiplier") {
    // grad p at (0, 1) from one count at (-1, 1), h = 1: e^{-1/2} (-1, 0).
    // H = (-1, 0) + 2 e^{-1/2} (-1, 0); proposal (1 + 2 e^{-1/2}, 1) = (2.213, 1); nearest (2, 1).
    counts.record_selection(pool, 4);
    const double shift = 1.0 + 2.0 * std::exp(-0.5);
    CHECK(shift == doctest::Approx(2.2131).epsilon(1e-4));
    CHECK(select::primal_step(0, 2.0, window, counts, pool, 1.0) == 2);
  }
  SUBCASE("vanishing step stays put") {
    for (std::size_t i = 0; i < pool.size(); ++i) {
      CHECK(select::primal_step(i, 0.0, window, counts, pool, 1e-12) == i);
    }
  }
  SUBCASE("zero gradient stays put") {
    const auto flat = window_of({model::zero_params(Architecture::logistic_regression(2, 2))}, 1);
    for (std::size_t i = 0; i < pool.size(); ++i) CHECK(select::primal_step(i, 0.0, flat, counts, pool, 10.0) == i);
  }
}

TEST_CASE("select_one") {
  SelectorConfig config;
  config.bandwidth = 1.0;
  SUBCASE("one iteration is one primal step from the initial sample") {
    const auto stream = random_pool(40, 2, 2, 4);
    const auto pool = data::whole(stream);
    const auto window = window_of({model::init_params(Architecture::logistic_regression(2, 2), 9)}, 1);
    SelectionCounts counts(1.0, 5.0);
    config.iterations = 1;
    Rng rng(1);
    const auto out = select::select_one(pool, window, counts, config, rng);
    REQUIRE(out.trace.rows.size() == 1);
    const TraceRow& r = out.trace.rows[0];
    CHECK(r.iteration == 1);
    CHECK(r.mu == 0.0);
    CHECK(r.g == -5.0);
    CHECK(out.position == select::primal_step(r.position, r.mu_next, window, counts, pool, config.primal_step));
    CHECK(out.sample == &pool[out.position]);
  }
  SUBCASE("moves toward the low-loss sample") {
    config.iterations = 20;
    config.repeat_threshold = 1e9;
    const auto window = window_of({rightward()}, 1);
    int improved = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng prng(seed + 500);
      std::vector<std::vector<double>> pts;
      for (int i = 0; i < 30; ++i) pts.push_back({4.0 * uniform01(prng) - 2.0, uniform01(prng)});
      pts.push_back({6.0, 0.5});
      const auto stream = pool_of(pts);
      const auto pool = data::whole(stream);
      SelectionCounts counts(1.0, config.repeat_threshold);
      Rng rng(seed);
      const auto out = select::select_one(pool, window, counts, config, rng);
      const double start = select::local_loss(window, pool[out.trace.rows.front().position]);
      if (select::local_loss(window, *out.sample) <= start) ++improved;
    }
    CHECK(improved >= 90);
  }
  SUBCASE("active constraint drives the multiplier up") {
    const auto stream = random_pool(12, 2, 2, 6, 3.0);
    const auto pool = data::whole(stream);
    SelectionCounts counts(1e-3, 1e-9);
    for (std::size_t i = 0; i < pool.size(); ++i) counts.record_selection(pool, i);
    config.iterations = 15;
    config.repeat_threshold = 1e-9;
    config.bandwidth = 1e-3;
    const auto window = window_of({model::init_params(Architecture::logistic_regression(2, 2), 3)}, 1);
    Rng rng(11);
    const auto out = select::select_one(pool, window, counts, config, rng);
    REQUIRE(out.trace.rows.size() == 15);
    for (const TraceRow& r : out.trace.rows) {
      CHECK(r.g > 0.0);
      CHECK(r.mu_next > r.mu);
      CHECK(r.constraint_grad.size() == 2);
    }
    CHECK(out.mu_final == out.trace.rows.back().mu_next);
  }
  SUBCASE("empty window or pool is an error") {
    const auto stream = random_pool(5, 2, 2, 1);
    SnapshotWindow empty(2);
    SelectionCounts counts(1.0, 5.0);
    Rng rng(0);
    CHECK_ERROR_KIND(select::select_one(data::whole(stream), empty, counts, config, rng), ErrorKind::kInvalidArgument);
    const auto window = window_of({rightward()}, 1);
    CHECK_ERROR_KIND(select::select_one(data::PoolView(stream, 0, 1), window, counts, config, rng),
                     ErrorKind::kEmptyDataset);
  }
}

TEST_CASE("trace completeness and pool membership") {
  const auto stream = random_pool(60, 3, 3, 13);
  const auto pool = data::whole(stream);
  const Architecture arch = Architecture::mlp(3, 5, 3);
  const auto window = window_of({model::init_params(arch, 1), model::init_params(arch, 2)}, 3);
  SelectorConfig config;
  config.samples_per_slot = 8;
  config.iterations = 7;
  config.bandwidth = 0.8;
  config.repeat_threshold = 1.5;
  SelectionCounts counts(0.8, 1.5);
  Rng rng(5);
  const auto set = select::select_set(pool, window, counts, config, rng);
  REQUIRE(set.size() == 8);
  for (const auto& out : set) {
    CHECK(out.trace.complete());
    CHECK(out.trace.rows.size() == 7);
    CHECK(out.position < pool.size());
    for (const TraceRow& r : out.trace.rows) {
      CHECK(r.position < pool.size());
      CHECK(r.sample_id == pool[r.position].id);
      CHECK(r.mu >= 0.0);
      CHECK(r.mu_next >= 0.0);
      CHECK(std::abs(r.mu_next - r.mu) <= config.effective_dual_step() * std::abs(r.g));
    }
    for (std::size_t i = 1; i < out.trace.rows.size(); ++i) CHECK(out.trace.rows[i].mu == out.trace.rows[i - 1].mu_next);
  }
  CHECK(counts.total() == 8.0);
}

TEST_CASE("select_set bookkeeping") {
  const auto window = window_of({rightward()}, 1);
  SUBCASE("K = 1 matches select_one") {
    const auto stream = random_pool(25, 2, 2, 2);
    const auto pool = data::whole(stream);
    SelectorConfig config;
    config.samples_per_slot = 1;
    config.bandwidth = 1.0;
    SelectionCounts a(1.0, 5.0);
    SelectionCounts b(1.0, 5.0);
    Rng r1(17);
    Rng r2(17);
    const auto set = select::select_set(pool, window, a, config, r1);
    const auto one = select::select_one(pool, window, b, config, r2);
    REQUIRE(set.size() == 1);
    CHECK(set[0].position == one.position);
    CHECK(a.count_at(one.position) == 1.0);
  }
  SUBCASE("K = 5 over a pool of 3") {
    const auto stream = pool_of({{0.0, 0.0}, {3.0, 0.0}, {6.0, 0.0}});
    const auto pool = data::whole(stream);
    SelectorConfig config;
    config.samples_per_slot = 5;
    config.repeat_threshold = 1.0;
    config.bandwidth = 0.1;
    SelectionCounts counts(0.1, 1.0);
    Rng rng(3);
    const auto set = select::select_set(pool, window, counts, config, rng);
    REQUIRE(set.size() == 5);
    std::vector<double> tally(3, 0.0);
    for (const auto& out : set) tally[out.position] += 1.0;
    CHECK(counts.total() == 5.0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(counts.count_at(i) == tally[i]);
  }
  SUBCASE("counts grow by exactly K per slot") {
    const auto stream = random_pool(40, 2, 2, 31);
    const auto pool = data::whole(stream);
    SelectorConfig config;
    config.samples_per_slot = 6;
    config.iterations = 4;
    select::OgrsSelector selector(config);
    Rng rng(1);
    for (int slot = 0; slot < 4; ++slot) {
      selector.begin_slot(pool, rng);
      const double before = selector.counts().total();
      selector.select_set(pool, window, rng);
      CHECK(selector.counts().total() == before + 6.0);
    }
  }
}

TEST_CASE("stateful selector reproduces the reference selections") {
  const auto stream = random_pool(300, 5, 3, 99);
  const auto geometry = select::PoolGeometry::build(stream);
  const Architecture arch = Architecture::logistic_regression(5, 3);
  for (const auto init : {select::InitPolicy::kUniformRandom, select::InitPolicy::kLowestRecentLoss}) {
    SelectorConfig config;
    config.samples_per_slot = 10;
    config.iterations = 12;
    config.primal_step = 2.0;
    config.repeat_threshold = 0.8;
    config.bandwidth = 0.6;
    config.init = init;
    config.init_candidates = 4;
    for (const bool with_geometry : {false, true}) {
      select::OgrsSelector fast(config, with_geometry ? geometry : nullptr);
      SelectionCounts counts(0.6, 0.8);
      SnapshotWindow window(3);
      Rng r_fast(8);
      Rng r_ref(8);
      Rng r_model(4);
      for (std::int64_t slot = 50; slot <= 300; slot += 50) {
        window.push(model::init_params(arch, r_model()));
        const auto pool = data::pool_at(stream, slot);
        fast.begin_slot(pool, r_fast);
        counts.begin_slot();
        const auto a = fast.select_set(pool, window, r_fast);
        const auto b = select::select_set(pool, window, counts, config, r_ref);
        REQUIRE(a.size() == b.size());
        for (std::size_t k = 0; k < a.size(); ++k) {
          CHECK(a[k].position == b[k].position);
          CHECK(a[k].mu_final == b[k].mu_final);
          REQUIRE(a[k].trace.rows.size() == b[k].trace.rows.size());
          for (std::size_t i = 0; i < a[k].trace.rows.size(); ++i) {
            CHECK(a[k].trace.rows[i].position == b[k].trace.rows[i].position);
            CHECK(a[k].trace.rows[i].g == b[k].trace.rows[i].g);
          }
        }
      }
    }
  }
}

TEST_CASE("local regret") {
  CHECK(select::local_regret(trace_of({row_with(1, {0.0, 0.0}, 0.0, {})})) == 0.0);
  CHECK(select::local_regret(trace_of({row_with(1, {1.0, 0.0}, 0.0, {}), row_with(2, {0.0, -2.0}, 0.0, {})})) == 5.0);

  SelectorTrace partial = trace_of({row_with(1, {1.0}, 0.0, {})});
  partial.expected_rows = 2;
  CHECK_ERROR_KIND(select::local_regret(partial), ErrorKind::kIncompleteTrace);
  CHECK_ERROR_KIND(select::lagrangian_regret(partial), ErrorKind::kIncompleteTrace);

  const auto stream = random_pool(80, 3, 2, 41);
  const auto pool = data::whole(stream);
  const Architecture arch = Architecture::mlp(3, 4, 2);
  const auto window = window_of({model::init_params(arch, 1), model::init_params(arch, 2), model::init_params(arch, 3)}, 3);
  SelectorConfig config;
  config.iterations = 25;
  config.primal_step = 3.0;
  config.bandwidth = 0.5;
  SelectionCounts counts(0.5, 5.0);
  Rng rng(6);
  const auto out = select::select_one(pool, window, counts, config, rng);
  long double oracle = 0;
  for (const TraceRow& r : out.trace.rows) {
    long double per_row = 0;
    Vector mean = Vector::Zero(3);
    for (std::size_t j = 0; j < window.size(); ++j) mean += model::grad_features(window.at(j), pool[r.position]);
    mean /= static_cast<double>(window.size());
    for (Eigen::Index k = 0; k < 3; ++k) per_row += static_cast<long double>(mean[k]) * mean[k];
    oracle += per_row;
  }
  CHECK(select::local_regret(out.trace) == doctest::Approx(static_cast<double>(oracle)).epsilon(1e-12));
}

TEST_CASE("lagrangian regret") {
  CHECK(select::lagrangian_regret(trace_of({row_with(1, {0.0, 0.0}, 0.0, {}), row_with(2, {0.0, 0.0}, 0.0, {})})) == 0.0);
  // M = 1: H = (3, 0) + 2 (0, 2) = (3, 4).
  CHECK(select::lagrangian_regret(trace_of({row_with(1, {3.0, 0.0}, 2.0, {0.0, 2.0})})) == doctest::Approx(5.0));
  // Sum of H: (1, 2) + [(0, -1) + 0.5 (2, 2)] + (-2, 1) = (0, 3); third row's mu is zero.
  const auto t = trace_of({row_with(1, {1.0, 2.0}, 0.0, {}), row_with(2, {0.0, -1.0}, 0.5, {2.0, 2.0}),
                           row_with(3, {-2.0, 1.0}, 0.0, {7.0, 7.0})});
  CHECK(select::lagrangian_regret(t) == doctest::Approx(3.0));
  // A row with mu > 0 must carry its constraint gradient.
  CHECK_ERROR_KIND(select::lagrangian_regret(trace_of({row_with(1, {1.0, 0.0}, 0.3, {})})),
                   ErrorKind::kIncompleteTrace);
}

TEST_CASE("median pairwise distance") {
  const auto stream = pool_of({{0.0}, {1.0}, {3.0}});
  Rng rng(1);
  // Distances 1, 2, 3.
  CHECK(select::median_pairwise_distance(data::whole(stream), 256, rng) == 2.0);
  const auto four = pool_of({{0.0}, {1.0}, {3.0}, {7.0}});
  // Distances 1, 2, 3, 4, 6, 7: median (3 + 4) / 2.
  CHECK(select::median_pairwise_distance(data::whole(four), 256, rng) == 3.5);
}

TEST_CASE("fit slope") {
  const std::vector<double> x{0.0, 1.0, 2.0, 3.0};
  const std::vector<double> y{1.0, 1.5, 2.0, 2.5};
  CHECK(select::fit_slope(x, y) == doctest::Approx(0.5));
  CHECK_ERROR_KIND(select::fit_slope(std::vector<double>{1.0}, std::vector<double>{1.0}), ErrorKind::kInvalidArgument);
  CHECK_ERROR_KIND(select::fit_slope(std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, 2.0}),
                   ErrorKind::kInvalidArgument);
}

TEST_CASE("regret audit") {
  const std::vector<int> grid{8, 16, 32, 64};
  SUBCASE("vanishing gradients are reported as flat") {
    const auto stream = random_pool(30, 2, 2, 3);
    const auto window = window_of({model::zero_params(Architecture::logistic_regression(2, 2))}, 1);
    SelectionCounts counts(1.0, 5.0);
    Rng rng(1);
    const auto r = select::regret_audit(data::whole(stream), window, counts, SelectorConfig{}, grid, 10, rng);
    CHECK(r.flat);
    CHECK(std::isnan(r.slope));
    for (const auto& row : r.rows) CHECK(row.mean_rl == 0.0);
  }
  SUBCASE("grid and trial preconditions") {
    const auto stream = random_pool(30, 2, 2, 3);
    const auto window = window_of({rightward()}, 1);
    SelectionCounts counts(1.0, 5.0);
    Rng rng(1);
    const std::vector<int> short_grid{8, 16, 32};
    const std::vector<int> unsorted{8, 32, 16, 64};
    CHECK_ERROR_KIND(select::regret_audit(data::whole(stream), window, counts, {}, short_grid, 10, rng),
                     ErrorKind::kInvalidArgument);
    CHECK_ERROR_KIND(select::regret_audit(data::whole(stream), window, counts, {}, unsorted, 10, rng),
                     ErrorKind::kInvalidArgument);
    CHECK_ERROR_KIND(select::regret_audit(data::whole(stream), window, counts, {}, grid, 9, rng),
                     ErrorKind::kInvalidArgument);
  }
  SUBCASE("rows, dual bound and doubling stability") {
    const auto stream = data::generate_gaussian_mixture(300, 5);
    const auto pool = data::whole(stream);
    const Architecture arch = Architecture::logistic_regression(2, 2);
    const auto window = window_of({model::init_params(arch, 1), model::init_params(arch, 2)}, 5);
    SelectionCounts counts(0.5, 2.0);
    for (std::size_t i = 0; i < 40; ++i) counts.record_selection(pool, (i * 7) % pool.size());
    SelectorConfig config;
    config.primal_step = 0.5;
    Rng rng(100);
    const auto a = select::regret_audit(pool, window, counts, config, grid, 30, rng);
    REQUIRE(a.rows.size() == 4);
    CHECK_FALSE(a.flat);
    CHECK(a.dual_step_bound_held);
    CHECK(a.max_abs_g > 0.0);
    CHECK(a.sample_traces.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(a.rows[i].iterations == grid[i]);
      CHECK(a.rows[i].dual_step == doctest::Approx(std::pow(grid[i], -0.25)));
      CHECK(a.rows[i].trials == 30);
      CHECK(a.sample_traces[i].rows.size() == static_cast<std::size_t>(grid[i]));
    }
    CHECK(std::isfinite(a.slope));

    // Independent replay: the same draws reproduce the first grid point, and
    // doubling each point's trials moves its mean by at most two standard errors.
    SelectorConfig replay = config;
    replay.bandwidth = counts.bandwidth();
    replay.full_trace = true;
    for (std::size_t i = 0; i < 4; ++i) {
      select::OgrsSelector selector(replay);
      selector.counts() = counts;
      Rng r(i == 0 ? 100 : 300 + i);
      const double gamma = std::pow(grid[i], -0.25);
      std::vector<double> rl;
      for (int t = 0; t < 60; ++t) {
        rl.push_back(select::lagrangian_regret(selector.select_one_with(pool, window, grid[i], gamma, r).trace));
      }
      auto mean_of = [&](int n) { return std::accumulate(rl.begin(), rl.begin() + n, 0.0) / n; };
      const double m30 = mean_of(30);
      double var = 0.0;
      for (int t = 0; t < 30; ++t) var += (rl[static_cast<std::size_t>(t)] - m30) * (rl[static_cast<std::size_t>(t)] - m30);
      const double se30 = std::sqrt(var / 29.0 / 30.0);
      if (i == 0) {
        CHECK(m30 == doctest::Approx(a.rows[0].mean_rl).epsilon(1e-12));
        CHECK(se30 == doctest::Approx(a.rows[0].stderr_rl).epsilon(1e-9));
      }
      CHECK(std::abs(mean_of(60) - m30) <= 2.0 * se30);
    }
  }
}

TEST_CASE("selection favours clean samples on a bimodal pool") {
  // Separable classes; the window model fits the true labels, so flipped
  // samples have much larger loss than clean ones.
  const ModelParams fit = lr2({-2.0, -2.0}, {2.0, 2.0}, {0.0, 0.0});
  SelectorConfig config;
  config.samples_per_slot = 32;
  config.primal_step = 5.0;
  config.bandwidth_scale = 0.02;
  config.reset = select::ResetPolicy::kPerSlot;
  int wins = 0;
  const int seeds = 20;
  for (int seed = 1; seed <= seeds; ++seed) {
    Rng rng(static_cast<std::uint64_t>(seed));
    std::vector<data::LabeledSample> samples;
    for (int i = 0; i < 200; ++i) {
      const int y = i % 2;
      const double c = y == 1 ? 2.0 : -2.0;
      const int observed = uniform01(rng) < 0.6 ? y : 1 - y;
      samples.push_back(sample(i, {c + standard_normal(rng), c + standard_normal(rng)}, observed, y, 1));
    }
    const data::StreamPool stream(std::move(samples), 2);
    const auto pool = data::whole(stream);
    const auto window = window_of({fit}, 5);
    select::OgrsSelector selector(config);
    selector.begin_slot(pool, rng);
    const auto set = selector.select_set(pool, window, rng);
    double clean = 0.0;
    for (const auto& out : set) clean += out.sample->observed_label == out.sample->true_label ? 1.0 : 0.0;
    if (clean / static_cast<double>(set.size()) > data::clean_fraction(pool.samples())) ++wins;
  }
  // One-sided sign test: P(X >= wins | n = 20, p = 1/2).
  double tail = 0.0;
  for (int k = wins; k <= seeds; ++k) tail += std::exp(std::lgamma(seeds + 1.0) - std::lgamma(k + 1.0) - std::lgamma(seeds - k + 1.0)) * std::pow(0.5, seeds);
  CHECK_MESSAGE(tail < 0.05, "clean wins " << wins << " of " << seeds);
}

}  // namespace ogrs::test
