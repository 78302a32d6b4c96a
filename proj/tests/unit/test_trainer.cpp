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

#include <cmath>
#include <vector>

#include <doctest.h>

#include "helpers.hpp"
#include "ogrs/trainer.hpp"

namespace ogrs::test {

using baseline::SelectorKind;
using model::Architecture;
using model::ModelParams;
using train::MetricsRow;
using train::Trainer;
using train::TrainerOptions;

namespace {

struct Split {
  data::StreamPool train;
  data::StreamPool test;
};

Split mixture_split(std::int64_t n_train, std::uint64_t seed, double clean_ratio) {
  const auto all = data::generate_gaussian_mixture(n_train + 100, seed);
  std::vector<data::LabeledSample> tr(all.samples().begin(), all.samples().begin() + n_train);
  std::vector<data::LabeledSample> te(all.samples().begin() + n_train, all.samples().end());
  auto train = data::restream(tr, 2, 1);
  if (clean_ratio < 1.0) {
    train = data::inject_label_noise(train, data::constant_schedule(train.max_slot(), clean_ratio), 2, seed);
  }
  return {std::move(train), data::restream(te, 2, 1)};
}

TrainerOptions lr_options(std::int64_t total, int warmup) {
  TrainerOptions o;
  o.architecture = Architecture::logistic_regression(2, 2);
  o.total_slots = total;
  o.warmup_rounds = warmup;
  o.samples_per_slot = 8;
  o.eval_stride = 10;
  o.selector.samples_per_slot = 8;
  o.selector.iterations = 5;
  o.seed = 3;
  return o;
}

bool rows_identical(const std::vector<MetricsRow>& a, const std::vector<MetricsRow>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const MetricsRow& x = a[i];
    const MetricsRow& y = b[i];
    if (x.slot != y.slot || x.test_accuracy != y.test_accuracy ||
        x.selection_clean_fraction != y.selection_clean_fraction || x.mean_rl != y.mean_rl ||
        x.mean_rw != y.mean_rw || x.mean_mu_final != y.mean_mu_final || x.train_loss != y.train_loss ||
        x.evaluated != y.evaluated) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("evaluate") {
  SUBCASE("zero weights predict class 0 on a balanced set") {
    const auto test = data::generate_gaussian_mixture(400, 2);
    const ModelParams zero = model::zero_params(Architecture::logistic_regression(2, 2));
    CHECK(train::evaluate(zero, test) == 0.5);
  }
  SUBCASE("a perfect separator scores 1") {
    std::vector<data::LabeledSample> samples;
    for (int i = 0; i < 50; ++i) {
      const int y = i % 2;
      samples.push_back(sample(i, {y == 1 ? 1.0 + 0.01 * i : -1.0 - 0.01 * i}, y, y, 1));
    }
    const data::StreamPool test(std::move(samples), 2);
    Vector w(4);
    w << -1.0, 1.0, 0.0, 0.0;
    CHECK(train::evaluate(ModelParams(Architecture::logistic_regression(1, 2), w), test) == 1.0);
  }
  SUBCASE("random parameters on random ten-class data") {
    const auto test = random_pool(10000, 8, 10, 5);
    const ModelParams p = model::init_params(Architecture::logistic_regression(8, 10), 6);
    const double acc = train::evaluate(p, test);
    CHECK(acc >= 0.07);
    CHECK(acc <= 0.13);
  }
  SUBCASE("scores the true label, not the observed one") {
    std::vector<data::LabeledSample> samples;
    samples.push_back(sample(0, {-1.0}, 1, 0, 1));
    samples.push_back(sample(1, {1.0}, 0, 1, 1));
    const data::StreamPool test(std::move(samples), 2);
    Vector w(4);
    w << -1.0, 1.0, 0.0, 0.0;
    CHECK(train::evaluate(ModelParams(Architecture::logistic_regression(1, 2), w), test) == 1.0);
  }
  SUBCASE("empty test pool") {
    CHECK_ERROR_KIND(train::evaluate(model::zero_params(Architecture::logistic_regression(2, 2)), data::StreamPool()),
                     ErrorKind::kEmptyDataset);
  }
}

TEST_CASE("trainer options") {
  CHECK(train::default_learning_rate(Architecture::logistic_regression(2, 2)) == 0.05);
  CHECK(train::default_learning_rate(Architecture::mlp(2, 4, 2)) == 0.01);
  TrainerOptions o = lr_options(20, 5);
  CHECK_NOTHROW(o.validate());
  o.total_slots = 4;
  CHECK_ERROR_KIND(o.validate(), ErrorKind::kValidation);
  o = lr_options(20, 5);
  o.learning_rate = 0.0;
  CHECK_ERROR_KIND(o.validate(), ErrorKind::kValidation);
  o = lr_options(20, 5);
  o.warmup_rounds = 0;
  CHECK_ERROR_KIND(o.validate(), ErrorKind::kValidation);
  o = lr_options(20, 5);
  o.eval_stride = 0;
  CHECK_ERROR_KIND(o.validate(), ErrorKind::kValidation);

  const Split s = mixture_split(30, 1, 1.0);
  TrainerOptions wrong = lr_options(20, 5);
  wrong.architecture = Architecture::logistic_regression(3, 2);
  CHECK_ERROR_KIND(Trainer(s.train, s.test, SelectorKind::naive(), wrong), ErrorKind::kValidation);
  CHECK_ERROR_KIND(Trainer(s.train, s.test, SelectorKind::itlm(2.0), lr_options(20, 5)), ErrorKind::kValidation);
}

TEST_CASE("warm-up") {
  const Split s = mixture_split(600, 4, 0.6);
  SUBCASE("500 rounds leave the next slot at 501") {
    TrainerOptions o = lr_options(600, 500);
    Trainer t(s.train, s.test, SelectorKind::ogrs(), o);
    const auto rows = t.warmup(500);
    CHECK(rows.size() == 500);
    CHECK(t.next_slot() == 501);
    CHECK(t.window().size() == 5);
    for (const MetricsRow& r : rows) {
      CHECK(r.mean_rl == 0.0);
      CHECK(r.mean_mu_final == 0.0);
    }
  }
  SUBCASE("one round holds one snapshot") {
    Trainer t(s.train, s.test, SelectorKind::ogrs(), lr_options(20, 1));
    t.warmup(1);
    CHECK(t.window().size() == 1);
    CHECK(t.window().at(0) == t.params());
  }
  SUBCASE("deterministic and independent of the selector") {
    Trainer a(s.train, s.test, SelectorKind::ogrs(), lr_options(100, 40));
    Trainer b(s.train, s.test, SelectorKind::itlm(0.5), lr_options(100, 40));
    Trainer c(s.train, s.test, SelectorKind::ogrs(), lr_options(100, 40));
    a.warmup(40);
    b.warmup(40);
    c.warmup(40);
    CHECK(a.params() == b.params());
    CHECK(a.params() == c.params());
  }
  SUBCASE("exhausted stream") {
    Trainer t(s.train, s.test, SelectorKind::naive(), lr_options(700, 10));
    CHECK_ERROR_KIND(t.warmup(601), ErrorKind::kInvalidArgument);
    CHECK_ERROR_KIND(t.warmup(0), ErrorKind::kInvalidArgument);
  }
  SUBCASE("selective slot before warm-up") {
    Trainer t(s.train, s.test, SelectorKind::naive(), lr_options(20, 5));
    CHECK_ERROR_KIND(t.run_slot(), ErrorKind::kInvalidArgument);
  }
}

TEST_CASE("selective slots") {
  const Split s = mixture_split(120, 7, 0.6);
  SUBCASE("window holds the latest parameters newest first") {
    TrainerOptions o = lr_options(60, 3);
    Trainer t(s.train, s.test, SelectorKind::ogrs(), o);
    t.warmup(3);
    std::vector<ModelParams> history;
    for (int i = 0; i < 12; ++i) {
      t.run_slot();
      history.push_back(t.params());
      const std::size_t held = std::min<std::size_t>(history.size() + 3, 5);
      REQUIRE(t.window().size() == held);
      for (std::size_t j = 0; j < std::min(held, history.size()); ++j) {
        CHECK(t.window().at(j) == history[history.size() - 1 - j]);
      }
    }
  }
  SUBCASE("selections come from the pool as it stands") {
    for (const SelectorKind kind : {SelectorKind::ogrs(), SelectorKind::itlm(0.5), SelectorKind::naive(),
                                    SelectorKind::oracle()}) {
      Trainer t(s.train, s.test, kind, lr_options(100, 10));
      std::int64_t checked = 0;
      t.set_selection_observer([&](std::int64_t slot, const train::SlotSelection& sel) {
        CHECK(sel.batch.size() == 8);
        for (model::SampleRef r : sel.batch) CHECK(r->arrival_slot <= slot);
        if (kind.tag == SelectorKind::Tag::kOgrs) {
          CHECK(sel.outcomes.size() == 8);
          for (const auto& o : sel.outcomes) CHECK(o.position < static_cast<std::size_t>(slot));
        } else {
          CHECK(sel.outcomes.empty());
        }
        ++checked;
      });
      t.warmup(10);
      for (int i = 0; i < 30; ++i) CHECK(t.run_slot().slot == 11 + i);
      CHECK(checked == 30);
    }
  }
  SUBCASE("oracle on an all-clean stream is pure") {
    const Split clean = mixture_split(80, 2, 1.0);
    const auto rows = train::run(clean.train, clean.test, SelectorKind::oracle(), lr_options(80, 5));
    for (const MetricsRow& r : rows) CHECK(r.selection_clean_fraction == 1.0);
  }
  SUBCASE("ogrs rows carry regret and multiplier statistics") {
    const auto rows = train::run(s.train, s.test, SelectorKind::ogrs(), lr_options(40, 10));
    for (const MetricsRow& r : rows) {
      CHECK(std::isfinite(r.mean_rl));
      CHECK(r.mean_rl >= 0.0);
      CHECK(r.mean_rw >= 0.0);
      CHECK(r.mean_mu_final >= 0.0);
      CHECK(r.selection_clean_fraction >= 0.0);
      CHECK(r.selection_clean_fraction <= 1.0);
      CHECK(r.test_accuracy >= 0.0);
      CHECK(r.test_accuracy <= 1.0);
      CHECK(std::isfinite(r.train_loss));
    }
    CHECK(rows.back().mean_rw > 0.0);
  }
}

TEST_CASE("full runs") {
  const Split s = mixture_split(200, 11, 0.6);
  SUBCASE("rows are consecutive and evaluation follows the stride") {
    TrainerOptions o = lr_options(95, 7);
    const auto rows = train::run(s.train, s.test, SelectorKind::ogrs(), o);
    REQUIRE(rows.size() == 95);
    double last = -1.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::int64_t t = static_cast<std::int64_t>(i) + 1;
      CHECK(rows[i].slot == t);
      const bool expect = t == 1 || t % 10 == 0 || t == 7 || t == 95;
      CHECK(rows[i].evaluated == expect);
      if (!rows[i].evaluated) CHECK(rows[i].test_accuracy == last);
      last = rows[i].test_accuracy;
    }
  }
  SUBCASE("T equal to the warm-up has no selective phase") {
    const auto rows = train::run(s.train, s.test, SelectorKind::ogrs(), lr_options(20, 20));
    CHECK(rows.size() == 20);
    for (const MetricsRow& r : rows) CHECK(r.mean_rw == 0.0);
    CHECK(rows.back().evaluated);
  }
  SUBCASE("same config and seed give identical traces") {
    for (const SelectorKind kind : {SelectorKind::ogrs(), SelectorKind::itlm(0.6), SelectorKind::naive()}) {
      const auto a = train::run(s.train, s.test, kind, lr_options(80, 10));
      const auto b = train::run(s.train, s.test, kind, lr_options(80, 10));
      CHECK(rows_identical(a, b));
    }
    TrainerOptions other = lr_options(80, 10);
    other.seed = 4;
    CHECK_FALSE(rows_identical(train::run(s.train, s.test, SelectorKind::ogrs(), lr_options(80, 10)),
                               train::run(s.train, s.test, SelectorKind::ogrs(), other)));
  }
  SUBCASE("geometry does not change results") {
    const auto geometry = select::PoolGeometry::build(s.train);
    CHECK(rows_identical(train::run(s.train, s.test, SelectorKind::ogrs(), lr_options(80, 10)),
                         train::run(s.train, s.test, SelectorKind::ogrs(), lr_options(80, 10), geometry)));
  }
  SUBCASE("methods see the same stream") {
    const std::uint64_t before = s.train.fingerprint();
    std::vector<std::uint64_t> seen;
    for (const SelectorKind kind : {SelectorKind::ogrs(), SelectorKind::itlm(0.5), SelectorKind::naive(),
                                    SelectorKind::oracle()}) {
      Trainer t(s.train, s.test, kind, lr_options(60, 10));
      t.warmup(10);
      while (t.next_slot() <= 60) t.run_slot();
      seen.push_back(t.train_pool().fingerprint());
    }
    for (std::uint64_t f : seen) CHECK(f == before);
  }
  SUBCASE("slots past the last arrival reuse the full pool") {
    const Split small = mixture_split(30, 3, 0.6);
    const auto rows = train::run(small.train, small.test, SelectorKind::itlm(0.5), lr_options(50, 10));
    CHECK(rows.size() == 50);
  }
  SUBCASE("rows before a failure are delivered") {
    // No clean sample arrives until slot 21, so the oracle fails on slot 11.
    std::vector<data::LabeledSample> samples;
    for (int i = 0; i < 40; ++i) {
      const int y = i % 2;
      samples.push_back(sample(i, {y ? 1.0 : -1.0, 0.1 * i}, i < 20 ? 1 - y : y, y, i + 1));
    }
    const data::StreamPool stream(std::move(samples), 2);
    std::vector<std::int64_t> delivered;
    CHECK_ERROR_KIND(train::run(stream, s.test, SelectorKind::oracle(), lr_options(40, 10), nullptr,
                                [&](const MetricsRow& r) { delivered.push_back(r.slot); }),
                     ErrorKind::kEmptyDataset);
    CHECK(delivered.size() == 10);
    CHECK(delivered.back() == 10);
  }
}

TEST_CASE("accuracy summaries") {
  std::vector<MetricsRow> rows(4);
  for (int i = 0; i < 4; ++i) {
    rows[static_cast<std::size_t>(i)].slot = i + 1;
    rows[static_cast<std::size_t>(i)].test_accuracy = 0.1 * (i + 1);
    rows[static_cast<std::size_t>(i)].selection_clean_fraction = i < 2 ? 0.0 : 1.0;
  }
  CHECK(train::final_accuracy(rows) == doctest::Approx(0.4));
  CHECK(train::mean_accuracy(rows) == doctest::Approx(0.25));
  CHECK(train::mean_selective_clean_fraction(rows, 2) == 1.0);
  CHECK_ERROR_KIND(train::final_accuracy({}), ErrorKind::kInvalidArgument);
  CHECK_ERROR_KIND(train::mean_selective_clean_fraction(rows, 4), ErrorKind::kInvalidArgument);
}

}  // namespace ogrs::test
