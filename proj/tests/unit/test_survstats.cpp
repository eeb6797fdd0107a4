#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "chronosurv/errors.hpp"
#include "chronosurv/rng.hpp"
#include "chronosurv/sampling.hpp"
#include "chronosurv/survstats.hpp"
#include "oracles.hpp"

using namespace chronosurv;

TEST_SUITE_BEGIN("survstats");

namespace {

// Random time/event instance of size <= 12 with ties made likely.
void random_instance(Rng& rng, std::vector<double>* times, std::vector<int>* events,
                     int max_n = 12) {
  const int n = 1 + static_cast<int>(rng.uniform_int(0, max_n - 1));
  times->clear();
  events->clear();
  for (int i = 0; i < n; ++i) {
    times->push_back(static_cast<double>(rng.uniform_int(1, 8)));
    events->push_back(rng.bernoulli(0.6) ? 1 : 0);
  }
}

}  // namespace

TEST_CASE("km_fit hand values") {
  SUBCASE("all censored -> survival stays 1") {
    const KMCurve km = km_fit({3.0, 6.0, 9.0}, {0, 0, 0});
    CHECK(km.event_times.empty());
    CHECK(km.at(100.0) == doctest::Approx(1.0));
    CHECK(km.censor_marks.size() == 3);
  }
  SUBCASE("times {5,10,15}, events {1,0,1}") {
    const KMCurve km = km_fit({5.0, 10.0, 15.0}, {1, 0, 1});
    CHECK(km.at(5.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(km.at(12.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(km.at(15.0) == doctest::Approx(0.0));
  }
  SUBCASE("single death among n at time t -> (n-1)/n") {
    const KMCurve km = km_fit({4.0, 9.0, 9.0, 9.0, 9.0}, {1, 0, 0, 0, 0});
    CHECK(km.at(4.0) == doctest::Approx(4.0 / 5.0).epsilon(1e-12));
  }
  SUBCASE("empty input rejected") {
    CHECK_THROWS_AS(km_fit({}, {}), InvalidInputError);
  }
}

TEST_CASE("km_fit matches the product-limit oracle on random instances") {
  Rng rng(21);
  std::vector<double> times;
  std::vector<int> events;
  for (int trial = 0; trial < 250; ++trial) {
    random_instance(rng, &times, &events);
    const KMCurve km = km_fit(times, events);
    for (double t = 0.0; t <= 9.0; t += 0.5)
      CHECK(std::abs(km.at(t) - oracle::km_survival_at(times, events, t)) < 1e-10);
  }
}

TEST_CASE("km survival is non-increasing and within [0,1]") {
  Rng rng(22);
  std::vector<double> times;
  std::vector<int> events;
  for (int trial = 0; trial < 100; ++trial) {
    random_instance(rng, &times, &events);
    const KMCurve km = km_fit(times, events);
    double prev = 1.0;
    for (const double s : km.survival) {
      CHECK(s >= 0.0);
      CHECK(s <= prev + 1e-15);
      prev = s;
    }
  }
}

TEST_CASE("log_rank hand table: A={1,2 events}, B={3,4 events}") {
  // Four-row table: O_A = 2, E_A = 1/2 + 1/3 = 5/6, V = 1/4 + 2/9 = 17/36.
  // chi2 = (7/6)^2 / (17/36) = 49/17.
  const LogRankResult lr = log_rank({1.0, 2.0}, {1, 1}, {3.0, 4.0}, {1, 1});
  CHECK(lr.chi2 == doctest::Approx(49.0 / 17.0).epsilon(1e-12));
  CHECK(lr.p == doctest::Approx(std::erfc(std::sqrt(49.0 / 34.0))).epsilon(1e-12));
}

TEST_CASE("log_rank identical groups -> chi2 0, p 1") {
  const LogRankResult lr = log_rank({1.0, 2.0, 3.0}, {1, 0, 1}, {1.0, 2.0, 3.0}, {1, 0, 1});
  CHECK(lr.chi2 == doctest::Approx(0.0));
  CHECK(lr.p == doctest::Approx(1.0));
}

TEST_CASE("chi2 = 3.841 maps to p near 0.05 via erfc") {
  CHECK(std::erfc(std::sqrt(3.841 / 2.0)) == doctest::Approx(0.05).epsilon(2e-3));
}

TEST_CASE("log_rank is symmetric and matches the O/E/V oracle") {
  Rng rng(23);
  std::vector<double> ta, tb;
  std::vector<int> ea, eb;
  for (int trial = 0; trial < 250; ++trial) {
    random_instance(rng, &ta, &ea);
    random_instance(rng, &tb, &eb);
    bool any = false;
    for (int e : ea) any = any || e != 0;
    for (int e : eb) any = any || e != 0;
    if (!any) ea[0] = 1;

    const LogRankResult ab = log_rank(ta, ea, tb, eb);
    const LogRankResult ba = log_rank(tb, eb, ta, ea);
    CHECK(std::abs(ab.chi2 - ba.chi2) < 1e-10);

    const oracle::LogRankTable table = oracle::log_rank_table(ta, ea, tb, eb);
    if (table.variance > 0.0) {
      const double want = (table.observed_a - table.expected_a) *
                          (table.observed_a - table.expected_a) / table.variance;
      CHECK(std::abs(ab.chi2 - want) < 1e-10);
    } else {
      CHECK(ab.chi2 == doctest::Approx(0.0));
    }
  }
}

TEST_CASE("log_rank with zero events is undefined") {
  CHECK_THROWS_AS(log_rank({1.0}, {0}, {2.0}, {0}), UndefinedStatError);
}

TEST_CASE("c_index hand values") {
  SUBCASE("perfect anti-correlation, all events -> 1") {
    CHECK(*c_index({4.0, 3.0, 2.0, 1.0}, {1.0, 2.0, 3.0, 4.0}, {1, 1, 1, 1}) ==
          doctest::Approx(1.0));
  }
  SUBCASE("all risks equal -> 0.5") {
    CHECK(*c_index({1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}, {1, 1, 1}) == doctest::Approx(0.5));
  }
  SUBCASE("no comparable pairs -> undefined") {
    CHECK_FALSE(c_index({1.0, 2.0}, {5.0, 5.0}, {1, 1}).has_value());
    CHECK_FALSE(c_index({1.0, 2.0}, {1.0, 2.0}, {0, 0}).has_value());
  }
}

TEST_CASE("c_index matches exhaustive enumeration on random instances") {
  Rng rng(24);
  std::vector<double> times;
  std::vector<int> events;
  for (int trial = 0; trial < 250; ++trial) {
    random_instance(rng, &times, &events);
    std::vector<double> risk(times.size());
    for (double& r : risk) r = rng.uniform(0.0, 1.0);
    if (rng.bernoulli(0.3) && !risk.empty()) risk[0] = risk[risk.size() / 2];  // force ties sometimes
    const auto got = c_index(risk, times, events);
    const auto want = oracle::c_index(risk, times, events);
    CHECK(got.has_value() == want.has_value());
    if (got) CHECK(std::abs(*got - *want) < 1e-10);
  }
}

TEST_CASE("c_index(r) + c_index(-r) = 1 without risk ties") {
  Rng rng(25);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 4 + static_cast<int>(rng.uniform_int(0, 6));
    std::vector<double> risk, times;
    std::vector<int> events;
    for (int i = 0; i < n; ++i) {
      risk.push_back(rng.uniform(0.0, 1.0) + i * 1e-6);  // distinct
      times.push_back(static_cast<double>(rng.uniform_int(1, 50)));
      events.push_back(rng.bernoulli(0.7) ? 1 : 0);
    }
    std::vector<double> neg(risk.size());
    for (std::size_t i = 0; i < risk.size(); ++i) neg[i] = -risk[i];
    const auto a = c_index(risk, times, events);
    const auto b = c_index(neg, times, events);
    if (a && b) CHECK(*a + *b == doctest::Approx(1.0).epsilon(1e-12));
  }
}

namespace {

struct PatientPool {
  std::vector<PatientRecord> storage;
  std::vector<const PatientRecord*> ptrs;

  void add(int survival_days, bool event) {
    storage.push_back(oracle::patient(survival_days, event, "p" + std::to_string(storage.size())));
  }
  void finish() {
    ptrs.clear();
    for (const auto& p : storage) ptrs.push_back(&p);
  }
};

}  // namespace

TEST_CASE("time_dependent_auc examples and oracle") {
  SUBCASE("perfectly separated probabilities -> 1") {
    PatientPool pool;
    pool.add(100, true);   // case at tau=200
    pool.add(150, true);   // case
    pool.add(400, false);  // control
    pool.add(500, true);   // died later: control at tau=200
    pool.finish();
    const auto auc = time_dependent_auc({0.1, 0.2, 0.9, 0.8}, pool.ptrs, 200.0);
    CHECK(*auc == doctest::Approx(1.0));
  }
  SUBCASE("case and control with equal prob -> 0.5") {
    PatientPool pool;
    pool.add(100, true);
    pool.add(400, false);
    pool.finish();
    CHECK(*time_dependent_auc({0.5, 0.5}, pool.ptrs, 200.0) == doctest::Approx(0.5));
  }
  SUBCASE("censored before tau are excluded; empty side -> undefined") {
    PatientPool pool;
    pool.add(100, false);  // censored before tau: excluded
    pool.add(400, false);  // control
    pool.finish();
    CHECK_FALSE(time_dependent_auc({0.4, 0.9}, pool.ptrs, 200.0).has_value());
  }
  SUBCASE("six-patient hand set equals Mann-Whitney") {
    PatientPool pool;
    pool.add(50, true);
    pool.add(180, true);
    pool.add(210, false);
    pool.add(300, true);
    pool.add(150, false);  // excluded
    pool.add(220, false);
    pool.finish();
    const std::vector<double> probs{0.2, 0.45, 0.8, 0.55, 0.3, 0.45};
    const double tau = 200.0;
    const auto got = time_dependent_auc(probs, pool.ptrs, tau);
    // cases: died <= 200 -> p0, p1; controls: survival > 200 -> p2, p3, p5
    const auto want = oracle::mann_whitney({1.0 - 0.2, 1.0 - 0.45}, {1.0 - 0.8, 1.0 - 0.55, 1.0 - 0.45});
    CHECK(*got == doctest::Approx(*want).epsilon(1e-12));
  }
}

TEST_CASE("time_dependent_auc random instances match the pairwise oracle") {
  Rng rng(26);
  for (int trial = 0; trial < 250; ++trial) {
    PatientPool pool;
    const int n = 2 + static_cast<int>(rng.uniform_int(0, 10));
    std::vector<double> probs;
    for (int i = 0; i < n; ++i) {
      pool.add(static_cast<int>(rng.uniform_int(10, 400)), rng.bernoulli(0.5));
      probs.push_back(rng.uniform(0.0, 1.0));
    }
    pool.finish();
    const double tau = 200.0;
    std::vector<double> case_scores, control_scores;
    for (int i = 0; i < n; ++i) {
      const auto& p = pool.storage[static_cast<std::size_t>(i)];
      if (p.event && p.survival_days() <= tau) case_scores.push_back(1.0 - probs[static_cast<std::size_t>(i)]);
      else if (p.survival_days() > tau) control_scores.push_back(1.0 - probs[static_cast<std::size_t>(i)]);
    }
    const auto got = time_dependent_auc(probs, pool.ptrs, tau);
    const auto want = oracle::mann_whitney(case_scores, control_scores);
    CHECK(got.has_value() == want.has_value());
    if (got) CHECK(std::abs(*got - *want) < 1e-10);
  }
}

TEST_CASE("time_dependent_auc is invariant under strictly monotone transforms") {
  Rng rng(27);
  PatientPool pool;
  std::vector<double> probs;
  for (int i = 0; i < 12; ++i) {
    pool.add(static_cast<int>(rng.uniform_int(10, 400)), rng.bernoulli(0.6));
    probs.push_back(rng.uniform(0.01, 0.99));
  }
  pool.finish();
  const auto base = time_dependent_auc(probs, pool.ptrs, 200.0);
  std::vector<double> squashed(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i)
    squashed[i] = 1.0 / (1.0 + std::exp(-4.0 * (probs[i] - 0.5)));  // strictly increasing
  const auto transformed = time_dependent_auc(squashed, pool.ptrs, 200.0);
  REQUIRE(base.has_value());
  CHECK(*base == doctest::Approx(*transformed).epsilon(1e-12));
}

TEST_CASE("accuracy_at examples") {
  PatientPool pool;
  pool.add(100, true);   // case
  pool.add(400, false);  // control
  pool.add(150, false);  // excluded
  pool.finish();
  SUBCASE("all correct") {
    CHECK(*accuracy_at({0.1, 0.9, 0.5}, pool.ptrs, 200.0) == doctest::Approx(1.0));
  }
  SUBCASE("prob exactly at threshold counts as an alive prediction") {
    // case predicted alive -> wrong; control predicted alive -> right
    CHECK(*accuracy_at({0.5, 0.5, 0.5}, pool.ptrs, 200.0) == doctest::Approx(0.5));
  }
  SUBCASE("hand set of five equals a direct count") {
    PatientPool five;
    five.add(100, true);
    five.add(120, true);
    five.add(300, false);
    five.add(320, true);
    five.add(340, false);
    five.finish();
    // predictions at tau=200: 0.4, 0.6, 0.7, 0.2, 0.55
    // case p0 pred dead (right), case p1 pred alive (wrong),
    // control p2 pred alive (right), control p3 pred dead (wrong),
    // control p4 pred alive (right) -> 3/5
    CHECK(*accuracy_at({0.4, 0.6, 0.7, 0.2, 0.55}, five.ptrs, 200.0) ==
          doctest::Approx(0.6).epsilon(1e-12));
  }
  SUBCASE("empty eligible set -> undefined") {
    PatientPool none;
    none.add(50, false);
    none.finish();
    CHECK_FALSE(accuracy_at({0.5}, none.ptrs, 200.0).has_value());
  }
}

TEST_CASE("auspc hand values and oracle") {
  SUBCASE("constant 1 over [0,1825] -> 1825") {
    SurvivalCurve c;
    c.grid_days = evaluation_grid();
    c.probs.assign(c.grid_days.size(), 1.0);
    CHECK(auspc(c) == doctest::Approx(1825.0).epsilon(1e-12));
  }
  SUBCASE("linear 1 -> 0 gives the triangle area") {
    SurvivalCurve c;
    c.grid_days = {0, 1825};
    c.probs = {1.0, 0.0};
    CHECK(auspc(c) == doctest::Approx(912.5).epsilon(1e-12));
  }
  SUBCASE("random 30-day-grid curve equals the summed trapezoids") {
    Rng rng(28);
    for (int trial = 0; trial < 50; ++trial) {
      SurvivalCurve c;
      c.grid_days = evaluation_grid();
      for (std::size_t i = 0; i < c.grid_days.size(); ++i) c.probs.push_back(rng.uniform(0.0, 1.0));
      CHECK(auspc(c) == doctest::Approx(oracle::trapezoid(c.grid_days, c.probs)).epsilon(1e-12));
    }
  }
  SUBCASE("grid not covering the horizon is rejected") {
    SurvivalCurve c;
    c.grid_days = {0, 900};
    c.probs = {1.0, 0.5};
    CHECK_THROWS_AS(auspc(c), InvalidInputError);
  }
}

TEST_CASE("auspc is monotone in the curve") {
  Rng rng(29);
  SurvivalCurve lo, hi;
  lo.grid_days = hi.grid_days = evaluation_grid();
  for (std::size_t i = 0; i < lo.grid_days.size(); ++i) {
    const double p = rng.uniform(0.0, 0.8);
    lo.probs.push_back(p);
    hi.probs.push_back(p + rng.uniform(0.0, 0.2));
  }
  CHECK(auspc(hi) >= auspc(lo));
}

TEST_CASE("predicted_death_time") {
  SUBCASE("never below 0.5 -> absent") {
    SurvivalCurve c;
    c.grid_days = {0, 30, 60};
    c.probs = {0.9, 0.8, 0.7};
    CHECK_FALSE(predicted_death_time(c).has_value());
  }
  SUBCASE("0.6 then 0.4 crosses at day 15") {
    SurvivalCurve c;
    c.grid_days = {0, 30};
    c.probs = {0.6, 0.4};
    CHECK(*predicted_death_time(c) == doctest::Approx(15.0).epsilon(1e-12));
  }
  SUBCASE("matches bisection on the interpolant for a step-like curve") {
    SurvivalCurve c;
    c.grid_days = {0, 30, 60, 90, 120};
    c.probs = {0.95, 0.9, 0.85, 0.2, 0.1};
    const double got = *predicted_death_time(c);
    // bisection over the piecewise-linear interpolant
    double lo = 0.0, hi = 120.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (curve_prob_at(c, mid) >= 0.5) lo = mid;
      else hi = mid;
    }
    CHECK(got == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-9));
  }
}

TEST_SUITE_END();
