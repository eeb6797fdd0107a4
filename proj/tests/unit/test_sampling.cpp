#include <doctest.h>

#include <vector>

#include "chronosurv/errors.hpp"
#include "chronosurv/sampling.hpp"
#include "oracles.hpp"

using namespace chronosurv;

TEST_SUITE_BEGIN("sampling");

namespace {

PatientRecord deceased(int scan, int death, int lfd) {
  PatientRecord p;
  p.id = "d";
  p.scan_day = scan;
  p.death_day = death;
  p.lfd_day = lfd;
  p.event = true;
  return p;
}

PatientRecord alive(int scan, int lfd) {
  PatientRecord p;
  p.id = "a";
  p.scan_day = scan;
  p.lfd_day = lfd;
  p.event = false;
  return p;
}

bool label_consistent(const PatientRecord& p, const TimeSample& s) {
  const int abs_day = p.scan_day + s.t_days;
  if (abs_day < p.scan_day || abs_day > p.lfd_day) return false;
  const bool should_be_dead = p.event && abs_day >= *p.death_day;
  return (s.label == OsLabel::deceased) == should_be_dead;
}

}  // namespace

TEST_CASE("alive patients give exactly alive_points samples, all alive, all before lfd") {
  const PatientRecord p = alive(10, 900);
  Rng rng(41);
  const auto samples = sample_epoch(p, rng);
  CHECK(samples.size() == 6);
  for (const auto& s : samples) {
    CHECK(s.label == OsLabel::alive);
    CHECK(s.t_days >= 1);
    CHECK(p.scan_day + s.t_days <= p.lfd_day);
    CHECK(label_consistent(p, s));
  }
}

TEST_CASE("deceased patients with both phases give 6 alive + 12 deceased") {
  const PatientRecord p = deceased(0, 400, 1500);
  Rng rng(42);
  const auto samples = sample_epoch(p, rng);
  REQUIRE(samples.size() == 18);
  int n_alive = 0, n_dead = 0;
  for (const auto& s : samples) {
    (s.label == OsLabel::alive ? n_alive : n_dead) += 1;
    CHECK(label_consistent(p, s));
  }
  CHECK(n_alive == 6);
  CHECK(n_dead == 12);
}

TEST_CASE("death on the last follow-up day collapses the deceased phase to one sample") {
  const PatientRecord p = deceased(0, 700, 700);
  Rng rng(43);
  const auto samples = sample_epoch(p, rng);
  REQUIRE(samples.size() == 7);
  int n_dead = 0;
  for (const auto& s : samples) {
    if (s.label == OsLabel::deceased) {
      ++n_dead;
      CHECK(s.t_days == 700);
    }
  }
  CHECK(n_dead == 1);
}

TEST_CASE("death the day after scan leaves no alive phase") {
  const PatientRecord p = deceased(0, 1, 600);
  Rng rng(44);
  const auto samples = sample_epoch(p, rng);
  int n_alive = 0, n_dead = 0;
  for (const auto& s : samples) (s.label == OsLabel::alive ? n_alive : n_dead) += 1;
  CHECK(n_alive == 0);
  CHECK(n_dead == 12);
}

TEST_CASE("sampling is reproducible under the same stream") {
  const PatientRecord p = deceased(5, 300, 1200);
  Rng a = Rng::stream(99, {1, 2, 3});
  Rng b = Rng::stream(99, {1, 2, 3});
  const auto sa = sample_epoch(p, a);
  const auto sb = sample_epoch(p, b);
  REQUIRE(sa.size() == sb.size());
  for (std::size_t i = 0; i < sa.size(); ++i) {
    CHECK(sa[i].t_days == sb[i].t_days);
    CHECK(sa[i].label == sb[i].label);
  }
}

TEST_CASE("every emitted sample validates against its record, 12:6 ratio exact") {
  Rng rng(45);
  for (int trial = 0; trial < 200; ++trial) {
    const int scan = static_cast<int>(rng.uniform_int(0, 50));
    const int lfd = scan + static_cast<int>(rng.uniform_int(2, 1800));
    PatientRecord p;
    if (rng.bernoulli(0.5)) {
      const int death = scan + static_cast<int>(rng.uniform_int(1, lfd - scan));
      p = deceased(scan, death, lfd);
    } else {
      p = alive(scan, lfd);
    }
    Rng srng = Rng::stream(45, {static_cast<std::uint64_t>(trial)});
    const auto samples = sample_epoch(p, srng);
    int n_alive = 0, n_dead = 0;
    for (const auto& s : samples) {
      CHECK(label_consistent(p, s));
      (s.label == OsLabel::alive ? n_alive : n_dead) += 1;
    }
    if (p.event) {
      const int death_off = *p.death_day - p.scan_day;
      const int alive_days = death_off - 1;
      const int dead_days = p.lfd_day - *p.death_day + 1;
      CHECK(n_alive == (alive_days <= 0 ? 0 : (alive_days == 1 ? 1 : 6)));
      CHECK(n_dead == (dead_days == 1 ? 1 : 12));
      if (alive_days >= 2 && dead_days >= 2) CHECK(n_dead * 6 == n_alive * 12);  // 12:6 exactly
    } else {
      CHECK(n_dead == 0);
    }
  }
}

TEST_CASE("normalize_time") {
  CHECK(normalize_time(0) == doctest::Approx(0.0));
  CHECK(normalize_time(1825) == doctest::Approx(1.0));
  CHECK(normalize_time(365) == doctest::Approx(365.0 / 1825.0).epsilon(1e-12));
  CHECK(normalize_time(4000) == doctest::Approx(1.0));  // clipped at the horizon
  CHECK_THROWS_AS(normalize_time(-1), InvalidInputError);
}

TEST_CASE("evaluation_grid") {
  CHECK(evaluation_grid(60, 30) == std::vector<int>{0, 30, 60});
  CHECK(evaluation_grid(70, 30) == std::vector<int>{0, 30, 60, 70});
  const auto grid = evaluation_grid();
  CHECK(grid.size() == 62);  // 61 multiples of 30 up to 1800, plus the 1825 horizon
  CHECK(grid.front() == 0);
  CHECK(grid.back() == 1825);
}

TEST_SUITE_END();
