#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "dynrw/error.hpp"
#include "dynrw/io.hpp"
#include "dynrw/oracles.hpp"
#include "dynrw/sweep.hpp"

using namespace dynrw;

namespace {

GridSpec small_grid() {
  GridSpec g;
  g.env = EnvKind::Isf;
  g.p = Axis{{0.6, 0.7}};
  g.rho = Axis{{0.5, 0.8}};
  g.gamma = Axis::single(1.0);
  g.n_log2 = 8;
  g.samples = 24;
  g.master_seed = 99;
  g.threads = 1;
  return g;
}

}  // namespace

TEST_CASE("grid points enumerate p outermost and validate") {
  GridSpec g = small_grid();
  const auto pts = g.points();
  REQUIRE(pts.size() == 4);
  CHECK(pts[0].p == 0.6);
  CHECK(pts[0].rho == 0.5);
  CHECK(pts[1].rho == 0.8);
  CHECK(pts[2].p == 0.7);

  g.p = Axis{{1.2}};
  CHECK_THROWS_AS(g.points(), Error);
  g.p = Axis{};
  CHECK_THROWS_AS(g.points(), Error);

  GridSpec s = small_grid();
  s.env = EnvKind::Static;
  s.gamma = Axis{{0.0, 1.0, 2.0}};
  for (const auto& m : s.points())
    CHECK(m.gamma == 0.0);
  CHECK(s.points().size() == 4);

  const Axis a = Axis::range(0.5, 0.05, 11);
  REQUIRE(a.values.size() == 11);
  CHECK(a.values.back() == doctest::Approx(1.0));
}

TEST_CASE("seeds depend on parameter values, not on grid position") {
  ModelParams m;
  m.env = EnvKind::Sse;
  m.p = 0.7;
  m.rho = 0.8;
  m.gamma = 1.0;
  const auto k = point_key(m, 1024);
  CHECK(k == point_key(m, 1024));
  CHECK(k != point_key(m, 2048));
  ModelParams other = m;
  other.rho = 0.2;
  CHECK(k != point_key(other, 1024));
  other = m;
  other.env = EnvKind::Isf;
  CHECK(k != point_key(other, 1024));

  // Static cells ignore gamma.
  ModelParams st = m;
  st.env = EnvKind::Static;
  ModelParams st2 = st;
  st2.gamma = 5.0;
  CHECK(point_key(st, 64) == point_key(st2, 64));

  std::set<std::uint64_t> seeds;
  for (std::uint64_t r = 0; r < 1000; ++r)
    seeds.insert(replica_stream(1, m, 1024, r).seed());
  CHECK(seeds.size() == 1000);
}

TEST_CASE("speed sweep output is invariant under thread count and point order") {
  GridSpec g = small_grid();
  const auto a = speed_sweep_csv(run_speed_sweep(g), g.master_seed);
  g.threads = 3;
  const auto b = speed_sweep_csv(run_speed_sweep(g), g.master_seed);
  CHECK(a == b);
  CHECK(a == speed_sweep_csv(run_speed_sweep(g), g.master_seed));

  // Reversed axes give the same rows in a different order.
  GridSpec r = g;
  std::reverse(r.p.values.begin(), r.p.values.end());
  std::reverse(r.rho.values.begin(), r.rho.values.end());
  const auto rows = read_speed_csv(a);
  const auto rev = read_speed_csv(speed_sweep_csv(run_speed_sweep(r), r.master_seed));
  REQUIRE(rows.size() == rev.size());
  for (const auto& x : rows) {
    const auto it = std::find_if(rev.begin(), rev.end(), [&](const SpeedRecord& y) {
      return y.p == x.p && y.rho == x.rho;
    });
    REQUIRE(it != rev.end());
    CHECK(it->v_n == x.v_n);
    CHECK(it->std_error == x.std_error);
  }

  // A single-point grid reproduces the same cell.
  GridSpec one = g;
  one.p = Axis::single(0.7);
  one.rho = Axis::single(0.8);
  const auto single = run_speed_sweep(one);
  const auto full = run_speed_sweep(g);
  REQUIRE(single[0].estimate);
  CHECK(single[0].estimate->v_n == full[3].estimate->v_n);
}

TEST_CASE("different master seeds give different ensembles") {
  GridSpec g = small_grid();
  const auto a = run_speed_sweep(g);
  g.master_seed = 100;
  const auto b = run_speed_sweep(g);
  CHECK(a[0].estimate->v_n != b[0].estimate->v_n);
}

TEST_CASE("exhausted budget marks the cell failed and the sweep continues") {
  GridSpec g;
  g.env = EnvKind::Sse;
  g.p = Axis::single(0.8);
  g.rho = Axis{{0.5, 0.8}};
  g.gamma = Axis::single(100.0);
  g.n_log2 = 14;
  g.samples = 8;
  g.threads = 1;
  g.cell_budget_seconds = 1e-6;
  const auto cells = run_speed_sweep(g);
  REQUIRE(cells.size() == 2);
  for (const auto& c : cells) {
    CHECK(c.failed());
    CHECK(c.failure == "budget");
    CHECK(c.aborts > 0);
  }
  const auto rows = read_speed_csv(speed_sweep_csv(cells, g.master_seed));
  REQUIRE(rows.size() == 2);
  CHECK(std::isnan(rows[0].v_n));
}

TEST_CASE("resume reuses completed cells byte for byte") {
  GridSpec g = small_grid();
  const auto full = speed_sweep_csv(run_speed_sweep(g), g.master_seed);

  // A partial run that only covered the first p value.
  GridSpec part = g;
  part.p = Axis::single(0.6);
  const auto partial = speed_sweep_csv(run_speed_sweep(part), g.master_seed);

  const ResumeIndex index =
      ResumeIndex::from_speed(partial, std::uint64_t{1} << g.n_log2, g.samples);
  CHECK(index.size() == 2);
  std::size_t ran = 0;
  const auto cells = run_speed_sweep(g, [&](const ModelParams& m) {
    const bool skip = index.contains(m, g.master_seed);
    ran += skip ? 0 : 1;
    return skip;
  });
  CHECK(ran == 2);
  CHECK(speed_sweep_csv(cells, g.master_seed, &index) == full);

  // Rows from another seed or replica count are not reused.
  CHECK(ResumeIndex::from_speed(partial, std::uint64_t{1} << g.n_log2, g.samples + 1).size() == 0);
  CHECK_FALSE(index.contains(g.points()[0], g.master_seed + 1));
}

TEST_CASE("scaling sweep produces slices, symbol and overlay histograms") {
  GridSpec g;
  g.env = EnvKind::Static;
  g.p = Axis::single(0.5);
  g.rho = Axis::single(0.5);
  g.n_list = {6, 7, 8};
  g.samples = 400;
  g.threads = 2;
  const auto cells = run_scaling_sweep(g);
  REQUIRE(cells.size() == 1);
  const auto& c = cells[0];
  REQUIRE(c.estimate);
  CHECK(c.estimate->slices.size() == 3);
  // p = 1/2: every environment gives the simple symmetric walk.
  CHECK(c.estimate->alpha_star == doctest::Approx(0.5).epsilon(0.1));
  REQUIRE(c.symbol);
  CHECK(*c.symbol == classify_exponent(c.estimate->alpha_star));
  CHECK(c.histograms.size() == 6);
  for (const auto& h : c.histograms) {
    double total = h.hist.tail_below + h.hist.tail_above;
    for (double m : h.hist.mass)
      total += m;
    CHECK(total == doctest::Approx(1.0));
  }
  g.threads = 1;
  const auto again = run_scaling_sweep(g);
  CHECK(scaling_sweep_csv(cells, g.master_seed) == scaling_sweep_csv(again, g.master_seed));
  CHECK(hist_sweep_csv(cells, g.master_seed) == hist_sweep_csv(again, g.master_seed));

  // Resume from the scaling pair.
  const auto text = scaling_sweep_csv(cells, g.master_seed);
  const auto hist = hist_sweep_csv(cells, g.master_seed);
  const auto index = ResumeIndex::from_scaling(text, hist, g.n_list, g.samples);
  REQUIRE(index.size() == 1);
  const auto skipped =
      run_scaling_sweep(g, [&](const ModelParams& m) { return index.contains(m, g.master_seed); });
  CHECK(skipped[0].skipped);
  CHECK(scaling_sweep_csv(skipped, g.master_seed, &index) == text);
  CHECK(hist_sweep_csv(skipped, g.master_seed, &index) == hist);
  const std::vector<int> other{6, 7, 9};
  CHECK(ResumeIndex::from_scaling(text, hist, other, g.samples).size() == 0);

  GridSpec bad = g;
  bad.n_list = {6, 7};
  CHECK_THROWS_AS(run_scaling_sweep(bad), Error);
  bad.n_list = {6, 6, 7};
  CHECK_THROWS_AS(run_scaling_sweep(bad), Error);
}

TEST_CASE("curve diagram needs ten p values and labels each (rho, gamma)") {
  GridSpec g;
  g.env = EnvKind::Isf;
  g.p = Axis::range(0.5, 0.05, 9);
  g.rho = Axis::single(0.8);
  g.gamma = Axis::single(50.0);
  g.n_log2 = 6;
  g.samples = 20;
  CHECK_THROWS_AS(speed_curve_diagram(g), Error);
  g.p = Axis::range(0.5, 0.05, 10);
  g.rho = Axis{{0.6, 0.8}};
  const auto cells = speed_curve_diagram(g);
  REQUIRE(cells.size() == 2);
  for (const auto& c : cells) {
    REQUIRE(c.label);
    CHECK(c.curve.size() == 10);
    CHECK(std::is_sorted(c.curve.begin(), c.curve.end(), [](const auto& a, const auto& b) {
      return a.params.p < b.params.p;
    }));
  }
}

TEST_CASE("reliable step count is attached to SSE cells only") {
  ModelParams m;
  m.env = EnvKind::Sse;
  m.p = 0.56;
  m.rho = 0.9;
  m.gamma = 0.001;
  const double v = log2_nbar_for(m);
  CHECK(v == doctest::Approx(reliable_steps(0.56, 0.9, 0.001).log2_nbar));
  // Symmetric images fold onto the same point.
  ModelParams img = m;
  img.p = 0.44;
  img.rho = 0.1;
  CHECK(log2_nbar_for(img) == doctest::Approx(v));
  img = m;
  img.rho = 0.1;
  CHECK(log2_nbar_for(img) == doctest::Approx(v));
  m.env = EnvKind::Isf;
  CHECK(std::isnan(log2_nbar_for(m)));
}

TEST_CASE("ensembles come back in replica order with their stream identity") {
  ModelParams m;
  m.env = EnvKind::Isf;
  m.p = 0.7;
  m.rho = 0.8;
  m.gamma = 1.0;
  const auto a = run_ensemble(m, 128, 30, 5, 1);
  const auto b = run_ensemble(m, 128, 30, 5, 4);
  REQUIRE(a.size() == 30);
  for (std::size_t r = 0; r < a.size(); ++r) {
    CHECK(a[r].stream_index == r);
    CHECK(a[r].seed == replica_stream(5, m, 128, r).seed());
    CHECK(a[r].displacement == b[r].displacement);
    CHECK(a[r].elapsed_time == b[r].elapsed_time);
  }
}
