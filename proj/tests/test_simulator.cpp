#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "dynrw/error.hpp"
#include "dynrw/simulator.hpp"

using namespace dynrw;

namespace {

ModelParams make(double p, double rho, double gamma, EnvKind env) {
  ModelParams m;
  m.p = p;
  m.rho = rho;
  m.gamma = gamma;
  m.env = env;
  return m;
}

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
  double se = 0.0;
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  for (double x : xs)
    m.mean += x;
  m.mean /= xs.size();
  double ss = 0.0;
  for (double x : xs)
    ss += (x - m.mean) * (x - m.mean);
  m.sd = std::sqrt(ss / (xs.size() - 1));
  m.se = m.sd / std::sqrt(double(xs.size()));
  return m;
}

std::vector<double> endpoints(const ModelParams& params, std::uint64_t n, int replicas,
                              std::uint64_t seed) {
  std::vector<double> out;
  for (int r = 0; r < replicas; ++r) {
    const EndpointSample s = run_replica(params, n, RngStream(seed, static_cast<std::uint64_t>(r)));
    REQUIRE_FALSE(s.aborted());
    out.push_back(static_cast<double>(s.displacement));
  }
  return out;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x)
      ++i;
    while (j < b.size() && b[j] == x)
      ++j;
    d = std::max(d, std::fabs(double(i) / a.size() - double(j) / b.size()));
  }
  return d;
}

}  // namespace

TEST_CASE("full medium gives the homogeneous drift") {
  const std::uint64_t n = 100000;
  const EndpointSample s = run_replica(make(0.7, 1.0, 0.0, EnvKind::Static), n, RngStream(3, 0));
  const double v = double(s.displacement) / n;
  CHECK(std::fabs(v - 0.4) < 4.0 * std::sqrt(4 * 0.7 * 0.3 / n));
  CHECK(s.jumps == n);
  CHECK(s.elapsed_time / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("p = 1/2 is a simple symmetric walk in every medium") {
  const std::uint64_t n = 1024;
  for (EnvKind env : {EnvKind::Static, EnvKind::Isf, EnvKind::Sse}) {
    const Moments m = moments(endpoints(make(0.5, 0.8, 1.0, env), n, 4000, 17));
    CAPTURE(static_cast<int>(env));
    CHECK(std::fabs(m.mean) < 4.0 * m.se);
    CHECK(m.sd == doctest::Approx(32.0).epsilon(0.05));
  }
}

TEST_CASE("alternating frozen field agrees with the exact position DP") {
  const double p = 0.7;
  const std::uint64_t n = 16;
  const Window w = Window::for_jumps(n);
  StaticField field;
  field.origin_offset = w.origin_offset();
  for (std::int64_t x = w.lo; x <= w.hi; ++x)
    field.cells.push_back(x % 2 == 0 ? 1 : 0);

  // Exact law of X_n by forward propagation over sites -n..n.
  std::vector<double> dist(2 * n + 1, 0.0), next(2 * n + 1);
  dist[n] = 1.0;
  for (std::uint64_t k = 0; k < n; ++k) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < dist.size(); ++i) {
      if (dist[i] == 0.0)
        continue;
      const auto x = static_cast<std::int64_t>(i) - static_cast<std::int64_t>(n);
      const double up = x % 2 == 0 ? p : 1.0 - p;
      next[i + 1] += dist[i] * up;
      next[i - 1] += dist[i] * (1.0 - up);
    }
    dist.swap(next);
  }
  double exact = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i)
    exact += dist[i] * (static_cast<double>(i) - double(n));

  std::vector<double> xs;
  const int replicas = 1000000;
  xs.reserve(replicas);
  for (int r = 0; r < replicas; ++r) {
    Environment env = Environment::frozen(field);
    RngStream walker(44, static_cast<std::uint64_t>(r));
    xs.push_back(double(run_walk(env, p, 1.0, n, walker).displacement));
  }
  const Moments m = moments(xs);
  CAPTURE(exact);
  CHECK(std::fabs(m.mean - exact) < 3.0 * m.se);
}

TEST_CASE("trajectory records and displacement bound") {
  TrajectoryRecord rec;
  rec.stride = 1;
  const ModelParams params = make(0.8, 0.7, 2.0, EnvKind::Sse);
  const EndpointSample s = run_replica(params, 500, RngStream(5, 1), &rec);
  REQUIRE(rec.points.size() == 501);
  for (std::size_t i = 1; i < rec.points.size(); ++i) {
    CHECK(std::llabs(rec.points[i].position - rec.points[i - 1].position) == 1);
    CHECK(rec.points[i].time > rec.points[i - 1].time);
    CHECK(std::llabs(rec.points[i].position) <= static_cast<long long>(rec.points[i].jump));
  }
  CHECK(rec.points.back().position == s.displacement);
  CHECK(format_trajectory(rec).rfind("jump,time,position\n0,0,0\n", 0) == 0);

  TrajectoryRecord sparse;
  sparse.stride = 64;
  run_replica(params, 500, RngStream(5, 1), &sparse);
  CHECK(sparse.points.size() == 1 + 500 / 64 + 1);
  CHECK(sparse.points.back().position == s.displacement);
}

TEST_CASE("replicas are reproducible") {
  for (EnvKind env : {EnvKind::Static, EnvKind::Isf, EnvKind::Sse}) {
    const ModelParams params = make(0.75, 0.6, 0.5, env);
    const EndpointSample a = run_replica(params, 2000, RngStream(77, 3));
    const EndpointSample b = run_replica(params, 2000, RngStream(77, 3));
    CHECK(a.displacement == b.displacement);
    CHECK(a.elapsed_time == b.elapsed_time);
    CHECK(a.seed == 77);
    CHECK(a.stream_index == 3);
  }
}

TEST_CASE("window overflow aborts the replica") {
  StaticField tiny;
  tiny.cells = {1, 1, 1, 1, 1};
  tiny.origin_offset = 2;
  Environment env = Environment::frozen(tiny);
  RngStream walker(1, 1);
  const EndpointSample s = run_walk(env, 0.99, 1.0, 100, walker);
  CHECK(s.aborted());
  CHECK(s.abort == AbortReason::WindowOverflow);
  CHECK(s.jumps < 100);
}

TEST_CASE("expired deadline aborts with the budget flag") {
  const ModelParams params = make(0.7, 0.8, 0.0, EnvKind::Static);
  const EndpointSample s = run_replica(params, 1 << 16, RngStream(1, 1), nullptr,
                                       std::chrono::steady_clock::now());
  CHECK(s.abort == AbortReason::Budget);
}

TEST_CASE("symmetry images") {
  const SymmetryImages img = symmetry_transform(make(0.7, 0.8, 1.0, EnvKind::Sse));
  CHECK(img.same_sign.p == doctest::Approx(0.3));
  CHECK(img.same_sign.rho == doctest::Approx(0.2));
  CHECK(img.flipped_sign.p == doctest::Approx(0.7));
  CHECK(img.flipped_sign.rho == doctest::Approx(0.2));
  const SymmetryImages fixed = symmetry_transform(make(0.5, 0.5, 0.0, EnvKind::Static));
  CHECK(fixed.same_sign.p == 0.5);
  CHECK(fixed.same_sign.rho == 0.5);
  CHECK(fixed.flipped_sign.rho == 0.5);

  // Mean displacement flips sign under rho -> 1 - rho.
  const std::uint64_t n = 1 << 10;
  const Moments a = moments(endpoints(make(0.7, 0.8, 1.0, EnvKind::Sse), n, 1000, 101));
  const Moments b = moments(endpoints(img.flipped_sign, n, 1000, 202));
  CHECK(std::fabs(a.mean + b.mean) < 3.0 * std::hypot(a.se, b.se));
}

TEST_CASE("walker rate acts as a time change") {
  const std::uint64_t n = 1 << 9;
  ModelParams fast = make(0.8, 0.7, 2.0, EnvKind::Sse);
  fast.walker_rate = 2.0;
  const ModelParams unit = make(0.8, 0.7, 1.0, EnvKind::Sse);
  const auto a = endpoints(fast, n, 3000, 1);
  const auto b = endpoints(unit, n, 3000, 2);
  // Two-sample KS critical value at the 1% level.
  const double critical = 1.628 * std::sqrt(2.0 / 3000.0);
  CHECK(ks_statistic(a, b) < critical);
}

TEST_CASE("dynamic medium pushes the walker further (soft)" * doctest::test_suite("examples")) {
  const std::uint64_t n = 1 << 14;
  const Moments sse = moments(endpoints(make(0.7, 0.8, 0.1, EnvKind::Sse), n, 300, 7));
  const Moments stat = moments(endpoints(make(0.7, 0.8, 0.0, EnvKind::Static), n, 300, 8));
  WARN_MESSAGE(sse.mean - stat.mean > 2.0 * std::hypot(sse.se, stat.se),
               "domination heuristic not observed at this sample size");
}
