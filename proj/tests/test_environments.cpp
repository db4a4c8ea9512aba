#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "dynrw/environments.hpp"
#include "dynrw/error.hpp"
#include "support.hpp"

using namespace dynrw;

namespace {

ModelParams sse_params(double rho, double gamma, BoundaryMode mode, SseEngine engine) {
  ModelParams p;
  p.p = 0.7;
  p.rho = rho;
  p.gamma = gamma;
  p.env = EnvKind::Sse;
  p.boundary = mode;
  p.sse_engine = engine;
  return p;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("window covers 3n cells") {
  for (std::uint64_t n : {1ull, 2ull, 7ull, 1024ull, 65536ull}) {
    const Window w = Window::for_jumps(n);
    CHECK(w.length() >= 3 * n);
    CHECK(w.lo == -w.hi);
    CHECK(w.length() % 2 == 1);
  }
  CHECK(code_of([] { Window::centered(3).index(4); }) == ErrorCode::WindowOverflow);
}

TEST_CASE("init_bernoulli") {
  const Window w = Window::centered(50);
  for (auto c : init_bernoulli(1.0, w, 1, 2).cells)
    CHECK(c == 1);
  for (auto c : init_bernoulli(0.0, w, 1, 2).cells)
    CHECK(c == 0);
  const Window big = Window::centered(50000);
  const StaticField f = init_bernoulli(0.8, big, 77, 3);
  double mean = 0.0;
  for (auto c : f.cells)
    mean += c;
  mean /= static_cast<double>(f.cells.size());
  CHECK(std::fabs(mean - 0.8) < 4.0 * std::sqrt(0.8 * 0.2 / f.cells.size()));
  CHECK(f.origin_offset == 50000);
  CHECK(code_of([] { init_bernoulli(0.5, Window{1, 0}, 1, 1); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("isf kernel rows sum to one") {
  for (double dt : {0.0, 1e-9, 0.01, 0.5, 1.0, 10.0, 1e3})
    for (double gamma : {0.0, 1e-6, 0.1, 1.0, 100.0})
      for (double rho : {0.01, 0.5, 0.8, 1.0}) {
        const IsfKernel k = isf_kernel(dt, gamma, rho);
        CHECK(std::fabs(k.particle_stays + k.particle_to_hole - 1.0) < 1e-12);
        CHECK(std::fabs(k.hole_to_particle + k.hole_stays - 1.0) < 1e-12);
      }
  const IsfKernel id = isf_kernel(0.0, 1.0, 0.5);
  CHECK(id.particle_stays == 1.0);
  CHECK(id.hole_to_particle == 0.0);
  const IsfKernel inf = isf_kernel(1e6, 1.0, 0.3);
  CHECK(inf.particle_stays == doctest::Approx(0.3));
  CHECK(inf.hole_to_particle == doctest::Approx(0.3));
  CHECK(isf_kernel(1.0, 1.0, 0.5).particle_stays == doctest::Approx(0.5 + 0.5 * std::exp(-2.0)));
  CHECK(code_of([] { isf_kernel(1.0, 1.0, 0.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("isf kernel agrees with an explicit two-state chain") {
  // Alternate exponential holding times with up-rate 1 and down-rate 1.
  RngStream rng(2024, 0);
  const int replicas = 1000000;
  int occupied = 0;
  for (int i = 0; i < replicas; ++i) {
    bool state = true;
    double t = 0.0;
    for (;;) {
      t += rng.exponential(1.0);
      if (t > 1.0)
        break;
      state = !state;
    }
    occupied += state;
  }
  const double p = isf_kernel(1.0, 1.0, 0.5).particle_stays;
  const double se = std::sqrt(p * (1 - p) / replicas);
  CHECK(std::fabs(occupied / double(replicas) - p) < 3.0 * se);
  CHECK(p == doctest::Approx(0.56767).epsilon(1e-4));
}

TEST_CASE("isf query") {
  const Window w = Window::centered(10);
  RngStream rng(5, 5, StreamDomain::Environment);
  IsfCache full(1.0, 1.0, w, InitialField{5, 5, 1.0});
  CHECK(full.query(3, 2.0, rng) == SiteState::Particle);
  CHECK(full.flip_down_rate() == 0.0);

  IsfCache c(1.0, 0.5, w, InitialField{5, 5, 1.0});
  CHECK(c.flip_down_rate() == doctest::Approx(1.0));
  c.query(0, 0.0, rng);
  CHECK(c.query(0, 0.0, rng) == SiteState::Particle);
  CHECK(code_of([&] {
          c.query(1, 2.0, rng);
          c.query(1, 1.0, rng);
        }) == ErrorCode::ContractViolation);

  // Cached (0, 0), queried at t = 3 with gamma = 1, rho = 0.5.
  const int draws = 1000000;
  int ones = 0;
  RngStream r(6, 0, StreamDomain::Environment);
  for (int i = 0; i < draws; ++i) {
    IsfCache cell(1.0, 0.5, Window::centered(0), InitialField{6, 0, 0.0});
    ones += cell.query(0, 3.0, r) == SiteState::Particle;
  }
  const double p = 0.5 * (1.0 - std::exp(-6.0));
  CHECK(std::fabs(ones / double(draws) - p) < 4.0 * std::sqrt(p * (1 - p) / draws));
}

TEST_CASE("isf with vanishing rate behaves as static") {
  ModelParams params;
  params.p = 0.7;
  params.rho = 0.5;
  params.gamma = 1e-9;
  params.env = EnvKind::Isf;
  int changed = 0;
  for (std::uint64_t rep = 0; rep < 10; ++rep) {
    Environment env = Environment::create(params, 1000, 99, rep);
    const InitialField initial{99, rep, 0.5};
    for (int q = 0; q < 1000; ++q) {
      const std::int64_t site = (q * 37) % 1001 - 500;
      const double t = q;
      changed += env.query(site, t) != initial.at(site);
    }
  }
  CHECK(changed == 0);
}

TEST_CASE("static queries") {
  StaticField f;
  f.cells = {0, 0, 1, 0, 0};
  f.origin_offset = 2;
  Environment env = Environment::frozen(f);
  CHECK(env.query(0, 0.0) == SiteState::Particle);
  CHECK(env.query(0, 1e9) == SiteState::Particle);
  CHECK(env.query(-2, 5.0) == SiteState::Hole);
  CHECK(code_of([&] { env.query(3, 0.0); }) == ErrorCode::WindowOverflow);

  // The addressed static field matches the materialized one.
  ModelParams params;
  params.rho = 0.6;
  Environment lazy = Environment::create(params, 20, 8, 1);
  const StaticField full = init_bernoulli(0.6, Window::for_jumps(20), 8, 1);
  for (std::int64_t x = -30; x <= 30; ++x)
    CHECK(lazy.query(x, 0.0) == full.at(x));
}

TEST_CASE("sse trivial dynamics") {
  RngStream rng(1, 1, StreamDomain::Environment);
  SseState frozen(std::vector<std::uint8_t>{1, 0, 1, 1, 0}, BoundaryMode::Torus, 0.0, 0.5);
  frozen.advance(10.0, rng);
  CHECK(frozen.cells() == std::vector<std::uint8_t>{1, 0, 1, 1, 0});
  CHECK(frozen.clock() == 10.0);

  SseState full(std::vector<std::uint8_t>(9, 1), BoundaryMode::Torus, 3.0, 0.5);
  full.advance(50.0, rng);
  CHECK(full.cells() == std::vector<std::uint8_t>(9, 1));
  CHECK(code_of([&] { full.advance(1.0, rng); }) == ErrorCode::ContractViolation);
}

TEST_CASE("sse torus conserves particles") {
  RngStream rng(4, 4, StreamDomain::Environment);
  StaticField init = init_bernoulli(0.6, Window::centered(200), 4, 4);
  SseState s(init.cells, BoundaryMode::Torus, 2.0, 0.6);
  const std::size_t count = s.particle_count();
  for (double t = 0.1; t < 20.0; t += 0.37) {
    s.advance(t, rng);
    std::size_t ones = 0;
    for (auto c : s.cells())
      ones += c;
    REQUIRE(ones == count);
    REQUIRE(s.particle_count() == count);
  }
}

TEST_CASE("single particle on a 7-cycle follows the exact walk") {
  const std::size_t length = 7;
  const double gamma = 1.0, horizon = 0.5;
  testsupport::Matrix q = testsupport::zeros(length);
  for (std::size_t i = 0; i < length; ++i) {
    q[i][(i + 1) % length] += gamma;
    q[i][(i + length - 1) % length] += gamma;
    q[i][i] -= 2.0 * gamma;
  }
  std::vector<double> start(length, 0.0);
  start[3] = 1.0;
  const std::vector<double> exact = testsupport::evolve(start, q, horizon);

  const int replicas = 100000;
  std::vector<double> hits(length, 0.0);
  for (int r = 0; r < replicas; ++r) {
    RngStream rng(31, static_cast<std::uint64_t>(r), StreamDomain::Environment);
    std::vector<std::uint8_t> cells(length, 0);
    cells[3] = 1;
    SseState s(cells, BoundaryMode::Torus, gamma, 0.5);
    s.advance(horizon, rng);
    for (std::size_t i = 0; i < length; ++i)
      hits[i] += s.cells()[i];
  }
  double tv = 0.0;
  for (std::size_t i = 0; i < length; ++i)
    tv += std::fabs(hits[i] / replicas - exact[i]);
  CHECK(0.5 * tv < 0.01);
}

namespace {

// Exact law of a query schedule on a window of 5 cells under the per-edge swap
// generator, starting from Bernoulli(rho)^5.
struct Schedule {
  std::vector<std::pair<int, double>> reads;  // (cell, time), then all cells at `last`
  double last;
};

std::map<std::pair<unsigned, unsigned>, double> exact_law(const Schedule& sch, double rho,
                                                         double gamma, BoundaryMode mode) {
  const int length = 5;
  const unsigned states = 1u << length;
  testsupport::Matrix q = testsupport::zeros(states);
  for (unsigned s = 0; s < states; ++s) {
    auto add = [&](unsigned to, double rate) {
      if (to == s)
        return;
      q[s][to] += rate;
      q[s][s] -= rate;
    };
    for (int i = 0; i < length; ++i) {
      const int j = i + 1;
      if (j == length && mode != BoundaryMode::Torus)
        continue;
      const int jj = j % length;
      const unsigned bi = (s >> i) & 1u, bj = (s >> jj) & 1u;
      unsigned t = s & ~((1u << i) | (1u << jj));
      t |= (bi << jj) | (bj << i);
      add(t, gamma);
    }
    if (mode == BoundaryMode::ResampleBoundary) {
      for (int cell : {0, length - 1}) {
        add(s | (1u << cell), gamma * rho);
        add(s & ~(1u << cell), gamma * (1.0 - rho));
      }
    }
  }
  std::vector<double> init(states);
  for (unsigned s = 0; s < states; ++s) {
    const int ones = __builtin_popcount(s);
    init[s] = std::pow(rho, ones) * std::pow(1.0 - rho, length - ones);
  }
  std::map<unsigned, std::vector<double>> by_history{{0u, init}};
  double now = 0.0;
  for (std::size_t k = 0; k < sch.reads.size(); ++k) {
    const auto [cell, t] = sch.reads[k];
    std::map<unsigned, std::vector<double>> next;
    for (auto& [h, v] : by_history) {
      const std::vector<double> moved = testsupport::evolve(v, q, t - now);
      std::vector<double> zero(states, 0.0), one(states, 0.0);
      for (unsigned s = 0; s < states; ++s)
        ((s >> cell) & 1u ? one : zero)[s] = moved[s];
      next[h] = zero;
      next[h | (1u << k)] = one;
    }
    by_history.swap(next);
    now = t;
  }
  std::map<std::pair<unsigned, unsigned>, double> out;
  for (auto& [h, v] : by_history) {
    const std::vector<double> moved = testsupport::evolve(v, q, sch.last - now);
    for (unsigned s = 0; s < states; ++s)
      out[{h, s}] = moved[s];
  }
  return out;
}

void compare_engine(SseEngine engine, BoundaryMode mode) {
  const double rho = 0.6, gamma = 1.0;
  const Schedule sch{{{2, 0.3}, {3, 0.5}, {2, 0.9}, {0, 1.1}}, 1.4};
  const auto law = exact_law(sch, rho, gamma, mode);
  std::map<std::pair<unsigned, unsigned>, long> counts;
  const long replicas = 200000;
  const ModelParams params = sse_params(rho, gamma, mode, engine);
  for (long r = 0; r < replicas; ++r) {
    // n = 1 gives the 5-cell window [-2, 2].
    Environment env = Environment::create(params, 1, 555, static_cast<std::uint64_t>(r));
    unsigned h = 0;
    for (std::size_t k = 0; k < sch.reads.size(); ++k)
      if (env.query(sch.reads[k].first - 2, sch.reads[k].second) == SiteState::Particle)
        h |= 1u << k;
    unsigned s = 0;
    for (int i = 0; i < 5; ++i)
      if (env.query(i - 2, sch.last) == SiteState::Particle)
        s |= 1u << i;
    ++counts[{h, s}];
  }
  std::vector<double> probs;
  std::vector<long> observed;
  double total = 0.0;
  for (auto& [key, p] : law) {
    probs.push_back(p);
    observed.push_back(counts.count(key) ? counts[key] : 0);
    total += p;
    counts.erase(key);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(counts.empty());
  const auto chi = testsupport::chi_square(probs, observed, replicas);
  CAPTURE(chi.statistic);
  CAPTURE(chi.dof);
  CHECK(chi.statistic < testsupport::chi_square_q999(chi.dof));
}

}  // namespace

TEST_CASE("sse engines match the exact generator on a 5-cell window") {
  SUBCASE("forward torus") { compare_engine(SseEngine::Forward, BoundaryMode::Torus); }
  SUBCASE("lazy torus") { compare_engine(SseEngine::Lazy, BoundaryMode::Torus); }
  SUBCASE("forward resample") { compare_engine(SseEngine::Forward, BoundaryMode::ResampleBoundary); }
  SUBCASE("lazy resample") { compare_engine(SseEngine::Lazy, BoundaryMode::ResampleBoundary); }
}

TEST_CASE("sse stationarity on a torus of 999 cells") {
  for (BoundaryMode mode : {BoundaryMode::Torus, BoundaryMode::ResampleBoundary})
    for (double rho : {0.5, 0.7, 0.9}) {
      // Pool 20 independent tori so the check has power beyond one draw.
      double ones = 0.0, cells = 0.0;
      for (std::uint64_t rep = 0; rep < 20; ++rep) {
        const StaticField init = init_bernoulli(rho, Window::centered(499), 12, rep);
        SseState s(init.cells, mode, 1.0, rho);
        RngStream rng(12, rep, StreamDomain::Environment);
        s.advance(100.0, rng);
        for (auto c : s.cells())
          ones += c;
        cells += static_cast<double>(s.cells().size());
      }
      CAPTURE(rho);
      CHECK(std::fabs(ones / cells - rho) < 4.0 * std::sqrt(rho * (1 - rho) / cells));
    }
}

TEST_CASE("environment paths are reproducible") {
  for (EnvKind kind : {EnvKind::Static, EnvKind::Isf, EnvKind::Sse})
    for (SseEngine engine : {SseEngine::Lazy, SseEngine::Forward}) {
      ModelParams params = sse_params(0.7, 2.0, BoundaryMode::Torus, engine);
      params.env = kind;
      auto run = [&] {
        Environment env = Environment::create(params, 30, 1234, 9);
        std::string out;
        for (int k = 0; k < 40; ++k) {
          env.query((k * 7) % 61 - 30, 0.25 * k);
          out += env.snapshot() + "\n";
        }
        return out;
      };
      CHECK(run() == run());
    }
}

TEST_CASE("sse query is stable at a fixed time") {
  for (SseEngine engine : {SseEngine::Lazy, SseEngine::Forward}) {
    Environment env = Environment::create(sse_params(0.5, 5.0, BoundaryMode::Torus, engine), 50,
                                          3, 3);
    for (int k = 0; k < 50; ++k) {
      const double t = 0.1 * k;
      const std::int64_t x = k % 11 - 5;
      const SiteState a = env.query(x, t);
      CHECK(env.query(x, t) == a);
    }
  }
}

TEST_CASE("snapshot format") {
  StaticField f;
  f.cells = {1, 0, 1};
  f.origin_offset = 1;
  CHECK(Environment::frozen(f).snapshot() == "t=0 cells=101 origin=1");
  Environment lazy =
      Environment::create(sse_params(0.5, 1.0, BoundaryMode::Torus, SseEngine::Lazy), 1, 1, 1);
  CHECK(lazy.snapshot() == "t=0 cells=..... origin=2");
}
