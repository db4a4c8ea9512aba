#include "dynrw/simulator.hpp"

#include <cstdio>
#include <cstdlib>

#include "dynrw/error.hpp"

namespace dynrw {

namespace {

constexpr std::uint64_t kDeadlineCheckMask = (1u << 6) - 1;

}  // namespace

EndpointSample run_walk(Environment& env, double p, double walker_rate, std::uint64_t n,
                        RngStream& walker, TrajectoryRecord* record, Deadline deadline) {
  require(n >= 1, "run_walk: n must be >= 1");
  require(walker_rate > 0.0, "run_walk: walker rate must be > 0");
  EndpointSample out;
  out.seed = walker.seed();
  out.stream_index = walker.stream_index();
  if (record) {
    if (record->stride == 0)
      record->stride = 1;
    record->points.clear();
    record->points.push_back({0, 0.0, 0});
  }
  const double down = 1.0 - p;
  std::int64_t x = 0;
  double t = 0.0;
  std::uint64_t k = 0;
  try {
    for (k = 1; k <= n; ++k) {
      t += walker.exponential(walker_rate);
      const double up = env.query(x, t) == SiteState::Particle ? p : down;
      x += walker.uniform() < up ? 1 : -1;
      if (record && (k % record->stride == 0 || k == n))
        record->points.push_back({k, t, x});
      if (deadline && (k & kDeadlineCheckMask) == 0 &&
          std::chrono::steady_clock::now() > *deadline) {
        out.abort = AbortReason::Budget;
        break;
      }
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::WindowOverflow)
      throw;
    out.abort = AbortReason::WindowOverflow;
  }
  if (std::llabs(x) > static_cast<long long>(n))
    fail(ErrorCode::ContractViolation, "walker displacement exceeds jump count");
  out.displacement = x;
  out.jumps = out.aborted() ? k - 1 : n;
  out.elapsed_time = t;
  return out;
}

EndpointSample run_replica(const ModelParams& params, std::uint64_t n, const RngStream& rng,
                           TrajectoryRecord* record, Deadline deadline) {
  Environment env = Environment::create(params, n, rng.seed(), rng.stream_index());
  RngStream walker = rng.substream(StreamDomain::Walker);
  return run_walk(env, params.p, params.walker_rate, n, walker, record, deadline);
}

SymmetryImages symmetry_transform(const ModelParams& params) {
  SymmetryImages images{params, params};
  images.same_sign.p = 1.0 - params.p;
  images.same_sign.rho = 1.0 - params.rho;
  images.flipped_sign.rho = 1.0 - params.rho;
  return images;
}

std::string format_trajectory(const TrajectoryRecord& record) {
  std::string out = "jump,time,position\n";
  char buf[96];
  for (const auto& pt : record.points) {
    std::snprintf(buf, sizeof buf, "%llu,%.9g,%lld\n", static_cast<unsigned long long>(pt.jump),
                  pt.time, static_cast<long long>(pt.position));
    out += buf;
  }
  return out;
}

}  // namespace dynrw
