#ifndef DYNRW_SIMULATOR_HPP
#define DYNRW_SIMULATOR_HPP

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dynrw/environments.hpp"
#include "dynrw/params.hpp"

namespace dynrw {

enum class AbortReason : std::uint8_t { None, WindowOverflow, Budget };

/// Walker displacement after n jumps for one replica.
struct EndpointSample {
  std::int64_t displacement = 0;
  std::uint64_t jumps = 0;
  double elapsed_time = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream_index = 0;
  AbortReason abort = AbortReason::None;

  bool aborted() const { return abort != AbortReason::None; }
};

struct TrajectoryPoint {
  std::uint64_t jump;
  double time;
  std::int64_t position;
};

struct TrajectoryRecord {
  std::uint64_t stride = 1;
  std::vector<TrajectoryPoint> points;
};

using Deadline = std::optional<std::chrono::steady_clock::time_point>;

/// Walks n jumps on an existing environment. Jump epochs are exponential with
/// rate walker_rate; at each epoch the environment is read at the walker's
/// site and the walker steps right with probability p on a particle and 1 - p
/// on a hole. Window overflow and an expired deadline end the walk early with
/// the sample marked aborted.
EndpointSample run_walk(Environment& env, double p, double walker_rate, std::uint64_t n,
                        RngStream& walker, TrajectoryRecord* record = nullptr,
                        Deadline deadline = std::nullopt);

/// One replica: builds the environment for (params, n) from the stream
/// identity and runs the walk. The walker and the environment draw from
/// separate domains of the same stream.
EndpointSample run_replica(const ModelParams& params, std::uint64_t n, const RngStream& rng,
                           TrajectoryRecord* record = nullptr, Deadline deadline = std::nullopt);

/// Parameter images under the equalities in law
///   X(p, rho, γ) = X(1 - p, 1 - rho, γ) = -X(p, 1 - rho, γ).
struct SymmetryImages {
  ModelParams same_sign;     // (1 - p, 1 - rho): identical law
  ModelParams flipped_sign;  // (p, 1 - rho): law of -X
};

SymmetryImages symmetry_transform(const ModelParams& params);

/// `jump,time,position` lines.
std::string format_trajectory(const TrajectoryRecord& record);

}  // namespace dynrw

#endif
