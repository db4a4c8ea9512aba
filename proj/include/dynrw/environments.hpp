#ifndef DYNRW_ENVIRONMENTS_HPP
#define DYNRW_ENVIRONMENTS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dynrw/params.hpp"
#include "dynrw/rng.hpp"

namespace dynrw {

enum class SiteState : std::uint8_t { Hole = 0, Particle = 1 };

inline SiteState site_state(bool occupied) {
  return occupied ? SiteState::Particle : SiteState::Hole;
}

/// Inclusive range of lattice sites [lo, hi] backing an environment.
struct Window {
  std::int64_t lo = 0;
  std::int64_t hi = -1;

  static Window centered(std::int64_t half_width) { return {-half_width, half_width}; }

  /// Window for a run of n jumps: half width ceil(3n/2), so the length is at
  /// least 3n and a walker started at 0 can never reach the boundary.
  static Window for_jumps(std::uint64_t n);

  bool empty() const { return hi < lo; }
  std::size_t length() const { return empty() ? 0 : static_cast<std::size_t>(hi - lo + 1); }
  std::int64_t origin_offset() const { return -lo; }
  bool contains(std::int64_t site) const { return site >= lo && site <= hi; }

  /// Cell index of a lattice site; throws Error(WindowOverflow) outside.
  std::size_t index(std::int64_t site) const;
};

/// Frozen 0/1 field over a window.
struct StaticField {
  std::vector<std::uint8_t> cells;
  std::int64_t origin_offset = 0;

  Window window() const {
    return {-origin_offset, static_cast<std::int64_t>(cells.size()) - 1 - origin_offset};
  }
  SiteState at(std::int64_t site) const;
};

/// Initial Bernoulli(rho) configuration of a replica. Each site's value is a
/// pure function of (seed, stream_index, site), so every environment kind
/// built from the same identity starts from the same configuration.
struct InitialField {
  std::uint64_t seed = 0;
  std::uint64_t stream_index = 0;
  double rho = 0.5;

  SiteState at(std::int64_t site) const {
    return site_state(addressed_uniform(seed, stream_index, static_cast<std::uint64_t>(site)) <
                      rho);
  }
};

/// Materializes the initial field on a window. Empty window -> InvalidArgument.
StaticField init_bernoulli(double rho, Window window, std::uint64_t seed,
                           std::uint64_t stream_index);

/// Transition probabilities of one spin-flip site over an elapsed time.
struct IsfKernel {
  double particle_stays;     // P(1 -> 1)
  double particle_to_hole;   // P(1 -> 0)
  double hole_to_particle;   // P(0 -> 1)
  double hole_stays;         // P(0 -> 0)
};

/// Two-state chain with up-rate gamma and down-rate gamma (1 - rho) / rho,
/// relaxing at rate gamma / rho.
IsfKernel isf_kernel(double dt, double gamma, double rho);

/// Lazily evaluated independent spin-flip field: a site is only touched when
/// queried, and its value is carried forward through the exact kernel.
class IsfCache {
 public:
  struct Entry {
    SiteState value;
    double last_time;
  };

  IsfCache(double gamma, double rho, Window window, InitialField initial);

  SiteState query(std::int64_t site, double t, RngStream& rng);

  std::optional<Entry> entry(std::int64_t site) const;
  std::size_t cached_sites() const { return cached_; }
  double flip_up_rate() const { return gamma_; }
  double flip_down_rate() const { return rho_ > 0.0 ? gamma_ * (1.0 - rho_) / rho_ : 0.0; }
  const Window& window() const { return window_; }

 private:
  double gamma_;
  double rho_;
  Window window_;
  InitialField initial_;
  std::vector<Entry> entries_;  // last_time < 0 marks an unvisited site
  std::size_t cached_ = 0;
};

/// Explicit exclusion configuration evolved forward in time.
///
/// Each particle carries a rate-2γ clock and picks a uniform direction; the
/// jump is suppressed when the target is occupied. In ResampleBoundary mode
/// the two end cells are additionally redrawn from Bernoulli(rho) at rate γ
/// each and there is no edge leaving the window.
class SseState {
 public:
  SseState(std::vector<std::uint8_t> cells, BoundaryMode mode, double gamma, double rho);

  /// Evolve to t_target; throws ContractViolation if t_target < clock().
  void advance(double t_target, RngStream& rng);

  SiteState cell(std::size_t index) const { return site_state(cells_[index] != 0); }
  const std::vector<std::uint8_t>& cells() const { return cells_; }
  double clock() const { return clock_; }
  std::size_t particle_count() const { return particles_.size(); }
  BoundaryMode boundary() const { return mode_; }

 private:
  void advance_torus(double t_target, RngStream& rng);
  void advance_resample(double t_target, RngStream& rng);
  void jump(std::size_t slot, std::size_t target);
  void set_cell(std::size_t index, bool occupied);

  std::vector<std::uint8_t> cells_;
  std::vector<std::uint32_t> particles_;
  std::vector<std::int32_t> slot_of_;
  BoundaryMode mode_;
  double gamma_;
  double rho_;
  double clock_ = 0.0;
};

/// Exclusion environment that only tracks sites whose contents have been
/// revealed to the walker.
///
/// Uses the stirring construction of the same finite-window process that
/// SseState simulates: every edge exchanges the contents of its two cells at
/// rate γ. The stirring permutation is independent of the initial
/// configuration, so the content of a cell never revealed before is a fresh
/// Bernoulli(rho) draw, and only the revealed contents need to be moved. Cost
/// per unit time is 2γ times the number of tracked contents rather than 2γ
/// times the number of particles in the window.
class RevealedSse {
 public:
  RevealedSse(std::size_t length, BoundaryMode mode, double gamma, double rho);

  /// Content of cell `index` at time t >= clock().
  SiteState query(std::size_t index, double t, RngStream& rng);

  void advance(double t_target, RngStream& rng);

  std::optional<SiteState> revealed(std::size_t index) const;
  std::size_t tracked() const { return position_.size(); }
  std::size_t length() const { return label_at_.size(); }
  double clock() const { return clock_; }

 private:
  void compact();

  std::vector<std::int32_t> label_at_;
  std::vector<std::uint32_t> position_;
  std::vector<std::uint8_t> value_;
  std::vector<std::uint8_t> alive_;
  BoundaryMode mode_;
  double gamma_;
  double rho_;
  double clock_ = 0.0;
  bool has_dead_ = false;
};

/// Uniform facade over the environment kinds, owning its randomness.
class Environment {
 public:
  /// Environment for one replica of n jumps with identity (seed, stream).
  static Environment create(const ModelParams& params, std::uint64_t n_jumps,
                            std::uint64_t seed, std::uint64_t stream_index);

  /// Static environment with explicit contents.
  static Environment frozen(StaticField field);

  /// Occupancy at `site` and time t. Throws WindowOverflow outside the
  /// window and ContractViolation for dynamic kinds queried in the past.
  SiteState query(std::int64_t site, double t);

  /// `t=<clock> cells=<0/1 string> origin=<index>`. Lazy kinds print '.' for
  /// cells that were never revealed.
  std::string snapshot() const;

  double clock() const;
  const Window& window() const { return window_; }
  EnvKind kind() const { return kind_; }

  struct AddressedStatic {
    InitialField field;
  };
  using State = std::variant<AddressedStatic, StaticField, IsfCache, SseState, RevealedSse>;

  State& state() { return state_; }
  const State& state() const { return state_; }

 private:
  Environment(EnvKind kind, Window window, State state, RngStream rng)
      : kind_(kind), window_(window), state_(std::move(state)), rng_(rng) {}

  EnvKind kind_;
  Window window_;
  State state_;
  RngStream rng_;
  double last_query_ = 0.0;
};

/// Flat text form used by snapshots.
std::string format_snapshot(double clock, const std::string& cells, std::int64_t origin);

}  // namespace dynrw

#endif
