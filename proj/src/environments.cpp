#include "dynrw/environments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "dynrw/error.hpp"

namespace dynrw {

namespace {

// Bounded draws are generated in blocks of this many events.
constexpr std::size_t kDrawChunk = 256;

}  // namespace

Window Window::for_jumps(std::uint64_t n) {
  require(n >= 1, "number of jumps must be >= 1");
  require(n <= (std::uint64_t{1} << 40), "number of jumps too large for a materialized window");
  const auto half = static_cast<std::int64_t>((3 * n + 1) / 2);
  return centered(half);
}

std::size_t Window::index(std::int64_t site) const {
  if (!contains(site))
    fail(ErrorCode::WindowOverflow,
         "site " + std::to_string(site) + " outside window [" + std::to_string(lo) + ", " +
             std::to_string(hi) + "]");
  return static_cast<std::size_t>(site - lo);
}

SiteState StaticField::at(std::int64_t site) const {
  return site_state(cells[window().index(site)] != 0);
}

StaticField init_bernoulli(double rho, Window window, std::uint64_t seed,
                           std::uint64_t stream_index) {
  require(!window.empty(), "init_bernoulli: empty window");
  require(rho >= 0.0 && rho <= 1.0, "init_bernoulli: rho must lie in [0, 1]");
  const InitialField initial{seed, stream_index, rho};
  StaticField field;
  field.origin_offset = window.origin_offset();
  field.cells.resize(window.length());
  for (std::int64_t site = window.lo; site <= window.hi; ++site)
    field.cells[static_cast<std::size_t>(site - window.lo)] =
        static_cast<std::uint8_t>(initial.at(site));
  return field;
}

IsfKernel isf_kernel(double dt, double gamma, double rho) {
  require(dt >= 0.0, "isf_kernel: elapsed time must be >= 0");
  require(gamma >= 0.0, "isf_kernel: gamma must be >= 0");
  require(rho >= 0.0 && rho <= 1.0, "isf_kernel: rho must lie in [0, 1]");
  if (gamma == 0.0 || dt == 0.0)
    return {1.0, 0.0, 0.0, 1.0};
  require(rho > 0.0, "isf_kernel: rho = 0 with gamma > 0 leaves the flip-down rate undefined");
  // 1 - e^{-(γ/ρ)Δ}, accurate for small arguments.
  const double mixed = -std::expm1(-(gamma / rho) * dt);
  const double to_particle = rho * mixed;
  const double to_hole = (1.0 - rho) * mixed;
  return {1.0 - to_hole, to_hole, to_particle, 1.0 - to_particle};
}

IsfCache::IsfCache(double gamma, double rho, Window window, InitialField initial)
    : gamma_(gamma), rho_(rho), window_(window), initial_(initial) {
  require(!window.empty(), "ISF: empty window");
  require(gamma >= 0.0, "ISF: gamma must be >= 0");
  require(!(gamma > 0.0 && rho <= 0.0), "ISF: rho = 0 with gamma > 0");
  entries_.assign(window.length(), Entry{SiteState::Hole, -1.0});
}

SiteState IsfCache::query(std::int64_t site, double t, RngStream& rng) {
  Entry& e = entries_[window_.index(site)];
  if (e.last_time < 0.0) {
    // The field starts at time 0 from the shared initial configuration.
    e = Entry{initial_.at(site), 0.0};
    ++cached_;
  }
  if (t < e.last_time)
    fail(ErrorCode::ContractViolation,
         "ISF query at t=" + std::to_string(t) + " before cached time " +
             std::to_string(e.last_time));
  if (t > e.last_time) {
    const IsfKernel k = isf_kernel(t - e.last_time, gamma_, rho_);
    const double u = rng.uniform();
    const bool occupied = e.value == SiteState::Particle ? u < k.particle_stays
                                                         : u < k.hole_to_particle;
    e = Entry{site_state(occupied), t};
  }
  return e.value;
}

std::optional<IsfCache::Entry> IsfCache::entry(std::int64_t site) const {
  if (!window_.contains(site))
    return std::nullopt;
  const Entry& e = entries_[window_.index(site)];
  if (e.last_time < 0.0)
    return std::nullopt;
  return e;
}

// --- forward exclusion ------------------------------------------------------

SseState::SseState(std::vector<std::uint8_t> cells, BoundaryMode mode, double gamma,
                   double rho)
    : cells_(std::move(cells)), mode_(mode), gamma_(gamma), rho_(rho) {
  require(!cells_.empty(), "SSE: empty window");
  require(cells_.size() < (std::size_t{1} << 30), "SSE: window too large");
  require(gamma >= 0.0, "SSE: gamma must be >= 0");
  slot_of_.assign(cells_.size(), -1);
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    if (cells_[i]) {
      cells_[i] = 1;
      slot_of_[i] = static_cast<std::int32_t>(particles_.size());
      particles_.push_back(static_cast<std::uint32_t>(i));
    }
  }
}

void SseState::jump(std::size_t slot, std::size_t target) {
  const std::uint32_t from = particles_[slot];
  cells_[from] = 0;
  slot_of_[from] = -1;
  cells_[target] = 1;
  slot_of_[target] = static_cast<std::int32_t>(slot);
  particles_[slot] = static_cast<std::uint32_t>(target);
}

void SseState::set_cell(std::size_t index, bool occupied) {
  if (static_cast<bool>(cells_[index]) == occupied)
    return;
  if (occupied) {
    cells_[index] = 1;
    slot_of_[index] = static_cast<std::int32_t>(particles_.size());
    particles_.push_back(static_cast<std::uint32_t>(index));
    return;
  }
  const auto slot = static_cast<std::size_t>(slot_of_[index]);
  const std::uint32_t last = particles_.back();
  particles_[slot] = last;
  slot_of_[last] = static_cast<std::int32_t>(slot);
  particles_.pop_back();
  cells_[index] = 0;
  slot_of_[index] = -1;
}

void SseState::advance(double t_target, RngStream& rng) {
  if (t_target < clock_)
    fail(ErrorCode::ContractViolation, "SSE advance into the past");
  if (gamma_ > 0.0 && t_target > clock_) {
    if (mode_ == BoundaryMode::Torus)
      advance_torus(t_target, rng);
    else
      advance_resample(t_target, rng);
  }
  clock_ = t_target;
}

void SseState::advance_torus(double t_target, RngStream& rng) {
  const std::size_t length = cells_.size();
  const auto count = static_cast<std::uint32_t>(particles_.size());
  if (count == 0 || length < 2)
    return;
  // The particle count is conserved, so the event count over the interval is
  // Poisson and the event times themselves are never needed.
  std::uint64_t events = rng.poisson(2.0 * gamma_ * count * (t_target - clock_));
  std::uint32_t draws[kDrawChunk];
  while (events > 0) {
    const auto chunk = static_cast<std::size_t>(std::min<std::uint64_t>(events, kDrawChunk));
    rng.below_batch(2 * count, draws, chunk);
    events -= chunk;
    for (std::size_t e = 0; e < chunk; ++e) {
      const std::uint32_t draw = draws[e];
      const std::size_t from = particles_[draw >> 1];
      const std::size_t to = (draw & 1u) ? (from + 1 == length ? 0 : from + 1)
                                         : (from == 0 ? length - 1 : from - 1);
      if (!cells_[to])
        jump(draw >> 1, to);
    }
  }
}

void SseState::advance_resample(double t_target, RngStream& rng) {
  const std::size_t length = cells_.size();
  for (;;) {
    // Particle clocks at 2γ each plus the two boundary cells at γ each.
    const auto count = static_cast<std::uint32_t>(particles_.size());
    const double next = clock_ + rng.exponential(2.0 * gamma_ * (count + 1.0));
    if (next > t_target)
      break;
    clock_ = next;
    const std::uint32_t draw = rng.below(2 * (count + 1));
    const std::uint32_t slot = draw >> 1;
    const bool right = draw & 1u;
    if (slot == count) {
      set_cell(right ? length - 1 : 0, rng.bernoulli(rho_));
      continue;
    }
    const std::size_t from = particles_[slot];
    if (right ? from + 1 == length : from == 0)
      continue;
    const std::size_t to = right ? from + 1 : from - 1;
    if (!cells_[to])
      jump(slot, to);
  }
}

// --- revealed-content exclusion ---------------------------------------------

RevealedSse::RevealedSse(std::size_t length, BoundaryMode mode, double gamma, double rho)
    : mode_(mode), gamma_(gamma), rho_(rho) {
  require(length >= 1, "SSE: empty window");
  require(length < (std::size_t{1} << 30), "SSE: window too large");
  require(gamma >= 0.0, "SSE: gamma must be >= 0");
  label_at_.assign(length, -1);
}

std::optional<SiteState> RevealedSse::revealed(std::size_t index) const {
  const std::int32_t label = label_at_.at(index);
  if (label < 0)
    return std::nullopt;
  return site_state(value_[static_cast<std::size_t>(label)] != 0);
}

void RevealedSse::advance(double t_target, RngStream& rng) {
  if (t_target < clock_)
    fail(ErrorCode::ContractViolation, "SSE advance into the past");
  const auto count = static_cast<std::uint32_t>(position_.size());
  const std::uint32_t length = static_cast<std::uint32_t>(label_at_.size());
  if (gamma_ > 0.0 && count > 0 && t_target > clock_ && length > 1) {
    const bool torus = mode_ == BoundaryMode::Torus;
    // Every tracked content owns the two edges around it at rate γ each. An
    // edge between two tracked contents is offered by both of them, so it is
    // accepted with probability 1/2 to keep its rate at γ. Removed contents
    // stay in the rate budget until the batch ends.
    std::uint64_t events = rng.poisson(2.0 * gamma_ * count * (t_target - clock_));
    // One draw picks the content, the direction and the acceptance bit.
    std::uint32_t draws[kDrawChunk];
    while (events > 0) {
      const auto chunk = static_cast<std::size_t>(std::min<std::uint64_t>(events, kDrawChunk));
      rng.below_batch(4 * count, draws, chunk);
      events -= chunk;
      for (std::size_t e = 0; e < chunk; ++e) {
        const std::uint32_t draw = draws[e];
        const std::uint32_t a = draw >> 2;
        if (has_dead_ && !alive_[a])
          continue;
        const std::uint32_t from = position_[a];
        std::uint32_t to;
        if (draw & 1u) {
          to = from + 1;
          if (to == length) {
            if (!torus) {
              // The right end cell is redrawn from the reservoir.
              label_at_[from] = -1;
              alive_[a] = 0;
              has_dead_ = true;
              continue;
            }
            to = 0;
          }
        } else {
          if (from == 0) {
            if (!torus) {
              label_at_[from] = -1;
              alive_[a] = 0;
              has_dead_ = true;
              continue;
            }
            to = length - 1;
          } else {
            to = from - 1;
          }
        }
        const std::int32_t b = label_at_[to];
        if (b < 0) {
          label_at_[from] = -1;
          label_at_[to] = static_cast<std::int32_t>(a);
          position_[a] = to;
        } else if (draw & 2u) {
          label_at_[from] = b;
          label_at_[to] = static_cast<std::int32_t>(a);
          position_[a] = to;
          position_[static_cast<std::size_t>(b)] = from;
        }
      }
    }
  } else if (gamma_ > 0.0 && count > 0 && t_target > clock_ && length == 1 &&
             mode_ == BoundaryMode::ResampleBoundary) {
    // A single cell is its own left and right boundary.
    if (rng.poisson(2.0 * gamma_ * (t_target - clock_)) > 0) {
      label_at_[0] = -1;
      alive_[0] = 0;
      has_dead_ = true;
    }
  }
  clock_ = t_target;
  if (has_dead_)
    compact();
}

void RevealedSse::compact() {
  std::size_t kept = 0;
  for (std::size_t i = 0; i < position_.size(); ++i) {
    if (!alive_[i])
      continue;
    position_[kept] = position_[i];
    value_[kept] = value_[i];
    alive_[kept] = 1;
    label_at_[position_[kept]] = static_cast<std::int32_t>(kept);
    ++kept;
  }
  position_.resize(kept);
  value_.resize(kept);
  alive_.resize(kept);
  has_dead_ = false;
}

SiteState RevealedSse::query(std::size_t index, double t, RngStream& rng) {
  advance(t, rng);
  const std::int32_t label = label_at_[index];
  if (label >= 0)
    return site_state(value_[static_cast<std::size_t>(label)] != 0);
  const bool occupied = rng.bernoulli(rho_);
  label_at_[index] = static_cast<std::int32_t>(position_.size());
  position_.push_back(static_cast<std::uint32_t>(index));
  value_.push_back(occupied ? 1 : 0);
  alive_.push_back(1);
  return site_state(occupied);
}

// --- facade -----------------------------------------------------------------

Environment Environment::create(const ModelParams& params_in, std::uint64_t n_jumps,
                                std::uint64_t seed, std::uint64_t stream_index) {
  validate(params_in);
  const ModelParams params = normalized(params_in);
  const Window window = Window::for_jumps(n_jumps);
  const InitialField initial{seed, stream_index, params.rho};
  RngStream rng(seed, stream_index, StreamDomain::Environment);
  switch (params.env) {
    case EnvKind::Static:
      return Environment(EnvKind::Static, window, AddressedStatic{initial}, rng);
    case EnvKind::Isf:
      return Environment(EnvKind::Isf, window, IsfCache(params.gamma, params.rho, window, initial),
                         rng);
    case EnvKind::Sse:
      if (params.sse_engine == SseEngine::Forward)
        return Environment(
            EnvKind::Sse, window,
            SseState(init_bernoulli(params.rho, window, seed, stream_index).cells,
                     params.boundary, params.gamma, params.rho),
            rng);
      return Environment(EnvKind::Sse, window,
                         RevealedSse(window.length(), params.boundary, params.gamma, params.rho),
                         rng);
  }
  fail(ErrorCode::InvalidArgument, "unknown environment kind");
}

Environment Environment::frozen(StaticField field) {
  require(!field.cells.empty(), "frozen environment needs at least one cell");
  const Window window = field.window();
  return Environment(EnvKind::Static, window, std::move(field), RngStream(0, 0));
}

SiteState Environment::query(std::int64_t site, double t) {
  const SiteState value = std::visit(
      [&](auto& s) -> SiteState {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, AddressedStatic>) {
          window_.index(site);
          return s.field.at(site);
        } else if constexpr (std::is_same_v<T, StaticField>) {
          return s.at(site);
        } else if constexpr (std::is_same_v<T, IsfCache>) {
          return s.query(site, t, rng_);
        } else if constexpr (std::is_same_v<T, SseState>) {
          const std::size_t idx = window_.index(site);
          s.advance(t, rng_);
          return s.cell(idx);
        } else {
          return s.query(window_.index(site), t, rng_);
        }
      },
      state_);
  if (t > last_query_)
    last_query_ = t;
  return value;
}

double Environment::clock() const {
  if (const auto* s = std::get_if<SseState>(&state_))
    return s->clock();
  if (const auto* s = std::get_if<RevealedSse>(&state_))
    return s->clock();
  return last_query_;
}

std::string format_snapshot(double clock, const std::string& cells, std::int64_t origin) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", clock);
  return "t=" + std::string(buf) + " cells=" + cells + " origin=" + std::to_string(origin);
}

std::string Environment::snapshot() const {
  std::string cells(window_.length(), '.');
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, AddressedStatic>) {
          for (std::int64_t site = window_.lo; site <= window_.hi; ++site)
            cells[window_.index(site)] = s.field.at(site) == SiteState::Particle ? '1' : '0';
        } else if constexpr (std::is_same_v<T, StaticField>) {
          for (std::size_t i = 0; i < s.cells.size(); ++i)
            cells[i] = s.cells[i] ? '1' : '0';
        } else if constexpr (std::is_same_v<T, IsfCache>) {
          for (std::int64_t site = window_.lo; site <= window_.hi; ++site)
            if (const auto e = s.entry(site))
              cells[window_.index(site)] = e->value == SiteState::Particle ? '1' : '0';
        } else if constexpr (std::is_same_v<T, SseState>) {
          for (std::size_t i = 0; i < s.cells().size(); ++i)
            cells[i] = s.cells()[i] ? '1' : '0';
        } else {
          for (std::size_t i = 0; i < s.length(); ++i)
            if (const auto v = s.revealed(i))
              cells[i] = *v == SiteState::Particle ? '1' : '0';
        }
      },
      state_);
  return format_snapshot(clock(), cells, window_.origin_offset());
}

}  // namespace dynrw
