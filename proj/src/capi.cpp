#include "dynrw/dynrw.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynrw/environments.hpp"
#include "dynrw/error.hpp"
#include "dynrw/io.hpp"
#include "dynrw/oracles.hpp"
#include "dynrw/simulator.hpp"
#include "dynrw/sweep.hpp"

using nlohmann::json;

struct dynrw_env {
  dynrw::Environment env;
};

struct dynrw_grid {
  dynrw::GridSpec spec;
  dynrw_progress_fn progress = nullptr;
  void* progress_user = nullptr;
  std::optional<std::string> resume_csv;
  std::optional<std::string> resume_hist;
};

struct dynrw_result {
  std::string csv;
  std::string detail;
  std::string summary;
  std::size_t cells = 0;
  std::size_t failed = 0;
  std::size_t skipped = 0;
  std::size_t aborts = 0;
};

namespace {

thread_local std::string last_error;

dynrw_status status_of(dynrw::ErrorCode code) {
  switch (code) {
    case dynrw::ErrorCode::InvalidArgument: return DYNRW_INVALID_ARGUMENT;
    case dynrw::ErrorCode::Domain: return DYNRW_DOMAIN;
    case dynrw::ErrorCode::WindowOverflow: return DYNRW_WINDOW_OVERFLOW;
    case dynrw::ErrorCode::ContractViolation: return DYNRW_CONTRACT_VIOLATION;
    case dynrw::ErrorCode::Io: return DYNRW_IO;
    case dynrw::ErrorCode::Budget: return DYNRW_BUDGET;
    case dynrw::ErrorCode::CellFailed: return DYNRW_CELL_FAILED;
  }
  return DYNRW_INTERNAL;
}

template <typename F>
dynrw_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return DYNRW_OK;
  } catch (const dynrw::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return DYNRW_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return DYNRW_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return DYNRW_INTERNAL;
  }
}

void need(const void* ptr, const char* name) {
  if (!ptr)
    dynrw::fail(dynrw::ErrorCode::InvalidArgument, std::string(name) + " must not be null");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out)
    throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

dynrw::EnvKind env_kind(int v) {
  switch (v) {
    case DYNRW_ENV_STATIC: return dynrw::EnvKind::Static;
    case DYNRW_ENV_ISF: return dynrw::EnvKind::Isf;
    case DYNRW_ENV_SSE: return dynrw::EnvKind::Sse;
  }
  dynrw::fail(dynrw::ErrorCode::InvalidArgument, "unknown environment kind");
}

dynrw::BoundaryMode boundary_mode(int v) {
  switch (v) {
    case DYNRW_BOUNDARY_TORUS: return dynrw::BoundaryMode::Torus;
    case DYNRW_BOUNDARY_RESAMPLE: return dynrw::BoundaryMode::ResampleBoundary;
  }
  dynrw::fail(dynrw::ErrorCode::InvalidArgument, "unknown boundary mode");
}

dynrw::SseEngine sse_engine(int v) {
  switch (v) {
    case DYNRW_SSE_LAZY: return dynrw::SseEngine::Lazy;
    case DYNRW_SSE_FORWARD: return dynrw::SseEngine::Forward;
  }
  dynrw::fail(dynrw::ErrorCode::InvalidArgument, "unknown exclusion engine");
}

dynrw::ModelParams to_model(const dynrw_params* p) {
  need(p, "params");
  dynrw::ModelParams m;
  m.p = p->p;
  m.rho = p->rho;
  m.gamma = p->gamma;
  m.env = env_kind(p->env);
  m.walker_rate = p->walker_rate;
  m.boundary = boundary_mode(p->boundary);
  m.sse_engine = sse_engine(p->sse_engine);
  dynrw::validate(m);
  return m;
}

int abort_code(dynrw::AbortReason r) {
  switch (r) {
    case dynrw::AbortReason::None: return 0;
    case dynrw::AbortReason::WindowOverflow: return 1;
    case dynrw::AbortReason::Budget: return 2;
  }
  return 0;
}

json params_json(const dynrw::ModelParams& m) {
  json j = {{"env", std::string(to_string(m.env))}, {"p", m.p}, {"rho", m.rho}, {"gamma", m.gamma}};
  if (m.env == dynrw::EnvKind::Sse) {
    j["boundary"] = std::string(to_string(m.boundary));
    j["sse_engine"] = std::string(to_string(m.sse_engine));
  }
  return j;
}

json speed_json(const dynrw::SpeedCell& c) {
  json j = params_json(c.params);
  j["n"] = c.n;
  j["requested"] = c.requested;
  j["aborts"] = c.aborts;
  j["skipped"] = c.skipped;
  j["seconds"] = c.seconds;
  j["log2_nbar"] = c.log2_nbar;
  if (c.estimate) {
    j["v_n"] = c.estimate->v_n;
    j["stderr"] = c.estimate->std_error;
    j["samples"] = c.estimate->samples;
  }
  if (!c.failure.empty())
    j["failure"] = c.failure;
  return j;
}

void tally(dynrw_result& r, const dynrw::SpeedCell& c) {
  ++r.cells;
  r.failed += c.failed() ? 1 : 0;
  r.skipped += c.skipped ? 1 : 0;
  r.aborts += c.aborts;
}

dynrw::GridSpec spec_of(const dynrw_grid* grid) {
  need(grid, "grid");
  dynrw::GridSpec spec = grid->spec;
  if (grid->progress) {
    const auto fn = grid->progress;
    void* user = grid->progress_user;
    spec.progress = [fn, user](const std::string& line) { fn(line.c_str(), user); };
  }
  return spec;
}

template <typename F>
dynrw_status produce(dynrw_result** out, F&& fill) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    auto r = std::make_unique<dynrw_result>();
    fill(*r);
    *out = r.release();
  });
}

}  // namespace

extern "C" {

const char* dynrw_version(void) { return "0.1.0"; }

const char* dynrw_last_error(void) { return last_error.c_str(); }

void dynrw_string_free(char* s) { std::free(s); }

void dynrw_params_default(dynrw_params* out) {
  if (!out)
    return;
  out->p = 0.5;
  out->rho = 0.5;
  out->gamma = 0.0;
  out->env = DYNRW_ENV_STATIC;
  out->walker_rate = 1.0;
  out->boundary = DYNRW_BOUNDARY_TORUS;
  out->sse_engine = DYNRW_SSE_LAZY;
}

dynrw_status dynrw_params_validate(const dynrw_params* params) {
  return guarded([&] { to_model(params); });
}

dynrw_status dynrw_parse_env(const char* text, int* out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = static_cast<int>(dynrw::parse_env_kind(text));
  });
}

dynrw_status dynrw_parse_boundary(const char* text, int* out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = dynrw::parse_boundary(text) == dynrw::BoundaryMode::Torus ? DYNRW_BOUNDARY_TORUS
                                                                     : DYNRW_BOUNDARY_RESAMPLE;
  });
}

dynrw_status dynrw_parse_sse_engine(const char* text, int* out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = dynrw::parse_sse_engine(text) == dynrw::SseEngine::Lazy ? DYNRW_SSE_LAZY
                                                                   : DYNRW_SSE_FORWARD;
  });
}

dynrw_status dynrw_static_speed(double p, double rho, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = dynrw::static_speed(p, rho);
  });
}

dynrw_status dynrw_averaged_speed(double p, double rho, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = dynrw::averaged_speed(p, rho);
  });
}

dynrw_status dynrw_kks_exponent(double p, double rho, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = dynrw::kks_exponent(p, rho);
  });
}

dynrw_status dynrw_classify_regime(double p, double rho, const char** regime,
                                   const char** order) {
  return guarded([&] {
    need(regime, "regime");
    need(order, "order");
    const auto label = dynrw::classify_regime(p, rho);
    // The names are string literals, so the views are null-terminated.
    *regime = to_string(label.regime).data();
    *order = to_string(label.order).data();
  });
}

dynrw_status dynrw_leaf_boundaries(double p, double* rho_upper, double* rho_lower) {
  return guarded([&] {
    need(rho_upper, "rho_upper");
    need(rho_lower, "rho_lower");
    const auto b = dynrw::leaf_boundaries(p);
    *rho_upper = b.rho_upper;
    *rho_lower = b.rho_lower;
  });
}

dynrw_status dynrw_trap_crossing_log2(double p, int64_t length, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = dynrw::trap_crossing_expectation(p, length).log2();
  });
}

dynrw_status dynrw_reliable_steps(double p, double rho, double gamma, int64_t cap,
                                  dynrw_reliable* out) {
  return guarded([&] {
    need(out, "out");
    const auto r = cap > 0 ? dynrw::reliable_steps(p, rho, gamma, cap)
                           : dynrw::reliable_steps(p, rho, gamma);
    out->l_star = r.l_star;
    out->log2_nbar = r.log2_nbar;
    out->saturated = r.saturated ? 1 : 0;
  });
}

dynrw_status dynrw_env_create(const dynrw_params* params, uint64_t n_jumps, uint64_t seed,
                              uint64_t stream, dynrw_env** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    *out = new dynrw_env{dynrw::Environment::create(to_model(params), n_jumps, seed, stream)};
  });
}

dynrw_status dynrw_env_query(dynrw_env* env, int64_t site, double t, int* state) {
  return guarded([&] {
    need(env, "env");
    need(state, "state");
    *state = env->env.query(site, t) == dynrw::SiteState::Particle ? 1 : 0;
  });
}

dynrw_status dynrw_env_snapshot(const dynrw_env* env, char** out) {
  return guarded([&] {
    need(env, "env");
    need(out, "out");
    *out = copy_string(env->env.snapshot());
  });
}

void dynrw_env_free(dynrw_env* env) { delete env; }

dynrw_status dynrw_replica_identity(uint64_t master, const dynrw_params* params, uint64_t n,
                                    uint64_t replica, uint64_t* seed, uint64_t* stream) {
  return guarded([&] {
    need(seed, "seed");
    need(stream, "stream");
    const auto rng = dynrw::replica_stream(master, to_model(params), n, replica);
    *seed = rng.seed();
    *stream = rng.stream_index();
  });
}

dynrw_status dynrw_run_replica(const dynrw_params* params, uint64_t n, uint64_t seed,
                               uint64_t stream, uint64_t stride, dynrw_endpoint* out,
                               char** trajectory) {
  return guarded([&] {
    need(out, "out");
    const dynrw::ModelParams m = to_model(params);
    dynrw::TrajectoryRecord record;
    record.stride = stride;
    const bool want = stride > 0 && trajectory;
    const auto s = dynrw::run_replica(m, n, dynrw::RngStream(seed, stream), want ? &record : nullptr);
    out->displacement = s.displacement;
    out->jumps = s.jumps;
    out->elapsed_time = s.elapsed_time;
    out->seed = s.seed;
    out->stream = s.stream_index;
    out->aborted = abort_code(s.abort);
    if (want)
      *trajectory = copy_string(dynrw::format_trajectory(record));
  });
}

dynrw_status dynrw_grid_create(dynrw_grid** out) {
  return guarded([&] {
    need(out, "out");
    *out = new dynrw_grid;
  });
}

void dynrw_grid_free(dynrw_grid* grid) { delete grid; }

dynrw_status dynrw_grid_set_axis(dynrw_grid* grid, int axis, const double* values, size_t count) {
  return guarded([&] {
    need(grid, "grid");
    need(values, "values");
    dynrw::require(count >= 1, "axis needs at least one value");
    dynrw::Axis a{std::vector<double>(values, values + count)};
    switch (axis) {
      case DYNRW_AXIS_P: grid->spec.p = a; break;
      case DYNRW_AXIS_RHO: grid->spec.rho = a; break;
      case DYNRW_AXIS_GAMMA: grid->spec.gamma = a; break;
      default: dynrw::fail(dynrw::ErrorCode::InvalidArgument, "unknown axis");
    }
  });
}

dynrw_status dynrw_grid_set_env(dynrw_grid* grid, int env) {
  return guarded([&] {
    need(grid, "grid");
    grid->spec.env = env_kind(env);
  });
}

dynrw_status dynrw_grid_set_boundary(dynrw_grid* grid, int boundary) {
  return guarded([&] {
    need(grid, "grid");
    grid->spec.boundary = boundary_mode(boundary);
  });
}

dynrw_status dynrw_grid_set_sse_engine(dynrw_grid* grid, int engine) {
  return guarded([&] {
    need(grid, "grid");
    grid->spec.sse_engine = sse_engine(engine);
  });
}

dynrw_status dynrw_grid_set_walker_rate(dynrw_grid* grid, double rate) {
  return guarded([&] {
    need(grid, "grid");
    dynrw::require(rate > 0.0, "walker rate must be positive");
    grid->spec.walker_rate = rate;
  });
}

dynrw_status dynrw_grid_set_n_log2(dynrw_grid* grid, int n_log2) {
  return guarded([&] {
    need(grid, "grid");
    dynrw::require(n_log2 >= 1 && n_log2 <= 40, "n-log2 must lie in [1, 40]");
    grid->spec.n_log2 = n_log2;
  });
}

dynrw_status dynrw_grid_set_n_list(dynrw_grid* grid, const int* values, size_t count) {
  return guarded([&] {
    need(grid, "grid");
    need(values, "values");
    grid->spec.n_list.assign(values, values + count);
  });
}

dynrw_status dynrw_grid_set_samples(dynrw_grid* grid, size_t samples) {
  return guarded([&] {
    need(grid, "grid");
    dynrw::require(samples >= 2, "samples must be >= 2");
    grid->spec.samples = samples;
  });
}

dynrw_status dynrw_grid_set_seed(dynrw_grid* grid, uint64_t seed) {
  return guarded([&] {
    need(grid, "grid");
    grid->spec.master_seed = seed;
  });
}

dynrw_status dynrw_grid_set_threads(dynrw_grid* grid, unsigned threads) {
  return guarded([&] {
    need(grid, "grid");
    grid->spec.threads = threads;
  });
}

dynrw_status dynrw_grid_set_budget(dynrw_grid* grid, double seconds) {
  return guarded([&] {
    need(grid, "grid");
    grid->spec.cell_budget_seconds = seconds;
  });
}

dynrw_status dynrw_grid_set_progress(dynrw_grid* grid, dynrw_progress_fn fn, void* user) {
  return guarded([&] {
    need(grid, "grid");
    grid->progress = fn;
    grid->progress_user = user;
  });
}

dynrw_status dynrw_grid_set_resume(dynrw_grid* grid, const char* csv, const char* hist_csv) {
  return guarded([&] {
    need(grid, "grid");
    grid->resume_csv = csv ? std::optional<std::string>(csv) : std::nullopt;
    grid->resume_hist = hist_csv ? std::optional<std::string>(hist_csv) : std::nullopt;
  });
}

dynrw_status dynrw_sweep_speed(const dynrw_grid* grid, dynrw_result** out) {
  return produce(out, [&](dynrw_result& r) {
    const dynrw::GridSpec spec = spec_of(grid);
    std::optional<dynrw::ResumeIndex> index;
    if (grid->resume_csv)
      index = dynrw::ResumeIndex::from_speed(*grid->resume_csv, std::uint64_t{1} << spec.n_log2,
                                             spec.samples);
    dynrw::SkipFn skip;
    if (index)
      skip = [&](const dynrw::ModelParams& m) { return index->contains(m, spec.master_seed); };
    const auto cells = dynrw::run_speed_sweep(spec, skip);
    r.csv = dynrw::speed_sweep_csv(cells, spec.master_seed, index ? &*index : nullptr);
    json summary = json::array();
    for (const auto& c : cells) {
      tally(r, c);
      summary.push_back(speed_json(c));
    }
    r.summary = summary.dump();
  });
}

dynrw_status dynrw_sweep_scaling(const dynrw_grid* grid, dynrw_result** out) {
  return produce(out, [&](dynrw_result& r) {
    const dynrw::GridSpec spec = spec_of(grid);
    std::optional<dynrw::ResumeIndex> index;
    if (grid->resume_csv)
      index = dynrw::ResumeIndex::from_scaling(*grid->resume_csv, grid->resume_hist.value_or(""),
                                               spec.n_list, spec.samples);
    dynrw::SkipFn skip;
    if (index)
      skip = [&](const dynrw::ModelParams& m) { return index->contains(m, spec.master_seed); };
    const auto cells = dynrw::run_scaling_sweep(spec, skip);
    const dynrw::ResumeIndex* idx = index ? &*index : nullptr;
    r.csv = dynrw::scaling_sweep_csv(cells, spec.master_seed, idx);
    r.detail = dynrw::hist_sweep_csv(cells, spec.master_seed, idx);
    json summary = json::array();
    for (const auto& c : cells) {
      ++r.cells;
      r.failed += c.failed() ? 1 : 0;
      r.skipped += c.skipped ? 1 : 0;
      r.aborts += c.aborts;
      json j = params_json(c.params);
      j["n_list"] = c.n_list;
      j["requested"] = c.requested;
      j["aborts"] = c.aborts;
      j["skipped"] = c.skipped;
      j["seconds"] = c.seconds;
      j["log2_nbar"] = c.log2_nbar;
      if (c.estimate) {
        j["alpha_star"] = c.estimate->alpha_star;
        j["symbol"] = c.symbol ? std::string(to_string(*c.symbol)) : "undefined";
      }
      if (!c.failure.empty())
        j["failure"] = c.failure;
      summary.push_back(j);
    }
    r.summary = summary.dump();
  });
}

dynrw_status dynrw_curve_diagram(const dynrw_grid* grid, dynrw_result** out) {
  return produce(out, [&](dynrw_result& r) {
    const dynrw::GridSpec spec = spec_of(grid);
    const auto cells = dynrw::speed_curve_diagram(spec);
    r.csv = dynrw::write_curve_csv(dynrw::curve_records(cells, spec.env));
    std::vector<dynrw::SpeedCell> all;
    json summary = json::array();
    for (const auto& c : cells) {
      ++r.cells;
      r.failed += c.failed() ? 1 : 0;
      json j = {{"rho", c.rho}, {"gamma", c.gamma}};
      if (c.label)
        j["label"] = std::string(to_string(*c.label));
      if (!c.failure.empty())
        j["failure"] = c.failure;
      json curve = json::array();
      for (const auto& s : c.curve) {
        r.aborts += s.aborts;
        curve.push_back(speed_json(s));
        all.push_back(s);
      }
      j["curve"] = curve;
      summary.push_back(j);
    }
    r.detail = dynrw::speed_sweep_csv(all, spec.master_seed);
    r.summary = summary.dump();
  });
}

dynrw_status dynrw_simulate(const dynrw_params* params, uint64_t n, size_t samples,
                            uint64_t master_seed, unsigned threads, double budget_seconds,
                            dynrw_result** out) {
  return produce(out, [&](dynrw_result& r) {
    const dynrw::ModelParams m = to_model(params);
    const auto samples_out = dynrw::run_ensemble(m, n, samples, master_seed, threads, budget_seconds);
    r.csv = dynrw::write_endpoint_csv(samples_out);
    r.cells = 1;
    for (const auto& s : samples_out)
      r.aborts += s.aborted() ? 1 : 0;
    json j = params_json(dynrw::normalized(m));
    j["n"] = n;
    j["samples"] = samples;
    j["aborts"] = r.aborts;
    r.summary = json::array({j}).dump();
  });
}

const char* dynrw_result_csv(const dynrw_result* result) {
  return result ? result->csv.c_str() : "";
}

const char* dynrw_result_detail_csv(const dynrw_result* result) {
  return result ? result->detail.c_str() : "";
}

const char* dynrw_result_summary_json(const dynrw_result* result) {
  return result ? result->summary.c_str() : "[]";
}

size_t dynrw_result_cells(const dynrw_result* result) { return result ? result->cells : 0; }

size_t dynrw_result_failed_cells(const dynrw_result* result) {
  return result ? result->failed : 0;
}

size_t dynrw_result_skipped_cells(const dynrw_result* result) {
  return result ? result->skipped : 0;
}

size_t dynrw_result_aborts(const dynrw_result* result) { return result ? result->aborts : 0; }

void dynrw_result_free(dynrw_result* result) { delete result; }

}  // extern "C"
