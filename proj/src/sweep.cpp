#include "dynrw/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include "dynrw/error.hpp"
#include "dynrw/oracles.hpp"

namespace dynrw {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::size_t kReplicasPerTask = 4;
constexpr std::size_t kMinCurvePoints = 10;

struct Job {
  std::size_t cell;
  ModelParams params;
  std::uint64_t n;
  std::size_t samples;
  std::vector<EndpointSample> out;
  std::atomic<std::size_t> remaining{0};
};

struct CellState {
  std::once_flag started;
  Clock::time_point start;
  Deadline deadline;
  std::atomic<std::int64_t> end_ns{0};
  std::atomic<bool> budget_hit{false};
  std::mutex failure_mutex;
  std::string failure;
};

struct Task {
  std::size_t job;
  std::size_t begin;
  std::size_t end;
};

unsigned resolve_threads(unsigned threads) {
  if (threads != 0)
    return threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string describe(const ModelParams& m, std::uint64_t n) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s p=%.9g rho=%.9g gamma=%.9g n=%llu",
                std::string(to_string(m.env)).c_str(), m.p, m.rho, m.gamma,
                static_cast<unsigned long long>(n));
  return buf;
}

// Runs every job's replicas on a shared pool. Results land at their replica
// index, so the outcome does not depend on scheduling.
std::vector<std::unique_ptr<CellState>> execute(std::vector<std::unique_ptr<Job>>& jobs,
                                                std::size_t cells, const GridSpec& grid) {
  std::vector<std::unique_ptr<CellState>> state;
  for (std::size_t c = 0; c < cells; ++c)
    state.push_back(std::make_unique<CellState>());
  std::vector<Task> tasks;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    Job& job = *jobs[j];
    job.out.resize(job.samples);
    std::size_t chunks = 0;
    for (std::size_t b = 0; b < job.samples; b += kReplicasPerTask) {
      tasks.push_back({j, b, std::min(job.samples, b + kReplicasPerTask)});
      ++chunks;
    }
    job.remaining = chunks;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> jobs_done{0};
  std::mutex progress_mutex;
  const auto budget = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(grid.cell_budget_seconds));

  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks.size())
        return;
      const Task& task = tasks[t];
      Job& job = *jobs[task.job];
      CellState& cell = *state[job.cell];
      std::call_once(cell.started, [&] {
        cell.start = Clock::now();
        if (grid.cell_budget_seconds > 0.0)
          cell.deadline = cell.start + budget;
      });
      for (std::size_t r = task.begin; r < task.end; ++r) {
        EndpointSample& s = job.out[r];
        const RngStream rng = replica_stream(grid.master_seed, job.params, job.n, r);
        if (cell.budget_hit || (cell.deadline && Clock::now() > *cell.deadline)) {
          s.seed = rng.seed();
          s.stream_index = rng.stream_index();
          s.abort = AbortReason::Budget;
          cell.budget_hit = true;
          continue;
        }
        try {
          s = run_replica(job.params, job.n, rng, nullptr, cell.deadline);
          if (s.abort == AbortReason::Budget)
            cell.budget_hit = true;
        } catch (const std::exception& e) {
          std::lock_guard lock(cell.failure_mutex);
          if (cell.failure.empty())
            cell.failure = e.what();
          s.abort = AbortReason::WindowOverflow;
        }
      }
      const auto now_ns = Clock::now().time_since_epoch().count();
      std::int64_t prev = cell.end_ns.load();
      while (prev < now_ns && !cell.end_ns.compare_exchange_weak(prev, now_ns)) {
      }
      if (job.remaining.fetch_sub(1) == 1 && grid.progress) {
        const std::size_t done = jobs_done.fetch_add(1) + 1;
        const double secs =
            std::chrono::duration<double>(Clock::now() - cell.start).count();
        char buf[64];
        std::snprintf(buf, sizeof buf, " (%.1f s)%s", secs, cell.budget_hit ? " budget" : "");
        std::lock_guard lock(progress_mutex);
        grid.progress("[" + std::to_string(done) + "/" + std::to_string(jobs.size()) + "] " +
                      describe(job.params, job.n) + buf);
      }
    }
  };

  const unsigned threads = std::min<std::size_t>(resolve_threads(grid.threads),
                                                 std::max<std::size_t>(1, tasks.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i)
      pool.emplace_back(worker);
    for (auto& th : pool)
      th.join();
  }
  return state;
}

double cell_seconds(const CellState& c) {
  if (c.end_ns == 0)
    return 0.0;
  const auto end = Clock::time_point(Clock::duration(c.end_ns.load()));
  return std::chrono::duration<double>(end - c.start).count();
}

std::size_t count_aborts(const std::vector<EndpointSample>& samples) {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [](const auto& s) { return s.aborted(); }));
}

std::uint64_t bits_of(double x) {
  // +0 and -0 hash alike.
  return x == 0.0 ? 0 : std::bit_cast<std::uint64_t>(x);
}

}  // namespace

Axis Axis::range(double start, double step, std::size_t count) {
  require(count >= 1, "axis count must be >= 1");
  Axis a;
  for (std::size_t i = 0; i < count; ++i)
    a.values.push_back(start + step * static_cast<double>(i));
  return a;
}

std::vector<ModelParams> GridSpec::points() const {
  require(!p.values.empty() && !rho.values.empty() && !gamma.values.empty(),
          "grid axes must be non-empty");
  require(samples >= 2, "samples must be >= 2");
  std::vector<ModelParams> out;
  for (double pv : p.values)
    for (double rv : rho.values)
      for (double gv : gamma.values) {
        ModelParams m;
        m.p = pv;
        m.rho = rv;
        m.gamma = gv;
        m.env = env;
        m.walker_rate = walker_rate;
        m.boundary = boundary;
        m.sse_engine = sse_engine;
        validate(m);
        m = normalized(m);
        if (env == EnvKind::Static && gv != gamma.values.front())
          continue;
        out.push_back(m);
      }
  return out;
}

std::uint64_t point_key(const ModelParams& params, std::uint64_t n) {
  const ModelParams m = normalized(params);
  std::uint64_t h = mix64(static_cast<std::uint64_t>(m.env) + 1);
  for (std::uint64_t word :
       {bits_of(m.p), bits_of(m.rho), bits_of(m.gamma), bits_of(m.walker_rate),
        static_cast<std::uint64_t>(m.env == EnvKind::Sse ? m.boundary : BoundaryMode::Torus), n})
    h = mix64(h ^ mix64(word + 0x9E3779B97F4A7C15ull));
  return h;
}

RngStream replica_stream(std::uint64_t master, const ModelParams& params, std::uint64_t n,
                         std::uint64_t replica) {
  return RngStream(derive_seed(master, point_key(params, n), replica), replica);
}

double log2_nbar_for(const ModelParams& params) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (params.env != EnvKind::Sse || !(params.gamma > 0.0))
    return nan;
  // Fold onto p >= 1/2, rho >= 1/2 with the symmetries of the model; the trap
  // structure only depends on the folded point.
  double p = params.p, rho = params.rho;
  if (p < 0.5) {
    p = 1.0 - p;
    rho = 1.0 - rho;
  }
  if (rho < 0.5)
    rho = 1.0 - rho;
  if (!(p > 0.5 && p < 1.0 && rho < 1.0))
    return nan;
  return reliable_steps(p, rho, params.gamma).log2_nbar;
}

std::vector<EndpointSample> run_ensemble(const ModelParams& params, std::uint64_t n,
                                         std::size_t samples, std::uint64_t master_seed,
                                         unsigned threads, double budget_seconds) {
  validate(params);
  require(samples >= 1, "samples must be >= 1");
  GridSpec grid;
  grid.master_seed = master_seed;
  grid.threads = threads;
  grid.cell_budget_seconds = budget_seconds;
  std::vector<std::unique_ptr<Job>> jobs;
  jobs.push_back(std::make_unique<Job>());
  jobs[0]->cell = 0;
  jobs[0]->params = normalized(params);
  jobs[0]->n = n;
  jobs[0]->samples = samples;
  auto state = execute(jobs, 1, grid);
  if (!state[0]->failure.empty())
    fail(ErrorCode::CellFailed, state[0]->failure);
  return std::move(jobs[0]->out);
}

std::vector<SpeedCell> run_speed_sweep(const GridSpec& grid, const SkipFn& skip) {
  require(grid.n_log2 >= 1 && grid.n_log2 <= 40, "n-log2 must lie in [1, 40]");
  const std::uint64_t n = std::uint64_t{1} << grid.n_log2;
  const std::vector<ModelParams> points = grid.points();
  std::vector<SpeedCell> cells(points.size());
  std::vector<std::unique_ptr<Job>> jobs;
  for (std::size_t i = 0; i < points.size(); ++i) {
    SpeedCell& cell = cells[i];
    cell.params = points[i];
    cell.n = n;
    cell.requested = grid.samples;
    cell.log2_nbar = log2_nbar_for(points[i]);
    if (skip && skip(points[i])) {
      cell.skipped = true;
      continue;
    }
    auto job = std::make_unique<Job>();
    job->cell = i;
    job->params = points[i];
    job->n = n;
    job->samples = grid.samples;
    jobs.push_back(std::move(job));
  }
  auto state = execute(jobs, cells.size(), grid);
  for (auto& job : jobs) {
    SpeedCell& cell = cells[job->cell];
    const CellState& cs = *state[job->cell];
    cell.aborts = count_aborts(job->out);
    cell.seconds = cell_seconds(cs);
    if (cs.budget_hit) {
      cell.failure = "budget";
      continue;
    }
    if (!cs.failure.empty()) {
      cell.failure = cs.failure;
      continue;
    }
    try {
      cell.estimate = estimate_speed(job->out);
    } catch (const Error& e) {
      cell.failure = e.what();
    }
  }
  return cells;
}

std::vector<ScalingCell> run_scaling_sweep(const GridSpec& grid, const SkipFn& skip) {
  require(grid.n_list.size() >= 3, "scaling needs at least 3 slices");
  for (int N : grid.n_list)
    require(N >= 1 && N <= 40, "slice N must lie in [1, 40]");
  std::vector<int> n_list = grid.n_list;
  std::sort(n_list.begin(), n_list.end());
  require(std::adjacent_find(n_list.begin(), n_list.end()) == n_list.end(),
          "slice N values must be distinct");
  const std::vector<ModelParams> points = grid.points();
  std::vector<ScalingCell> cells(points.size());
  std::vector<std::unique_ptr<Job>> jobs;
  std::vector<std::vector<std::size_t>> jobs_of(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    ScalingCell& cell = cells[i];
    cell.params = points[i];
    cell.n_list = n_list;
    cell.requested = grid.samples;
    cell.log2_nbar = log2_nbar_for(points[i]);
    if (skip && skip(points[i])) {
      cell.skipped = true;
      continue;
    }
    for (int N : n_list) {
      auto job = std::make_unique<Job>();
      job->cell = i;
      job->params = points[i];
      job->n = std::uint64_t{1} << N;
      job->samples = grid.samples;
      jobs_of[i].push_back(jobs.size());
      jobs.push_back(std::move(job));
    }
  }
  auto state = execute(jobs, cells.size(), grid);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    ScalingCell& cell = cells[i];
    if (cell.skipped)
      continue;
    const CellState& cs = *state[i];
    cell.seconds = cell_seconds(cs);
    std::vector<SliceBatch> batches;
    for (std::size_t k = 0; k < jobs_of[i].size(); ++k) {
      Job& job = *jobs[jobs_of[i][k]];
      cell.aborts += count_aborts(job.out);
      batches.push_back({n_list[k], std::move(job.out)});
    }
    if (cs.budget_hit) {
      cell.failure = "budget";
      continue;
    }
    if (!cs.failure.empty()) {
      cell.failure = cs.failure;
      continue;
    }
    try {
      cell.estimate = estimate_scaling(batches);
    } catch (const Error& e) {
      cell.failure = e.what();
      continue;
    }
    const double alpha_star = cell.estimate->alpha_star;
    if (std::isfinite(alpha_star))
      cell.symbol = classify_exponent(alpha_star);

    // Overlay histograms: one common range per alpha so slices are comparable.
    std::vector<double> alphas;
    if (std::isfinite(alpha_star))
      alphas.push_back(alpha_star);
    if (alphas.empty() || alphas.front() != 0.5)
      alphas.push_back(0.5);
    for (double alpha : alphas) {
      double widest = 0.0;
      for (std::size_t k = 0; k < batches.size(); ++k)
        widest = std::max(widest, rescaled_sd(batches[k].samples,
                                              cell.estimate->slices[k].v_n, alpha));
      if (!(widest > 0.0))
        continue;
      for (std::size_t k = 0; k < batches.size(); ++k)
        cell.histograms.push_back(
            {batches[k].log2_n,
             rescaled_density(batches[k].samples, cell.estimate->slices[k].v_n, alpha,
                              kHistogramSigmas * widest)});
    }
  }
  return cells;
}

std::vector<CurveCell> speed_curve_diagram(const GridSpec& grid) {
  require(grid.p.values.size() >= kMinCurvePoints, "curve diagram needs at least 10 p values");
  std::vector<SpeedCell> cells = run_speed_sweep(grid);
  std::map<std::pair<double, double>, std::vector<SpeedCell>> curves;
  std::vector<std::pair<double, double>> order;
  for (auto& cell : cells) {
    const auto key = std::make_pair(cell.params.rho, cell.params.gamma);
    if (!curves.count(key))
      order.push_back(key);
    curves[key].push_back(std::move(cell));
  }
  std::vector<CurveCell> out;
  for (const auto& key : order) {
    CurveCell cc;
    cc.rho = key.first;
    cc.gamma = key.second;
    cc.curve = std::move(curves[key]);
    std::sort(cc.curve.begin(), cc.curve.end(),
              [](const SpeedCell& a, const SpeedCell& b) { return a.params.p < b.params.p; });
    std::vector<CurvePoint> pts;
    for (const auto& c : cc.curve) {
      if (!c.estimate) {
        cc.failure = "cell p=" + std::to_string(c.params.p) + " failed: " + c.failure;
        break;
      }
      pts.push_back({c.params.p, c.estimate->v_n, c.estimate->std_error});
    }
    if (cc.failure.empty()) {
      try {
        cc.label = classify_curve(pts);
      } catch (const Error& e) {
        cc.failure = e.what();
      }
    }
    out.push_back(std::move(cc));
  }
  return out;
}

}  // namespace dynrw
