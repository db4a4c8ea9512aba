#ifndef DYNRW_SWEEP_HPP
#define DYNRW_SWEEP_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dynrw/estimators.hpp"
#include "dynrw/params.hpp"
#include "dynrw/rng.hpp"
#include "dynrw/simulator.hpp"

namespace dynrw {

struct Axis {
  std::vector<double> values;

  static Axis single(double v) { return {{v}}; }
  /// start, start + step, ..., count values.
  static Axis range(double start, double step, std::size_t count);
};

/// Parameter grid plus the replica budget shared by every cell.
struct GridSpec {
  Axis p = Axis::single(0.5);
  Axis rho = Axis::single(0.5);
  Axis gamma = Axis::single(0.0);
  EnvKind env = EnvKind::Static;
  BoundaryMode boundary = BoundaryMode::Torus;
  SseEngine sse_engine = SseEngine::Lazy;
  double walker_rate = 1.0;
  int n_log2 = 16;                                 // speed sweeps
  std::vector<int> n_list{10, 11, 12, 13, 14, 15, 16};  // scaling sweeps
  std::size_t samples = 2000;                      // M per cell (per slice for scaling)
  std::uint64_t master_seed = 1;
  unsigned threads = 0;                            // 0: hardware concurrency
  double cell_budget_seconds = 600.0;              // <= 0 disables the guard
  std::function<void(const std::string&)> progress;

  /// Grid points, p outermost and gamma innermost. The static environment
  /// collapses the gamma axis to 0. Throws InvalidArgument on an invalid
  /// point or an empty axis.
  std::vector<ModelParams> points() const;
};

/// 64-bit key of a parameter point and jump count. Seeds depend on the
/// parameter values rather than on grid position, so a point gets the same
/// replicas whatever grid it appears in.
std::uint64_t point_key(const ModelParams& params, std::uint64_t n);

/// Stream of replica `replica` at (params, n):
/// seed = derive_seed(master, point_key(params, n), replica), stream = replica.
RngStream replica_stream(std::uint64_t master, const ModelParams& params, std::uint64_t n,
                         std::uint64_t replica);

/// log2 of the reliable step count for SSE cells in the folded square with
/// p > 1/2, rho < 1 and gamma > 0; NaN otherwise, +inf when saturated.
double log2_nbar_for(const ModelParams& params);

struct SpeedCell {
  ModelParams params;
  std::uint64_t n = 0;
  std::size_t requested = 0;
  std::optional<SpeedEstimate> estimate;  // empty when the cell failed or was skipped
  std::size_t aborts = 0;
  std::string failure;
  bool skipped = false;
  double log2_nbar = 0.0;
  double seconds = 0.0;

  bool failed() const { return !skipped && !estimate; }
};

struct SliceHistogram {
  int log2_n = 0;
  RescaledHistogram hist;
};

struct ScalingCell {
  ModelParams params;
  std::vector<int> n_list;
  std::size_t requested = 0;
  std::optional<ScalingEstimate> estimate;
  std::optional<ExponentSymbol> symbol;  // empty when alpha* is undefined
  std::vector<SliceHistogram> histograms;  // at alpha* and at 1/2, common range per alpha
  std::size_t aborts = 0;
  std::string failure;
  bool skipped = false;
  double log2_nbar = 0.0;
  double seconds = 0.0;

  bool failed() const { return !skipped && !estimate; }
};

struct CurveCell {
  double rho = 0.0;
  double gamma = 0.0;
  std::optional<CurveLabel> label;
  std::string failure;
  std::vector<SpeedCell> curve;  // one per p, increasing p

  bool failed() const { return !label; }
};

using SkipFn = std::function<bool(const ModelParams&)>;

/// M replicas of every point at n = 2^n_log2.
std::vector<SpeedCell> run_speed_sweep(const GridSpec& grid, const SkipFn& skip = {});

/// Independent ensembles per slice N of n_list at every point.
std::vector<ScalingCell> run_scaling_sweep(const GridSpec& grid, const SkipFn& skip = {});

/// For each (rho, gamma), the speed curve over the p axis (>= 10 points)
/// and its classify_curve label.
std::vector<CurveCell> speed_curve_diagram(const GridSpec& grid);

/// Endpoint samples of one point, in replica order.
std::vector<EndpointSample> run_ensemble(const ModelParams& params, std::uint64_t n,
                                         std::size_t samples, std::uint64_t master_seed,
                                         unsigned threads = 0, double budget_seconds = 0.0);

}  // namespace dynrw

#endif
