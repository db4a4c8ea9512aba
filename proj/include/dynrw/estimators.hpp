#ifndef DYNRW_ESTIMATORS_HPP
#define DYNRW_ESTIMATORS_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dynrw/simulator.hpp"

namespace dynrw {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Largest tolerated fraction of aborted replicas in one batch.
inline constexpr double kMaxAbortFraction = 0.01;

struct SpeedEstimate {
  double v_n = 0.0;        // mean displacement per jump
  double std_error = 0.0;  // sample SD of X_n / (n sqrt(M))
  std::uint64_t n = 0;
  std::size_t samples = 0;  // M, non-aborted
  std::size_t aborted = 0;
};

/// Throws InvalidArgument on mixed n or fewer than two usable samples, and
/// CellFailed when more than 1% of the batch aborted.
SpeedEstimate estimate_speed(std::span<const EndpointSample> samples);

/// Independent ensemble at n = 2^log2_n.
struct SliceBatch {
  int log2_n = 0;
  std::vector<EndpointSample> samples;
};

struct ScalingSlice {
  int log2_n = 0;
  std::uint64_t n = 0;
  std::size_t samples = 0;
  std::size_t aborted = 0;
  double v_n = 0.0;
  double sd = 0.0;     // around v_n * n, (M - 1) denominator
  double alpha = 0.0;  // log(sd) / log(n); NaN when flagged
  bool flagged = false;  // sd == 0: alpha undefined, slice excluded
};

struct ScalingEstimate {
  std::vector<ScalingSlice> slices;  // ascending n
  double alpha_star = 0.0;           // alpha of the largest slice
  double lsq_slope = 0.0;            // diagnostic fit of log sd against log n
};

/// Needs >= 3 slices with distinct n and >= 100 usable samples each.
ScalingEstimate estimate_scaling(std::span<const SliceBatch> batches);

/// Histogram of (X_n - v_n n) / n^alpha on a fixed grid.
///
/// The grid has 61 uniform bins over [-H, H], H = 5 sigma-hat of the rescaled
/// data unless given. Displacements live on a lattice of spacing 2 (parity is
/// fixed by n), so each sample's unit mass is spread over its lattice cell
/// [y - 1/n^alpha, y + 1/n^alpha] before binning; this removes aliasing
/// between the lattice and the bin grid.
struct RescaledHistogram {
  double alpha = 0.0;
  double half_width = 0.0;
  std::vector<double> mass;
  double tail_below = 0.0;
  double tail_above = 0.0;
  std::size_t samples = 0;

  double bin_width() const { return 2.0 * half_width / static_cast<double>(mass.size()); }
  double bin_left(std::size_t i) const { return -half_width + bin_width() * static_cast<double>(i); }
  double bin_right(std::size_t i) const { return bin_left(i + 1); }
  double in_range_mass() const;
};

inline constexpr std::size_t kHistogramBins = 61;
inline constexpr double kHistogramSigmas = 5.0;

/// Throws InvalidArgument for fewer than 100 samples or (without an explicit
/// half width) zero variance.
RescaledHistogram rescaled_density(std::span<const EndpointSample> samples, double v_n,
                                   double alpha,
                                   std::optional<double> half_width = std::nullopt);

/// Sample SD of (X_n - v_n n) / n^alpha.
double rescaled_sd(std::span<const EndpointSample> samples, double v_n, double alpha);

/// Total variation distance between histograms on the same grid; the tails
/// count as two extra bins.
double total_variation(const RescaledHistogram& a, const RescaledHistogram& b);

/// Exponent minimizing the summed pairwise TV distance between the centered,
/// rescaled slice histograms; alpha in [0, 1] on a 0.005 grid, ties resolved
/// to the smallest alpha.
double tv_exponent_fit(std::span<const SliceBatch> batches, double step = 0.005);

enum class CurveLabel { Monotone, Concave, NonConcave };

struct CurvePoint {
  double x;
  double v;
  double std_error;
};

/// Labels a sampled curve: Monotone when every forward difference is >= -k
/// joint SE and every second difference <= +k joint SE; Concave when only
/// the latter holds; NonConcave otherwise. Needs >= 4 points, increasing x.
CurveLabel classify_curve(std::span<const CurvePoint> points, double k = 2.0);

enum class ExponentSymbol { Cross, Dot, Square };

/// Cross for alpha* in [0.49, 0.51], Dot above, Square below.
ExponentSymbol classify_exponent(double alpha_star);

std::string_view to_string(CurveLabel label);
std::string_view to_string(ExponentSymbol symbol);

}  // namespace dynrw

#endif
