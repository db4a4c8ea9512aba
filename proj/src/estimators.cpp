#include "dynrw/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dynrw/error.hpp"

namespace dynrw {

namespace {

constexpr std::size_t kMinHistogramSamples = 100;
constexpr std::size_t kMinSliceSamples = 100;
constexpr std::size_t kMinSlices = 3;
constexpr double kCurveSlack = 1e-12;

struct Usable {
  std::vector<double> values;  // displacements of non-aborted samples
  std::uint64_t n = 0;
  std::size_t aborted = 0;
};

Usable collect(std::span<const EndpointSample> samples, const char* who) {
  Usable out;
  bool have_n = false;
  out.values.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.aborted()) {
      ++out.aborted;
      continue;
    }
    if (!have_n) {
      out.n = s.jumps;
      have_n = true;
    } else if (s.jumps != out.n) {
      fail(ErrorCode::InvalidArgument, std::string(who) + ": mixed n in one batch");
    }
    out.values.push_back(static_cast<double>(s.displacement));
  }
  if (!samples.empty() &&
      static_cast<double>(out.aborted) > kMaxAbortFraction * static_cast<double>(samples.size()))
    fail(ErrorCode::CellFailed, std::string(who) + ": " + std::to_string(out.aborted) + " of " +
                                    std::to_string(samples.size()) + " replicas aborted");
  return out;
}

double mean_of(const std::vector<double>& xs) {
  CompensatedSum sum;
  for (double x : xs)
    sum.add(x);
  return sum.value() / static_cast<double>(xs.size());
}

// Sum of squared deviations from `center`, divided by (size - 1).
double variance_about(const std::vector<double>& xs, double center) {
  CompensatedSum sum;
  for (double x : xs) {
    const double d = x - center;
    sum.add(d * d);
  }
  return sum.value() / static_cast<double>(xs.size() - 1);
}

double pow_n(std::uint64_t n, double alpha) { return std::pow(static_cast<double>(n), alpha); }

// Adds `weight` spread uniformly over [a, b] into the histogram.
void deposit(RescaledHistogram& h, double a, double b, double weight) {
  const double lo = -h.half_width;
  const double hi = h.half_width;
  const double span = b - a;
  if (!(span > 0.0)) {
    if (a < lo)
      h.tail_below += weight;
    else if (a >= hi)
      h.tail_above += weight;
    else {
      auto i = static_cast<std::size_t>((a - lo) / h.bin_width());
      h.mass[std::min(i, h.mass.size() - 1)] += weight;
    }
    return;
  }
  const double density = weight / span;
  if (a < lo)
    h.tail_below += density * (std::min(b, lo) - a);
  if (b > hi)
    h.tail_above += density * (b - std::max(a, hi));
  const double ca = std::max(a, lo);
  const double cb = std::min(b, hi);
  if (!(cb > ca))
    return;
  const double w = h.bin_width();
  const std::size_t last = h.mass.size() - 1;
  auto first_bin = std::min(static_cast<std::size_t>((ca - lo) / w), last);
  auto last_bin = std::min(static_cast<std::size_t>((cb - lo) / w), last);
  if (first_bin == last_bin) {
    h.mass[first_bin] += density * (cb - ca);
    return;
  }
  // Partial edges use the exact overlap; the remainder goes to the bins fully
  // covered so that the deposited total stays exactly density * (cb - ca).
  double placed = 0.0;
  const double first_part = density * (h.bin_right(first_bin) - ca);
  h.mass[first_bin] += first_part;
  placed += first_part;
  for (std::size_t i = first_bin + 1; i < last_bin; ++i) {
    h.mass[i] += density * w;
    placed += density * w;
  }
  h.mass[last_bin] += density * (cb - ca) - placed;
}

RescaledHistogram build_histogram(const std::vector<double>& centered, std::uint64_t n,
                                  double alpha, double half_width) {
  RescaledHistogram h;
  h.alpha = alpha;
  h.half_width = half_width;
  h.mass.assign(kHistogramBins, 0.0);
  h.samples = centered.size();
  const double scale = pow_n(n, alpha);
  const double cell = 1.0 / scale;  // half the lattice spacing, rescaled
  const double weight = 1.0 / static_cast<double>(centered.size());
  for (double c : centered) {
    const double y = c / scale;
    deposit(h, y - cell, y + cell, weight);
  }
  return h;
}

std::vector<double> centered_values(const Usable& u, double v_n) {
  std::vector<double> out;
  out.reserve(u.values.size());
  const double shift = v_n * static_cast<double>(u.n);
  for (double x : u.values)
    out.push_back(x - shift);
  return out;
}

}  // namespace

SpeedEstimate estimate_speed(std::span<const EndpointSample> samples) {
  const Usable u = collect(samples, "estimate_speed");
  if (u.values.size() < 2)
    fail(ErrorCode::InvalidArgument, "estimate_speed: needs at least 2 non-aborted samples");
  require(u.n >= 1, "estimate_speed: n must be >= 1");
  SpeedEstimate out;
  out.n = u.n;
  out.samples = u.values.size();
  out.aborted = u.aborted;
  const double n = static_cast<double>(u.n);
  const double mean = mean_of(u.values);
  out.v_n = mean / n;
  out.std_error = std::sqrt(variance_about(u.values, mean)) / n /
                  std::sqrt(static_cast<double>(out.samples));
  return out;
}

ScalingEstimate estimate_scaling(std::span<const SliceBatch> batches) {
  require(batches.size() >= kMinSlices, "estimate_scaling: needs at least 3 slices");
  ScalingEstimate out;
  for (const auto& batch : batches) {
    const Usable u = collect(batch.samples, "estimate_scaling");
    require(u.values.size() >= kMinSliceSamples,
            "estimate_scaling: each slice needs at least 100 non-aborted samples");
    require(batch.log2_n >= 1 && u.n == (std::uint64_t{1} << batch.log2_n),
            "estimate_scaling: slice samples do not match n = 2^N");
    ScalingSlice slice;
    slice.log2_n = batch.log2_n;
    slice.n = u.n;
    slice.samples = u.values.size();
    slice.aborted = u.aborted;
    const double mean = mean_of(u.values);
    slice.v_n = mean / static_cast<double>(u.n);
    slice.sd = std::sqrt(variance_about(u.values, mean));
    slice.flagged = !(slice.sd > 0.0);
    slice.alpha = slice.flagged ? std::numeric_limits<double>::quiet_NaN()
                                : std::log(slice.sd) / std::log(static_cast<double>(u.n));
    out.slices.push_back(slice);
  }
  std::sort(out.slices.begin(), out.slices.end(),
            [](const ScalingSlice& a, const ScalingSlice& b) { return a.log2_n < b.log2_n; });
  for (std::size_t i = 1; i < out.slices.size(); ++i)
    require(out.slices[i].log2_n != out.slices[i - 1].log2_n,
            "estimate_scaling: duplicate slice N");
  out.alpha_star = out.slices.back().alpha;

  // Diagnostic least-squares slope over the unflagged slices.
  CompensatedSum sx, sy, sxx, sxy;
  double count = 0.0;
  for (const auto& s : out.slices) {
    if (s.flagged)
      continue;
    const double x = std::log(static_cast<double>(s.n));
    const double y = std::log(s.sd);
    sx.add(x);
    sy.add(y);
    sxx.add(x * x);
    sxy.add(x * y);
    count += 1.0;
  }
  const double denom = count * sxx.value() - sx.value() * sx.value();
  out.lsq_slope = count >= 2.0 && denom > 0.0
                      ? (count * sxy.value() - sx.value() * sy.value()) / denom
                      : std::numeric_limits<double>::quiet_NaN();
  return out;
}

double RescaledHistogram::in_range_mass() const {
  CompensatedSum sum;
  for (double m : mass)
    sum.add(m);
  return sum.value();
}

double rescaled_sd(std::span<const EndpointSample> samples, double v_n, double alpha) {
  const Usable u = collect(samples, "rescaled_sd");
  require(u.values.size() >= 2, "rescaled_sd: needs at least 2 non-aborted samples");
  const double center = v_n * static_cast<double>(u.n);
  return std::sqrt(variance_about(u.values, center)) / pow_n(u.n, alpha);
}

RescaledHistogram rescaled_density(std::span<const EndpointSample> samples, double v_n,
                                   double alpha, std::optional<double> half_width) {
  const Usable u = collect(samples, "rescaled_density");
  require(u.values.size() >= kMinHistogramSamples,
          "rescaled_density: needs at least 100 non-aborted samples");
  require(std::isfinite(alpha), "rescaled_density: alpha must be finite");
  double h = 0.0;
  if (half_width) {
    require(*half_width > 0.0 && std::isfinite(*half_width),
            "rescaled_density: half width must be positive");
    h = *half_width;
  } else {
    const double sd = std::sqrt(variance_about(u.values, v_n * static_cast<double>(u.n))) /
                      pow_n(u.n, alpha);
    require(sd > 0.0, "rescaled_density: zero variance, bin range undefined");
    h = kHistogramSigmas * sd;
  }
  return build_histogram(centered_values(u, v_n), u.n, alpha, h);
}

double total_variation(const RescaledHistogram& a, const RescaledHistogram& b) {
  require(a.mass.size() == b.mass.size() && a.half_width == b.half_width,
          "total_variation: histograms must share one grid");
  CompensatedSum sum;
  for (std::size_t i = 0; i < a.mass.size(); ++i)
    sum.add(std::fabs(a.mass[i] - b.mass[i]));
  sum.add(std::fabs(a.tail_below - b.tail_below));
  sum.add(std::fabs(a.tail_above - b.tail_above));
  return 0.5 * sum.value();
}

double tv_exponent_fit(std::span<const SliceBatch> batches, double step) {
  require(batches.size() >= kMinSlices, "tv_exponent_fit: needs at least 3 slices");
  require(step > 0.0 && step <= 1.0, "tv_exponent_fit: step must lie in (0, 1]");
  struct Slice {
    std::vector<double> centered;
    std::uint64_t n;
    double raw_sd;
  };
  std::vector<Slice> slices;
  for (const auto& batch : batches) {
    const Usable u = collect(batch.samples, "tv_exponent_fit");
    require(u.values.size() >= kMinSliceSamples,
            "tv_exponent_fit: each slice needs at least 100 non-aborted samples");
    const double mean = mean_of(u.values);
    Slice s{centered_values(u, mean / static_cast<double>(u.n)), u.n, 0.0};
    s.raw_sd = std::sqrt(variance_about(s.centered, 0.0));
    slices.push_back(std::move(s));
  }
  const auto steps = static_cast<int>(std::llround(1.0 / step));
  double best_alpha = 0.0;
  double best_score = std::numeric_limits<double>::infinity();
  std::vector<RescaledHistogram> hists(slices.size());
  for (int k = 0; k <= steps; ++k) {
    const double alpha = std::min(1.0, k * step);
    double max_sd = 0.0;
    for (const auto& s : slices)
      max_sd = std::max(max_sd, s.raw_sd / pow_n(s.n, alpha));
    const double h = max_sd > 0.0 ? kHistogramSigmas * max_sd : kHistogramSigmas;
    for (std::size_t i = 0; i < slices.size(); ++i)
      hists[i] = build_histogram(slices[i].centered, slices[i].n, alpha, h);
    CompensatedSum score;
    for (std::size_t i = 0; i < hists.size(); ++i)
      for (std::size_t j = i + 1; j < hists.size(); ++j)
        score.add(total_variation(hists[i], hists[j]));
    if (score.value() < best_score) {
      best_score = score.value();
      best_alpha = alpha;
    }
  }
  return best_alpha;
}

CurveLabel classify_curve(std::span<const CurvePoint> points, double k) {
  require(points.size() >= 4, "classify_curve: needs at least 4 points");
  require(k >= 0.0, "classify_curve: k must be >= 0");
  for (std::size_t i = 1; i < points.size(); ++i)
    require(points[i].x > points[i - 1].x, "classify_curve: x must be strictly increasing");
  bool monotone = true;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const auto& a = points[i];
    const auto& b = points[i + 1];
    const double joint = std::hypot(a.std_error, b.std_error);
    if (b.v - a.v < -k * joint - kCurveSlack)
      monotone = false;
  }
  bool concave = true;
  for (std::size_t i = 0; i + 2 < points.size(); ++i) {
    const auto& a = points[i];
    const auto& b = points[i + 1];
    const auto& c = points[i + 2];
    // Change of slope across b, with its standard error propagated from the
    // three points.
    const double h1 = b.x - a.x;
    const double h2 = c.x - b.x;
    const double second = (c.v - b.v) / h2 - (b.v - a.v) / h1;
    const double ca = 1.0 / h1;
    const double cb = 1.0 / h1 + 1.0 / h2;
    const double cc = 1.0 / h2;
    const double joint = std::sqrt(ca * ca * a.std_error * a.std_error +
                                   cb * cb * b.std_error * b.std_error +
                                   cc * cc * c.std_error * c.std_error);
    const double scale = std::max(std::fabs((c.v - b.v) / h2), std::fabs((b.v - a.v) / h1));
    if (second > k * joint + kCurveSlack * std::max(1.0, scale))
      concave = false;
  }
  if (monotone && concave)
    return CurveLabel::Monotone;
  if (concave)
    return CurveLabel::Concave;
  return CurveLabel::NonConcave;
}

ExponentSymbol classify_exponent(double alpha_star) {
  require(std::isfinite(alpha_star), "classify_exponent: alpha_star must be finite");
  if (alpha_star >= 0.49 && alpha_star <= 0.51)
    return ExponentSymbol::Cross;
  return alpha_star > 0.51 ? ExponentSymbol::Dot : ExponentSymbol::Square;
}

std::string_view to_string(CurveLabel label) {
  switch (label) {
    case CurveLabel::Monotone: return "m";
    case CurveLabel::Concave: return "c";
    case CurveLabel::NonConcave: return "+";
  }
  return "?";
}

std::string_view to_string(ExponentSymbol symbol) {
  switch (symbol) {
    case ExponentSymbol::Cross: return "cross";
    case ExponentSymbol::Dot: return "dot";
    case ExponentSymbol::Square: return "square";
  }
  return "?";
}

}  // namespace dynrw
