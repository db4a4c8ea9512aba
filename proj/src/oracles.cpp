#include "dynrw/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dynrw/error.hpp"

namespace dynrw {

namespace {

constexpr double kExponentTolerance = 1e-12;

void require_domain(bool cond, const char* what) {
  if (!cond)
    fail(ErrorCode::Domain, what);
}

Log2Number from_log2(double log2_value) {
  const double whole = std::floor(log2_value) + 1.0;
  return {std::exp2(log2_value - whole), static_cast<std::int64_t>(whole)};
}

}  // namespace

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::Diffusive: return "diffusive";
    case Regime::SuperDiffusive: return "super-diffusive";
    case Regime::SubDiffusive: return "sub-diffusive";
    case Regime::SinaiRecurrent: return "sinai-recurrent";
  }
  return "?";
}

std::string_view to_string(ScalingOrder order) {
  switch (order) {
    case ScalingOrder::SqrtT: return "sqrt(t)";
    case ScalingOrder::TPowInvS: return "t^(1/s)";
    case ScalingOrder::TOverLogT: return "t/log(t)";
    case ScalingOrder::TPowS: return "t^s";
    case ScalingOrder::LogSquared: return "log(t)^2";
  }
  return "?";
}

double static_speed(double p, double rho) {
  require_domain(p >= 0.5 && p < 1.0, "static_speed: p must lie in [1/2, 1)");
  require_domain(rho >= 0.5 && rho <= 1.0, "static_speed: rho must lie in [1/2, 1]");
  if (rho <= p)
    return 0.0;
  return (2.0 * p - 1.0) * (rho - p) / (rho * (1.0 - p) + p * (1.0 - rho));
}

double averaged_speed(double p, double rho) {
  return (2.0 * rho - 1.0) * (2.0 * p - 1.0);
}

double kks_exponent(double p, double rho) {
  require_domain(p > 0.5 && p < 1.0, "kks_exponent: p must lie in (1/2, 1)");
  require_domain(rho > 0.5 && rho <= 1.0, "kks_exponent: rho must lie in (1/2, 1]");
  if (rho == 1.0)
    return std::numeric_limits<double>::infinity();
  return std::log((1.0 - rho) / rho) / std::log((1.0 - p) / p);
}

RegimeLabel classify_regime(double p, double rho) {
  require_domain(p >= 0.5 && p < 1.0, "classify_regime: p must lie in [1/2, 1)");
  require_domain(rho >= 0.5 && rho <= 1.0, "classify_regime: rho must lie in [1/2, 1]");
  if (rho == 0.5)
    return {Regime::SinaiRecurrent, ScalingOrder::LogSquared};
  if (p == 0.5)
    return {Regime::Diffusive, ScalingOrder::SqrtT};
  const double s = kks_exponent(p, rho);
  if (std::fabs(s - 1.0) < kExponentTolerance)
    return {Regime::SuperDiffusive, ScalingOrder::TOverLogT};
  if (std::fabs(s - 0.5) < kExponentTolerance)
    return {Regime::Diffusive, ScalingOrder::SqrtT};
  if (s > 2.0 + kExponentTolerance)
    return {Regime::Diffusive, ScalingOrder::SqrtT};
  if (s > 1.0)
    return {Regime::SuperDiffusive, ScalingOrder::TPowInvS};
  if (s > 0.5)
    return {Regime::SuperDiffusive, ScalingOrder::TPowS};
  return {Regime::SubDiffusive, ScalingOrder::TPowS};
}

LeafBoundaries leaf_boundaries(double p) {
  require_domain(p > 0.5 && p < 1.0, "leaf_boundaries: p must lie in (1/2, 1)");
  const double q = 1.0 - p;
  const double sp = std::sqrt(p);
  return {p * p / (p * p + q * q), sp / (sp + std::sqrt(q))};
}

double Log2Number::log2() const { return std::log2(mantissa) + static_cast<double>(exponent); }

double Log2Number::value() const {
  return std::ldexp(mantissa, static_cast<int>(std::min<std::int64_t>(exponent, 1 << 20)));
}

Log2Number trap_crossing_expectation(double p, std::int64_t length) {
  require_domain(p > 0.5 && p < 1.0, "trap_crossing_expectation: p must lie in (1/2, 1)");
  require_domain(length >= 1, "trap_crossing_expectation: L must be >= 1");
  const double ratio = p / (1.0 - p);
  const double log_ratio = std::log(ratio);
  const double exponent = static_cast<double>(length) * log_ratio;
  if (exponent < 600.0) {
    const double value = std::expm1(exponent) / (ratio - 1.0);
    int e = 0;
    const double m = std::frexp(value, &e);
    return {m, e};
  }
  // (r^L - 1) = r^L (1 - r^-L); stay in log space.
  const double log2_value =
      (exponent + std::log1p(-std::exp(-exponent))) / std::log(2.0) - std::log2(ratio - 1.0);
  return from_log2(log2_value);
}

ReliableSteps reliable_steps(double p, double rho, double gamma, std::int64_t cap) {
  require_domain(p > 0.5 && p < 1.0, "reliable_steps: p must lie in (1/2, 1)");
  require_domain(rho >= 0.5 && rho < 1.0, "reliable_steps: rho must lie in [1/2, 1)");
  require_domain(gamma > 0.0, "reliable_steps: gamma must be > 0");
  require_domain(cap >= 1, "reliable_steps: cap must be >= 1");
  ReliableSteps out;
  for (std::int64_t length = 1; length <= cap; ++length) {
    const double crossing = trap_crossing_expectation(p, length).log2();
    const double dissolution = 2.0 * std::log2(static_cast<double>(length) / gamma);
    if (crossing >= dissolution) {
      out.l_star = length;
      const double log2_distance = std::log2(static_cast<double>(length)) -
                                   static_cast<double>(length) * std::log2(1.0 - rho);
      if (log2_distance < 52.0) {
        const double distance = static_cast<double>(length) * std::pow(1.0 - rho, -static_cast<double>(length));
        // Absorb the rounding of (1 - rho) before taking the ceiling.
        out.log2_nbar = std::log2(std::ceil(distance * (1.0 - 1e-12)));
      } else {
        out.log2_nbar = log2_distance;
      }
      return out;
    }
  }
  out.l_star = cap;
  out.log2_nbar = std::numeric_limits<double>::infinity();
  out.saturated = true;
  return out;
}

double reliable_steps_over_speed(const ReliableSteps& steps, double speed) {
  require_domain(speed > 0.0, "reliable_steps_over_speed: speed must be > 0");
  return steps.log2_nbar - std::log2(speed);
}

}  // namespace dynrw
