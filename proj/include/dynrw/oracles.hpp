#ifndef DYNRW_ORACLES_HPP
#define DYNRW_ORACLES_HPP

#include <cstdint>
#include <string_view>

namespace dynrw {

/// Closed-form reference values for the static and averaged media and the
/// trap-based runtime heuristic. All functions are pure.

enum class Regime { Diffusive, SuperDiffusive, SubDiffusive, SinaiRecurrent };

enum class ScalingOrder { SqrtT, TPowInvS, TOverLogT, TPowS, LogSquared };

struct RegimeLabel {
  Regime regime;
  ScalingOrder order;
};

std::string_view to_string(Regime regime);
std::string_view to_string(ScalingOrder order);

/// Asymptotic speed in the static Bernoulli medium: 0 for rho <= p, else
/// (2p-1)(rho-p) / (rho(1-p) + p(1-rho)).
double static_speed(double p, double rho);

/// Speed of the homogeneous walk that sees density rho everywhere.
double averaged_speed(double p, double rho);

/// s = log((1-rho)/rho) / log((1-p)/p), for p, rho > 1/2 (+inf at rho = 1).
double kks_exponent(double p, double rho);

RegimeLabel classify_regime(double p, double rho);

struct LeafBoundaries {
  double rho_upper;  // s = 2
  double rho_lower;  // s = 1/2
};

LeafBoundaries leaf_boundaries(double p);

/// Positive number stored as mantissa * 2^exponent, mantissa in [0.5, 1).
struct Log2Number {
  double mantissa;
  std::int64_t exponent;

  double log2() const;
  double value() const;  // may overflow to +inf
};

/// ((p/q)^L - 1) / ((p/q) - 1): expected jumps to cross a hole stretch of
/// length L against the drift.
Log2Number trap_crossing_expectation(double p, std::int64_t length);

struct ReliableSteps {
  std::int64_t l_star = 0;
  double log2_nbar = 0.0;
  bool saturated = false;
};

/// Smallest L >= 1 whose crossing expectation reaches the trap dissolution
/// time (L/γ)^2, and log2 of ceil(L (1-rho)^-L). Saturates (flag set, l_star
/// = cap, log2_nbar = +inf) when no L <= cap qualifies.
ReliableSteps reliable_steps(double p, double rho, double gamma, std::int64_t cap = 10000);

/// log2 of nbar divided by a speed estimate (distance -> jumps).
double reliable_steps_over_speed(const ReliableSteps& steps, double speed);

}  // namespace dynrw

#endif
