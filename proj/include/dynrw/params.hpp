#ifndef DYNRW_PARAMS_HPP
#define DYNRW_PARAMS_HPP

#include <string>
#include <string_view>

namespace dynrw {

enum class EnvKind { Static, Isf, Sse };

enum class BoundaryMode { Torus, ResampleBoundary };

/// How the exclusion environment is realized. Both engines produce the same
/// law on the same finite window; Lazy only tracks sites the walker has seen.
enum class SseEngine { Lazy, Forward };

/// Coordinate of one experiment: walker bias p, density rho, environment
/// rate gamma, and the walker's own jump rate.
struct ModelParams {
  double p = 0.5;
  double rho = 0.5;
  double gamma = 0.0;
  EnvKind env = EnvKind::Static;
  double walker_rate = 1.0;
  BoundaryMode boundary = BoundaryMode::Torus;
  SseEngine sse_engine = SseEngine::Lazy;
};

/// Throws Error(InvalidArgument) unless 0 <= p <= 1, 0 <= rho <= 1,
/// gamma >= 0, walker_rate > 0, and (ISF) rho > 0 whenever gamma > 0.
void validate(const ModelParams& params);

/// Copy with gamma recorded as 0 for the static environment.
ModelParams normalized(ModelParams params);

/// True for p in [1/2, 1) and rho in [1/2, 1]: the folded parameter square.
bool in_reduced_domain(const ModelParams& params);

std::string_view to_string(EnvKind kind);
std::string_view to_string(BoundaryMode mode);
std::string_view to_string(SseEngine engine);
EnvKind parse_env_kind(std::string_view text);
BoundaryMode parse_boundary(std::string_view text);
SseEngine parse_sse_engine(std::string_view text);

}  // namespace dynrw

#endif
