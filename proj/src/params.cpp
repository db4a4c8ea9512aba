#include "dynrw/params.hpp"

#include <cmath>

#include "dynrw/error.hpp"

namespace dynrw {

void validate(const ModelParams& params) {
  auto unit = [](double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; };
  require(unit(params.p), "p must lie in [0, 1]");
  require(unit(params.rho), "rho must lie in [0, 1]");
  require(std::isfinite(params.gamma) && params.gamma >= 0.0, "gamma must be >= 0");
  require(std::isfinite(params.walker_rate) && params.walker_rate > 0.0,
          "walker rate must be > 0");
  if (params.env == EnvKind::Isf && params.gamma > 0.0)
    require(params.rho > 0.0, "ISF with gamma > 0 needs rho > 0 (flip-down rate undefined)");
}

ModelParams normalized(ModelParams params) {
  if (params.env == EnvKind::Static)
    params.gamma = 0.0;
  return params;
}

bool in_reduced_domain(const ModelParams& params) {
  return params.p >= 0.5 && params.p < 1.0 && params.rho >= 0.5 && params.rho <= 1.0;
}

std::string_view to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::Static: return "static";
    case EnvKind::Isf: return "isf";
    case EnvKind::Sse: return "sse";
  }
  return "?";
}

std::string_view to_string(BoundaryMode mode) {
  return mode == BoundaryMode::Torus ? "torus" : "resample";
}

std::string_view to_string(SseEngine engine) {
  return engine == SseEngine::Lazy ? "lazy" : "forward";
}

EnvKind parse_env_kind(std::string_view text) {
  if (text == "static") return EnvKind::Static;
  if (text == "isf") return EnvKind::Isf;
  if (text == "sse") return EnvKind::Sse;
  fail(ErrorCode::InvalidArgument, "unknown environment '" + std::string(text) + "'");
}

BoundaryMode parse_boundary(std::string_view text) {
  if (text == "torus") return BoundaryMode::Torus;
  if (text == "resample") return BoundaryMode::ResampleBoundary;
  fail(ErrorCode::InvalidArgument, "unknown boundary mode '" + std::string(text) + "'");
}

SseEngine parse_sse_engine(std::string_view text) {
  if (text == "lazy") return SseEngine::Lazy;
  if (text == "forward") return SseEngine::Forward;
  fail(ErrorCode::InvalidArgument, "unknown SSE engine '" + std::string(text) + "'");
}

}  // namespace dynrw
