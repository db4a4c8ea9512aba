#ifndef DYNRW_IO_HPP
#define DYNRW_IO_HPP

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dynrw/simulator.hpp"
#include "dynrw/sweep.hpp"

namespace dynrw {

/// `%.9g`; non-finite values print as nan, inf, -inf.
std::string format_double(double x);

/// Inverse of format_double. Throws InvalidArgument on malformed text.
double parse_double(std::string_view text);

inline constexpr std::string_view kSpeedHeader = "env,p,rho,gamma,n,M,v_n,stderr,aborts,seed";
inline constexpr std::string_view kScalingHeader =
    "env,p,rho,gamma,N,n,M,SD_n,alpha_n,alpha_star,symbol,seed,log2_nbar";
inline constexpr std::string_view kHistHeader = "env,p,rho,gamma,N,alpha,bin_left,bin_right,mass";
inline constexpr std::string_view kCurveHeader = "env,rho,gamma,label";
inline constexpr std::string_view kEndpointHeader =
    "replica,displacement,jumps,elapsed_time,seed,stream,aborted";

struct SpeedRecord {
  EnvKind env = EnvKind::Static;
  double p = 0.0, rho = 0.0, gamma = 0.0;
  std::uint64_t n = 0;
  std::size_t M = 0;
  double v_n = 0.0;
  double std_error = 0.0;
  std::size_t aborts = 0;
  std::uint64_t seed = 0;
};

/// One row per slice. `symbol` is cross|dot|square, `undefined` when alpha*
/// is, and `failed` for a failed cell.
struct ScalingRecord {
  EnvKind env = EnvKind::Static;
  double p = 0.0, rho = 0.0, gamma = 0.0;
  int N = 0;
  std::uint64_t n = 0;
  std::size_t M = 0;
  double sd = 0.0;
  double alpha_n = 0.0;
  double alpha_star = 0.0;
  std::string symbol;
  std::uint64_t seed = 0;
  double log2_nbar = 0.0;
};

/// Tail mass is written as two extra rows with an infinite outer edge.
struct HistRecord {
  EnvKind env = EnvKind::Static;
  double p = 0.0, rho = 0.0, gamma = 0.0;
  int N = 0;
  double alpha = 0.0;
  double bin_left = 0.0;
  double bin_right = 0.0;
  double mass = 0.0;
};

struct CurveRecord {
  EnvKind env = EnvKind::Static;
  double rho = 0.0, gamma = 0.0;
  std::string label;  // m, c, + or failed
};

std::string write_speed_csv(std::span<const SpeedRecord> records);
std::string write_scaling_csv(std::span<const ScalingRecord> records);
std::string write_hist_csv(std::span<const HistRecord> records);
std::string write_curve_csv(std::span<const CurveRecord> records);

/// Throw InvalidArgument when the header or a row does not match the schema.
std::vector<SpeedRecord> read_speed_csv(std::string_view text);
std::vector<ScalingRecord> read_scaling_csv(std::string_view text);
std::vector<HistRecord> read_hist_csv(std::string_view text);

std::vector<SpeedRecord> speed_records(std::span<const SpeedCell> cells, std::uint64_t seed);
std::vector<ScalingRecord> scaling_records(std::span<const ScalingCell> cells,
                                           std::uint64_t seed);
std::vector<HistRecord> hist_records(std::span<const ScalingCell> cells);
std::vector<CurveRecord> curve_records(std::span<const CurveCell> cells, EnvKind env);

std::string write_endpoint_csv(std::span<const EndpointSample> samples);

/// Rows of a previous run that can be reused: complete cells keyed by
/// (env, p, rho, gamma, seed), kept verbatim so a resumed file is byte-equal
/// to an uninterrupted one.
class ResumeIndex {
 public:
  /// Speed rows with a finite v_n at the given n and replica count.
  static ResumeIndex from_speed(std::string_view text, std::uint64_t n, std::size_t samples);
  /// Scaling cells whose rows cover exactly `n_list` with the given replica
  /// count and did not fail; `hist_text` supplies their histogram rows.
  static ResumeIndex from_scaling(std::string_view text, std::string_view hist_text,
                                  std::span<const int> n_list, std::size_t samples);

  bool contains(const ModelParams& params, std::uint64_t seed) const;
  const std::string& rows(const ModelParams& params, std::uint64_t seed) const;
  const std::string& hist_rows(const ModelParams& params, std::uint64_t seed) const;
  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    std::string key;
    std::string rows;
    std::string hist_rows;
  };
  std::vector<Entry> entries_;
  const Entry* find(const ModelParams& params, std::uint64_t seed) const;
};

/// Full CSV text for sweeps, splicing in rows reused from `resume`.
std::string speed_sweep_csv(std::span<const SpeedCell> cells, std::uint64_t seed,
                            const ResumeIndex* resume = nullptr);
std::string scaling_sweep_csv(std::span<const ScalingCell> cells, std::uint64_t seed,
                              const ResumeIndex* resume = nullptr);
std::string hist_sweep_csv(std::span<const ScalingCell> cells, std::uint64_t seed,
                           const ResumeIndex* resume = nullptr);

}  // namespace dynrw

#endif
