#include "dynrw/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>

#include "dynrw/error.hpp"

namespace dynrw {

namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(text.substr(start));
      return out;
    }
    out.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

// Non-empty lines; the header must match exactly.
std::vector<std::string_view> body_lines(std::string_view text, std::string_view header) {
  std::vector<std::string_view> lines;
  for (std::string_view line : split(text, '\n')) {
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);
    if (!line.empty())
      lines.push_back(line);
  }
  if (lines.empty() || lines.front() != header)
    fail(ErrorCode::InvalidArgument,
         "CSV header mismatch: expected '" + std::string(header) + "'");
  lines.erase(lines.begin());
  return lines;
}

std::vector<std::string_view> fields(std::string_view line, std::size_t expected) {
  auto out = split(line, ',');
  if (out.size() != expected)
    fail(ErrorCode::InvalidArgument, "CSV row has " + std::to_string(out.size()) +
                                         " fields, expected " + std::to_string(expected) +
                                         ": " + std::string(line));
  return out;
}

template <typename T>
T parse_integer(std::string_view text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    fail(ErrorCode::InvalidArgument, "malformed integer '" + std::string(text) + "'");
  return value;
}

std::string u64(std::uint64_t v) { return std::to_string(v); }

std::string env_prefix(EnvKind env, double p, double rho, double gamma) {
  std::string s(to_string(env));
  s += ',' + format_double(p) + ',' + format_double(rho) + ',' + format_double(gamma);
  return s;
}

std::string cell_key(std::string_view prefix, std::uint64_t seed) {
  return std::string(prefix) + '#' + u64(seed);
}

std::string cell_key(const ModelParams& m, std::uint64_t seed) {
  return cell_key(env_prefix(m.env, m.p, m.rho, m.gamma), seed);
}

std::string first_fields(std::string_view line, std::size_t count) {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < count; ++i) {
    pos = line.find(',', pos);
    if (pos == std::string_view::npos)
      return std::string(line);
    ++pos;
  }
  return std::string(line.substr(0, pos - 1));
}

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x))
    return "nan";
  if (std::isinf(x))
    return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

double parse_double(std::string_view text) {
  if (text == "nan")
    return kNan;
  if (text == "inf")
    return std::numeric_limits<double>::infinity();
  if (text == "-inf")
    return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    fail(ErrorCode::InvalidArgument, "malformed number '" + std::string(text) + "'");
  return value;
}

std::string write_speed_csv(std::span<const SpeedRecord> records) {
  std::string out(kSpeedHeader);
  out += '\n';
  for (const auto& r : records) {
    out += env_prefix(r.env, r.p, r.rho, r.gamma) + ',' + u64(r.n) + ',' + u64(r.M) + ',' +
           format_double(r.v_n) + ',' + format_double(r.std_error) + ',' + u64(r.aborts) + ',' +
           u64(r.seed) + '\n';
  }
  return out;
}

std::string write_scaling_csv(std::span<const ScalingRecord> records) {
  std::string out(kScalingHeader);
  out += '\n';
  for (const auto& r : records) {
    out += env_prefix(r.env, r.p, r.rho, r.gamma) + ',' + std::to_string(r.N) + ',' + u64(r.n) +
           ',' + u64(r.M) + ',' + format_double(r.sd) + ',' + format_double(r.alpha_n) + ',' +
           format_double(r.alpha_star) + ',' + r.symbol + ',' + u64(r.seed) + ',' +
           format_double(r.log2_nbar) + '\n';
  }
  return out;
}

std::string write_hist_csv(std::span<const HistRecord> records) {
  std::string out(kHistHeader);
  out += '\n';
  for (const auto& r : records) {
    out += env_prefix(r.env, r.p, r.rho, r.gamma) + ',' + std::to_string(r.N) + ',' +
           format_double(r.alpha) + ',' + format_double(r.bin_left) + ',' +
           format_double(r.bin_right) + ',' + format_double(r.mass) + '\n';
  }
  return out;
}

std::string write_curve_csv(std::span<const CurveRecord> records) {
  std::string out(kCurveHeader);
  out += '\n';
  for (const auto& r : records)
    out += std::string(to_string(r.env)) + ',' + format_double(r.rho) + ',' +
           format_double(r.gamma) + ',' + r.label + '\n';
  return out;
}

std::vector<SpeedRecord> read_speed_csv(std::string_view text) {
  std::vector<SpeedRecord> out;
  for (std::string_view line : body_lines(text, kSpeedHeader)) {
    const auto f = fields(line, 10);
    SpeedRecord r;
    r.env = parse_env_kind(f[0]);
    r.p = parse_double(f[1]);
    r.rho = parse_double(f[2]);
    r.gamma = parse_double(f[3]);
    r.n = parse_integer<std::uint64_t>(f[4]);
    r.M = parse_integer<std::size_t>(f[5]);
    r.v_n = parse_double(f[6]);
    r.std_error = parse_double(f[7]);
    r.aborts = parse_integer<std::size_t>(f[8]);
    r.seed = parse_integer<std::uint64_t>(f[9]);
    out.push_back(r);
  }
  return out;
}

std::vector<ScalingRecord> read_scaling_csv(std::string_view text) {
  std::vector<ScalingRecord> out;
  for (std::string_view line : body_lines(text, kScalingHeader)) {
    const auto f = fields(line, 13);
    ScalingRecord r;
    r.env = parse_env_kind(f[0]);
    r.p = parse_double(f[1]);
    r.rho = parse_double(f[2]);
    r.gamma = parse_double(f[3]);
    r.N = parse_integer<int>(f[4]);
    r.n = parse_integer<std::uint64_t>(f[5]);
    r.M = parse_integer<std::size_t>(f[6]);
    r.sd = parse_double(f[7]);
    r.alpha_n = parse_double(f[8]);
    r.alpha_star = parse_double(f[9]);
    r.symbol = std::string(f[10]);
    r.seed = parse_integer<std::uint64_t>(f[11]);
    r.log2_nbar = parse_double(f[12]);
    out.push_back(r);
  }
  return out;
}

std::vector<HistRecord> read_hist_csv(std::string_view text) {
  std::vector<HistRecord> out;
  for (std::string_view line : body_lines(text, kHistHeader)) {
    const auto f = fields(line, 9);
    HistRecord r;
    r.env = parse_env_kind(f[0]);
    r.p = parse_double(f[1]);
    r.rho = parse_double(f[2]);
    r.gamma = parse_double(f[3]);
    r.N = parse_integer<int>(f[4]);
    r.alpha = parse_double(f[5]);
    r.bin_left = parse_double(f[6]);
    r.bin_right = parse_double(f[7]);
    r.mass = parse_double(f[8]);
    out.push_back(r);
  }
  return out;
}

std::vector<SpeedRecord> speed_records(std::span<const SpeedCell> cells, std::uint64_t seed) {
  std::vector<SpeedRecord> out;
  for (const auto& c : cells) {
    if (c.skipped)
      continue;
    SpeedRecord r;
    r.env = c.params.env;
    r.p = c.params.p;
    r.rho = c.params.rho;
    r.gamma = c.params.gamma;
    r.n = c.n;
    r.M = c.estimate ? c.estimate->samples : c.requested - std::min(c.aborts, c.requested);
    r.v_n = c.estimate ? c.estimate->v_n : kNan;
    r.std_error = c.estimate ? c.estimate->std_error : kNan;
    r.aborts = c.aborts;
    r.seed = seed;
    out.push_back(r);
  }
  return out;
}

std::vector<ScalingRecord> scaling_records(std::span<const ScalingCell> cells,
                                           std::uint64_t seed) {
  std::vector<ScalingRecord> out;
  for (const auto& c : cells) {
    if (c.skipped)
      continue;
    for (std::size_t k = 0; k < c.n_list.size(); ++k) {
      ScalingRecord r;
      r.env = c.params.env;
      r.p = c.params.p;
      r.rho = c.params.rho;
      r.gamma = c.params.gamma;
      r.N = c.n_list[k];
      r.n = std::uint64_t{1} << r.N;
      r.seed = seed;
      r.log2_nbar = c.log2_nbar;
      if (c.estimate) {
        const ScalingSlice& s = c.estimate->slices[k];
        r.M = s.samples;
        r.sd = s.sd;
        r.alpha_n = s.alpha;
        r.alpha_star = c.estimate->alpha_star;
        r.symbol = c.symbol ? std::string(to_string(*c.symbol)) : "undefined";
      } else {
        r.M = c.requested;
        r.sd = r.alpha_n = r.alpha_star = kNan;
        r.symbol = "failed";
      }
      out.push_back(r);
    }
  }
  return out;
}

std::vector<HistRecord> hist_records(std::span<const ScalingCell> cells) {
  std::vector<HistRecord> out;
  for (const auto& c : cells) {
    for (const auto& sh : c.histograms) {
      const RescaledHistogram& h = sh.hist;
      HistRecord base;
      base.env = c.params.env;
      base.p = c.params.p;
      base.rho = c.params.rho;
      base.gamma = c.params.gamma;
      base.N = sh.log2_n;
      base.alpha = h.alpha;
      HistRecord r = base;
      r.bin_left = -std::numeric_limits<double>::infinity();
      r.bin_right = -h.half_width;
      r.mass = h.tail_below;
      out.push_back(r);
      for (std::size_t i = 0; i < h.mass.size(); ++i) {
        r = base;
        r.bin_left = h.bin_left(i);
        r.bin_right = h.bin_right(i);
        r.mass = h.mass[i];
        out.push_back(r);
      }
      r = base;
      r.bin_left = h.half_width;
      r.bin_right = std::numeric_limits<double>::infinity();
      r.mass = h.tail_above;
      out.push_back(r);
    }
  }
  return out;
}

std::vector<CurveRecord> curve_records(std::span<const CurveCell> cells, EnvKind env) {
  std::vector<CurveRecord> out;
  for (const auto& c : cells)
    out.push_back({env, c.rho, c.gamma, c.label ? std::string(to_string(*c.label)) : "failed"});
  return out;
}

std::string write_endpoint_csv(std::span<const EndpointSample> samples) {
  std::string out(kEndpointHeader);
  out += '\n';
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const EndpointSample& s = samples[i];
    out += u64(i) + ',' + std::to_string(s.displacement) + ',' + u64(s.jumps) + ',' +
           format_double(s.elapsed_time) + ',' + u64(s.seed) + ',' + u64(s.stream_index) + ',' +
           (s.abort == AbortReason::None           ? "0"
            : s.abort == AbortReason::WindowOverflow ? "window"
                                                     : "budget") +
           '\n';
  }
  return out;
}

ResumeIndex ResumeIndex::from_speed(std::string_view text, std::uint64_t n, std::size_t samples) {
  ResumeIndex index;
  if (text.empty())
    return index;
  const auto records = read_speed_csv(text);
  const auto lines = body_lines(text, kSpeedHeader);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const SpeedRecord& r = records[i];
    if (r.n != n || !std::isfinite(r.v_n) || r.M + r.aborts != samples)
      continue;
    index.entries_.push_back(
        {cell_key(first_fields(lines[i], 4), r.seed), std::string(lines[i]) + '\n', {}});
  }
  return index;
}

ResumeIndex ResumeIndex::from_scaling(std::string_view text, std::string_view hist_text,
                                      std::span<const int> n_list, std::size_t samples) {
  ResumeIndex index;
  if (text.empty())
    return index;
  const auto records = read_scaling_csv(text);
  const auto lines = body_lines(text, kScalingHeader);
  std::map<std::string, Entry> cells;
  std::map<std::string, std::set<int>> slices;
  std::set<std::string> broken;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const ScalingRecord& r = records[i];
    const std::string key = cell_key(first_fields(lines[i], 4), r.seed);
    if (!cells.count(key)) {
      order.push_back(key);
      cells[key].key = key;
    }
    cells[key].rows += std::string(lines[i]) + '\n';
    slices[key].insert(r.N);
    if (r.symbol == "failed" || r.M > samples || 100 * r.M < 99 * samples)
      broken.insert(key);
  }
  if (!hist_text.empty()) {
    const auto hist = read_hist_csv(hist_text);
    const auto hist_lines = body_lines(hist_text, kHistHeader);
    // The hist file carries no seed; it belongs to the same run as `text`.
    std::map<std::string, std::string> by_prefix;
    for (std::size_t i = 0; i < hist.size(); ++i)
      by_prefix[first_fields(hist_lines[i], 4)] += std::string(hist_lines[i]) + '\n';
    for (auto& [key, entry] : cells) {
      const auto it = by_prefix.find(key.substr(0, key.find('#')));
      if (it != by_prefix.end())
        entry.hist_rows = it->second;
    }
  }
  const std::set<int> wanted(n_list.begin(), n_list.end());
  for (const auto& key : order)
    if (!broken.count(key) && slices[key] == wanted)
      index.entries_.push_back(cells[key]);
  return index;
}

const ResumeIndex::Entry* ResumeIndex::find(const ModelParams& params, std::uint64_t seed) const {
  const std::string key = cell_key(params, seed);
  for (const auto& e : entries_)
    if (e.key == key)
      return &e;
  return nullptr;
}

bool ResumeIndex::contains(const ModelParams& params, std::uint64_t seed) const {
  return find(params, seed) != nullptr;
}

const std::string& ResumeIndex::rows(const ModelParams& params, std::uint64_t seed) const {
  const Entry* e = find(params, seed);
  if (!e)
    fail(ErrorCode::InvalidArgument, "no resumable rows for this cell");
  return e->rows;
}

const std::string& ResumeIndex::hist_rows(const ModelParams& params, std::uint64_t seed) const {
  const Entry* e = find(params, seed);
  if (!e)
    fail(ErrorCode::InvalidArgument, "no resumable rows for this cell");
  return e->hist_rows;
}

std::string speed_sweep_csv(std::span<const SpeedCell> cells, std::uint64_t seed,
                            const ResumeIndex* resume) {
  std::string out(kSpeedHeader);
  out += '\n';
  for (const auto& c : cells) {
    if (c.skipped) {
      if (resume)
        out += resume->rows(c.params, seed);
      continue;
    }
    const auto rec = speed_records(std::span(&c, 1), seed);
    const std::string text = write_speed_csv(rec);
    out += text.substr(kSpeedHeader.size() + 1);
  }
  return out;
}

std::string scaling_sweep_csv(std::span<const ScalingCell> cells, std::uint64_t seed,
                              const ResumeIndex* resume) {
  std::string out(kScalingHeader);
  out += '\n';
  for (const auto& c : cells) {
    if (c.skipped) {
      if (resume)
        out += resume->rows(c.params, seed);
      continue;
    }
    const auto rec = scaling_records(std::span(&c, 1), seed);
    out += write_scaling_csv(rec).substr(kScalingHeader.size() + 1);
  }
  return out;
}

std::string hist_sweep_csv(std::span<const ScalingCell> cells, std::uint64_t seed,
                           const ResumeIndex* resume) {
  std::string out(kHistHeader);
  out += '\n';
  for (const auto& c : cells) {
    if (c.skipped) {
      if (resume)
        out += resume->hist_rows(c.params, seed);
      continue;
    }
    const auto rec = hist_records(std::span(&c, 1));
    out += write_hist_csv(rec).substr(kHistHeader.size() + 1);
  }
  return out;
}

}  // namespace dynrw
