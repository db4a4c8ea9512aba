// dynrw command-line front end. Talks to the library only through its C API.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "dynrw/dynrw.h"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitFailure = 3;

// Raised for conditions that map onto an exit code.
struct Exit {
  int code;
  std::string message;
};

[[noreturn]] void usage_error(const std::string& what) { throw Exit{kExitUsage, what}; }

void check(dynrw_status st) {
  if (st == DYNRW_OK)
    return;
  const std::string what = dynrw_last_error();
  if (st == DYNRW_INVALID_ARGUMENT || st == DYNRW_DOMAIN)
    throw Exit{kExitUsage, what};
  throw Exit{kExitFailure, what};
}

struct ResultDeleter {
  void operator()(dynrw_result* r) const { dynrw_result_free(r); }
};
struct GridDeleter {
  void operator()(dynrw_grid* g) const { dynrw_grid_free(g); }
};
using ResultPtr = std::unique_ptr<dynrw_result, ResultDeleter>;
using GridPtr = std::unique_ptr<dynrw_grid, GridDeleter>;

std::string fmt(double x) {
  if (std::isnan(x))
    return "nan";
  if (std::isinf(x))
    return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

double to_double(const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size())
      throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    usage_error("not a number: '" + text + "'");
  }
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep))
    out.push_back(item);
  return out;
}

// "v", "a,b,c" or "start:step:count".
std::vector<double> parse_axis(const std::string& name, const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 3)
      usage_error("--" + name + ": range must be start:step:count");
    const double start = to_double(parts[0]);
    const double step = to_double(parts[1]);
    const double count = to_double(parts[2]);
    if (!(count >= 1) || count != std::floor(count))
      usage_error("--" + name + ": count must be a positive integer");
    for (int i = 0; i < static_cast<int>(count); ++i)
      out.push_back(start + step * i);
  } else {
    for (const auto& part : split(text, ','))
      out.push_back(to_double(part));
  }
  if (out.empty())
    usage_error("--" + name + ": no values");
  return out;
}

std::vector<int> parse_n_list(const std::string& text) {
  std::vector<int> out;
  for (const auto& part : split(text, ',')) {
    const double v = to_double(part);
    if (v != std::floor(v))
      usage_error("--n-list: entries must be integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Exit{kExitFailure, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Exit{kExitFailure, "cannot write " + path};
  out << text;
  out.flush();
  if (!out)
    throw Exit{kExitFailure, "write failed: " + path};
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// `<stem>_<suffix>.csv` next to `path`.
std::string sibling(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  std::filesystem::path out = p.parent_path() / (p.stem().string() + "_" + suffix + ".csv");
  return out.string();
}

struct Options {
  std::string env = "static";
  std::string p = "0.5";
  std::string rho = "0.5";
  std::string gamma = "0";
  int n_log2 = 16;
  std::string n_list = "10,11,12,13,14,15,16";
  std::size_t samples = 0;  // 0: per-command default
  std::uint64_t seed = 1;
  std::string boundary = "torus";
  std::string sse_engine = "lazy";
  double walker_rate = 1.0;
  unsigned threads = 0;
  double budget = 600.0;
  std::string out;
  std::string hist_out;
  std::string detail_out;
  bool resume = false;
  bool progress = false;
  std::string trajectory;
  std::uint64_t trajectory_stride = 1;
  std::uint64_t trajectory_replica = 0;
  std::string config;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Splices the `key = value` lines of every --config file in front of the
// command-line flags. Later flags win, so the precedence is flags over file
// over defaults. Blank lines and lines starting with '#' are skipped.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::vector<std::string> from_file;
  std::vector<std::string> rest;
  for (std::size_t i = 1; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
      continue;
    }
    std::ifstream in(path);
    if (!in)
      usage_error("cannot read config file " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      line = trim(line);
      if (line.empty() || line[0] == '#')
        continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        usage_error(path + ":" + std::to_string(lineno) + ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty() || key == "config")
        usage_error(path + ":" + std::to_string(lineno) + ": bad key '" + key + "'");
      from_file.push_back("--" + key + "=" + value);
    }
  }
  // The subcommand name stays first so the file flags bind to it.
  std::vector<std::string> out{args[0]};
  if (!rest.empty()) {
    out.push_back(rest.front());
    out.insert(out.end(), from_file.begin(), from_file.end());
    out.insert(out.end(), rest.begin() + 1, rest.end());
  }
  return out;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--env", o.env, "static|isf|sse")->capture_default_str();
  sub->add_option("--p", o.p, "Walker bias: value, list a,b,c or range start:step:count")
      ->capture_default_str();
  sub->add_option("--rho", o.rho, "Density: value, list or range")->capture_default_str();
  sub->add_option("--gamma", o.gamma, "Environment rate: value, list or range")
      ->capture_default_str();
  sub->add_option("--n-log2", o.n_log2, "Jumps per replica as log2 n")->capture_default_str();
  sub->add_option("--n-list", o.n_list, "Scaling slices N, comma separated")
      ->capture_default_str();
  sub->add_option("--samples", o.samples, "Replicas per cell (per slice for scaling)");
  sub->add_option("--seed", o.seed, "Master seed")->capture_default_str();
  sub->add_option("--boundary", o.boundary, "torus|resample")->capture_default_str();
  sub->add_option("--threads", o.threads, "Worker threads, 0 for all cores")
      ->capture_default_str();
  sub->add_option("--out", o.out, "Output path (stdout when omitted)");
  sub->add_option("--config", o.config, "key = value file; flags override it");
}

void add_run_flags(CLI::App* sub, Options& o) {
  sub->add_option("--sse-engine", o.sse_engine, "lazy|forward")->capture_default_str();
  sub->add_option("--walker-rate", o.walker_rate, "Walker jump rate")->capture_default_str();
  sub->add_option("--budget", o.budget, "Per-cell wall-clock budget in seconds, <= 0 for none")
      ->capture_default_str();
  sub->add_flag("--progress", o.progress, "Report finished cells on stderr");
}

int env_code(const Options& o) {
  int v = 0;
  check(dynrw_parse_env(o.env.c_str(), &v));
  return v;
}

dynrw_params single_point(const Options& o) {
  dynrw_params m;
  dynrw_params_default(&m);
  const auto p = parse_axis("p", o.p);
  const auto rho = parse_axis("rho", o.rho);
  const auto gamma = parse_axis("gamma", o.gamma);
  if (p.size() != 1 || rho.size() != 1 || gamma.size() != 1)
    usage_error("this command takes a single parameter point");
  m.p = p[0];
  m.rho = rho[0];
  m.gamma = gamma[0];
  m.env = env_code(o);
  m.walker_rate = o.walker_rate;
  check(dynrw_parse_boundary(o.boundary.c_str(), &m.boundary));
  check(dynrw_parse_sse_engine(o.sse_engine.c_str(), &m.sse_engine));
  check(dynrw_params_validate(&m));
  return m;
}

void print_progress(const char* line, void*) { std::fprintf(stderr, "%s\n", line); }

GridPtr make_grid(const Options& o, std::size_t default_samples) {
  dynrw_grid* raw = nullptr;
  check(dynrw_grid_create(&raw));
  GridPtr g(raw);
  const auto p = parse_axis("p", o.p);
  const auto rho = parse_axis("rho", o.rho);
  const auto gamma = parse_axis("gamma", o.gamma);
  check(dynrw_grid_set_axis(g.get(), DYNRW_AXIS_P, p.data(), p.size()));
  check(dynrw_grid_set_axis(g.get(), DYNRW_AXIS_RHO, rho.data(), rho.size()));
  check(dynrw_grid_set_axis(g.get(), DYNRW_AXIS_GAMMA, gamma.data(), gamma.size()));
  check(dynrw_grid_set_env(g.get(), env_code(o)));
  int boundary = 0, engine = 0;
  check(dynrw_parse_boundary(o.boundary.c_str(), &boundary));
  check(dynrw_parse_sse_engine(o.sse_engine.c_str(), &engine));
  check(dynrw_grid_set_boundary(g.get(), boundary));
  check(dynrw_grid_set_sse_engine(g.get(), engine));
  check(dynrw_grid_set_walker_rate(g.get(), o.walker_rate));
  check(dynrw_grid_set_n_log2(g.get(), o.n_log2));
  const auto n_list = parse_n_list(o.n_list);
  check(dynrw_grid_set_n_list(g.get(), n_list.data(), n_list.size()));
  check(dynrw_grid_set_samples(g.get(), o.samples ? o.samples : default_samples));
  check(dynrw_grid_set_seed(g.get(), o.seed));
  check(dynrw_grid_set_threads(g.get(), o.threads));
  check(dynrw_grid_set_budget(g.get(), o.budget));
  if (o.progress)
    check(dynrw_grid_set_progress(g.get(), print_progress, nullptr));
  return g;
}

json resolved(const std::string& command, const Options& o, std::size_t samples) {
  json j = {{"command", command},   {"env", o.env},           {"p", o.p},
            {"rho", o.rho},         {"gamma", o.gamma},       {"seed", o.seed},
            {"samples", samples},   {"boundary", o.boundary}, {"sse_engine", o.sse_engine},
            {"walker_rate", o.walker_rate}, {"threads", o.threads},
            {"budget_seconds", o.budget}};
  if (command == "scaling" || command == "sweep-scaling")
    j["n_list"] = parse_n_list(o.n_list);
  else
    j["n_log2"] = o.n_log2;
  return j;
}

// Writes the primary output (stdout when no path) plus any side files, then
// a `<out>.manifest.json` describing the run next to the primary file.
void emit(const std::string& command, const Options& o, std::size_t samples,
          const std::string& started, const dynrw_result* r, const std::string& main_text,
          const std::vector<std::pair<std::string, std::string>>& side) {
  if (o.out.empty()) {
    std::fwrite(main_text.data(), 1, main_text.size(), stdout);
  } else {
    write_file(o.out, main_text);
  }
  std::vector<std::string> outputs;
  if (!o.out.empty())
    outputs.push_back(o.out);
  for (const auto& [path, text] : side) {
    write_file(path, text);
    outputs.push_back(path);
  }
  if (o.out.empty())
    return;
  json manifest = {{"tool", "dynrw"},
                   {"version", dynrw_version()},
                   {"parameters", resolved(command, o, samples)},
                   {"master_seed", o.seed},
                   {"started_utc", started},
                   {"finished_utc", utc_now()},
                   {"outputs", outputs}};
  if (r) {
    manifest["cells"] = dynrw_result_cells(r);
    manifest["failed_cells"] = dynrw_result_failed_cells(r);
    manifest["skipped_cells"] = dynrw_result_skipped_cells(r);
    manifest["aborts"] = dynrw_result_aborts(r);
    manifest["cell_summary"] = json::parse(dynrw_result_summary_json(r));
  }
  write_file(o.out + ".manifest.json", manifest.dump(2) + "\n");
}

int failure_code(const dynrw_result* r) {
  if (dynrw_result_failed_cells(r) == 0)
    return kExitOk;
  std::fprintf(stderr, "%zu of %zu cells failed\n", dynrw_result_failed_cells(r),
               dynrw_result_cells(r));
  return kExitFailure;
}

int cmd_simulate(const Options& o) {
  const std::string started = utc_now();
  const dynrw_params m = single_point(o);
  if (o.n_log2 < 1 || o.n_log2 > 40)
    usage_error("--n-log2 must lie in [1, 40]");
  const std::uint64_t n = std::uint64_t{1} << o.n_log2;
  const std::size_t samples = o.samples ? o.samples : 100;
  dynrw_result* raw = nullptr;
  check(dynrw_simulate(&m, n, samples, o.seed, o.threads, o.budget, &raw));
  ResultPtr r(raw);
  std::vector<std::pair<std::string, std::string>> side;
  if (!o.trajectory.empty()) {
    if (o.trajectory_replica >= samples)
      usage_error("--trajectory-replica must be below --samples");
    std::uint64_t seed = 0, stream = 0;
    check(dynrw_replica_identity(o.seed, &m, n, o.trajectory_replica, &seed, &stream));
    dynrw_endpoint end{};
    char* text = nullptr;
    check(dynrw_run_replica(&m, n, seed, stream, o.trajectory_stride, &end, &text));
    side.emplace_back(o.trajectory, text);
    dynrw_string_free(text);
  }
  emit("simulate", o, samples, started, r.get(), dynrw_result_csv(r.get()), side);
  return kExitOk;
}

int cmd_speed(const std::string& command, const Options& o, bool sweep) {
  const std::string started = utc_now();
  if (!sweep)
    single_point(o);
  const std::size_t samples = o.samples ? o.samples : 2000;
  GridPtr g = make_grid(o, 2000);
  std::string previous;
  if (o.resume && !o.out.empty() && std::filesystem::exists(o.out)) {
    previous = read_file(o.out);
    check(dynrw_grid_set_resume(g.get(), previous.c_str(), nullptr));
  }
  dynrw_result* raw = nullptr;
  check(dynrw_sweep_speed(g.get(), &raw));
  ResultPtr r(raw);
  emit(command, o, samples, started, r.get(), dynrw_result_csv(r.get()), {});
  return failure_code(r.get());
}

int cmd_scaling(const std::string& command, const Options& o, bool sweep) {
  const std::string started = utc_now();
  if (!sweep)
    single_point(o);
  const std::size_t samples = o.samples ? o.samples : 1000;
  GridPtr g = make_grid(o, 1000);
  std::string hist_path = o.hist_out;
  if (hist_path.empty() && !o.out.empty())
    hist_path = sibling(o.out, "hist");
  std::string previous, previous_hist;
  if (o.resume && !o.out.empty() && std::filesystem::exists(o.out)) {
    previous = read_file(o.out);
    if (!hist_path.empty() && std::filesystem::exists(hist_path))
      previous_hist = read_file(hist_path);
    check(dynrw_grid_set_resume(g.get(), previous.c_str(), previous_hist.c_str()));
  }
  dynrw_result* raw = nullptr;
  check(dynrw_sweep_scaling(g.get(), &raw));
  ResultPtr r(raw);
  std::vector<std::pair<std::string, std::string>> side;
  if (!hist_path.empty())
    side.emplace_back(hist_path, dynrw_result_detail_csv(r.get()));
  emit(command, o, samples, started, r.get(), dynrw_result_csv(r.get()), side);
  return failure_code(r.get());
}

int cmd_curve(const Options& o) {
  const std::string started = utc_now();
  const std::size_t samples = o.samples ? o.samples : 2000;
  GridPtr g = make_grid(o, 2000);
  dynrw_result* raw = nullptr;
  check(dynrw_curve_diagram(g.get(), &raw));
  ResultPtr r(raw);
  std::string detail_path = o.detail_out;
  if (detail_path.empty() && !o.out.empty())
    detail_path = sibling(o.out, "speed");
  std::vector<std::pair<std::string, std::string>> side;
  if (!detail_path.empty())
    side.emplace_back(detail_path, dynrw_result_detail_csv(r.get()));
  emit("curve-diagram", o, samples, started, r.get(), dynrw_result_csv(r.get()), side);
  return failure_code(r.get());
}

int cmd_oracle(const Options& o) {
  const dynrw_params m = single_point(o);
  double vs = 0, va = 0, s = 0, upper = 0, lower = 0;
  const char* regime = nullptr;
  const char* order = nullptr;
  check(dynrw_static_speed(m.p, m.rho, &vs));
  check(dynrw_averaged_speed(m.p, m.rho, &va));
  check(dynrw_kks_exponent(m.p, m.rho, &s));
  check(dynrw_classify_regime(m.p, m.rho, &regime, &order));
  check(dynrw_leaf_boundaries(m.p, &upper, &lower));
  // Ordered keys keep the JSON and the key=value block in the same order.
  nlohmann::ordered_json j;
  j["p"] = m.p;
  j["rho"] = m.rho;
  j["gamma"] = m.gamma;
  j["static_speed"] = vs;
  j["averaged_speed"] = va;
  j["s"] = std::isfinite(s) ? json(s) : json("inf");
  j["regime"] = regime;
  j["order"] = order;
  j["rho_upper"] = upper;
  j["rho_lower"] = lower;
  if (m.gamma > 0.0) {
    dynrw_reliable rel{};
    check(dynrw_reliable_steps(m.p, m.rho, m.gamma, 0, &rel));
    j["L_star"] = rel.l_star;
    j["log2_nbar"] = std::isfinite(rel.log2_nbar) ? json(rel.log2_nbar) : json("inf");
    j["saturated"] = rel.saturated != 0;
  }
  std::string text;
  for (const auto& [key, value] : j.items()) {
    text += key + "=";
    if (value.is_string())
      text += value.get<std::string>();
    else if (value.is_boolean())
      text += value.get<bool>() ? "1" : "0";
    else if (value.is_number_integer())
      text += std::to_string(value.get<long long>());
    else
      text += fmt(value.get<double>());
    text += "\n";
  }
  text += j.dump() + "\n";
  if (o.out.empty())
    std::fwrite(text.data(), 1, text.size(), stdout);
  else
    write_file(o.out, text);
  return kExitOk;
}

int cmd_reliable(const Options& o) {
  const dynrw_params m = single_point(o);
  dynrw_reliable rel{};
  check(dynrw_reliable_steps(m.p, m.rho, m.gamma, 0, &rel));
  std::string text = "L_star=" + std::to_string(rel.l_star) + " log2_nbar=" + fmt(rel.log2_nbar);
  if (rel.saturated)
    text += " saturated=1";
  text += "\n";
  if (o.out.empty())
    std::fwrite(text.data(), 1, text.size(), stdout);
  else
    write_file(o.out, text);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random walks in static and dynamic random environments"};
  app.name("dynrw");
  app.require_subcommand(1);
  app.set_version_flag("--version", dynrw_version());
  // Flags given twice keep the last value.
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Options o;
  auto* simulate = app.add_subcommand("simulate", "Endpoint dump for one point");
  auto* speed = app.add_subcommand("speed", "Speed estimate for one point");
  auto* scaling = app.add_subcommand("scaling", "Scaling exponent and histograms for one point");
  auto* sweep_speed = app.add_subcommand("sweep-speed", "Speed over a parameter grid");
  auto* sweep_scaling = app.add_subcommand("sweep-scaling", "Scaling exponents over a grid");
  auto* curve = app.add_subcommand("curve-diagram", "m/c/+ labels of p -> v curves");
  auto* oracle = app.add_subcommand("oracle", "Closed-form reference values");
  auto* reliable = app.add_subcommand("reliable-n", "Reliable step count of an SSE point");

  for (auto* sub : {simulate, speed, scaling, sweep_speed, sweep_scaling, curve, oracle, reliable})
    add_common(sub, o);
  for (auto* sub : {simulate, speed, scaling, sweep_speed, sweep_scaling, curve})
    add_run_flags(sub, o);
  for (auto* sub : {scaling, sweep_scaling})
    sub->add_option("--hist-out", o.hist_out, "Histogram CSV (default <out>_hist.csv)");
  for (auto* sub : {speed, scaling, sweep_speed, sweep_scaling})
    sub->add_flag("--resume", o.resume, "Keep completed cells already in --out");
  curve->add_option("--detail-out", o.detail_out, "Speed rows (default <out>_speed.csv)");
  simulate->add_option("--trajectory", o.trajectory, "Trajectory CSV of one replica");
  simulate->add_option("--trajectory-stride", o.trajectory_stride, "Record every k-th jump")
      ->capture_default_str();
  simulate->add_option("--trajectory-replica", o.trajectory_replica, "Replica to trace")
      ->capture_default_str();
  try {
    std::vector<std::string> args;
    try {
      args = expand_config(argc, argv);
    } catch (const Exit& e) {
      std::cerr << "dynrw: " << e.message << "\n";
      return e.code;
    }
    // CLI11 takes the arguments in reverse order.
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (simulate->parsed())
      return cmd_simulate(o);
    if (speed->parsed())
      return cmd_speed("speed", o, false);
    if (scaling->parsed())
      return cmd_scaling("scaling", o, false);
    if (sweep_speed->parsed())
      return cmd_speed("sweep-speed", o, true);
    if (sweep_scaling->parsed())
      return cmd_scaling("sweep-scaling", o, true);
    if (curve->parsed())
      return cmd_curve(o);
    if (oracle->parsed())
      return cmd_oracle(o);
    if (reliable->parsed())
      return cmd_reliable(o);
  } catch (const Exit& e) {
    std::cerr << "dynrw: " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "dynrw: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
