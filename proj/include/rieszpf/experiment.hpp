#pragma once

// JSON-configured experiments behind the command-line tool. Each run writes
// results.csv, summary.json and plotdata/*.csv into the output directory.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "rieszpf/error.hpp"
#include "rieszpf/numeric.hpp"
#include "rieszpf/pmh.hpp"
#include "rieszpf/returns.hpp"
#include "rieszpf/riesz_energy.hpp"
#include "rieszpf/riesz_sampler.hpp"
#include "rieszpf/smc.hpp"
#include "rieszpf/ssm.hpp"

namespace rieszpf {

using json = nlohmann::json;

enum class ExperimentKind { generate_points, filter_lgss, pmh_lgss, pmh_sv, diagnostics };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::generate_points: return "generate-points";
    case ExperimentKind::filter_lgss: return "filter-lgss";
    case ExperimentKind::pmh_lgss: return "pmh-lgss";
    case ExperimentKind::pmh_sv: return "pmh-sv";
    case ExperimentKind::diagnostics: return "diagnostics";
  }
  return "?";
}

inline ExperimentKind parse_experiment(const std::string& s) {
  for (auto k : {ExperimentKind::generate_points, ExperimentKind::filter_lgss, ExperimentKind::pmh_lgss,
                 ExperimentKind::pmh_sv, ExperimentKind::diagnostics})
    if (s == to_string(k)) return k;
  throw Error(ErrorCode::config_error, "unknown experiment '" + s + "'");
}

// ------------------------------------------------------------------ config

/// Read-tracking view of a JSON object: unknown keys are reported by finish().
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    require(j_.is_object(), ErrorCode::config_error, where() + " must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  template <class T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    if (!has(key)) return fallback;
    return convert<T>(j_.at(key), key);
  }

  template <class T>
  std::optional<T> maybe(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return std::nullopt;
    return convert<T>(j_.at(key), key);
  }

  Section child(const std::string& key) {
    used_.insert(key);
    static const json empty = json::object();
    return Section(has(key) ? j_.at(key) : empty, path_ + "." + key);
  }

  void mark(const std::string& key) { used_.insert(key); }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      require(used_.count(k) > 0, ErrorCode::config_error, "unknown key '" + k + "' in " + where());
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  template <class T>
  T convert(const json& v, const std::string& key) const {
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        require(v.is_number_integer() && v.get<long long>() >= 0, ErrorCode::config_error,
                where() + "." + key + " must be a non-negative integer");
      } else if constexpr (std::is_same_v<T, double>) {
        require(v.is_number(), ErrorCode::config_error, where() + "." + key + " must be a number");
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::config_error, where() + "." + key + ": " + e.what());
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

struct TargetSpec {
  std::string family = "normal";  ///< normal | uniform
  double mean = 0.0;
  double sd = 1.0;
  double low = -1.0;
  double high = 1.0;
};

struct FilterSection {
  std::vector<std::size_t> n_values{10, 20, 50, 100, 200, 500, 1000};
  std::size_t n_particles = 100;
  std::size_t n_riesz = 100;
  std::size_t runs = 10;
  ResamplingScheme resampling = ResamplingScheme::multinomial;
  Perturbation perturbation = Perturbation::random_shift;
  double jitter_scale = 0.1;
  bool regenerate_configuration = false;
  double half_width = RieszProposalSet::kDefaultHalfWidth;
  SlotOrder slot_order = SlotOrder::spread;
};

struct ChainSection {
  std::size_t iterations = 5000;
  std::optional<std::size_t> burn_in;
  std::vector<double> step_sizes;
  std::vector<double> theta0;
  std::vector<std::size_t> T_values{10, 100, 500};
  std::size_t max_lag = 50;
  std::string likelihood = "particle";  ///< particle | kalman (LGSS only)
  PriorSpec prior;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::generate_points;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  std::optional<std::string> input_path;

  RieszParams riesz;
  SamplerConfig sampler;
  double half_width = 5.0;
  std::vector<std::size_t> n_values{20, 100, 200};  ///< generate-points sizes
  TargetSpec target;

  LgssParams lgss;
  std::size_t T = 250;
  double x0 = 0.0;
  std::optional<std::uint64_t> data_seed;

  SvParams sv;
  double returns_scale = 100.0;

  FilterSection filter;
  ChainSection chain;

  std::vector<std::string> columns;  ///< diagnostics: columns to analyse (empty = all numeric)

  json raw;
};

namespace detail {

inline PriorComponent parse_prior(const json& j, const std::string& path) {
  Section s(j, path);
  const auto family = s.get<std::string>("family", "normal");
  PriorComponent c;
  if (family == "normal") {
    c = PriorComponent::normal(s.get("mean", 0.0), s.get("sd", 1.0));
  } else if (family == "truncated_normal") {
    c = PriorComponent::truncated_normal(s.get("mean", 0.0), s.get("sd", 1.0), s.get("lower", -kInf),
                                         s.get("upper", kInf));
  } else if (family == "gamma") {
    c = PriorComponent::gamma(s.get("shape", 1.0), s.get("rate", 1.0));
  } else if (family == "uniform") {
    c = PriorComponent::uniform(s.get("lower", 0.0), s.get("upper", 1.0));
  } else {
    throw Error(ErrorCode::config_error, path + ": unknown prior family '" + family + "'");
  }
  s.finish();
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::config_error, path + ": " + e.what());
  }
  return c;
}

inline void defaults_for(ExperimentConfig& c) {
  switch (c.experiment) {
    case ExperimentKind::pmh_lgss:
      c.chain.step_sizes = {0.1};
      c.chain.theta0 = {0.75};
      c.chain.prior.components = {PriorComponent::truncated_normal(0.75, 0.5, -1.0, 1.0)};
      c.filter.n_particles = 100;
      c.filter.n_riesz = 100;
      break;
    case ExperimentKind::pmh_sv:
      c.chain.iterations = 2000;
      c.chain.step_sizes = {1.0, 0.05, 0.03};
      c.chain.theta0 = {0.0, 0.95, 0.2};
      c.chain.prior.components = {PriorComponent::normal(0.0, 1.0),
                                  PriorComponent::truncated_normal(0.95, 0.05, -1.0, 1.0),
                                  PriorComponent::gamma(2.0, 10.0)};
      c.filter.n_particles = 180;
      c.filter.n_riesz = 180;
      break;
    default:
      break;
  }
}

}  // namespace detail

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
};

/// Builds a config from JSON; `subcommand` must agree with an `experiment` key if one is given.
inline ExperimentConfig parse_config(const json& j, const std::string& subcommand, const CliOverrides& cli = {}) {
  ExperimentConfig c;
  c.raw = j;
  Section root(j, "");
  const auto exp = root.get<std::string>("experiment", subcommand);
  require(exp == subcommand, ErrorCode::config_error,
          "config is for '" + exp + "' but subcommand is '" + subcommand + "'");
  c.experiment = parse_experiment(exp);
  detail::defaults_for(c);
  c.seed = root.get<std::uint64_t>("seed", 0);
  c.output_dir = root.get<std::string>("output_dir", "out");
  c.input_path = root.maybe<std::string>("input_path");
  if (cli.seed) c.seed = *cli.seed;
  if (cli.output_dir) c.output_dir = *cli.output_dir;

  {
    auto s = root.child("riesz");
    c.riesz.s = s.get("s", c.riesz.s);
    c.riesz.d = s.get<std::size_t>("d", c.riesz.d);
    c.riesz.alpha = s.get("alpha", c.riesz.alpha);
    c.riesz.beta = s.get("beta", c.riesz.beta);
    c.riesz.eps_dist = s.get("eps_dist", c.riesz.eps_dist);
    s.finish();
  }
  {
    auto s = root.child("sampler");
    c.sampler.candidate_count = s.get("candidate_count", c.sampler.candidate_count);
    c.sampler.refine_iters = s.get("refine_iters", c.sampler.refine_iters);
    c.sampler.max_retries = s.get("max_retries", c.sampler.max_retries);
    c.sampler.grid_resolution = s.get("grid_resolution", c.sampler.grid_resolution);
    const auto rule = s.get<std::string>("kappa_rule", "calibrated");
    if (rule == "calibrated") {
      c.sampler.kappa_rule = KappaRule::calibrated;
    } else if (rule == "negative_log_density") {
      c.sampler.kappa_rule = KappaRule::negative_log_density;
    } else {
      throw Error(ErrorCode::config_error, "sampler.kappa_rule must be calibrated or negative_log_density");
    }
    c.half_width = s.get("half_width", c.half_width);
    c.n_values = s.get("n_values", c.n_values);
    s.finish();
  }
  {
    auto s = root.child("target");
    c.target.family = s.get<std::string>("family", c.target.family);
    c.target.mean = s.get("mean", c.target.mean);
    c.target.sd = s.get("sd", c.target.sd);
    c.target.low = s.get("low", c.target.low);
    c.target.high = s.get("high", c.target.high);
    s.finish();
    require(c.target.family == "normal" || c.target.family == "uniform", ErrorCode::config_error,
            "target.family must be normal or uniform");
  }
  {
    auto s = root.child("lgss");
    c.lgss.phi = s.get("phi", c.lgss.phi);
    c.lgss.sigma_v = s.get("sigma_v", c.lgss.sigma_v);
    c.lgss.sigma_o = s.get("sigma_o", c.lgss.sigma_o);
    c.T = s.get("T", c.T);
    c.x0 = s.get("x0", c.x0);
    c.data_seed = s.maybe<std::uint64_t>("data_seed");
    s.finish();
  }
  {
    auto s = root.child("sv");
    c.sv.mu = s.get("mu", c.sv.mu);
    c.sv.rho = s.get("rho", c.sv.rho);
    c.sv.sigma_v = s.get("sigma_v", c.sv.sigma_v);
    c.sv.tau = s.get("tau", c.sv.tau);
    const auto scale = s.get<std::string>("scale", "variance");
    require(scale == "variance" || scale == "std_dev", ErrorCode::config_error, "sv.scale must be variance or std_dev");
    c.sv.scale = scale == "variance" ? SvScale::variance : SvScale::std_dev;
    c.returns_scale = s.get("returns_scale", c.returns_scale);
    s.finish();
  }
  {
    auto s = root.child("filter");
    auto& f = c.filter;
    f.n_values = s.get("n_values", f.n_values);
    f.n_particles = s.get("n_particles", f.n_particles);
    f.n_riesz = s.get("n_riesz", f.n_riesz);
    f.runs = s.get("runs", f.runs);
    const auto res = s.get<std::string>("resampling", "multinomial");
    require(res == "multinomial" || res == "systematic", ErrorCode::config_error,
            "filter.resampling must be multinomial or systematic");
    f.resampling = res == "multinomial" ? ResamplingScheme::multinomial : ResamplingScheme::systematic;
    const auto pert = s.get<std::string>("perturbation", "random_shift");
    require(pert == "random_shift" || pert == "gaussian_jitter", ErrorCode::config_error,
            "filter.perturbation must be random_shift or gaussian_jitter");
    f.perturbation = pert == "random_shift" ? Perturbation::random_shift : Perturbation::gaussian_jitter;
    f.jitter_scale = s.get("jitter_scale", f.jitter_scale);
    f.regenerate_configuration = s.get("regenerate_configuration", f.regenerate_configuration);
    f.half_width = s.get("half_width", f.half_width);
    const auto order = s.get<std::string>("slot_order", "spread");
    require(order == "spread" || order == "generation", ErrorCode::config_error,
            "filter.slot_order must be spread or generation");
    f.slot_order = order == "spread" ? SlotOrder::spread : SlotOrder::generation;
    s.finish();
  }
  {
    auto s = root.child("chain");
    auto& ch = c.chain;
    ch.iterations = s.get("iterations", ch.iterations);
    ch.burn_in = s.maybe<std::size_t>("burn_in");
    ch.step_sizes = s.get("step_sizes", ch.step_sizes);
    ch.theta0 = s.get("theta0", ch.theta0);
    ch.T_values = s.get("T_values", ch.T_values);
    ch.max_lag = s.get("max_lag", ch.max_lag);
    ch.likelihood = s.get<std::string>("likelihood", ch.likelihood);
    require(ch.likelihood == "particle" || ch.likelihood == "kalman", ErrorCode::config_error,
            "chain.likelihood must be particle or kalman");
    s.mark("priors");
    if (s.has("priors")) {
      const auto& arr = s.raw("priors");
      require(arr.is_array(), ErrorCode::config_error, "chain.priors must be an array");
      ch.prior.components.clear();
      for (std::size_t k = 0; k < arr.size(); ++k)
        ch.prior.components.push_back(detail::parse_prior(arr[k], "chain.priors[" + std::to_string(k) + "]"));
    }
    s.finish();
  }
  c.columns = root.get("columns", c.columns);
  root.finish();

  // Cross-section validation, reported as config errors.
  try {
    c.riesz.validate();
    SamplerConfig probe = c.sampler;
    probe.n_points = 2;
    probe.validate();
    if (c.experiment == ExperimentKind::filter_lgss || c.experiment == ExperimentKind::pmh_lgss) c.lgss.validate();
    if (c.experiment == ExperimentKind::pmh_sv) c.sv.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::config_error, e.what());
  }
  require(c.half_width > 0.0, ErrorCode::config_error, "sampler.half_width must be > 0");
  require(c.filter.half_width > 0.0, ErrorCode::config_error, "filter.half_width must be > 0");
  require(c.filter.n_riesz >= 2, ErrorCode::config_error, "filter.n_riesz must be >= 2");
  require(c.filter.runs >= 1, ErrorCode::config_error, "filter.runs must be >= 1");
  require(c.filter.n_particles >= 1, ErrorCode::config_error, "filter.n_particles must be >= 1");
  for (auto n : c.filter.n_values) require(n >= 1, ErrorCode::config_error, "filter.n_values entries must be >= 1");
  for (auto n : c.n_values) require(n >= 2, ErrorCode::config_error, "sampler.n_values entries must be >= 2");
  require(c.T >= 1, ErrorCode::config_error, "lgss.T must be >= 1");
  require(c.returns_scale > 0.0, ErrorCode::config_error, "sv.returns_scale must be > 0");
  if (c.experiment == ExperimentKind::pmh_lgss || c.experiment == ExperimentKind::pmh_sv) {
    const auto& ch = c.chain;
    require(ch.iterations >= 1, ErrorCode::config_error, "chain.iterations must be >= 1");
    require(!ch.step_sizes.empty(), ErrorCode::config_error, "chain.step_sizes must be non-empty");
    require(ch.prior.components.size() == ch.theta0.size(), ErrorCode::config_error,
            "chain.priors and chain.theta0 differ in length");
    for (auto T : ch.T_values) require(T >= 1, ErrorCode::config_error, "chain.T_values entries must be >= 1");
    if (ch.burn_in) require(*ch.burn_in < ch.iterations, ErrorCode::burn_in_too_large, "burn_in must be < iterations");
  }
  if (c.experiment == ExperimentKind::pmh_lgss) {
    require(c.chain.theta0.size() == 1, ErrorCode::config_error, "pmh-lgss estimates a single parameter (phi)");
    require(!c.chain.T_values.empty(), ErrorCode::config_error, "chain.T_values must be non-empty");
  }
  if (c.experiment == ExperimentKind::pmh_sv) {
    require(c.chain.theta0.size() == 3, ErrorCode::config_error, "pmh-sv estimates (mu, phi, sigma_v)");
    require(c.chain.step_sizes.size() == 3, ErrorCode::config_error, "pmh-sv needs three step sizes");
    require(c.input_path.has_value(), ErrorCode::config_error, "pmh-sv requires input_path");
  }
  if (c.experiment == ExperimentKind::diagnostics)
    require(c.input_path.has_value(), ErrorCode::config_error, "diagnostics requires input_path");
  return c;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::config_error, "cannot open config '" + path + "'");
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::config_error, "config '" + path + "' is not valid JSON: " + e.what());
  }
}

// ------------------------------------------------------------------ output

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// CSV writer emitting doubles with 17 significant digits.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path, std::ios::binary) {
    require(static_cast<bool>(out_), ErrorCode::io_error, "cannot write '" + path.string() + "'");
    write_row(header);
  }

  template <class... Cells>
  void row(const Cells&... cells) {
    std::vector<std::string> v{cell(cells)...};
    write_row(v);
  }

 private:
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }
  static std::string cell(bool v) { return v ? "1" : "0"; }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I v) {
    return std::to_string(v);
  }

  void write_row(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) out_ << (k ? "," : "") << cells[k];
    out_ << '\n';
  }

  std::ofstream out_;
};

inline std::string format_step(double h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", h);
  return buf;
}

/// Wide numeric CSV: header of names, one numeric row per sample.
struct NumericTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
};

inline NumericTable load_numeric_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::io_error, "cannot open '" + path + "'");
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::empty_file, "'" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  NumericTable t;
  t.names = detail::split_csv_line(line);
  t.columns.resize(t.names.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv_line(line);
    require(f.size() == t.names.size(), ErrorCode::missing_column, "row " + std::to_string(row) + " has wrong width");
    for (std::size_t k = 0; k < f.size(); ++k) {
      double v = std::nan("");
      try {
        std::size_t used = 0;
        v = std::stod(f[k], &used);
        if (used != f[k].size()) v = std::nan("");
      } catch (const std::exception&) {
      }
      t.columns[k].push_back(v);
    }
  }
  require(!t.columns.empty() && !t.columns[0].empty(), ErrorCode::empty_file, "'" + path + "' has no data rows");
  return t;
}

// ------------------------------------------------------------------ experiments

namespace detail {

enum SeedTag : std::uint64_t { kDataTag = 1, kRieszTag = 2, kFilterTag = 3, kChainTag = 4, kPointsTag = 5 };

struct RunContext {
  const ExperimentConfig& cfg;
  std::filesystem::path out;
  std::filesystem::path plot;
  json results = json::object();
  std::vector<std::string> plot_files;

  std::filesystem::path plot_file(const std::string& name) {
    plot_files.push_back("plotdata/" + name);
    return plot / name;
  }
};

inline std::size_t burn_in_for(const ChainSection& ch) {
  return ch.burn_in.value_or(PmhConfig::default_burn_in(ch.iterations));
}

inline std::shared_ptr<const RieszProposalSet> build_proposal_set(const ExperimentConfig& cfg) {
  SamplerConfig sc = cfg.sampler;
  sc.seed = derive_seed(cfg.seed, {kRieszTag, cfg.filter.n_riesz});
  return std::make_shared<const RieszProposalSet>(RieszProposalSet::standard_normal(
      cfg.filter.n_riesz, cfg.riesz, sc, cfg.filter.half_width, cfg.filter.perturbation, cfg.filter.jitter_scale,
      cfg.filter.slot_order));
}

inline FilterOptions filter_options(const ExperimentConfig& cfg, std::size_t n) {
  FilterOptions o;
  o.n_particles = n;
  o.resampling = cfg.filter.resampling;
  o.regenerate_configuration = cfg.filter.regenerate_configuration;
  o.riesz = cfg.riesz;
  o.sampler = cfg.sampler;
  o.half_width = cfg.filter.half_width;
  return o;
}

inline json vec_json(const std::vector<double>& v) { return json(v); }

inline void run_generate_points(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  DensityOracle oracle;
  std::function<double(double)> cdf;
  std::function<double(double)> quantile;
  if (cfg.target.family == "normal") {
    const double m = cfg.target.mean;
    const double sd = cfg.target.sd;
    require(sd > 0.0, ErrorCode::config_error, "target.sd must be > 0");
    oracle = {[m, sd](std::span<const double> x) { return normal_logpdf(x[0], m, sd * sd); },
              Box::interval(m - cfg.half_width * sd, m + cfg.half_width * sd)};
    cdf = [m, sd](double x) { return normal_cdf((x - m) / sd); };
    quantile = [m, sd](double p) { return m + sd * normal_quantile(p); };
  } else {
    const double lo = cfg.target.low;
    const double hi = cfg.target.high;
    require(lo < hi, ErrorCode::config_error, "target.low must be < target.high");
    oracle = {[lo, hi](std::span<const double>) { return -std::log(hi - lo); }, Box::interval(lo, hi)};
    cdf = [lo, hi](double x) { return std::clamp((x - lo) / (hi - lo), 0.0, 1.0); };
    quantile = [lo, hi](double p) { return lo + p * (hi - lo); };
  }
  const auto reference = uniform_grid(oracle.box, 2001);

  CsvWriter results(ctx.out / "results.csv", {"n", "index", "x", "kappa"});
  CsvWriter qq(ctx.plot_file("qq.csv"), {"n", "theoretical", "empirical"});
  CsvWriter trace(ctx.plot_file("energy_trace.csv"), {"n", "points", "log_energy"});
  json per_n = json::array();
  for (std::size_t n : cfg.n_values) {
    SamplerConfig sc = cfg.sampler;
    sc.n_points = n;
    sc.seed = derive_seed(cfg.seed, {kPointsTag, n});
    const auto report = generate_configuration(oracle, cfg.riesz, sc);
    const auto& c = report.configuration;
    for (std::size_t i = 0; i < c.size(); ++i) results.row(n, i, c.point(i)[0], c.kappa(i));
    std::vector<double> xs(c.coordinates());
    std::sort(xs.begin(), xs.end());
    for (std::size_t i = 0; i < n; ++i)
      qq.row(n, quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n)), xs[i]);
    for (std::size_t k = 0; k < report.energy_trace.size(); ++k) trace.row(n, k + 2, report.energy_trace[k]);
    per_n.push_back({{"n", n},
                     {"ks_statistic", uniformity_statistic(c, cdf)},
                     {"min_separation", report.final_min_separation},
                     {"covering_radius", covering_radius(c, reference)},
                     {"log_energy", config_energy(c, cfg.riesz)},
                     {"rejected_candidates", report.rejected_candidates}});
  }
  ctx.results["configurations"] = per_n;
}

inline Trajectory simulate_lgss_data(const ExperimentConfig& cfg, std::size_t T) {
  Rng data_rng(cfg.data_seed.value_or(derive_seed(cfg.seed, {kDataTag})));
  return lgss_simulate(cfg.lgss, T, cfg.x0, data_rng);
}

inline void run_filter_lgss(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto data = simulate_lgss_data(cfg, cfg.T);
  const auto kalman = kalman_filter(cfg.lgss, data.observations, cfg.x0, 0.0);
  const auto set = build_proposal_set(cfg);
  const LgssModel model{cfg.lgss, cfg.x0, 0.0};

  CsvWriter results(ctx.out / "results.csv", {"n", "log_bias", "log_mse"});
  CsvWriter ess_csv(ctx.plot_file("ess.csv"), {"n", "t", "ess"});
  json per_n = json::array();
  const std::size_t n_show = *std::max_element(cfg.filter.n_values.begin(), cfg.filter.n_values.end());
  FilterOutput shown;
  for (std::size_t n : cfg.filter.n_values) {
    std::vector<std::vector<double>> runs;
    std::vector<double> lls;
    double mean_ess = 0.0;
    for (std::size_t r = 0; r < cfg.filter.runs; ++r) {
      Rng rng(derive_seed(cfg.seed, {kFilterTag, n, r}));
      auto opts = filter_options(cfg, n);
      opts.record_intervals = n == n_show && r == 0;
      auto out = run_filter(model, data.observations, *set, opts, rng);
      if (r == 0)
        for (std::size_t t = 0; t < out.ess_trace.size(); ++t) ess_csv.row(n, t + 1, out.ess_trace[t]);
      for (double e : out.ess_trace) mean_ess += e / static_cast<double>(out.ess_trace.size() * cfg.filter.runs);
      lls.push_back(out.log_likelihood);
      runs.push_back(out.filtered_means);
      if (opts.record_intervals) shown = std::move(out);
    }
    const auto bm = log_bias_mse(runs, kalman.filtered_means);
    results.row(n, bm.log_bias, bm.log_mse);
    double m = 0.0;
    for (double v : lls) m += v / static_cast<double>(lls.size());
    double var = 0.0;
    for (double v : lls) var += (v - m) * (v - m) / static_cast<double>(lls.size());
    per_n.push_back({{"n", n},
                     {"log_bias", bm.log_bias},
                     {"log_mse", bm.log_mse},
                     {"mean_log_likelihood", m},
                     {"var_log_likelihood", var},
                     {"mean_ess", mean_ess}});
  }
  CsvWriter fm(ctx.plot_file("filtered_means.csv"),
               {"t", "observation", "state", "kalman_mean", "filtered_mean", "lower95", "upper95"});
  for (std::size_t t = 0; t < cfg.T; ++t)
    fm.row(t + 1, data.observations[t], data.states[t + 1], kalman.filtered_means[t], shown.filtered_means[t],
           shown.lower95[t], shown.upper95[t]);
  ctx.results["kalman_log_likelihood"] = kalman.log_likelihood;
  ctx.results["T"] = cfg.T;
  ctx.results["n_riesz"] = cfg.filter.n_riesz;
  ctx.results["runs"] = cfg.filter.runs;
  ctx.results["per_n"] = per_n;
}

inline PmhConfig pmh_config(const ExperimentConfig& cfg, std::vector<double> steps, std::uint64_t seed) {
  PmhConfig pc;
  pc.iterations = cfg.chain.iterations;
  pc.burn_in = burn_in_for(cfg.chain);
  pc.step_sizes = std::move(steps);
  pc.n_particles = cfg.filter.n_particles;
  pc.n_riesz = cfg.filter.n_riesz;
  pc.seed = seed;
  return pc;
}

inline void write_acf(CsvWriter& out, const std::vector<double>& series, std::size_t max_lag,
                      const std::string& label_a, const std::string& label_b) {
  const auto a = acf(series, std::min(max_lag, series.size() - 1));
  for (std::size_t k = 0; k < a.size(); ++k) out.row(label_a, label_b, k, a[k]);
}

inline void run_pmh_lgss(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const std::size_t T_max = *std::max_element(cfg.chain.T_values.begin(), cfg.chain.T_values.end());
  const auto data = simulate_lgss_data(cfg, T_max);
  const auto set = build_proposal_set(cfg);
  FilterSettings fs{cfg.filter.n_particles, cfg.filter.resampling};
  const std::size_t burn = burn_in_for(cfg.chain);

  CsvWriter results(ctx.out / "results.csv",
                    {"T", "step_size", "posterior_mean", "posterior_variance", "acceptance_rate"});
  CsvWriter acf_csv(ctx.plot_file("acf.csv"), {"T", "step_size", "lag", "acf"});
  CsvWriter trace(ctx.plot_file("trace.csv"), {"T", "step_size", "iteration", "phi", "accepted", "log_lik"});
  json cells = json::array();
  for (std::size_t T : cfg.chain.T_values) {
    std::vector<double> obs(data.observations.begin(), data.observations.begin() + static_cast<std::ptrdiff_t>(T));
    for (std::size_t hi = 0; hi < cfg.chain.step_sizes.size(); ++hi) {
      const double h = cfg.chain.step_sizes[hi];
      const auto pc = pmh_config(cfg, {h}, derive_seed(cfg.seed, {kChainTag, T, hi}));
      const auto lik = cfg.chain.likelihood == "kalman" ? lgss_phi_exact_likelihood(obs, cfg.lgss)
                                                        : lgss_phi_likelihood(obs, cfg.lgss, set, fs);
      const auto chain = pmh_run(lik, cfg.chain.prior, cfg.chain.theta0, pc);
      const auto post = posterior_summary(chain, burn);
      results.row(T, h, post.mean[0], post.variance[0], chain.acceptance_rate);
      const auto phi = chain_coordinate(chain, 0);
      for (std::size_t i = 0; i < phi.size(); ++i)
        trace.row(T, h, i, phi[i], static_cast<bool>(chain.accepted[i]), chain.log_lik_trace[i]);
      const std::vector<double> kept(phi.begin() + static_cast<std::ptrdiff_t>(burn), phi.end());
      write_acf(acf_csv, kept, cfg.chain.max_lag, std::to_string(T), format_step(h));
      cells.push_back({{"T", T},
                       {"step_size", h},
                       {"posterior_mean", post.mean},
                       {"posterior_variance", post.variance},
                       {"acceptance_rate", chain.acceptance_rate}});
    }
  }
  ctx.results["parameters"] = {"phi"};
  ctx.results["burn_in"] = burn;
  ctx.results["iterations"] = cfg.chain.iterations;
  ctx.results["chains"] = cells;
}

inline void run_pmh_sv(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto series = load_prices_csv(*cfg.input_path);
  require(series.log_returns.size() >= 2, ErrorCode::series_too_short, "need at least two returns");
  std::vector<double> obs(series.log_returns);
  for (auto& y : obs) y *= cfg.returns_scale;
  const auto set = build_proposal_set(cfg);
  FilterSettings fs{cfg.filter.n_particles, cfg.filter.resampling};
  const std::size_t burn = burn_in_for(cfg.chain);

  const auto pc = pmh_config(cfg, cfg.chain.step_sizes, derive_seed(cfg.seed, {kChainTag}));
  const auto chain = pmh_run(sv_likelihood(obs, cfg.sv, set, fs), cfg.chain.prior, cfg.chain.theta0, pc);
  const auto post = posterior_summary(chain, burn);
  const std::vector<std::string> names{"mu", "phi", "sigma_v"};

  CsvWriter results(ctx.out / "results.csv", {"parameter", "posterior_mean", "posterior_variance"});
  for (std::size_t k = 0; k < 3; ++k) results.row(names[k], post.mean[k], post.variance[k]);

  CsvWriter trace(ctx.plot_file("trace.csv"), {"iteration", "mu", "phi", "sigma_v", "accepted", "log_lik"});
  for (std::size_t i = 0; i < chain.samples.size(); ++i) {
    const auto& s = chain.samples[i];
    trace.row(i, s[0], s[1], s[2], static_cast<bool>(chain.accepted[i]), chain.log_lik_trace[i]);
  }
  CsvWriter acf_csv(ctx.plot_file("acf.csv"), {"parameter", "series", "lag", "acf"});
  for (std::size_t k = 0; k < 3; ++k) {
    const auto col = chain_coordinate(chain, k);
    write_acf(acf_csv, std::vector<double>(col.begin() + static_cast<std::ptrdiff_t>(burn), col.end()),
              cfg.chain.max_lag, names[k], "post_burn_in");
  }

  SvModel model{cfg.sv};
  model.params.mu = post.mean[0];
  model.params.rho = post.mean[1];
  model.params.sigma_v = post.mean[2];
  auto opts = filter_options(cfg, cfg.filter.n_particles);
  opts.record_intervals = true;
  Rng rng(derive_seed(cfg.seed, {kFilterTag}));
  const auto filt = run_filter(model, obs, *set, opts, rng);
  CsvWriter vol(ctx.plot_file("filtered_volatility.csv"),
                {"t", "date", "observation", "filtered_mean", "lower95", "upper95"});
  for (std::size_t t = 0; t < obs.size(); ++t)
    vol.row(t + 1, series.dates[t], obs[t], filt.filtered_means[t], filt.lower95[t], filt.upper95[t]);

  json posterior = json::object();
  for (std::size_t k = 0; k < 3; ++k)
    posterior[names[k]] = {{"mean", post.mean[k]}, {"variance", post.variance[k]}};
  ctx.results["parameters"] = names;
  ctx.results["posterior"] = posterior;
  ctx.results["acceptance_rate"] = chain.acceptance_rate;
  ctx.results["burn_in"] = burn;
  ctx.results["iterations"] = cfg.chain.iterations;
  ctx.results["n_returns"] = obs.size();
  ctx.results["returns_scale"] = cfg.returns_scale;
  ctx.results["filtered_log_likelihood"] = filt.log_likelihood;
}

inline void run_diagnostics(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto table = load_numeric_csv(*cfg.input_path);
  std::vector<std::size_t> pick;
  if (cfg.columns.empty()) {
    for (std::size_t k = 0; k < table.names.size(); ++k) {
      const auto& col = table.columns[k];
      const bool numeric = std::all_of(col.begin(), col.end(), [](double v) { return std::isfinite(v); });
      if (numeric && table.names[k] != "iteration" && table.names[k] != "accepted") pick.push_back(k);
    }
  } else {
    for (const auto& name : cfg.columns) {
      const auto it = std::find(table.names.begin(), table.names.end(), name);
      require(it != table.names.end(), ErrorCode::missing_column, "no column '" + name + "' in input");
      pick.push_back(static_cast<std::size_t>(it - table.names.begin()));
    }
  }
  require(!pick.empty(), ErrorCode::missing_column, "input has no numeric columns to analyse");
  const std::size_t rows = table.columns[0].size();
  const std::size_t burn = cfg.chain.burn_in.value_or(rows / 4);
  require(burn < rows, ErrorCode::burn_in_too_large, "burn_in must be < number of rows");

  CsvWriter results(ctx.out / "results.csv", {"column", "mean", "variance", "acf_lag1", "n_samples"});
  CsvWriter acf_csv(ctx.plot_file("acf.csv"), {"column", "series", "lag", "acf"});
  json per = json::array();
  for (auto k : pick) {
    ChainOutput chain;
    for (double v : table.columns[k]) {
      require(std::isfinite(v), ErrorCode::io_error, "column '" + table.names[k] + "' has non-numeric values");
      chain.samples.push_back({v});
    }
    const auto post = posterior_summary(chain, burn);
    const std::vector<double> kept(table.columns[k].begin() + static_cast<std::ptrdiff_t>(burn),
                                   table.columns[k].end());
    const std::size_t lag = std::min(cfg.chain.max_lag, kept.size() - 1);
    const auto a = acf(kept, lag);
    results.row(table.names[k], post.mean[0], post.variance[0], a.size() > 1 ? a[1] : 1.0, kept.size());
    for (std::size_t l = 0; l < a.size(); ++l) acf_csv.row(table.names[k], "post_burn_in", l, a[l]);
    per.push_back({{"column", table.names[k]},
                   {"mean", post.mean[0]},
                   {"variance", post.variance[0]},
                   {"acf", a}});
  }
  ctx.results["burn_in"] = burn;
  ctx.results["columns"] = per;
}

}  // namespace detail

/// Runs the experiment; returns the process exit status. Errors are written to
/// `err` as one JSON object.
inline int run_experiment(const ExperimentConfig& cfg, std::ostream& err = std::cerr) {
  const auto start = std::chrono::steady_clock::now();
  try {
    const std::filesystem::path out(cfg.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(out / "plotdata", ec);
    require(!ec, ErrorCode::io_error, "cannot create '" + (out / "plotdata").string() + "': " + ec.message());
    if (cfg.input_path)
      require(std::filesystem::exists(*cfg.input_path), ErrorCode::io_error,
              "input file '" + *cfg.input_path + "' does not exist");

    detail::RunContext ctx{cfg, out, out / "plotdata", json::object(), {}};
    switch (cfg.experiment) {
      case ExperimentKind::generate_points: detail::run_generate_points(ctx); break;
      case ExperimentKind::filter_lgss: detail::run_filter_lgss(ctx); break;
      case ExperimentKind::pmh_lgss: detail::run_pmh_lgss(ctx); break;
      case ExperimentKind::pmh_sv: detail::run_pmh_sv(ctx); break;
      case ExperimentKind::diagnostics: detail::run_diagnostics(ctx); break;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json summary{{"experiment", to_string(cfg.experiment)},
                 {"seed", cfg.seed},
                 {"runtime_seconds", seconds},
                 {"outputs", {{"results", "results.csv"}, {"plotdata", ctx.plot_files}}},
                 {"config", cfg.raw},
                 {"results", ctx.results}};
    std::ofstream js(out / "summary.json");
    require(static_cast<bool>(js), ErrorCode::io_error, "cannot write summary.json");
    js << summary.dump(2) << '\n';
    return 0;
  } catch (const Error& e) {
    err << json{{"error", to_string(e.code())}, {"message", e.what()}, {"exit_code", exit_code(e.code())}}.dump()
        << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << json{{"error", "InternalError"}, {"message", e.what()}, {"exit_code", 4}}.dump() << '\n';
    return 4;
  }
}

}  // namespace rieszpf
