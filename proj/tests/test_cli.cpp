#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rieszpf/experiment.hpp"
#include "rieszpf/returns.hpp"

using namespace rieszpf;
namespace fs = std::filesystem;

namespace {

const std::string kSource = RIESZPF_SOURCE_DIR;
const std::string kCli = RIESZPF_CLI;

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("rieszpf_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

int run_cli(const std::string& args, const fs::path& stderr_file) {
  const std::string cmd = "'" + kCli + "' " + args + " >/dev/null 2>'" + stderr_file.string() + "'";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

ErrorCode parse_error(const std::string& csv) {
  std::istringstream in(csv);
  try {
    parse_prices_csv(in);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error for:\n" << csv;
  return ErrorCode::config_error;
}

ErrorCode config_error(const std::string& text, const std::string& sub) {
  try {
    parse_config(json::parse(text), sub);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error for " << text;
  return ErrorCode::invalid_parameter;
}

}  // namespace

TEST(LoadPricesCsv, FlatAndClosedForm) {
  std::istringstream flat("date,close\n2020-01-01,100\n2020-01-02,100\n");
  const auto a = parse_prices_csv(flat);
  ASSERT_EQ(a.log_returns.size(), 1u);
  EXPECT_EQ(a.log_returns[0], 0.0);
  EXPECT_EQ(a.dates[0], "2020-01-02");
  std::istringstream up("Date,Open,Close\n2020-01-01,1,100\n2020-01-02,1,110\n");
  const auto b = parse_prices_csv(up);
  EXPECT_NEAR(b.log_returns[0], 0.09531017980432486, 1e-15);
}

TEST(LoadPricesCsv, BundledSampleTelescopes) {
  const auto r = load_prices_csv(kSource + "/data/omxs30_sample.csv");
  ASSERT_EQ(r.closes.size(), 252u);
  ASSERT_EQ(r.log_returns.size(), 251u);
  EXPECT_EQ(r.dates.size(), r.log_returns.size());
  double sum = 0.0;
  for (double v : r.log_returns) sum += v;
  EXPECT_NEAR(sum, std::log(r.closes.back() / r.closes.front()), 1e-12);
}

TEST(LoadPricesCsv, CrlfAndBom) {
  std::istringstream in("\xEF\xBB\xBF" "date,close\r\n2020-01-01,100\r\n2020-01-02,110\r\n\r\n");
  const auto r = parse_prices_csv(in);
  ASSERT_EQ(r.log_returns.size(), 1u);
  EXPECT_NEAR(r.log_returns[0], std::log(1.1), 1e-15);
}

TEST(LoadPricesCsv, Errors) {
  EXPECT_EQ(parse_error(""), ErrorCode::empty_file);
  EXPECT_EQ(parse_error("date,close\n"), ErrorCode::empty_file);
  EXPECT_EQ(parse_error("date,price\n2020-01-01,1\n"), ErrorCode::missing_column);
  EXPECT_EQ(parse_error("day,close\n2020-01-01,1\n"), ErrorCode::missing_column);
  EXPECT_EQ(parse_error("date,close\n2020-01-01,1\n2020-01-02,0\n"), ErrorCode::non_positive_price);
  EXPECT_EQ(parse_error("date,close\n2020-01-01,abc\n"), ErrorCode::io_error);
  std::istringstream neg("date,close\n2020-01-01,1\n2020-01-02,2\n2020-01-03,-4\n");
  try {
    parse_prices_csv(neg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("row 4"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_prices_csv(kSource + "/data/does_not_exist.csv"), Error);
}

TEST(LoadPricesCsv, ReserializationRoundTrips) {
  const auto r = load_prices_csv(kSource + "/data/omxs30_sample.csv");
  std::ostringstream out;
  write_returns_csv(out, r);
  const auto rows = lines(out.str());
  ASSERT_EQ(rows.size(), r.log_returns.size() + 1);
  EXPECT_EQ(rows[0], "date,log_return");
  for (std::size_t t = 0; t < r.log_returns.size(); ++t) {
    const auto comma = rows[t + 1].find(',');
    EXPECT_EQ(rows[t + 1].substr(0, comma), r.dates[t]);
    EXPECT_NEAR(std::stod(rows[t + 1].substr(comma + 1)), r.log_returns[t], 1e-15);
  }
}

TEST(ParseConfig, DefaultsAndOverrides) {
  const auto c = parse_config(json::parse(R"({"seed": 5, "output_dir": "a"})"), "filter-lgss", {7, "b"});
  EXPECT_EQ(c.experiment, ExperimentKind::filter_lgss);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.output_dir, "b");
  EXPECT_DOUBLE_EQ(c.lgss.phi, 0.75);
  EXPECT_DOUBLE_EQ(c.lgss.sigma_v, 1.0);
  EXPECT_DOUBLE_EQ(c.lgss.sigma_o, 0.1);
  EXPECT_EQ(c.T, 250u);

  const auto sv = parse_config(json::parse(R"({"input_path": "x.csv"})"), "pmh-sv");
  EXPECT_EQ(sv.filter.n_riesz, 180u);
  EXPECT_EQ(sv.chain.theta0, (std::vector<double>{0.0, 0.95, 0.2}));
  EXPECT_EQ(sv.chain.step_sizes, (std::vector<double>{1.0, 0.05, 0.03}));

  const auto lg = parse_config(json::parse(R"({"chain": {"iterations": 100, "burn_in": 10}})"), "pmh-lgss");
  EXPECT_EQ(lg.chain.theta0, std::vector<double>{0.75});
  EXPECT_EQ(lg.chain.burn_in.value(), 10u);
}

TEST(ParseConfig, Errors) {
  EXPECT_EQ(config_error(R"({"bogus": 1})", "filter-lgss"), ErrorCode::config_error);
  EXPECT_EQ(config_error(R"({"filter": {"n_particle": 3}})", "filter-lgss"), ErrorCode::config_error);
  EXPECT_EQ(config_error(R"({"experiment": "pmh-sv"})", "filter-lgss"), ErrorCode::config_error);
  EXPECT_EQ(config_error(R"({"lgss": {"phi": 1.5}})", "filter-lgss"), ErrorCode::config_error);
  EXPECT_EQ(config_error(R"({"lgss": {"T": "long"}})", "filter-lgss"), ErrorCode::config_error);
  EXPECT_EQ(config_error(R"({"filter": {"resampling": "stratified"}})", "filter-lgss"), ErrorCode::config_error);
  EXPECT_EQ(config_error(R"({})", "pmh-sv"), ErrorCode::config_error);
  EXPECT_EQ(config_error(R"({"chain": {"iterations": 10, "burn_in": 10}})", "pmh-lgss"), ErrorCode::burn_in_too_large);
  EXPECT_EQ(config_error(R"({"riesz": {"s": 0.5}})", "generate-points"), ErrorCode::config_error);
  EXPECT_THROW(parse_experiment("nope"), Error);
}

TEST(RunExperiment, GeneratePointsWritesQqPairs) {
  const auto dir = scratch("points");
  write_file(dir / "cfg.json", R"({"seed": 3, "sampler": {"n_values": [200]}})");
  ASSERT_EQ(run_cli("generate-points --config '" + (dir / "cfg.json").string() + "' --output '" +
                        (dir / "out").string() + "'",
                    dir / "err.txt"),
            0)
      << slurp(dir / "err.txt");
  const auto qq = lines(slurp(dir / "out/plotdata/qq.csv"));
  ASSERT_EQ(qq.size(), 201u);
  EXPECT_EQ(qq[0], "n,theoretical,empirical");
  const auto results = lines(slurp(dir / "out/results.csv"));
  EXPECT_EQ(results.size(), 201u);
  const auto summary = json::parse(slurp(dir / "out/summary.json"));
  EXPECT_EQ(summary["experiment"], "generate-points");
  EXPECT_EQ(summary["seed"], 3);
}

TEST(RunExperiment, FilterLgssSweepAndDeterminism) {
  const auto dir = scratch("filter");
  write_file(dir / "cfg.json", R"({
    "seed": 11,
    "lgss": {"T": 40},
    "filter": {"n_values": [10, 20, 50, 100, 200, 500, 1000], "runs": 2, "n_riesz": 50}
  })");
  const std::string base = "filter-lgss --config '" + (dir / "cfg.json").string() + "' --output ";
  ASSERT_EQ(run_cli(base + "'" + (dir / "a").string() + "'", dir / "err.txt"), 0) << slurp(dir / "err.txt");
  ASSERT_EQ(run_cli(base + "'" + (dir / "b").string() + "'", dir / "err.txt"), 0) << slurp(dir / "err.txt");
  const auto a = slurp(dir / "a/results.csv");
  EXPECT_EQ(a, slurp(dir / "b/results.csv"));
  const auto rows = lines(a);
  ASSERT_EQ(rows.size(), 8u);
  EXPECT_EQ(rows[0], "n,log_bias,log_mse");
  EXPECT_EQ(rows[1].substr(0, 3), "10,");

  ASSERT_EQ(run_cli(base + "'" + (dir / "c").string() + "' --seed 12", dir / "err.txt"), 0);
  EXPECT_NE(a, slurp(dir / "c/results.csv"));
}

TEST(RunExperiment, ExitCodes) {
  const auto dir = scratch("exit");
  write_file(dir / "bad_key.json", R"({"filtre": {}})");
  EXPECT_EQ(run_cli("filter-lgss --config '" + (dir / "bad_key.json").string() + "'", dir / "err.txt"), 2);
  const auto err = json::parse(slurp(dir / "err.txt"));
  EXPECT_EQ(err["error"], "ConfigError");
  EXPECT_EQ(err["exit_code"], 2);

  EXPECT_EQ(run_cli("filter-lgss --config '" + (dir / "missing.json").string() + "'", dir / "err.txt"), 2);
  EXPECT_EQ(run_cli("no-such-command", dir / "err.txt"), 2);
  EXPECT_EQ(run_cli("filter-lgss", dir / "err.txt"), 2);

  write_file(dir / "prices.csv", "date,close\n2020-01-01,10\n2020-01-02,0\n");
  write_file(dir / "sv.json", R"({"input_path": ")" + (dir / "prices.csv").string() + R"(",
    "chain": {"iterations": 5}, "filter": {"n_particles": 10, "n_riesz": 10}})");
  EXPECT_EQ(run_cli("pmh-sv --config '" + (dir / "sv.json").string() + "' --output '" + (dir / "o").string() + "'",
                    dir / "err.txt"),
            3);
  EXPECT_EQ(json::parse(slurp(dir / "err.txt"))["error"], "NonPositivePrice");

  write_file(dir / "nofile.json", R"({"input_path": ")" + (dir / "absent.csv").string() + R"("})");
  EXPECT_EQ(run_cli("pmh-sv --config '" + (dir / "nofile.json").string() + "' --output '" + (dir / "o").string() + "'",
                    dir / "err.txt"),
            3);
}

TEST(RunExperiment, SmallSvRunProducesIntervals) {
  const auto dir = scratch("sv");
  write_file(dir / "cfg.json", R"({"seed": 2, "input_path": ")" + kSource + R"(/data/omxs30_sample.csv",
    "chain": {"iterations": 40}, "filter": {"n_particles": 40, "n_riesz": 40}})");
  ASSERT_EQ(run_cli("pmh-sv --config '" + (dir / "cfg.json").string() + "' --output '" + (dir / "out").string() + "'",
                    dir / "err.txt"),
            0)
      << slurp(dir / "err.txt");
  const auto summary = json::parse(slurp(dir / "out/summary.json"));
  for (const char* p : {"mu", "phi", "sigma_v"})
    EXPECT_TRUE(std::isfinite(summary["results"]["posterior"][p]["mean"].get<double>())) << p;
  const auto vol = lines(slurp(dir / "out/plotdata/filtered_volatility.csv"));
  ASSERT_EQ(vol.size(), 252u);
  for (std::size_t i = 1; i < vol.size(); ++i) {
    std::vector<std::string> f;
    std::stringstream ss(vol[i]);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    ASSERT_EQ(f.size(), 6u);
    EXPECT_LE(std::stod(f[4]), std::stod(f[3]));
    EXPECT_GE(std::stod(f[5]), std::stod(f[3]));
  }
}

TEST(RunExperiment, DiagnosticsOnTrace) {
  const auto dir = scratch("diag");
  std::string csv = "iteration,a,b\n";
  for (int i = 0; i < 400; ++i) csv += std::to_string(i) + "," + std::to_string(i % 2 ? 1 : -1) + ",3\n";
  write_file(dir / "trace.csv", csv);
  write_file(dir / "cfg.json", R"({"input_path": ")" + (dir / "trace.csv").string() + R"(", "chain": {"burn_in": 100}})");
  ASSERT_EQ(run_cli("diagnostics --config '" + (dir / "cfg.json").string() + "' --output '" + (dir / "out").string() +
                        "'",
                    dir / "err.txt"),
            0)
      << slurp(dir / "err.txt");
  const auto rows = lines(slurp(dir / "out/results.csv"));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], "column,mean,variance,acf_lag1,n_samples");
  EXPECT_EQ(rows[1].substr(0, 6), "a,0,1,");
  EXPECT_NEAR(std::stod(rows[1].substr(6)), -299.0 / 300.0, 1e-15);
  EXPECT_EQ(rows[2], "b,3,0,0,300");
}
