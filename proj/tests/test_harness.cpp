#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "photoconv/harness/cache.hpp"
#include "photoconv/harness/config.hpp"
#include "photoconv/harness/csv.hpp"
#include "photoconv/harness/run.hpp"
#include "photoconv/harness/svg.hpp"

using namespace photoconv;
using namespace photoconv::harness;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("photoconv_test_" + name);
  fs::remove_all(p);
  return p;
}

// Small enough to run in seconds, large enough to find an interior minimum.
const char* kTinyRun = R"(
V_c = 15
tau_H = 0.5
I_D = 0.26
output = base-state
output = critical
mesh = 33
radiation_grid = 129
radiation_nodes = 128
base_nodes = 128
chebyshev = 32
k_min = 2.25
k_max = 4
k_samples = 8
)";

}  // namespace

TEST(CacheKey, IgnoresNonRadiationParameters) {
  Params a, b;
  b.V_c = 20.0;
  b.S_c = 7.0;
  EXPECT_EQ(cache_key(a.radiation()), cache_key(b.radiation()));
}

TEST(CacheKey, DistinguishesRadiationParameters) {
  Params a, b;
  b.A1 = 0.4;
  EXPECT_NE(cache_key(a.radiation()), cache_key(b.radiation()));
}

TEST(CacheKey, RoundTrips) {
  RadiationParams p{0.75, 0.4, 0.123456789012, 40.0 * std::numbers::pi / 180.0, 0.48, 1.0};
  const RadiationParams q = parse_cache_key(cache_key(p));
  EXPECT_EQ(cache_key(q), cache_key(p));
  EXPECT_NEAR(q.A1, p.A1, 1e-12);
  EXPECT_NEAR(q.theta0, p.theta0, 1e-12);
  EXPECT_THROW(parse_cache_key("tau_H=1"), std::invalid_argument);
}

TEST(RadiationCache, ReloadIsBitIdentical) {
  const fs::path dir = scratch("cache");
  const RadiationCache cache(dir);
  RadiationParams p;
  p.A1 = 0.4;
  bool hit = true;
  const RadiationField a = cache.get(p, 64, &hit);
  EXPECT_FALSE(hit);
  const RadiationField b = cache.get(p, 64, &hit);
  EXPECT_TRUE(hit);
  EXPECT_EQ(a.G(), b.G());
  EXPECT_EQ(a.q(), b.q());
  EXPECT_EQ(eval_field(a, 0.123).G, eval_field(b, 0.123).G);
  fs::remove_all(dir);
}

TEST(Config, UnknownKeyIsNamed) {
  try {
    parse_config_text("V_c = 15\nfoo = 3\n");
    FAIL() << "no error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("'foo'"), std::string::npos);
  }
  EXPECT_THROW(parse_config_text("sweep.bar = 1\n"), ConfigError);
  EXPECT_THROW(parse_config_text("V_c = fast\n"), ConfigError);
  EXPECT_THROW(parse_config_text("V_c\n"), ConfigError);
  EXPECT_THROW(parse_config_text("mesh = 12.5\n"), ConfigError);
}

TEST(Config, ParsesValuesAndDegrees) {
  const Config c = parse_config_text("V_c = 20 # comment\ntheta_i = 40\n\n# only a comment\ntaxis.kappa1 = 4\n");
  EXPECT_EQ(c.base.V_c, 20.0);
  EXPECT_NEAR(c.base.theta0, 40.0 * std::numbers::pi / 180.0, 1e-15);
  EXPECT_EQ(c.kappa1, 4.0);
}

TEST(Config, EmptyAxesGiveOneRow) {
  const Config c = parse_config_text("V_c = 10\n");
  const auto rows = expand(c);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].V_c, 10.0);
}

TEST(Config, AxesExpandFirstSlowest) {
  const Config c = parse_config_text("sweep.theta_i = 0\nsweep.A1 = 0\nsweep.theta_i = 40\nsweep.A1 = 0.4\nsweep.A1 = 0.8\n");
  const auto rows = expand(c);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].theta0, 0.0);
  EXPECT_EQ(rows[2].A1, 0.8);
  EXPECT_GT(rows[3].theta0, 0.0);
  EXPECT_EQ(rows[3].A1, 0.0);
}

TEST(Csv, SchemaAndRow) {
  std::ostringstream s;
  write_schema(s, kCriticalSchema, kCriticalColumns);
  ResultRow r;
  r.R_c = 718.98;
  r.branch = "stationary";
  r.status = "failed: a, b";
  write_row(s, r);
  const std::string out = s.str();
  EXPECT_EQ(out.rfind("# schema: photoconv-critical-v1\nS_c,V_c,", 0), 0u);
  EXPECT_NE(out.find(",718.98,"), std::string::npos);
  EXPECT_NE(out.find("failed: a; b\n"), std::string::npos);
  std::istringstream lines(out);
  std::string header, cols, row;
  std::getline(lines, header);
  std::getline(lines, cols);
  std::getline(lines, row);
  EXPECT_EQ(std::count(cols.begin(), cols.end(), ','), std::count(row.begin(), row.end(), ','));
}

TEST(Svg, WritesPolylines) {
  std::ostringstream s;
  write_svg(s, {{"a", {0, 1, 2}, {1, 4, 9}}, {"b", {0, 1, 2}, {NAN, 2, 3}}}, "k", "R");
  const std::string out = s.str();
  EXPECT_EQ(out.rfind("<svg", 0), 0u);
  EXPECT_EQ(std::count(out.begin(), out.end(), 'M') >= 2, true);
  EXPECT_NE(out.find("</svg>"), std::string::npos);
}

TEST(Run, DeterministicAndCacheIndependent) {
  const Config cfg = parse_config_text(kTinyRun);
  const fs::path da = scratch("run_a"), db = scratch("run_b"), dc = scratch("run_c");
  RunOptions opt;
  opt.log = nullptr;
  opt.out_dir = da;
  const RunSummary a = run_sweep(cfg, opt);
  ASSERT_EQ(a.failures, 0) << a.rows[0].status;
  EXPECT_EQ(a.cache_misses, 1);
  EXPECT_EQ(a.rows[0].branch, "stationary");
  EXPECT_TRUE(fs::exists(da / "row000_base.csv"));

  // a fresh directory, then the same one again (now a cache hit): identical bytes
  opt.out_dir = db;
  run_sweep(cfg, opt);
  EXPECT_EQ(slurp(da / "results.csv"), slurp(db / "results.csv"));
  const RunSummary c = run_sweep(cfg, opt);
  EXPECT_EQ(c.cache_hits, 1);
  EXPECT_EQ(slurp(da / "results.csv"), slurp(db / "results.csv"));

  opt.use_cache = false;
  opt.out_dir = dc;
  const RunSummary d = run_sweep(cfg, opt);
  EXPECT_NEAR(d.rows[0].R_c, a.rows[0].R_c, 1e-10 * a.rows[0].R_c);
  for (const auto& dir : {da, db, dc}) fs::remove_all(dir);
}

#ifdef PHOTOCONV_CLI
TEST(Cli, UnknownKeyExitsWithOne) {
  const std::string cmd = std::string(PHOTOCONV_CLI) + " sweep --config " + PHOTOCONV_TEST_DATA +
                          "/unknown_key.cfg --out " + scratch("cli").string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 1);
}
#endif
