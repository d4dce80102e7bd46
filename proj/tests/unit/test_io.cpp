#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "stochmech/errors.hpp"
#include "stochmech/io/catalog.hpp"
#include "stochmech/io/csv.hpp"
#include "stochmech/io/run.hpp"
#include "stochmech/io/spec.hpp"

using namespace stochmech;
using namespace stochmech::io;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("stochmech_io_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string config_message(const std::string& text, const std::vector<Override>& o = {}) {
  try {
    parse_spec(text, o);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Spec, MinimalSpecGetsDefaults) {
  const auto s = parse_spec(R"({"kind": "simulate", "state": "ho_ground", "seed": 7})");
  EXPECT_EQ(s.kind, ExperimentKind::simulate);
  EXPECT_EQ(s.seed, 7u);
  EXPECT_EQ(s.process, "nelson_white");
  EXPECT_EQ(s.n_traj, 100000u);
  EXPECT_DOUBLE_EQ(s.constants.resolved_eps(), 1.0);
  EXPECT_EQ(s.resolved_checkpoints().size(), 5u);
  EXPECT_DOUBLE_EQ(s.resolved_checkpoints().back(), 1.0);
  // Kind-specific defaults.
  const auto sw = parse_spec(R"({"kind": "beta_sweep"})");
  EXPECT_EQ(sw.process, "phase_space");
  EXPECT_EQ(sw.betas, (std::vector<double>{10, 30, 100}));
  EXPECT_EQ(parse_spec(R"({"kind": "two_time_expectation"})").state, "two_particle_gaussian");
  EXPECT_EQ(parse_spec("{}").kind, ExperimentKind::simulate);
}

TEST(Spec, ResolutionRule) {
  const std::string base = R"({"kind": "simulate", "process": "colored_smoothing", "betas": [100], )";
  const auto msg = config_message(base + R"("dt": 0.01})");
  EXPECT_NE(msg.find("resolution rule"), std::string::npos) << msg;
  EXPECT_NE(msg.find("dt = 0.01"), std::string::npos) << msg;
  EXPECT_NE(msg.find("use dt <= 0.001"), std::string::npos) << msg;
  EXPECT_NO_THROW(parse_spec(base + R"("dt": 0.001})"));  // dt * beta = 0.1 exactly
  EXPECT_THROW(parse_spec(base + R"("dt": 0.0011})"), ConfigError);
  // White noise has no beta, so no rule applies.
  EXPECT_NO_THROW(parse_spec(R"({"kind": "simulate", "dt": 0.01, "betas": [100]})"));
  // Every beta of a sweep is checked.
  EXPECT_THROW(parse_spec(R"({"kind": "beta_sweep", "betas": [10, 300], "dt": 0.001})"), ConfigError);
}

TEST(Spec, FieldStabilityRule) {
  EXPECT_NO_THROW(parse_spec(R"({"kind": "field_phase_space"})"));
  // 32 modes on the unit box: omega_max^2 = 1 + (32 pi)^2 ~ 1.01e4.
  const auto msg = config_message(R"({"kind": "field_phase_space", "field": {"modes": 32}, "dt": 0.001})");
  EXPECT_NE(msg.find("field stability rule"), std::string::npos) << msg;
  EXPECT_NE(msg.find("use dt <= "), std::string::npos) << msg;
  EXPECT_NO_THROW(parse_spec(R"({"kind": "field_phase_space", "field": {"modes": 32}, "dt": 1e-5})"));
}

TEST(Spec, EpsMustMatchHbarOverMass) {
  EXPECT_NO_THROW(parse_spec(R"({"constants": {"hbar": 2, "mass": 0.5, "eps": 2}})"));
  const auto msg = config_message(R"({"constants": {"hbar": 2, "mass": 0.5, "eps": 1.9}})");
  EXPECT_NE(msg.find("sqrt(hbar/m)"), std::string::npos) << msg;
  EXPECT_THROW(parse_spec(R"({"constants": {"mass": -1}})"), ConfigError);
}

TEST(Spec, UnknownKeysAreListed) {
  const auto msg = config_message(R"({"seed": 1, "sede": 2, "constants": {"hbarr": 1}, "estimator": {"bin": 3}})");
  EXPECT_NE(msg.find("unknown keys"), std::string::npos) << msg;
  for (const char* k : {"sede", "constants.hbarr", "estimator.bin"})
    EXPECT_NE(msg.find(k), std::string::npos) << k << " in " << msg;
  EXPECT_THROW(parse_spec(R"({"kind": "nonsense"})"), ConfigError);
  EXPECT_THROW(parse_spec(R"({"n_traj": -5})"), ConfigError);
  EXPECT_THROW(parse_spec(R"({"n_traj": 2.5})"), ConfigError);
  EXPECT_THROW(parse_spec(R"({"state": 3})"), ConfigError);
  EXPECT_THROW(parse_spec("{not json"), ConfigError);
  EXPECT_THROW(parse_spec(R"({"state": "no_such_state"})"), ConfigError);
  EXPECT_THROW(parse_spec(R"({"kind": "two_time_expectation", "state": "ho_ground"})"), ConfigError);
}

TEST(Spec, RoundTripIsLossless) {
  const auto s = parse_spec(R"({
    "kind": "beta_sweep", "state": "ho_coherent", "seed": 18446744073709551615,
    "constants": {"hbar": 0.30000000000000004, "mass": 1.7, "omega": 0.1, "x0": -1e-300, "eps": null},
    "betas": [10.5, 33.333333333333336], "dt": 0.0007, "horizon": 0.7,
    "estimator": {"delta": 0.07, "bins": 40, "bandwidth": 0.01},
    "velocity_profile": {"family": "two_point_about_b", "spread": 0.25},
    "measurement": {"f": {"kind": "indicator", "lo": -1, "hi": 2}, "g": {"coeffs": [1, 0, 3]}},
    "spectrum": {"k": [0.5, 1, 2]}, "output": "somewhere", "threads": 3})");
  const auto text = serialize(s);
  const auto back = parse_spec(text);
  EXPECT_EQ(back, s);
  EXPECT_EQ(serialize(back), text);
  EXPECT_EQ(back.seed, 18446744073709551615ull);
  EXPECT_EQ(back.constants.hbar, 0.30000000000000004);
  EXPECT_EQ(spec_hash(back), spec_hash(s));
}

TEST(Spec, HashCoversContentNotPlacement) {
  auto a = parse_spec(R"({"seed": 3})");
  auto b = a;
  b.output = "elsewhere";
  b.threads = 7;
  EXPECT_EQ(spec_hash(a), spec_hash(b));
  b.seed = 4;
  EXPECT_NE(spec_hash(a), spec_hash(b));
  auto c = a;
  c.estimator.delta = 0.2;
  EXPECT_NE(spec_hash(a), spec_hash(c));
  EXPECT_EQ(spec_hash(a).size(), 64u);
  // Canonical form has sorted keys and no placement fields.
  const auto canon = json::parse(canonical_form(a));
  EXPECT_FALSE(canon.contains("output"));
  EXPECT_FALSE(canon.contains("threads"));
  EXPECT_EQ(canonical_form(a), canon.dump());
}

TEST(Spec, Sha256KnownAnswers) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Spec, OverridesReachNestedKeys) {
  const auto s = parse_spec(R"({"kind": "beta_sweep"})",
                            {parse_override("betas=[10,30]"), parse_override("constants.omega=2"),
                             parse_override("state=ho_coherent"), parse_override("velocity_profile.spread=0.5"),
                             parse_override("measurement.f.kind=indicator"), parse_override("measurement.f.hi=1")});
  EXPECT_EQ(s.betas, (std::vector<double>{10, 30}));
  EXPECT_EQ(s.constants.omega, 2.0);
  EXPECT_EQ(s.state, "ho_coherent");
  EXPECT_EQ(s.velocity_profile.spread, 0.5);
  EXPECT_EQ(s.measurement.f.kind, harness::FunctionSpec::Kind::indicator);
  EXPECT_THROW(parse_override("novalue"), ConfigError);
  EXPECT_THROW(parse_spec("{}", {parse_override("constants.nope=1")}), ConfigError);
  EXPECT_THROW(parse_spec("{}", {parse_override("seed.x=1")}), ConfigError);
}

TEST(Csv, NumbersRoundTripBitExactly) {
  const std::vector<double> values{0.1, 1.0 / 3.0, -0.0, 1e-300, 5e-324, 1.7976931348623157e308,
                                   123456789012345678.0, std::nan(""), INFINITY, -INFINITY, 2.0};
  ColumnarOutput t;
  t.spec_hash = "abc123";
  t.add_column("x", "length", values);
  t.add_column("n", "1", std::vector<double>(values.size(), 7.0));
  const fs::path dir = scratch("csv");
  fs::create_directories(dir);
  write_csv(dir / "t.csv", t);
  const auto text = slurp(dir / "t.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "# spec_hash=abc123 columns=x,n units=length,1");
  const auto back = read_csv(dir / "t.csv");
  EXPECT_EQ(back.spec_hash, "abc123");
  EXPECT_EQ(back.columns, t.columns);
  EXPECT_EQ(back.units, t.units);
  ASSERT_EQ(back.rows(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::isnan(values[i])) {
      EXPECT_TRUE(std::isnan(back.data[0][i]));
      continue;
    }
    EXPECT_EQ(std::memcmp(&values[i], &back.data[0][i], sizeof(double)), 0) << i;
  }
  EXPECT_EQ(csv_header_hash(dir / "t.csv"), "abc123");
  EXPECT_THROW(t.add_column("short", "1", {1.0}), InvalidArgument);
  EXPECT_THROW(t.add_column("a,b", "1", values), InvalidArgument);
  EXPECT_THROW(parse_number("1.0x"), InvalidArgument);
  fs::remove_all(dir);
}

TEST(Catalog, ListsStatesKindsAndSchemas) {
  const auto c = list_catalog();
  auto has_name = [](const json& arr, const std::string& n) {
    for (const auto& e : arr)
      if (e["name"] == n) return true;
    return false;
  };
  EXPECT_TRUE(has_name(c["states"], "ho_ground"));
  EXPECT_TRUE(has_name(c["experiments"], "two_time_expectation"));
  for (const auto& k : experiment_kinds()) EXPECT_TRUE(has_name(c["experiments"], std::string(experiment_kind_name(k))));
  json phase;
  for (const auto& p : c["processes"])
    if (p["name"] == "phase_space") phase = p;
  ASSERT_FALSE(phase.is_null());
  std::vector<std::string> keys;
  for (const auto& p : phase["parameters"]) keys.push_back(p["key"]);
  for (const char* k : {"betas", "velocity_profile.family", "velocity_profile.spread"})
    EXPECT_NE(std::find(keys.begin(), keys.end(), k), keys.end()) << k;
  EXPECT_EQ(list_catalog().dump(), c.dump());  // stable
}

TEST(Run, SpectrumSummaryAndDeterminism) {
  const fs::path root = scratch("spectrum");
  auto spec = parse_spec(R"({"kind": "spectrum", "spectrum": {"k": [2], "t": 1}, "constants": {"xi": 1}})");
  spec.output = (root / "a").string();
  const auto r = run_experiment(spec);
  EXPECT_DOUBLE_EQ(r.summary["P"].get<double>(), 16.0);
  const auto summary = json::parse(slurp(root / "a" / "summary.json"));
  EXPECT_DOUBLE_EQ(summary["P"].get<double>(), 16.0);
  EXPECT_EQ(summary["spec_hash"], spec_hash(spec));
  EXPECT_LT(summary["poisson"]["max_rel_error"].get<double>(), 0.05);
  const auto table = read_csv(root / "a" / "spectrum.csv");
  EXPECT_EQ(table.spec_hash, spec_hash(spec));
  EXPECT_EQ(table.column("P").front(), 16.0);
  EXPECT_TRUE(fs::exists(root / "a" / "run_info.json"));
  EXPECT_FALSE(fs::exists(root / "a" / ".partial"));

  spec.output = (root / "b").string();
  spec.threads = 3;
  const auto r2 = run_experiment(spec);
  ASSERT_EQ(r.files, r2.files);
  for (const auto& f : r.files) EXPECT_EQ(slurp(root / "a" / f), slurp(root / "b" / f)) << f;

  // The saved spec reparses to the same hash.
  EXPECT_EQ(spec_hash(parse_spec(slurp(root / "a" / "spec.json"))), spec_hash(spec));
  fs::remove_all(root);
}

TEST(Run, SweepWritesTableAndSummary) {
  const fs::path root = scratch("sweep");
  auto spec = parse_spec(R"({"kind": "beta_sweep", "betas": [10, 30], "n_traj": 20000, "seed": 5})");
  spec.output = (root / "a").string();
  run_experiment(spec);
  const auto t = read_csv(root / "a" / "sweep.csv");
  EXPECT_EQ(t.rows(), 2u);
  for (const char* c : {"beta", "l1", "l1_stderr", "w1", "residual_norm", "drift_mismatch", "escaped"})
    EXPECT_NO_THROW(t.column(c)) << c;
  const auto s = json::parse(slurp(root / "a" / "summary.json"));
  EXPECT_EQ(s["trends"].size(), 4u);
  EXPECT_EQ(s["rows"].size(), 2u);
  spec.output = (root / "b").string();
  spec.threads = 2;
  const auto r2 = run_experiment(spec);
  for (const auto& f : r2.files) EXPECT_EQ(slurp(root / "a" / f), slurp(root / "b" / f)) << f;
  fs::remove_all(root);
}

TEST(Run, RuntimeFailureLeavesNoPartialOutput) {
  const fs::path root = scratch("failure");
  // More bands than Fourier modes: passes validation, fails inside the run
  // after spectrum.csv was staged.
  auto spec = parse_spec(R"({"kind": "spectrum", "spectrum": {"points": 16, "bands": 1000}})");
  spec.output = (root / "out").string();
  EXPECT_THROW(run_experiment(spec), std::exception);
  EXPECT_FALSE(fs::exists(root / "out"));
  fs::remove_all(root);
}

TEST(Trace, VerifiesAndDetectsTampering) {
  const fs::path root = scratch("trace");
  for (const char* seed : {"1", "2"}) {
    auto spec = parse_spec(std::string(R"({"kind": "spectrum", "spectrum": {"poisson_check": false}, "seed": )") + seed + "}");
    spec.output = (root / seed).string();
    run_experiment(spec);
  }
  auto rep = trace_tree(root);
  EXPECT_TRUE(rep.ok());
  EXPECT_EQ(rep.checked, 6u);  // spectrum.csv, summary.json, run_info.json per run
  // Copy a file from run 2 into run 1: its hash no longer matches.
  fs::copy_file(root / "2" / "spectrum.csv", root / "1" / "spectrum.csv", fs::copy_options::overwrite_existing);
  rep = trace_tree(root);
  ASSERT_EQ(rep.mismatched.size(), 1u);
  EXPECT_EQ(rep.mismatched[0].file.filename(), "spectrum.csv");
  std::ofstream(root / "2" / "stray.csv") << "x\n1\n";
  rep = trace_tree(root);
  EXPECT_EQ(rep.unhashed.size(), 1u);
  fs::remove_all(root);
}
