#include "stochmech/io/catalog.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "stochmech/errors.hpp"
#include "stochmech/io/csv.hpp"
#include "stochmech/io/spec.hpp"
#include "stochmech/quantum/catalog.hpp"

namespace stochmech::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json param(const char* key, const char* type, json def, const char* description) {
  return {{"key", key}, {"type", type}, {"default", std::move(def)}, {"description", description}};
}

json constant(const char* name) {
  const Constants c;
  const std::string key = std::string("constants.") + name;
  const std::string n = name;
  if (n == "hbar") return param("constants.hbar", "number", c.hbar, "reduced Planck constant");
  if (n == "mass") return param("constants.mass", "number", c.mass, "particle mass");
  if (n == "omega") return param("constants.omega", "number", c.omega, "oscillator frequency");
  if (n == "sigma0") return param("constants.sigma0", "number", c.sigma0, "initial width");
  if (n == "x0") return param("constants.x0", "number", c.x0, "initial centre or displacement");
  if (n == "p0") return param("constants.p0", "number", c.p0, "initial momentum");
  if (n == "n0")
    return param("constants.n0", "number[3]", c.n0,
                 "initial exponent matrix (n11, n12, n22) in units of m omega / hbar");
  if (n == "eps") return param("constants.eps", "number|null", nullptr, "noise strength; must equal sqrt(hbar/mass)");
  if (n == "xi") return param("constants.xi", "number", c.xi, "noise coupling of the potential");
  if (n == "G") return param("constants.G", "number", c.G, "gravitational constant");
  throw InvalidArgument("no constant " + key);
}

json state_entry(const std::string& name) {
  json params = json::array({constant("mass"), constant("hbar")});
  std::size_t particles = 1;
  if (name == "free_gaussian") {
    for (const char* k : {"sigma0", "x0", "p0"}) params.push_back(constant(k));
  } else if (name == "ho_coherent") {
    for (const char* k : {"omega", "x0"}) params.push_back(constant(k));
  } else if (name == "two_particle_gaussian") {
    particles = 2;
    for (const char* k : {"omega", "n0"}) params.push_back(constant(k));
  } else {
    params.push_back(constant("omega"));
  }
  return {{"name", name}, {"particles", particles}, {"parameters", params}};
}

json beta_param() { return param("betas", "number[]", json::array({100.0}), "colored-noise rate(s) beta; dt * beta <= 0.1"); }

json profile_params() {
  return json::array({param("velocity_profile.family", "string", "gaussian_about_b",
                            "initial velocities about b0(x): gaussian_about_b or two_point_about_b"),
                      param("velocity_profile.spread", "number", 0.0, "spread s >= 0 of the initial velocities")});
}

json process_entries() {
  json white = {{"name", "nelson_white"},
                {"description", "dx = b dt + eps dW"},
                {"parameters", json::array({constant("hbar"), constant("mass"), constant("eps")})}};
  json colored = {{"name", "colored_smoothing"},
                  {"description", "dx = b dt + eps A dt, dA = -beta A dt + beta dW"},
                  {"parameters", json::array({constant("hbar"), constant("mass"), constant("eps"), beta_param()})}};
  json phase = {{"name", "phase_space"},
                {"description", "dx = v dt + eps A dt, dv = -(1/m) U'(x) dt"},
                {"parameters", json::array({constant("hbar"), constant("mass"), constant("eps"), beta_param()})}};
  for (auto& p : profile_params()) phase["parameters"].push_back(p);
  return json::array({white, colored, phase});
}

json common_run(const ExperimentSpec& d) {
  return json::array({param("seed", "integer", d.seed, "master seed"),
                      param("n_traj", "integer", d.n_traj, "trajectories"),
                      param("dt", "number", d.dt, "time step"),
                      param("horizon", "number", d.horizon, "final time"),
                      param("output", "string", "", "output directory (default $STOCHMECH_OUT/<kind>-<hash>)"),
                      param("threads", "integer", 0, "worker threads (0: STOCHMECH_THREADS or all cores)")});
}

json experiment_entry(ExperimentKind k) {
  const auto d = default_spec(k);
  json p = common_run(d);
  const char* sub = "simulate";
  auto add = [&](json e) { p.push_back(std::move(e)); };
  auto estimator = [&] {
    add(param("estimator.delta", "number", d.estimator.delta, "lag of the stochastic derivatives"));
    add(param("estimator.groups", "integer", d.estimator.groups, "jackknife groups"));
    add(param("estimator.grid_points", "integer", d.estimator.grid_points, "density grid points"));
  };
  switch (k) {
    case ExperimentKind::simulate:
      add(param("state", "string", d.state, "one-particle catalog state"));
      add(param("process", "string", d.process, "nelson_white, colored_smoothing or phase_space"));
      add(param("betas", "number[1]", d.betas, "colored-noise rate"));
      add(param("checkpoints", "number[]", json::array(), "marginal times (default five up to the horizon)"));
      estimator();
      add(param("estimator.bins", "integer", 0, "derivative bins (0: Freedman-Diaconis)"));
      add(param("estimator.bandwidth", "number", 0.0, "density bandwidth (0: Silverman)"));
      add(param("trajectories.trajectories", "integer", d.trajectories.trajectories, "trajectories written"));
      add(param("trajectories.record_stride", "integer", d.trajectories.record_stride, "steps between records"));
      for (auto& e : profile_params()) add(e);
      break;
    case ExperimentKind::ou_law:
      add(param("betas", "number[]", d.betas, "rates to test"));
      p[2]["description"] = "time step (0: 0.1 / beta per rate)";
      p[2]["default"] = 0.0;
      p[3]["description"] = "path duration (0: 200 / beta)";
      p[3]["default"] = 0.0;
      break;
    case ExperimentKind::beta_sweep:
      sub = "sweep";
      add(param("state", "string", d.state, "one-particle catalog state"));
      add(param("process", "string", d.process, "phase_space or colored_smoothing"));
      add(param("betas", "number[]", d.betas, "rates, swept in increasing order"));
      estimator();
      for (auto& e : profile_params()) add(e);
      break;
    case ExperimentKind::two_time_expectation:
      sub = "measure";
      add(param("state", "string", d.state, "two_particle_gaussian"));
      add(param("measurement.measured", "integer", 0, "particle found at t1"));
      add(param("measurement.t1", "number", d.measurement.t1, "measurement time"));
      add(param("measurement.t2", "number", d.measurement.t2, "observation time"));
      add(param("measurement.f", "function", "x", "{kind: polynomial|indicator, coeffs, lo, hi} applied to the outcome"));
      add(param("measurement.g", "function", "x", "applied to the other particle at t2"));
      add(param("measurement.collapse", "boolean", true, "condition the drift on the outcome"));
      add(param("measurement.strata", "integer", d.measurement.strata, "outcome strata"));
      add(param("measurement.grid_points", "integer", d.measurement.grid_points, "oracle grid points per axis"));
      add(param("measurement.window_cells", "number", d.measurement.window_cells, "collapse window in grid cells"));
      break;
    case ExperimentKind::decoupling:
      add(param("betas", "number[1]", d.betas, "colored-noise rate"));
      add(param("decoupling.k_before", "number[4]", d.decoupling.k_before, "force matrix before t = 0"));
      add(param("decoupling.k_after", "number[4]", d.decoupling.k_after, "force matrix after t = 0"));
      add(param("decoupling.swap_noise", "boolean", false, "exchange the particles' noise streams"));
      for (auto& e : profile_params()) add(e);
      break;
    case ExperimentKind::field_phase_space:
      sub = "field";
      add(param("betas", "number[]", d.betas, "one rate or one per mode"));
      add(param("field.modes", "integer", d.field.modes, "retained modes"));
      add(param("field.length", "number", d.field.length, "periodic box length"));
      add(param("field.field_mass", "number", d.field.field_mass, "field mass"));
      add(param("field.snapshot_points", "integer", d.field.snapshot_points, "points per field snapshot"));
      estimator();
      for (auto& e : profile_params()) add(e);
      break;
    case ExperimentKind::spectrum:
      sub = "spectrum";
      p = json::array({common_run(d)[0]});
      for (const char* c : {"hbar", "mass", "xi", "G"}) add(constant(c));
      add(param("spectrum.k", "number[]", d.spectrum.k, "wavenumbers"));
      add(param("spectrum.t", "number", d.spectrum.t, "time"));
      add(param("spectrum.poisson_check", "boolean", true, "run the spectral Poisson round trip"));
      add(param("spectrum.points", "integer", d.spectrum.points, "grid points of the round trip"));
      break;
  }
  return {{"name", experiment_kind_name(k)}, {"subcommand", sub}, {"parameters", p}};
}

std::string hash_in_json(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  const json j = json::parse(f, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("spec_hash") || !j["spec_hash"].is_string()) return {};
  return j["spec_hash"].get<std::string>();
}

}  // namespace

json list_catalog() {
  json states = json::array();
  for (const auto& n : quantum::catalog_names()) states.push_back(state_entry(n));
  json experiments = json::array();
  for (auto k : experiment_kinds()) experiments.push_back(experiment_entry(k));
  return {{"states", states}, {"processes", process_entries()}, {"experiments", experiments}};
}

TraceReport trace_tree(const fs::path& root) {
  if (!fs::is_directory(root)) throw InvalidArgument("trace: not a directory: " + root.string());
  std::map<fs::path, std::string> spec_hashes;  // directory -> hash of its spec.json
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto& p = e.path();
    if (p.filename() == "spec.json") {
      std::ifstream f(p, std::ios::binary);
      std::stringstream ss;
      ss << f.rdbuf();
      spec_hashes[p.parent_path()] = spec_hash(parse_spec(ss.str()));
    } else if (p.extension() == ".csv" || p.extension() == ".json") {
      files.push_back(p);
    }
  }
  std::sort(files.begin(), files.end());
  TraceReport rep;
  for (const auto& p : files) {
    std::string expected;
    for (fs::path dir = p.parent_path();; dir = dir.parent_path()) {
      if (const auto it = spec_hashes.find(dir); it != spec_hashes.end()) {
        expected = it->second;
        break;
      }
      if (dir == root || !dir.has_relative_path() || dir == dir.parent_path()) break;
    }
    ++rep.checked;
    const std::string found = p.extension() == ".csv" ? csv_header_hash(p) : hash_in_json(p);
    if (found.empty()) rep.unhashed.push_back(p);
    else if (expected.empty()) rep.orphaned.push_back(p);
    else if (found != expected) rep.mismatched.push_back({p, expected, found});
  }
  return rep;
}

}  // namespace stochmech::io
