#include "stochmech/io/spec.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <openssl/evp.h>

#include "stochmech/errors.hpp"
#include "stochmech/estimators/density.hpp"
#include "stochmech/field/modes.hpp"
#include "stochmech/io/csv.hpp"
#include "stochmech/process/simulators.hpp"
#include "stochmech/sde/integrator.hpp"

namespace stochmech::io {

using nlohmann::json;

namespace {

struct KindName {
  ExperimentKind kind;
  const char* name;
};
constexpr KindName kKindNames[] = {
    {ExperimentKind::simulate, "simulate"},
    {ExperimentKind::ou_law, "ou_law"},
    {ExperimentKind::beta_sweep, "beta_sweep"},
    {ExperimentKind::two_time_expectation, "two_time_expectation"},
    {ExperimentKind::decoupling, "decoupling"},
    {ExperimentKind::field_phase_space, "field_phase_space"},
    {ExperimentKind::spectrum, "spectrum"},
};

// Walks one JSON object, remembering which keys were read. Leftover keys are
// appended (with their dotted path) to the shared list.
class Reader {
 public:
  Reader(const json* obj, std::string path, std::vector<std::string>* unknown)
      : obj_(obj), path_(std::move(path)), unknown_(unknown) {
    if (obj_ && !obj_->is_object()) fail("expected an object");
  }
  Reader(const Reader&) = delete;
  ~Reader() {
    if (!obj_) return;
    for (const auto& [k, v] : obj_->items())
      if (!used_.count(k)) unknown_->push_back(path_ + k);
  }

  const json* find(const char* key) {
    if (!obj_) return nullptr;
    const auto it = obj_->find(key);
    if (it == obj_->end()) return nullptr;
    used_.insert(key);
    return &*it;
  }

  Reader child(const char* key) { return Reader(find(key), path_ + key + ".", unknown_); }

  void get(const char* key, double& out) {
    if (const json* j = find(key)) out = number(*j, key);
  }
  void get(const char* key, std::optional<double>& out) {
    if (const json* j = find(key)) {
      if (j->is_null()) out.reset();
      else out = number(*j, key);
    }
  }
  void get(const char* key, std::size_t& out) {
    if (const json* j = find(key)) out = static_cast<std::size_t>(count(*j, key));
  }
  void get(const char* key, std::uint64_t& out, int) {
    if (const json* j = find(key)) out = count(*j, key);
  }
  void get(const char* key, bool& out) {
    if (const json* j = find(key)) {
      if (!j->is_boolean()) fail(key, "expected true or false");
      out = j->get<bool>();
    }
  }
  void get(const char* key, std::string& out) {
    if (const json* j = find(key)) {
      if (!j->is_string()) fail(key, "expected a string");
      out = j->get<std::string>();
    }
  }
  void get(const char* key, std::vector<double>& out) {
    if (const json* j = find(key)) {
      if (!j->is_array()) fail(key, "expected an array of numbers");
      out.clear();
      for (const auto& e : *j) out.push_back(number(e, key));
    }
  }
  template <std::size_t N>
  void get(const char* key, std::array<double, N>& out) {
    if (const json* j = find(key)) {
      if (!j->is_array() || j->size() != N)
        fail(key, "expected an array of " + std::to_string(N) + " numbers");
      for (std::size_t i = 0; i < N; ++i) out[i] = number((*j)[i], key);
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError("spec: " + path_ + key + ": " + what);
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("spec: " + (path_.empty() ? std::string("document") : path_) + ": " + what);
  }

 private:
  double number(const json& j, const char* key) const {
    if (!j.is_number()) fail(key, "expected a number");
    return j.get<double>();
  }
  std::uint64_t count(const json& j, const char* key) const {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return j.get<std::uint64_t>();
    if (j.is_number_float()) {
      const double d = j.get<double>();
      if (d >= 0.0 && d <= 9007199254740992.0 && std::floor(d) == d) return static_cast<std::uint64_t>(d);
    }
    fail(key, "expected a non-negative integer");
  }

  const json* obj_;
  std::string path_;
  std::vector<std::string>* unknown_;
  std::set<std::string> used_;
};

json function_json(const harness::FunctionSpec& f) {
  return {{"kind", f.kind == harness::FunctionSpec::Kind::polynomial ? "polynomial" : "indicator"},
          {"coeffs", f.coeffs},
          {"lo", f.lo},
          {"hi", f.hi}};
}

void read_function(Reader&& r, harness::FunctionSpec& f) {
  std::string kind = f.kind == harness::FunctionSpec::Kind::polynomial ? "polynomial" : "indicator";
  r.get("kind", kind);
  if (kind == "polynomial") f.kind = harness::FunctionSpec::Kind::polynomial;
  else if (kind == "indicator") f.kind = harness::FunctionSpec::Kind::indicator;
  else r.fail("kind", "expected polynomial or indicator");
  r.get("coeffs", f.coeffs);
  r.get("lo", f.lo);
  r.get("hi", f.hi);
}

void read_spec(const json& doc, ExperimentSpec& s) {
  std::vector<std::string> unknown;
  {
    Reader r(&doc, "", &unknown);
    r.find("kind");  // already consumed by the caller
    r.get("state", s.state);
    r.get("process", s.process);
    {
      Reader c = r.child("constants");
      c.get("hbar", s.constants.hbar);
      c.get("mass", s.constants.mass);
      c.get("omega", s.constants.omega);
      c.get("sigma0", s.constants.sigma0);
      c.get("x0", s.constants.x0);
      c.get("p0", s.constants.p0);
      c.get("n0", s.constants.n0);
      c.get("eps", s.constants.eps);
      c.get("xi", s.constants.xi);
      c.get("G", s.constants.G);
    }
    r.get("betas", s.betas);
    r.get("n_traj", s.n_traj);
    r.get("dt", s.dt);
    r.get("horizon", s.horizon);
    r.get("checkpoints", s.checkpoints);
    {
      Reader e = r.child("estimator");
      e.get("bins", s.estimator.bins);
      e.get("bandwidth", s.estimator.bandwidth);
      e.get("delta", s.estimator.delta);
      e.get("groups", s.estimator.groups);
      e.get("grid_points", s.estimator.grid_points);
      e.get("n_min", s.estimator.n_min);
    }
    {
      Reader v = r.child("velocity_profile");
      std::string family(process::velocity_family_name(s.velocity_profile.family));
      v.get("family", family);
      try {
        s.velocity_profile.family = process::parse_velocity_family(family);
      } catch (const InvalidArgument& e) {
        v.fail("family", e.what());
      }
      v.get("spread", s.velocity_profile.spread);
    }
    {
      Reader o = r.child("trajectories");
      o.get("trajectories", s.trajectories.trajectories);
      o.get("record_stride", s.trajectories.record_stride);
    }
    {
      Reader m = r.child("measurement");
      auto& ms = s.measurement;
      m.get("measured", ms.measured);
      m.get("t1", ms.t1);
      m.get("t2", ms.t2);
      read_function(m.child("f"), ms.f);
      read_function(m.child("g"), ms.g);
      m.get("collapse", ms.collapse);
      m.get("strata", ms.strata);
      m.get("grid_points", ms.grid_points);
      m.get("grid_half_width", ms.grid_half_width);
      m.get("oracle_dt", ms.oracle_dt);
      m.get("window_cells", ms.window_cells);
      m.get("control_rate", ms.control_rate);
      m.get("width_check", ms.width_check);
      m.get("control", ms.control);
    }
    {
      Reader f = r.child("field");
      f.get("modes", s.field.modes);
      f.get("length", s.field.length);
      f.get("field_mass", s.field.field_mass);
      f.get("snapshot_points", s.field.snapshot_points);
    }
    {
      Reader p = r.child("spectrum");
      p.get("k", s.spectrum.k);
      p.get("t", s.spectrum.t);
      p.get("poisson_check", s.spectrum.poisson_check);
      p.get("points", s.spectrum.points);
      p.get("box_length", s.spectrum.box_length);
      p.get("realizations", s.spectrum.realizations);
      p.get("bands", s.spectrum.bands);
    }
    {
      Reader d = r.child("decoupling");
      d.get("k_before", s.decoupling.k_before);
      d.get("k_after", s.decoupling.k_after);
      d.get("swap_noise", s.decoupling.swap_noise);
    }
    r.get("seed", s.seed, 0);
    r.get("output", s.output);
    r.get("threads", s.threads);
  }
  if (!unknown.empty()) {
    std::sort(unknown.begin(), unknown.end());
    std::string list;
    for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
    throw ConfigError("spec: unknown keys: " + list);
  }
}

void apply_override(json& doc, const Override& o) {
  json* node = &doc;
  std::string_view key = o.key;
  while (true) {
    const auto dot = key.find('.');
    const std::string part(key.substr(0, dot));
    if (part.empty()) throw ConfigError("override: empty key component in '" + o.key + "'");
    if (!node->is_object()) throw ConfigError("override: '" + o.key + "' descends into a non-object");
    if (dot == std::string_view::npos) {
      json value = json::parse(o.value, nullptr, false);
      (*node)[part] = value.is_discarded() ? json(o.value) : value;
      return;
    }
    if (!node->contains(part)) (*node)[part] = json::object();
    node = &(*node)[part];
    key = key.substr(dot + 1);
  }
}

std::string num(double v) { return format_number(v); }

constexpr double kMaxFieldGrowth = 0.02;

[[noreturn]] void violated(const std::string& what) { throw ConfigError("spec: " + what); }

bool uses_beta(const ExperimentSpec& s) {
  switch (s.kind) {
    case ExperimentKind::simulate: return s.process != "nelson_white";
    case ExperimentKind::two_time_expectation:
    case ExperimentKind::spectrum: return false;
    default: return true;
  }
}

}  // namespace

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (const auto& k : kKindNames)
    if (name == k.name) return k.kind;
  std::string list;
  for (const auto& k : kKindNames) list += (list.empty() ? "" : ", ") + std::string(k.name);
  throw ConfigError("spec: unknown experiment kind '" + std::string(name) + "' (expected one of " + list + ")");
}

std::string_view experiment_kind_name(ExperimentKind kind) {
  for (const auto& k : kKindNames)
    if (k.kind == kind) return k.name;
  return "?";
}

const std::vector<ExperimentKind>& experiment_kinds() {
  static const std::vector<ExperimentKind> all = [] {
    std::vector<ExperimentKind> v;
    for (const auto& k : kKindNames) v.push_back(k.kind);
    return v;
  }();
  return all;
}

quantum::CatalogParams Constants::catalog() const {
  quantum::CatalogParams p;
  p.mass = mass;
  p.hbar = hbar;
  p.omega = omega;
  p.sigma0 = sigma0;
  p.x0 = x0;
  p.p0 = p0;
  p.n0 = n0;
  return p;
}

double Constants::resolved_eps() const { return process::nelson_eps(hbar, mass); }

std::vector<double> ExperimentSpec::resolved_checkpoints() const {
  if (!checkpoints.empty()) return checkpoints;
  std::vector<double> out;
  for (int i = 1; i <= 5; ++i) out.push_back(horizon * i / 5.0);
  return out;
}

std::size_t ExperimentSpec::n_steps() const {
  return static_cast<std::size_t>(std::llround(horizon / dt));
}

ExperimentSpec default_spec(ExperimentKind kind) {
  ExperimentSpec s;
  s.kind = kind;
  switch (kind) {
    case ExperimentKind::simulate: break;
    case ExperimentKind::ou_law:
      s.process = "colored_smoothing";
      s.betas = {5.0, 20.0, 100.0};
      s.n_traj = 10000;
      s.horizon = 0.0;
      break;
    case ExperimentKind::beta_sweep:
      s.process = "phase_space";
      s.betas = {10.0, 30.0, 100.0};
      break;
    case ExperimentKind::two_time_expectation:
      s.state = "two_particle_gaussian";
      s.betas = {};
      break;
    case ExperimentKind::decoupling:
      s.process = "phase_space";
      break;
    case ExperimentKind::field_phase_space:
      // Fast modes set the step: 16 modes on the unit box reach omega ~ 50.
      s.process = "phase_space";
      s.n_traj = 20000;
      s.dt = 5e-5;
      s.horizon = 0.1;
      s.estimator.delta = 0.02;
      s.trajectories.record_stride = 500;
      break;
    case ExperimentKind::spectrum:
      s.betas = {};
      break;
  }
  return s;
}

Override parse_override(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("override: expected key=value, got '" + std::string(text) + "'");
  return {std::string(text.substr(0, eq)), std::string(text.substr(eq + 1))};
}

ExperimentSpec parse_spec_json(json doc, const std::vector<Override>& overrides) {
  if (doc.is_null()) doc = json::object();
  if (!doc.is_object()) throw ConfigError("spec: document must be a JSON object");
  for (const auto& o : overrides) apply_override(doc, o);
  ExperimentKind kind = ExperimentKind::simulate;
  if (const auto it = doc.find("kind"); it != doc.end()) {
    if (!it->is_string()) throw ConfigError("spec: kind: expected a string");
    kind = parse_experiment_kind(it->get<std::string>());
  }
  ExperimentSpec s = default_spec(kind);
  read_spec(doc, s);
  validate(s);
  return s;
}

ExperimentSpec parse_spec(std::string_view text, const std::vector<Override>& overrides) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("spec: document is not well-formed JSON");
  return parse_spec_json(std::move(doc), overrides);
}

json to_json(const ExperimentSpec& s) {
  const auto& c = s.constants;
  const auto& m = s.measurement;
  json j;
  j["kind"] = experiment_kind_name(s.kind);
  j["state"] = s.state;
  j["process"] = s.process;
  j["constants"] = {{"hbar", c.hbar}, {"mass", c.mass}, {"omega", c.omega}, {"sigma0", c.sigma0},
                    {"x0", c.x0},     {"p0", c.p0},     {"n0", c.n0},       {"xi", c.xi},
                    {"G", c.G}};
  j["constants"]["eps"] = c.eps ? json(*c.eps) : json(nullptr);
  j["betas"] = s.betas;
  j["n_traj"] = s.n_traj;
  j["dt"] = s.dt;
  j["horizon"] = s.horizon;
  j["checkpoints"] = s.checkpoints;
  j["estimator"] = {{"bins", s.estimator.bins},         {"bandwidth", s.estimator.bandwidth},
                    {"delta", s.estimator.delta},       {"groups", s.estimator.groups},
                    {"grid_points", s.estimator.grid_points}, {"n_min", s.estimator.n_min}};
  j["velocity_profile"] = {{"family", process::velocity_family_name(s.velocity_profile.family)},
                           {"spread", s.velocity_profile.spread}};
  j["trajectories"] = {{"trajectories", s.trajectories.trajectories},
                       {"record_stride", s.trajectories.record_stride}};
  j["measurement"] = {{"measured", m.measured},       {"t1", m.t1},
                      {"t2", m.t2},                   {"f", function_json(m.f)},
                      {"g", function_json(m.g)},      {"collapse", m.collapse},
                      {"strata", m.strata},           {"grid_points", m.grid_points},
                      {"grid_half_width", m.grid_half_width}, {"oracle_dt", m.oracle_dt},
                      {"window_cells", m.window_cells}, {"control_rate", m.control_rate},
                      {"width_check", m.width_check}, {"control", m.control}};
  j["field"] = {{"modes", s.field.modes},
                {"length", s.field.length},
                {"field_mass", s.field.field_mass},
                {"snapshot_points", s.field.snapshot_points}};
  j["spectrum"] = {{"k", s.spectrum.k},
                   {"t", s.spectrum.t},
                   {"poisson_check", s.spectrum.poisson_check},
                   {"points", s.spectrum.points},
                   {"box_length", s.spectrum.box_length},
                   {"realizations", s.spectrum.realizations},
                   {"bands", s.spectrum.bands}};
  j["decoupling"] = {{"k_before", s.decoupling.k_before},
                     {"k_after", s.decoupling.k_after},
                     {"swap_noise", s.decoupling.swap_noise}};
  j["seed"] = s.seed;
  j["output"] = s.output;
  j["threads"] = s.threads;
  return j;
}

std::string serialize(const ExperimentSpec& spec) { return to_json(spec).dump(2) + "\n"; }

std::string canonical_form(const ExperimentSpec& spec) {
  json j = to_json(spec);
  j.erase("output");
  j.erase("threads");
  return j.dump();
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw SimulationError("io", "SHA-256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string spec_hash(const ExperimentSpec& spec) { return sha256_hex(canonical_form(spec)); }

void validate(const ExperimentSpec& s) {
  const auto& c = s.constants;
  for (double v : {c.hbar, c.mass})
    if (!(v > 0.0)) violated("constants.hbar and constants.mass must be positive");
  if (!(c.omega >= 0.0)) violated("constants.omega must be >= 0");
  if (!(c.sigma0 > 0.0)) violated("constants.sigma0 must be positive");
  if (c.eps) {
    const double want = c.resolved_eps();
    if (!(std::abs(*c.eps - want) <= 1e-12 * want))
      violated("eps = sqrt(hbar/m) violated: constants.eps = " + num(*c.eps) + " but sqrt(" +
               num(c.hbar) + "/" + num(c.mass) + ") = " + num(want) + " (omit eps to derive it)");
  }

  const bool ou = s.kind == ExperimentKind::ou_law;
  if (ou ? !(s.dt >= 0.0) : !(s.dt > 0.0)) violated("dt must be positive");
  if (ou ? !(s.horizon >= 0.0) : !(s.horizon > 0.0)) violated("horizon must be positive");
  if (s.n_traj == 0) violated("n_traj must be positive");

  process::Kind pk{};
  try {
    pk = process::parse_kind(s.process);
  } catch (const InvalidArgument& e) {
    violated(std::string("process: ") + e.what());
  }
  if (pk == process::Kind::phase_space_multi)
    violated("process phase_space_multi is reached through the decoupling kind");

  if (uses_beta(s)) {
    if (s.betas.empty()) violated("betas must not be empty for kind " + std::string(experiment_kind_name(s.kind)));
    for (double b : s.betas) {
      if (!(b > 0.0)) violated("betas must be positive");
      // Same rule as the integrator; the factor absorbs the rounding of dt * beta.
      if (s.dt > 0.0 && s.dt * b > sde::kMaxDtBeta * (1.0 + 1e-12))
        violated("resolution rule dt*beta <= " + num(sde::kMaxDtBeta) + " violated: dt = " + num(s.dt) +
                 ", beta = " + num(b) + " (dt*beta = " + num(s.dt * b) + "); use dt <= " +
                 num(sde::kMaxDtBeta / b));
    }
  }
  if (!(s.velocity_profile.spread >= 0.0)) violated("velocity_profile.spread must be >= 0");

  const auto& e = s.estimator;
  if (!(e.delta > 0.0)) violated("estimator.delta must be positive");
  if (e.groups < 2) violated("estimator.groups must be >= 2");
  if (e.grid_points < 16) violated("estimator.grid_points must be >= 16");
  if (!(e.bandwidth >= 0.0)) violated("estimator.bandwidth must be >= 0");
  if (e.bins == 1) violated("estimator.bins must be 0 (automatic) or >= 2");
  if (s.trajectories.record_stride == 0) violated("trajectories.record_stride must be positive");
  if (s.kind == ExperimentKind::simulate || s.kind == ExperimentKind::beta_sweep ||
      s.kind == ExperimentKind::field_phase_space) {
    const double r = e.delta / s.dt;
    if (std::abs(r - std::round(r)) > 1e-9 * r) violated("estimator.delta must be a multiple of dt");
  }

  const auto one_particle = [&] {
    const auto& names = quantum::catalog_names();
    if (std::find(names.begin(), names.end(), s.state) == names.end())
      violated("unknown catalog state '" + s.state + "'");
    if (quantum::is_two_particle(s.state))
      violated("kind " + std::string(experiment_kind_name(s.kind)) + " needs a one-particle state");
  };

  switch (s.kind) {
    case ExperimentKind::simulate:
      one_particle();
      if (pk != process::Kind::nelson_white && s.betas.size() != 1)
        violated("simulate takes exactly one beta (use beta_sweep for several)");
      for (double t : s.checkpoints)
        if (!(t > 0.0 && t <= s.horizon * (1.0 + 1e-12))) violated("checkpoints must lie in (0, horizon]");
      if (s.n_traj < e.groups * estimators::kMinDensitySamples)
        violated("n_traj must be at least " + std::to_string(estimators::kMinDensitySamples) +
                 " per jackknife group (estimator.groups)");
      break;
    case ExperimentKind::beta_sweep:
      one_particle();
      if (s.n_traj < e.groups * estimators::kMinDensitySamples)
        violated("n_traj must be at least " + std::to_string(estimators::kMinDensitySamples) +
                 " per jackknife group (estimator.groups)");
      if (pk != process::Kind::colored_smoothing && pk != process::Kind::phase_space)
        violated("beta_sweep needs process colored_smoothing or phase_space");
      if (!(s.horizon > e.delta)) violated("beta_sweep needs horizon > estimator.delta");
      break;
    case ExperimentKind::two_time_expectation: {
      if (!quantum::is_two_particle(s.state)) violated("two_time_expectation needs state two_particle_gaussian");
      const auto& m = s.measurement;
      harness::MeasurementPlan plan{m.measured, m.t1, m.t2, m.f, m.g, m.collapse};
      try {
        plan.validate();
      } catch (const InvalidArgument& ex) {
        violated(ex.what());
      }
      if (m.strata < 2) violated("measurement.strata must be >= 2");
      if (m.grid_points < 16 || !(m.grid_half_width > 0.0)) violated("measurement oracle grid too small");
      if (!(m.oracle_dt > 0.0) || !(m.window_cells > 0.0)) violated("measurement.oracle_dt and window_cells must be positive");
      if (!(m.control_rate >= 0.0)) violated("measurement.control_rate must be >= 0");
      if (s.n_traj < m.strata) violated("n_traj must be at least measurement.strata");
      break;
    }
    case ExperimentKind::decoupling: {
      const auto& d = s.decoupling;
      if (s.betas.size() != 1) violated("decoupling takes exactly one beta");
      for (const auto* k : {&d.k_before, &d.k_after})
        if ((*k)[1] != (*k)[2]) violated("decoupling force matrices must be symmetric");
      break;
    }
    case ExperimentKind::field_phase_space:
      if (c.mass != 1.0) violated("field modes carry unit mass; constants.mass must be 1");
      if (s.field.modes == 0 || !(s.field.length > 0.0) || !(s.field.field_mass >= 0.0))
        violated("field needs modes >= 1, length > 0, field_mass >= 0");
      if (s.betas.size() != 1 && s.betas.size() != s.field.modes)
        violated("field betas: one value or one per mode");
      if (s.field.snapshot_points < 2) violated("field.snapshot_points must be >= 2");
      if (!(s.horizon > 2.0 * e.delta)) violated("field needs horizon > 2 estimator.delta");
      {
        // Explicit Euler inflates a mode's energy by (1 + w^2 dt^2)^(T/dt) ~ exp(w^2 dt T).
        const auto& w = field::mode_basis(s.field.length, s.field.modes, s.field.field_mass).omega;
        const double w_max = *std::max_element(w.begin(), w.end());
        const double growth = w_max * w_max * s.dt * s.horizon;
        if (growth > kMaxFieldGrowth * (1.0 + 1e-12))
          violated("field stability rule omega_max^2*dt*horizon <= " + num(kMaxFieldGrowth) +
                   " violated: omega_max = " + num(w_max) + ", dt = " + num(s.dt) + ", horizon = " +
                   num(s.horizon) + " (" + num(growth) + "); use dt <= " +
                   num(kMaxFieldGrowth / (w_max * w_max * s.horizon)));
      }
      break;
    case ExperimentKind::spectrum: {
      const auto& p = s.spectrum;
      if (p.k.empty()) violated("spectrum.k must not be empty");
      for (double k : p.k)
        if (!(k > 0.0)) violated("spectrum.k must be positive");
      if (!(p.t >= 0.0)) violated("spectrum.t must be >= 0");
      if (!(c.xi > 0.0) || !(c.G > 0.0)) violated("constants.xi and constants.G must be positive");
      if (p.poisson_check && (p.points < 16 || p.points % 2 || !(p.box_length > 0.0) ||
                              p.realizations == 0 || p.bands == 0))
        violated("spectrum Poisson check needs an even points >= 16, box_length > 0, realizations and bands >= 1");
      break;
    }
    case ExperimentKind::ou_law:
      if (s.n_traj < e.groups) violated("n_traj must be at least estimator.groups");
      break;
  }
}

}  // namespace stochmech::io
