#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "stochmech/harness/measurement.hpp"
#include "stochmech/process/samplers.hpp"
#include "stochmech/quantum/catalog.hpp"

namespace stochmech::io {

enum class ExperimentKind {
  simulate,
  ou_law,
  beta_sweep,
  two_time_expectation,
  decoupling,
  field_phase_space,
  spectrum,
};

ExperimentKind parse_experiment_kind(std::string_view name);
std::string_view experiment_kind_name(ExperimentKind k);
const std::vector<ExperimentKind>& experiment_kinds();

struct Constants {
  double hbar = 1.0;
  double mass = 1.0;
  double omega = 1.0;
  double sigma0 = 1.0;
  double x0 = 0.0;
  double p0 = 0.0;
  std::array<double, 3> n0 = {1.0, 0.6, 1.0};
  std::optional<double> eps;  ///< absent: sqrt(hbar / mass); present: must equal it
  double xi = 1.0;
  double G = 0.07957747154594767;  ///< 4 pi G = 1

  quantum::CatalogParams catalog() const;
  double resolved_eps() const;
  bool operator==(const Constants&) const = default;
};

struct EstimatorSettings {
  std::size_t bins = 0;      ///< 0: Freedman-Diaconis
  double bandwidth = 0.0;    ///< 0: Silverman
  double delta = 0.1;
  std::size_t groups = 20;
  std::size_t grid_points = 512;
  std::size_t n_min = 50;
  bool operator==(const EstimatorSettings&) const = default;
};

struct OutputSettings {
  std::size_t trajectories = 32;  ///< trajectories written to the columnar file
  std::size_t record_stride = 100;
  bool operator==(const OutputSettings&) const = default;
};

struct MeasurementSettings {
  std::size_t measured = 0;
  double t1 = 1.0;
  double t2 = 2.0;
  harness::FunctionSpec f;
  harness::FunctionSpec g;
  bool collapse = true;
  std::size_t strata = 64;
  std::size_t grid_points = 384;
  double grid_half_width = 5.0;
  double oracle_dt = 0.01;
  double window_cells = 2.0;
  double control_rate = 0.0;
  bool width_check = true;
  bool control = true;
  bool operator==(const MeasurementSettings&) const = default;
};

struct FieldSettings {
  std::size_t modes = 16;
  double length = 1.0;
  double field_mass = 1.0;
  std::size_t snapshot_points = 128;
  bool operator==(const FieldSettings&) const = default;
};

struct SpectrumSettings {
  std::vector<double> k{2.0};
  double t = 1.0;
  bool poisson_check = true;
  std::size_t points = 1024;
  double box_length = 6.283185307179586;
  std::size_t realizations = 256;
  std::size_t bands = 8;
  bool operator==(const SpectrumSettings&) const = default;
};

struct DecouplingSettings {
  std::array<double, 4> k_before = {-1.25, 0.75, 0.75, -1.25};
  std::array<double, 4> k_after = {-1.0, 0.0, 0.0, -1.0};
  bool swap_noise = false;
  bool operator==(const DecouplingSettings&) const = default;
};

/// One experiment. `output` and `threads` do not enter the hash: they change
/// where results go and how fast, never what is written.
struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::simulate;
  std::string state = "ho_ground";
  std::string process = "nelson_white";
  Constants constants;
  std::vector<double> betas{100.0};
  std::size_t n_traj = 100000;
  double dt = 1e-3;
  double horizon = 1.0;
  std::vector<double> checkpoints;  ///< empty: five equally spaced up to the horizon
  EstimatorSettings estimator;
  process::VelocityInitProfile velocity_profile;
  OutputSettings trajectories;
  MeasurementSettings measurement;
  FieldSettings field;
  SpectrumSettings spectrum;
  DecouplingSettings decoupling;
  std::uint64_t seed = 1;
  std::string output;
  std::size_t threads = 0;

  bool operator==(const ExperimentSpec&) const = default;

  std::vector<double> resolved_checkpoints() const;
  std::size_t n_steps() const;
};

/// Defaults for a kind (state, process and betas differ between kinds).
ExperimentSpec default_spec(ExperimentKind kind);

/// `key=value` with a dotted key; the value is read as JSON when it parses,
/// else as a string.
struct Override {
  std::string key;
  std::string value;
};
Override parse_override(std::string_view text);

/// Parses a JSON document, applies overrides, fills defaults and validates.
/// ConfigError lists unknown keys or names the violated constraint.
ExperimentSpec parse_spec(std::string_view text, const std::vector<Override>& overrides = {});
ExperimentSpec parse_spec_json(nlohmann::json doc, const std::vector<Override>& overrides = {});

nlohmann::json to_json(const ExperimentSpec& spec);
/// Full textual form (pretty JSON, sorted keys).
std::string serialize(const ExperimentSpec& spec);

/// Sorted-key compact JSON without `output` and `threads`.
std::string canonical_form(const ExperimentSpec& spec);
/// Lowercase hex SHA-256 of the canonical form.
std::string spec_hash(const ExperimentSpec& spec);
std::string sha256_hex(std::string_view data);

/// Throws ConfigError naming the violated constraint.
void validate(const ExperimentSpec& spec);

}  // namespace stochmech::io
