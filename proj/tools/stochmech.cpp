// Command-line surface: one experiment per invocation.
//   stochmech <simulate|sweep|measure|field|spectrum> [spec.json] [--set key=value]... [--out DIR]
//   stochmech catalog
//   stochmech trace DIR
// Exit codes: 0 success, 2 validation error, 3 runtime simulation error.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "stochmech/errors.hpp"
#include "stochmech/io/catalog.hpp"
#include "stochmech/io/run.hpp"
#include "stochmech/io/spec.hpp"

namespace {

using namespace stochmech;
using nlohmann::json;

constexpr int kOk = 0, kValidation = 2, kRuntime = 3;

struct RunArgs {
  std::string spec_file;
  std::vector<std::string> sets;
  std::string out;
  long long threads = -1;
  long long seed = -1;
  bool print_spec = false;
};

// Kinds each run subcommand accepts; the first is the default.
std::vector<io::ExperimentKind> accepted(const std::string& sub) {
  using K = io::ExperimentKind;
  if (sub == "simulate") return {K::simulate, K::ou_law, K::decoupling};
  if (sub == "sweep") return {K::beta_sweep};
  if (sub == "measure") return {K::two_time_expectation};
  if (sub == "field") return {K::field_phase_space};
  return {K::spectrum};
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read spec file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run(const std::string& sub, const RunArgs& a) {
  json doc = a.spec_file.empty() ? json::object() : json::parse(read_file(a.spec_file), nullptr, false);
  if (doc.is_discarded()) throw ConfigError("spec file " + a.spec_file + " is not well-formed JSON");
  const auto kinds = accepted(sub);
  if (!doc.is_object()) throw ConfigError("spec: document must be a JSON object");
  if (!doc.contains("kind")) doc["kind"] = io::experiment_kind_name(kinds.front());

  std::vector<io::Override> overrides;
  for (const auto& s : a.sets) overrides.push_back(io::parse_override(s));
  if (!a.out.empty()) overrides.push_back({"output", json(a.out).dump()});
  if (a.threads >= 0) overrides.push_back({"threads", std::to_string(a.threads)});
  if (a.seed >= 0) overrides.push_back({"seed", std::to_string(a.seed)});
  const auto spec = io::parse_spec_json(std::move(doc), overrides);
  if (std::find(kinds.begin(), kinds.end(), spec.kind) == kinds.end())
    throw ConfigError("subcommand '" + sub + "' cannot run kind '" +
                      std::string(io::experiment_kind_name(spec.kind)) + "'");
  if (a.print_spec) {
    std::cout << io::serialize(spec);
    return kOk;
  }
  const auto result = io::run_experiment(spec);
  std::cout << result.summary.dump(2) << "\n";
  std::cerr << "wrote " << result.files.size() + 1 << " files to " << result.directory.string() << " in "
            << result.wall_seconds << " s\n";
  return kOk;
}

int trace(const std::string& dir) {
  const auto rep = io::trace_tree(dir);
  for (const auto& m : rep.mismatched)
    std::cout << "MISMATCH " << m.file.string() << " expected " << m.expected << " found " << m.found << "\n";
  for (const auto& p : rep.unhashed) std::cout << "NO-HASH " << p.string() << "\n";
  for (const auto& p : rep.orphaned) std::cout << "NO-SPEC " << p.string() << "\n";
  std::cout << (rep.ok() ? "OK " : "FAILED ") << rep.checked << " files checked\n";
  return rep.ok() ? kOk : kValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic-mechanics experiments"};
  app.require_subcommand(1);

  RunArgs args;
  std::string trace_dir;
  for (const char* name : {"simulate", "sweep", "measure", "field", "spectrum"}) {
    auto* s = app.add_subcommand(name, std::string("run a ") + name + " experiment");
    s->add_option("spec", args.spec_file, "JSON experiment spec (optional)");
    s->add_option("--set", args.sets, "override a spec key, e.g. --set betas=[10,30,100]");
    s->add_option("--out", args.out, "output directory");
    s->add_option("--threads", args.threads, "worker threads");
    s->add_option("--seed", args.seed, "master seed");
    s->add_flag("--print-spec", args.print_spec, "print the resolved spec and exit");
  }
  app.add_subcommand("catalog", "list states, processes and experiment kinds");
  auto* tr = app.add_subcommand("trace", "verify spec hashes of every output under a directory");
  tr->add_option("dir", trace_dir, "directory tree")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    if (sub == "catalog") {
      std::cout << io::list_catalog().dump(2) << "\n";
      return kOk;
    }
    if (sub == "trace") return trace(trace_dir);
    return run(sub, args);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const SimulationError& e) {
    std::cerr << "error [" << e.module() << "]: " << e.what() << "\n";
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}
