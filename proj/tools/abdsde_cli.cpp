#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "abdsde/commands.hpp"
#include "abdsde/config.hpp"
#include "abdsde/error.hpp"

using namespace abdsde;

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  bool debug = false;

  CommandOptions options() const {
    CommandOptions o;
    if (!out.empty()) o.out_dir = out;
    o.seed = seed;
    o.threads = threads;
    o.debug = debug;
    return o;
  }
};

void add_common(CLI::App* cmd, Flags& flags, bool needs_config) {
  auto* cfg = cmd->add_option("--config", flags.config, "configuration file (JSON)");
  if (needs_config) cfg->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", flags.out, "output directory (overrides output.directory)");
  cmd->add_option("--seed", flags.seed, "RNG seed (overrides rng.seed)");
  cmd->add_option("--threads", flags.threads, "worker threads; results do not depend on it")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--debug", flags.debug, "write debug dumps");
}

int run(CLI::App& app, Flags& flags, const std::vector<std::string>& cases, bool cases_given,
        std::optional<double> tolerance, const std::vector<std::size_t>& levels) {
  const CommandOptions options = flags.options();
  if (app.got_subcommand("simulate")) {
    cmd_simulate(load_config(flags.config), options, std::cout);
    return kExitSuccess;
  }
  if (app.got_subcommand("solve")) {
    cmd_solve(load_config(flags.config), options, std::cout);
    return kExitSuccess;
  }
  if (app.got_subcommand("basis")) {
    cmd_basis(load_config(flags.config), options, std::cout);
    return kExitSuccess;
  }
  if (app.got_subcommand("verify")) {
    std::optional<std::vector<std::string>> selection;
    if (cases_given) {
      selection.emplace();
      for (const auto& name : cases)
        if (!name.empty()) selection->push_back(name);
    }
    const auto report = cmd_verify(selection, tolerance, options, std::cout);
    return report.failures() == 0 ? kExitSuccess : kExitVerification;
  }
  if (app.got_subcommand("convergence")) {
    const auto report = cmd_convergence(load_config(flags.config), levels, options, std::cout);
    return report.monotone ? kExitSuccess : kExitVerification;
  }
  return kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anticipated reflected BDSDE solver driven by Teugels martingales"};
  app.require_subcommand(1);
  Flags flags;

  add_common(app.add_subcommand("simulate", "path statistics and bracket-orthogonality table"), flags, true);
  add_common(app.add_subcommand("solve", "solve the configured problem"), flags, true);
  add_common(app.add_subcommand("basis", "dump moments, Gram matrix and basis coefficients"), flags, true);

  std::vector<std::string> cases;
  std::optional<double> tolerance;
  auto* verify = app.add_subcommand("verify", "run the oracle suite");
  add_common(verify, flags, false);
  auto* cases_opt = verify->add_option("--cases", cases, "case names (default: all)")->expected(0, -1);
  verify->add_option("--tolerance", tolerance, "replace every per-case tolerance");
  verify->add_flag_callback(
      "--list",
      [] {
        for (const auto& name : verify_case_names()) std::cout << name << '\n';
        std::exit(0);
      },
      "list case names");

  std::vector<std::size_t> levels{50, 100, 200};
  auto* convergence = app.add_subcommand("convergence", "refinement study against the closed form");
  add_common(convergence, flags, true);
  convergence->add_option("--levels", levels, "list of N values")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitSuccess : kExitValidation;
  }

  try {
    return run(app, flags, cases, cases_opt->count() > 0, tolerance, levels);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::Validation ? kExitValidation : kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}
