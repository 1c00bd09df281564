#include "abdsde/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "abdsde/error.hpp"
#include "abdsde/teugels_basis.hpp"

namespace abdsde {

namespace {

using nlohmann::json;

// Object reader that refuses keys it was never asked about.
class Fields {
 public:
  Fields(const json& object, std::string where) : object_(object), where_(std::move(where)) {
    if (!object_.is_object()) fail_validation("config: " + where_ + " must be an object");
  }

  ~Fields() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& item : object_.items())
      if (!seen_.count(item.key()))
        fail_validation("config: unknown field '" + where_ + "." + item.key() + "'");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return object_.contains(key);
  }

  const json& at(const std::string& key) {
    if (!has(key)) fail_validation("config: missing field '" + where_ + "." + key + "'");
    return object_.at(key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    try {
      return object_.at(key).get<T>();
    } catch (const json::exception&) {
      fail_validation("config: field '" + where_ + "." + key + "' has the wrong type");
    }
  }

  template <class T>
  T require(const std::string& key) {
    const json& value = at(key);
    try {
      return value.get<T>();
    } catch (const json::exception&) {
      fail_validation("config: field '" + where_ + "." + key + "' has the wrong type");
    }
  }

  const std::string& where() const { return where_; }

 private:
  const json& object_;
  std::string where_;
  std::set<std::string> seen_;
};

[[noreturn]] void unknown_family(const std::string& where, const std::string& name) {
  fail_validation("config: unknown " + where + " '" + name + "'");
}

LevySpec parse_levy(const json& node) {
  Fields fields(node, "problem.levy");
  LevySpec spec;
  spec.drift = fields.get<double>("b", 0.0);
  spec.sigma = fields.get<double>("sigma", 0.0);
  if (fields.has("atoms")) {
    const json& atoms = fields.at("atoms");
    if (!atoms.is_array()) fail_validation("config: problem.levy.atoms must be an array");
    for (const auto& atom : atoms) {
      Fields a(atom, "problem.levy.atoms[]");
      spec.atoms.push_back({a.require<double>("size"), a.require<double>("intensity")});
    }
  }
  return spec;
}

GeneratorSpec parse_generator(const json& node, const std::string& where) {
  Fields fields(node, where);
  GeneratorSpec gen;
  const auto family = fields.get<std::string>("family", "zero");
  if (family == "zero") gen.family = GeneratorFamily::Zero;
  else if (family == "constant") gen.family = GeneratorFamily::Constant;
  else if (family == "affine") gen.family = GeneratorFamily::Affine;
  else if (family == "anticipated_affine") gen.family = GeneratorFamily::AnticipatedAffine;
  else if (family == "clamped") gen.family = GeneratorFamily::Clamped;
  else unknown_family(where + ".family", family);
  gen.lipschitz_c = fields.get<double>("lipschitz_c", 0.0);
  gen.alpha1 = fields.get<double>("alpha1", 0.0);
  gen.alpha2 = fields.get<double>("alpha2", 0.0);
  if (fields.has("params")) {
    Fields p(fields.at("params"), where + ".params");
    gen.params.y = p.get<double>("y", 0.0);
    gen.params.z = p.get<double>("z", 0.0);
    gen.params.pi = p.get<double>("pi", 0.0);
    gen.params.zeta = p.get<double>("zeta", 0.0);
    gen.params.constant = p.get<double>("constant", 0.0);
    gen.params.lower = p.get<double>("lower", -1.0);
    gen.params.upper = p.get<double>("upper", 1.0);
  }
  return gen;
}

DelaySpec parse_delay(const json& node, const std::string& where) {
  Fields fields(node, where);
  const auto kind = fields.get<std::string>("kind", "none");
  if (kind == "none") return DelaySpec::none();
  if (kind == "constant") return DelaySpec::constant(fields.require<double>("delta"));
  if (kind == "affine")
    return DelaySpec::affine(fields.require<double>("rho"), fields.require<double>("delta0"));
  unknown_family(where + ".kind", kind);
}

BoundarySpec parse_boundary(Fields& problem) {
  BoundarySpec b;
  if (problem.has("xi")) {
    Fields f(problem.at("xi"), "problem.xi");
    const auto family = f.get<std::string>("family", "constant");
    if (family == "constant") {
      b.xi.family = TerminalFamily::Constant;
      b.xi.a = f.get<double>("value", f.get<double>("a", 0.0));
    } else {
      if (family == "linear_L") b.xi.family = TerminalFamily::LinearLevy;
      else if (family == "linear_Y1") b.xi.family = TerminalFamily::LinearCompensated;
      else unknown_family("problem.xi.family", family);
      b.xi.a = f.get<double>("a", 0.0);
      b.xi.b = f.get<double>("b", 1.0);
    }
  }
  if (problem.has("eta")) {
    Fields f(problem.at("eta"), "problem.eta");
    const auto family = f.get<std::string>("family", "hold_terminal");
    if (family == "hold_terminal") {
      b.eta.family = ExtensionFamily::HoldTerminal;
    } else if (family == "constant") {
      b.eta.family = ExtensionFamily::Constant;
      b.eta.v0 = f.require<double>("value");
    } else if (family == "affine_t") {
      b.eta.family = ExtensionFamily::AffineTime;
      b.eta.v0 = f.require<double>("v0");
      b.eta.v1 = f.get<double>("v1", 0.0);
    } else {
      unknown_family("problem.eta.family", family);
    }
  }
  if (problem.has("vartheta")) {
    Fields f(problem.at("vartheta"), "problem.vartheta");
    const auto family = f.get<std::string>("family", "zero");
    if (family == "zero") {
      b.vartheta.family = ExtensionZFamily::Zero;
    } else if (family == "constant") {
      b.vartheta.family = ExtensionZFamily::Constant;
      b.vartheta.value = f.require<double>("value");
    } else {
      unknown_family("problem.vartheta.family", family);
    }
  }
  if (problem.has("barrier")) {
    Fields f(problem.at("barrier"), "problem.barrier");
    const auto family = f.get<std::string>("family", "none");
    if (family == "none") {
      b.barrier.family = BarrierFamily::None;
    } else if (family == "constant") {
      b.barrier.family = BarrierFamily::Constant;
      b.barrier.s0 = f.require<double>("value");
    } else if (family == "affine_t" || family == "affine_L") {
      b.barrier.family = family == "affine_t" ? BarrierFamily::AffineTime : BarrierFamily::AffineLevy;
      b.barrier.s0 = f.require<double>("s0");
      b.barrier.s1 = f.get<double>("s1", 0.0);
    } else {
      unknown_family("problem.barrier.family", family);
    }
  }
  return b;
}

std::size_t count_field(Fields& fields, const std::string& key, std::size_t fallback) {
  if (!fields.has(key)) return fallback;
  const json& value = fields.at(key);
  if (!value.is_number_integer() || value.get<long long>() < 0)
    fail_validation("config: field '" + fields.where() + "." + key + "' must be a nonnegative integer");
  return value.get<std::size_t>();
}

NumericsConfig parse_numerics(const json& node) {
  Fields fields(node, "numerics");
  NumericsConfig n;
  n.steps = count_field(fields, "N", n.steps);
  n.extension_steps = count_field(fields, "N_ext", n.extension_steps);
  n.paths = count_field(fields, "n_paths", n.paths);
  n.scenarios = count_field(fields, "n_b_scenarios", n.scenarios);
  if (fields.has("p")) {
    const json& p = fields.at("p");
    if (p.is_string()) {
      if (p.get<std::string>() != "auto") fail_validation("config: numerics.p must be \"auto\" or an integer");
    } else {
      n.order = count_field(fields, "p", 0);
    }
  }
  n.degree = fields.get<int>("degree", n.degree);
  n.jump_count_features = fields.get<bool>("jump_count_features", false);
  n.reflect = fields.get<bool>("reflect", false);
  const auto mode = fields.get<std::string>("mode", "direct");
  if (mode == "direct") n.mode = SolveMode::Direct;
  else if (mode == "picard") n.mode = SolveMode::Picard;
  else unknown_family("numerics.mode", mode);
  const auto z_estimator = fields.get<std::string>("z_estimator", "joint");
  if (z_estimator == "joint") n.z_estimator = ZEstimator::Joint;
  else if (z_estimator == "covariance") n.z_estimator = ZEstimator::Covariance;
  else unknown_family("numerics.z_estimator", z_estimator);
  n.picard_tol = fields.get<double>("picard_tol", n.picard_tol);
  n.picard_max_iters = fields.get<int>("picard_max_iters", n.picard_max_iters);
  if (fields.has("beta")) {
    const json& beta = fields.at("beta");
    if (beta.is_string()) {
      if (beta.get<std::string>() != "auto") fail_validation("config: numerics.beta must be \"auto\" or a number");
    } else {
      n.beta = fields.get<double>("beta", 0.0);
    }
  }
  n.inner_sweeps = fields.get<int>("inner_sweeps", n.inner_sweeps);
  return n;
}

}  // namespace

TimeGrid RunConfig::grid() const {
  return TimeGrid(problem.horizon, problem.extension, numerics.steps, numerics.extension_steps);
}

std::size_t RunConfig::resolved_order() const {
  return numerics.order.value_or(max_order(problem.levy));
}

SolverOptions RunConfig::solver_options(std::size_t threads) const {
  SolverOptions options;
  options.reflect = numerics.reflect;
  options.mode = numerics.mode;
  options.regression.degree = numerics.degree;
  options.regression.jump_count_features = numerics.jump_count_features;
  options.z_estimator = numerics.z_estimator;
  options.inner_sweeps = numerics.inner_sweeps;
  options.picard_tol = numerics.picard_tol;
  options.picard_max_iters = numerics.picard_max_iters;
  options.beta = numerics.beta;
  options.threads = threads;
  return options;
}

RunConfig parse_config(std::istream& in) {
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    fail_validation(std::string("config: malformed JSON: ") + e.what());
  }
  Fields top(root, "config");
  RunConfig config;
  {
    Fields problem(top.at("problem"), "problem");
    config.problem.horizon = problem.require<double>("T");
    config.problem.extension = problem.get<double>("K_ext", 0.0);
    if (problem.has("levy")) config.problem.levy = parse_levy(problem.at("levy"));
    if (problem.has("f")) config.problem.f = parse_generator(problem.at("f"), "problem.f");
    if (problem.has("g")) config.problem.g = parse_generator(problem.at("g"), "problem.g");
    if (problem.has("phi")) config.problem.phi = parse_delay(problem.at("phi"), "problem.phi");
    if (problem.has("psi")) config.problem.psi = parse_delay(problem.at("psi"), "problem.psi");
    config.problem.boundary = parse_boundary(problem);
  }
  if (top.has("numerics")) config.numerics = parse_numerics(top.at("numerics"));
  if (top.has("rng")) {
    Fields rng(top.at("rng"), "rng");
    config.seed = rng.get<std::uint64_t>("seed", config.seed);
  }
  if (top.has("output")) {
    Fields output(top.at("output"), "output");
    config.output.directory = output.get<std::string>("directory", config.output.directory);
    config.output.verbosity = output.get<int>("verbosity", config.output.verbosity);
  }
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_validation("config: cannot open '" + path + "'");
  return parse_config(in);
}

}  // namespace abdsde
