#include "abdsde/levy_paths.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <set>
#include <string>

#include "abdsde/error.hpp"
#include "abdsde/parallel.hpp"

namespace abdsde {

namespace {

constexpr std::uint64_t kBrownianTag = 0x42726f776e69616eULL;
constexpr std::uint64_t kJumpTag = 0x4c6576794a756d70ULL;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double integer_power(double x, int n) {
  double result = 1.0;
  for (int i = 0; i < n; ++i) result *= x;
  return result;
}

}  // namespace

void LevySpec::validate() const {
  if (!std::isfinite(drift)) fail_validation("Levy drift must be finite");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) fail_validation("sigma must be finite and >= 0");
  std::set<double> sizes;
  for (const auto& atom : atoms) {
    if (atom.size == 0.0 || !std::isfinite(atom.size))
      fail_validation("jump atom sizes must be finite and nonzero");
    if (!(atom.intensity >= 0.0) || !std::isfinite(atom.intensity))
      fail_validation("jump intensities must be finite and >= 0");
    if (!sizes.insert(atom.size).second)
      fail_validation("jump atom sizes must be pairwise distinct");
  }
}

double LevySpec::total_intensity() const {
  double total = 0.0;
  for (const auto& atom : atoms) total += atom.intensity;
  return total;
}

double LevySpec::jump_moment(int k) const {
  double m = 0.0;
  for (const auto& atom : atoms) m += atom.intensity * integer_power(atom.size, k);
  return m;
}

double LevySpec::mean_rate(int order) const {
  if (order < 1) fail_validation("power-jump order must be >= 1");
  return order == 1 ? drift + jump_moment(1) : jump_moment(order);
}

PathBundle::PathBundle(TimeGrid grid, std::size_t scenarios, std::size_t paths_per_scenario)
    : grid_(std::move(grid)),
      scenarios_(scenarios),
      paths_per_scenario_(paths_per_scenario),
      brownian_(PathMatrix::Zero(static_cast<Eigen::Index>(scenarios),
                                 static_cast<Eigen::Index>(grid_.steps()))),
      levy_(PathMatrix::Zero(static_cast<Eigen::Index>(scenarios * paths_per_scenario),
                             static_cast<Eigen::Index>(grid_.node_count()))),
      jumps_(scenarios * paths_per_scenario) {}

std::size_t PathBundle::jump_count(std::size_t global_path, std::size_t node) const {
  const double t = grid_.time(node);
  const auto& events = jumps_[global_path];
  return static_cast<std::size_t>(
      std::upper_bound(events.begin(), events.end(), t,
                       [](double value, const JumpEvent& e) { return value < e.time; }) -
      events.begin());
}

const PathMatrix& PathBundle::teugels_increment(std::size_t order) const {
  if (order < 1 || order > teugels_.size())
    fail_dimension("Teugels increment of order " + std::to_string(order) +
                   " requested, bundle holds " + std::to_string(teugels_.size()));
  return teugels_[order - 1];
}

void PathBundle::assign_teugels_increments(std::vector<PathMatrix> increments) {
  for (const auto& m : increments) {
    if (m.rows() != levy_.rows() || m.cols() + 1 != levy_.cols())
      fail_dimension("Teugels increments do not match the bundle shape");
  }
  teugels_ = std::move(increments);
}

std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t scenario, std::uint64_t path,
                                 std::uint64_t tag) {
  std::uint64_t h = splitmix64(seed ^ tag);
  h = splitmix64(h ^ scenario);
  h = splitmix64(h ^ (path * 0xd6e8feb86659fd93ULL));
  return h;
}

PathBundle sample_paths(const LevySpec& spec, const TimeGrid& grid, std::size_t scenarios,
                        std::size_t paths_per_scenario, std::uint64_t seed,
                        std::size_t threads) {
  spec.validate();
  if (spec.sigma > 0.0)
    fail_validation("simulation requires sigma = 0: the driver is pure jump; sigma > 0 is "
                    "only supported for basis construction");
  if (scenarios == 0 || paths_per_scenario == 0)
    fail_validation("need at least one Brownian scenario and one Levy path");

  PathBundle bundle(grid, scenarios, paths_per_scenario);
  const std::size_t steps = grid.steps();

  auto& brownian = bundle.mutable_brownian();
  for (std::size_t s = 0; s < scenarios; ++s) {
    std::mt19937_64 engine(derive_stream_seed(seed, s, 0, kBrownianTag));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t k = 0; k < steps; ++k)
      brownian(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(k)) =
          std::sqrt(grid.step(k)) * normal(engine);
  }

  const double rate = spec.total_intensity();
  const double end_time = grid.time(grid.last_index());
  std::vector<double> cumulative;
  for (const auto& atom : spec.atoms)
    cumulative.push_back((cumulative.empty() ? 0.0 : cumulative.back()) + atom.intensity);

  auto& levy = bundle.mutable_levy();
  parallel_for(bundle.total_paths(), threads, [&](std::size_t global) {
    const std::size_t s = global / paths_per_scenario;
    const std::size_t j = global % paths_per_scenario;
    auto& events = bundle.mutable_jumps(global);
    if (rate > 0.0) {
      std::mt19937_64 engine(derive_stream_seed(seed, s, j, kJumpTag));
      std::exponential_distribution<double> waiting(rate);
      std::uniform_real_distribution<double> uniform(0.0, rate);
      double t = waiting(engine);
      while (t <= end_time) {
        const double u = uniform(engine);
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        std::size_t atom = static_cast<std::size_t>(it - cumulative.begin());
        atom = std::min(atom, spec.atoms.size() - 1);
        events.push_back({t, spec.atoms[atom].size});
        t += waiting(engine);
      }
    }
    double jump_sum = 0.0;
    std::size_t next = 0;
    const auto row = static_cast<Eigen::Index>(global);
    for (std::size_t k = 0; k < grid.node_count(); ++k) {
      const double tk = grid.time(k);
      while (next < events.size() && events[next].time <= tk) jump_sum += events[next++].size;
      levy(row, static_cast<Eigen::Index>(k)) = spec.drift * tk + jump_sum;
    }
  });
  return bundle;
}

PathMatrix power_jump(const PathBundle& bundle, int order) {
  if (order < 1) fail_validation("power-jump order must be >= 1, got " + std::to_string(order));
  if (order == 1) return bundle.levy();
  const auto& grid = bundle.grid();
  PathMatrix out(bundle.levy().rows(), bundle.levy().cols());
  for (std::size_t p = 0; p < bundle.total_paths(); ++p) {
    const auto& events = bundle.jumps(p);
    double sum = 0.0;
    std::size_t next = 0;
    for (std::size_t k = 0; k < grid.node_count(); ++k) {
      while (next < events.size() && events[next].time <= grid.time(k))
        sum += integer_power(events[next++].size, order);
      out(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(k)) = sum;
    }
  }
  return out;
}

PathMatrix compensate(const PathBundle& bundle, const LevySpec& spec, int order) {
  PathMatrix values = power_jump(bundle, order);
  const double rate = spec.mean_rate(order);
  const auto& grid = bundle.grid();
  for (Eigen::Index k = 0; k < values.cols(); ++k)
    values.col(k).array() -= grid.time(static_cast<std::size_t>(k)) * rate;
  return values;
}

void write_levy_dump(const PathBundle& bundle, std::ostream& out) {
  const auto precision = out.precision(17);
  out << "node,path,L\n";
  const auto& levy = bundle.levy();
  for (Eigen::Index k = 0; k < levy.cols(); ++k)
    for (Eigen::Index p = 0; p < levy.rows(); ++p) out << k << ',' << p << ',' << levy(p, k) << '\n';
  out.precision(precision);
}

}  // namespace abdsde
