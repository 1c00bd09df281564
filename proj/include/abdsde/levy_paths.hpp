#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "abdsde/time_grid.hpp"

namespace abdsde {

// Rows index paths, columns index grid nodes (or steps).
using PathMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct JumpAtom {
  double size;       // a_j, nonzero
  double intensity;  // lambda_j >= 0
};

// Finite-activity Levy triplet: L_t = drift * t + sum of jumps, jumps of size
// a_j arriving at rate lambda_j. `sigma` only enters the orthonormalization
// measure x^2 nu(dx) + sigma^2 delta_0(dx); simulation requires sigma == 0.
struct LevySpec {
  double drift = 0.0;
  double sigma = 0.0;
  std::vector<JumpAtom> atoms;

  void validate() const;
  double total_intensity() const;
  // int x^k nu(dx) = sum_j lambda_j a_j^k.
  double jump_moment(int k) const;
  // E[L_1^(i)]: drift + sum lambda_j a_j for i = 1, sum lambda_j a_j^i otherwise.
  double mean_rate(int order) const;
};

struct JumpEvent {
  double time;
  double size;
};

// Simulated drivers: one Brownian increment sequence per scenario (shared by
// all Levy paths of that scenario) and exact jump event lists per path.
// Global path index is scenario * paths_per_scenario + path.
class PathBundle {
 public:
  PathBundle(TimeGrid grid, std::size_t scenarios, std::size_t paths_per_scenario);

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t scenarios() const noexcept { return scenarios_; }
  std::size_t paths_per_scenario() const noexcept { return paths_per_scenario_; }
  std::size_t total_paths() const noexcept { return scenarios_ * paths_per_scenario_; }
  std::size_t path_index(std::size_t scenario, std::size_t path) const noexcept {
    return scenario * paths_per_scenario_ + path;
  }

  // scenarios x N, increments of B over the main steps [t_k, t_{k+1}], k < N.
  const PathMatrix& brownian() const noexcept { return brownian_; }
  // total_paths x nodes.
  const PathMatrix& levy() const noexcept { return levy_; }
  const std::vector<JumpEvent>& jumps(std::size_t global_path) const { return jumps_[global_path]; }
  // Number of jumps in [0, t_k].
  std::size_t jump_count(std::size_t global_path, std::size_t node) const;

  // Teugels increments dH[i-1](path, k) over [t_k, t_{k+1}]; empty until
  // assign_teugels_increments is called.
  std::size_t teugels_order() const noexcept { return teugels_.size(); }
  const PathMatrix& teugels_increment(std::size_t order) const;
  void assign_teugels_increments(std::vector<PathMatrix> increments);

  PathMatrix& mutable_brownian() noexcept { return brownian_; }
  PathMatrix& mutable_levy() noexcept { return levy_; }
  std::vector<JumpEvent>& mutable_jumps(std::size_t global_path) { return jumps_[global_path]; }

 private:
  TimeGrid grid_;
  std::size_t scenarios_;
  std::size_t paths_per_scenario_;
  PathMatrix brownian_;
  PathMatrix levy_;
  std::vector<std::vector<JumpEvent>> jumps_;
  std::vector<PathMatrix> teugels_;
};

// Counter-based seeding: the stream for (seed, scenario, path, tag) is
// independent of the order in which streams are consumed.
std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t scenario, std::uint64_t path,
                                 std::uint64_t tag);

PathBundle sample_paths(const LevySpec& spec, const TimeGrid& grid, std::size_t scenarios,
                        std::size_t paths_per_scenario, std::uint64_t seed,
                        std::size_t threads = 1);

// L^(1) = L; L^(i) for i >= 2 is the running sum of i-th powers of jumps.
PathMatrix power_jump(const PathBundle& bundle, int order);

// Y^(i)_t = L^(i)_t - t * E[L_1^(i)].
PathMatrix compensate(const PathBundle& bundle, const LevySpec& spec, int order);

// Columnar debug dump "node,path,L".
void write_levy_dump(const PathBundle& bundle, std::ostream& out);

}  // namespace abdsde
