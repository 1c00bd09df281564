#pragma once

#include <cstddef>
#include <vector>

namespace abdsde {

// Nodes 0 = t_0 < ... < t_N = T < ... < t_{N+N_ext} = T + K_ext, uniform on
// each of the two pieces.
class TimeGrid {
 public:
  TimeGrid(double horizon, double extension, std::size_t steps, std::size_t extension_steps);

  double horizon() const noexcept { return horizon_; }
  double extension() const noexcept { return extension_; }
  std::size_t steps() const noexcept { return steps_; }
  std::size_t extension_steps() const noexcept { return extension_steps_; }

  // Index of the node t = T.
  std::size_t terminal_index() const noexcept { return steps_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t last_index() const noexcept { return nodes_.size() - 1; }

  double time(std::size_t k) const { return nodes_[k]; }
  const std::vector<double>& nodes() const noexcept { return nodes_; }

  // Width of the interval [t_k, t_{k+1}].
  double step(std::size_t k) const { return nodes_[k + 1] - nodes_[k]; }
  double main_step() const noexcept { return horizon_ / static_cast<double>(steps_); }

  // Node closest to t (ties go to the later node). t is clamped to the grid.
  std::size_t nearest_index(double t) const;

  bool same_as(const TimeGrid& other) const noexcept;

 private:
  double horizon_;
  double extension_;
  std::size_t steps_;
  std::size_t extension_steps_;
  std::vector<double> nodes_;
};

}  // namespace abdsde
