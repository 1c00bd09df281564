#include "abdsde/time_grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "abdsde/error.hpp"

namespace abdsde {

TimeGrid::TimeGrid(double horizon, double extension, std::size_t steps,
                   std::size_t extension_steps)
    : horizon_(horizon), extension_(extension), steps_(steps), extension_steps_(extension_steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) fail_validation("horizon T must be positive");
  if (!(extension >= 0.0) || !std::isfinite(extension))
    fail_validation("extension length K_ext must be nonnegative");
  if (steps == 0) fail_validation("main step count N must be at least 1");
  if (extension > 0.0 && extension_steps == 0)
    fail_validation("K_ext > 0 requires N_ext >= 1");
  if (extension == 0.0 && extension_steps != 0)
    fail_validation("K_ext = 0 requires N_ext = 0");

  nodes_.reserve(steps + extension_steps + 1);
  for (std::size_t k = 0; k < steps; ++k)
    nodes_.push_back(horizon * static_cast<double>(k) / static_cast<double>(steps));
  nodes_.push_back(horizon);
  for (std::size_t j = 1; j <= extension_steps; ++j) {
    nodes_.push_back(j == extension_steps
                         ? horizon + extension
                         : horizon + extension * static_cast<double>(j) /
                                         static_cast<double>(extension_steps));
  }
}

std::size_t TimeGrid::nearest_index(double t) const {
  if (t <= nodes_.front()) return 0;
  if (t >= nodes_.back()) return last_index();
  auto upper = std::lower_bound(nodes_.begin(), nodes_.end(), t);
  auto hi = static_cast<std::size_t>(upper - nodes_.begin());
  std::size_t lo = hi - 1;
  return (t - nodes_[lo] < nodes_[hi] - t) ? lo : hi;
}

bool TimeGrid::same_as(const TimeGrid& other) const noexcept {
  return nodes_ == other.nodes_ && steps_ == other.steps_;
}

}  // namespace abdsde
