#pragma once

#include <charconv>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

#include "ptsync/scalar_lab.hpp"
#include "ptsync/simulator.hpp"

namespace ptsync {

/// Shortest decimal text that parses back to exactly v.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline void write_trajectory_header(std::ostream& os, const Trajectory& traj, bool full_state) {
  os << "t,W,E";
  if (full_state) {
    for (std::size_t i = 0; i < traj.nodes; ++i)
      for (std::size_t d = 0; d < traj.dims; ++d) os << ",x_" << i + 1 << '_' << d + 1;
    if (traj.pinned)
      for (std::size_t d = 0; d < traj.dims; ++d) os << ",x0_" << d + 1;
  }
  os << '\n';
}

inline void write_trajectory_row(std::ostream& os, const Trajectory& traj, std::size_t k,
                                 bool full_state) {
  os << format_double(traj.times[k]) << ',' << format_double(traj.lyapunov[k]) << ','
     << format_double(traj.error[k]);
  if (full_state) {
    for (double v : traj.states[k]) os << ',' << format_double(v);
    if (traj.pinned)
      for (double v : traj.targets[k]) os << ',' << format_double(v);
  }
  os << '\n';
}

/// Columns t,W,E and optionally every node state (then x0). A nonempty
/// truncation reason appends a "# truncated: reason" marker row.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj, bool full_state,
                                 std::string_view truncated = {}) {
  write_trajectory_header(os, traj, full_state);
  for (std::size_t k = 0; k < traj.size(); ++k) write_trajectory_row(os, traj, k, full_state);
  if (!truncated.empty()) os << "# truncated: " << truncated << '\n';
}

inline void write_scalar_csv(std::ostream& os, const ScalarTrajectory& traj,
                             std::span<const double> closed) {
  os << "t,V_numeric,V_closed_form\n";
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    os << format_double(traj.times[k]) << ',' << format_double(traj.values[k]) << ','
       << format_double(closed[k]) << '\n';
  }
}

}  // namespace ptsync
