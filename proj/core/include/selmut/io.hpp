#pragma once

#include <string>

#include "selmut/trajectory.hpp"

namespace selmut {

/// Shortest decimal rendering that round-trips the double exactly.
std::string format_double(double v);

/// Writes content to path.tmp, then renames it over path.
void write_file_atomic(const std::string& path, const std::string& content);

/// Whole-file read; throws std::runtime_error if the file cannot be opened.
std::string read_file(const std::string& path);

/// Columns t, I, max_u, argmax_u, rho, dI_dt, tv_I_cum and, when requested,
/// clamp_events.
std::string trajectory_csv(const Trajectory& traj, bool with_clamp_events);

/// Columns x, u, n_rescaled with n_rescaled = exp((u - max u) / eps).
std::string snapshot_csv(const Snapshot& snapshot, double eps);

/// File name of the snapshot at time t, e.g. snapshot_t2.5000.csv.
std::string snapshot_file_name(double t);

}  // namespace selmut
