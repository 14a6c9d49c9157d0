#include "selmut/trajectory.hpp"

#include <cmath>
#include <stdexcept>

namespace selmut {

void Trajectory::append(double t, double I_value, double max_u_value, double argmax_x,
                        double rho_value, double leak, std::uint64_t clamps) {
  times.push_back(t);
  I.push_back(I_value);
  max_u.push_back(max_u_value);
  argmax_u.push_back(argmax_x);
  rho.push_back(rho_value);
  boundary_leak.push_back(leak);
  clamp_events.push_back(clamps);
}

void Trajectory::finalize() {
  const std::size_t n = size();
  dI_dt.assign(n, 0.0);
  tv_I_cum.assign(n, 0.0);
  if (n < 2) return;
  dI_dt[0] = (I[1] - I[0]) / (times[1] - times[0]);
  dI_dt[n - 1] = (I[n - 1] - I[n - 2]) / (times[n - 1] - times[n - 2]);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    dI_dt[i] = (I[i + 1] - I[i - 1]) / (times[i + 1] - times[i - 1]);
  }
  for (std::size_t i = 1; i < n; ++i) tv_I_cum[i] = tv_I_cum[i - 1] + std::abs(I[i] - I[i - 1]);
}

std::vector<double> snapshot_schedule(double T, double period) {
  std::vector<double> ts{0.0};
  if (!(T > 0.0)) return ts;
  if (!(period > 0.0)) period = T;
  for (std::size_t k = 1;; ++k) {
    const double t = static_cast<double>(k) * period;
    if (t >= T * (1.0 - 1e-12)) break;
    ts.push_back(t);
  }
  ts.push_back(T);
  return ts;
}

const Snapshot& nearest_snapshot(const std::vector<Snapshot>& snapshots, double t) {
  if (snapshots.empty()) throw std::out_of_range("no snapshots recorded");
  const Snapshot* best = &snapshots.front();
  for (const auto& s : snapshots)
    if (std::abs(s.t - t) < std::abs(best->t - t)) best = &s;
  return *best;
}

}  // namespace selmut
