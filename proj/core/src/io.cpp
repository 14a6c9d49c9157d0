#include "selmut/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace selmut {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string trajectory_csv(const Trajectory& traj, bool with_clamp_events) {
  std::string s = "t,I,max_u,argmax_u,rho,dI_dt,tv_I_cum";
  if (with_clamp_events) s += ",clamp_events";
  s += '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    s += format_double(traj.times[k]) + ',' + format_double(traj.I[k]) + ',' + format_double(traj.max_u[k]) + ',' +
         format_double(traj.argmax_u[k]) + ',' + format_double(traj.rho[k]) + ',' + format_double(traj.dI_dt[k]) +
         ',' + format_double(traj.tv_I_cum[k]);
    if (with_clamp_events) s += ',' + std::to_string(traj.clamp_events[k]);
    s += '\n';
  }
  return s;
}

std::string snapshot_csv(const Snapshot& snapshot, double eps) {
  const Field& u = snapshot.u;
  const double top = u.max();
  std::string s = "x,u,n_rescaled\n";
  for (std::size_t i = 0; i < u.size(); ++i) {
    s += format_double(u.grid().x(i)) + ',' + format_double(u[i]) + ',' +
         format_double(std::exp((u[i] - top) / eps)) + '\n';
  }
  return s;
}

std::string snapshot_file_name(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "snapshot_t%.4f.csv", t);
  return buf;
}

}  // namespace selmut
