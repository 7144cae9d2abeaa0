#pragma once

// CSV ingestion/emission for IMU streams, per-epoch GNSS observations, and
// trajectories. Values are written with 17 significant digits so a
// write/load round trip is bit-exact for doubles.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <Eigen/Geometry>

#include "navfuse/types.hpp"

namespace navfuse {

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& s, const std::string& path, int line_no) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  while (begin < end && *begin == ' ') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) {
    throw CsvError(path + ":" + std::to_string(line_no) + ": bad numeric field '" + s + "'");
  }
  return v;
}

inline long parse_int(const std::string& s, const std::string& path, int line_no) {
  long v = 0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  while (begin < end && *begin == ' ') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) {
    throw CsvError(path + ":" + std::to_string(line_no) + ": bad integer field '" + s + "'");
  }
  return v;
}

inline void expect_fields(const std::vector<std::string>& fields, size_t expected,
                          const std::string& path, int line_no) {
  if (fields.size() != expected) {
    throw CsvError(path + ":" + std::to_string(line_no) + ": expected " +
                   std::to_string(expected) + " fields, got " + std::to_string(fields.size()));
  }
}

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open " + path);
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw CsvError("cannot open " + path + " for writing");
  return out;
}

inline void check_header(const std::string& got, const std::string& want,
                         const std::string& path) {
  std::string trimmed = got;
  while (!trimmed.empty() && (trimmed.back() == '\r' || trimmed.back() == '\n')) {
    trimmed.pop_back();
  }
  if (trimmed != want) {
    throw CsvError(path + ":1: expected header '" + want + "', got '" + trimmed + "'");
  }
}

}  // namespace detail

inline constexpr const char* kImuHeader = "t,gx,gy,gz,ax,ay,az";
inline constexpr const char* kObsHeader = "t,sat_id,sat_x,sat_y,sat_z,pseudorange,sigma";
inline constexpr const char* kTrajHeader = "t,x,y,z,vx,vy,vz,qw,qx,qy,qz";

// ===========================================================================
// IMU
// ===========================================================================

inline void write_imu_csv(const std::string& path, const std::vector<ImuSample>& samples) {
  auto out = detail::open_out(path);
  out << kImuHeader << "\n";
  for (const auto& s : samples) {
    out << detail::fmt17(s.t) << ',' << detail::fmt17(s.gyro.x()) << ','
        << detail::fmt17(s.gyro.y()) << ',' << detail::fmt17(s.gyro.z()) << ','
        << detail::fmt17(s.accel.x()) << ',' << detail::fmt17(s.accel.y()) << ','
        << detail::fmt17(s.accel.z()) << "\n";
  }
}

inline std::vector<ImuSample> load_imu_csv(const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line)) return {};
  detail::check_header(line, kImuHeader, path);

  std::vector<ImuSample> samples;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = detail::split_fields(line);
    detail::expect_fields(f, 7, path, line_no);
    ImuSample s;
    s.t = detail::parse_double(f[0], path, line_no);
    for (int i = 0; i < 3; ++i) s.gyro(i) = detail::parse_double(f[1 + i], path, line_no);
    for (int i = 0; i < 3; ++i) s.accel(i) = detail::parse_double(f[4 + i], path, line_no);
    if (!samples.empty() && !(s.t > samples.back().t)) {
      throw CsvError(path + ":" + std::to_string(line_no) + ": non-monotone timestamp");
    }
    samples.push_back(s);
  }
  return samples;
}

// ===========================================================================
// GNSS observations (grouped per epoch)
// ===========================================================================

struct ObsEpoch {
  double t{0.0};
  std::vector<SatObservation> obs;
};

inline void write_obs_csv(const std::string& path, const std::vector<ObsEpoch>& epochs) {
  auto out = detail::open_out(path);
  out << kObsHeader << "\n";
  for (const auto& e : epochs) {
    for (const auto& o : e.obs) {
      out << detail::fmt17(e.t) << ',' << o.sat_id << ',' << detail::fmt17(o.sat_pos.x()) << ','
          << detail::fmt17(o.sat_pos.y()) << ',' << detail::fmt17(o.sat_pos.z()) << ','
          << detail::fmt17(o.pseudorange) << ',' << detail::fmt17(o.sigma) << "\n";
    }
  }
}

inline std::vector<ObsEpoch> load_obs_csv(const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  std::vector<ObsEpoch> epochs;
  if (!std::getline(in, line)) return epochs;  // empty file -> empty epoch list
  detail::check_header(line, kObsHeader, path);

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = detail::split_fields(line);
    detail::expect_fields(f, 7, path, line_no);
    SatObservation o;
    o.t = detail::parse_double(f[0], path, line_no);
    o.sat_id = static_cast<int>(detail::parse_int(f[1], path, line_no));
    for (int i = 0; i < 3; ++i) o.sat_pos(i) = detail::parse_double(f[2 + i], path, line_no);
    o.pseudorange = detail::parse_double(f[5], path, line_no);
    o.sigma = detail::parse_double(f[6], path, line_no);
    if (epochs.empty() || o.t > epochs.back().t) {
      epochs.push_back({o.t, {}});
    } else if (o.t < epochs.back().t) {
      throw CsvError(path + ":" + std::to_string(line_no) + ": non-monotone timestamp");
    }
    epochs.back().obs.push_back(o);
  }
  return epochs;
}

// ===========================================================================
// Trajectories
// ===========================================================================

inline void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  auto out = detail::open_out(path);
  out << kTrajHeader << "\n";
  for (const auto& s : traj) {
    Eigen::Quaterniond q(s.state.R);
    if (q.w() < 0.0) q.coeffs() = -q.coeffs();  // hemisphere convention
    out << detail::fmt17(s.t) << ',' << detail::fmt17(s.state.p.x()) << ','
        << detail::fmt17(s.state.p.y()) << ',' << detail::fmt17(s.state.p.z()) << ','
        << detail::fmt17(s.state.v.x()) << ',' << detail::fmt17(s.state.v.y()) << ','
        << detail::fmt17(s.state.v.z()) << ',' << detail::fmt17(q.w()) << ','
        << detail::fmt17(q.x()) << ',' << detail::fmt17(q.y()) << ',' << detail::fmt17(q.z())
        << "\n";
  }
}

inline Trajectory load_trajectory_csv(const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  Trajectory traj;
  if (!std::getline(in, line)) return traj;
  detail::check_header(line, kTrajHeader, path);

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = detail::split_fields(line);
    detail::expect_fields(f, 11, path, line_no);
    TrajectorySample s;
    s.t = detail::parse_double(f[0], path, line_no);
    for (int i = 0; i < 3; ++i) s.state.p(i) = detail::parse_double(f[1 + i], path, line_no);
    for (int i = 0; i < 3; ++i) s.state.v(i) = detail::parse_double(f[4 + i], path, line_no);
    const double qw = detail::parse_double(f[7], path, line_no);
    const double qx = detail::parse_double(f[8], path, line_no);
    const double qy = detail::parse_double(f[9], path, line_no);
    const double qz = detail::parse_double(f[10], path, line_no);
    s.state.R = Eigen::Quaterniond(qw, qx, qy, qz).normalized().toRotationMatrix();
    if (!traj.empty() && !(s.t > traj.back().t)) {
      throw CsvError(path + ":" + std::to_string(line_no) + ": non-monotone timestamp");
    }
    traj.push_back(s);
  }
  return traj;
}

inline void write_solution_csv(const std::string& path, const Trajectory& traj) {
  write_trajectory_csv(path, traj);
}
inline Trajectory load_truth_csv(const std::string& path) { return load_trajectory_csv(path); }

}  // namespace navfuse
