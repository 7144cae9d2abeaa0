#pragma once

// Synthetic urban scenario generation: spline route -> discrete truth states,
// IMU stream, GNSS constellation and pseudoranges, NLOS outlier injection.
//
// The truth trajectory is defined as the discrete state sequence produced by
// the same one-step kinematics the estimators integrate, driven by the exact
// angular rate / specific force emitted as IMU truth. With noise_scale = 0
// every estimator in the repository can therefore recover truth to float
// rounding, not just to integration-scheme accuracy.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "navfuse/csv_io.hpp"
#include "navfuse/geo.hpp"
#include "navfuse/rng.hpp"
#include "navfuse/so3.hpp"
#include "navfuse/types.hpp"

namespace navfuse {

// ===========================================================================
// Configuration
// ===========================================================================

struct Waypoint {
  Eigen::Vector3d enu{0.0, 0.0, 0.0};
  double speed{3.5};  // m/s, pacing weight for time allocation
};

struct EpochWindow {
  int first{0};
  int last{0};  // inclusive
  bool contains(int epoch) const { return epoch >= first && epoch <= last; }
};

struct ScenarioConfig {
  double duration{300.0};  // s
  double imu_rate{100.0};  // Hz
  double gnss_rate{1.0};   // Hz

  double origin_lat_deg{37.4};
  double origin_lon_deg{-122.1};
  double origin_height_m{30.0};

  std::vector<Waypoint> route{{{0.0, 0.0, 0.0}, 3.5},
                              {{250.0, 100.0, 0.0}, 3.5},
                              {{500.0, 0.0, 0.0}, 3.5},
                              {{750.0, -100.0, 0.0}, 3.5},
                              {{1000.0, 0.0, 0.0}, 3.5}};

  ImuNoiseParams imu_noise;
  Eigen::Vector3d init_gyro_bias{0.001, -0.0005, 0.0008};   // rad/s
  Eigen::Vector3d init_accel_bias{0.02, -0.01, 0.015};      // m/s^2

  int sat_count_min{13};
  int sat_count_max{28};
  double pseudorange_sigma{1.0};  // m
  double clock_walk_sigma{0.5};   // m per sqrt(epoch)

  double outlier_fraction{0.0};
  double outlier_bias_min{10.0};  // m
  double outlier_bias_max{50.0};  // m
  std::vector<EpochWindow> outlier_windows{{60, 120}, {180, 240}};
  bool outlier_symmetric{false};

  double noise_scale{1.0};  // 0 disables all stochastic terms, sigmas stay physical
  uint64_t seed{1};

  void validate() const {
    if (!(duration > 0.0)) throw std::invalid_argument("duration must be > 0");
    if (!(imu_rate > 0.0) || !(gnss_rate > 0.0)) throw std::invalid_argument("rates must be > 0");
    const double ratio = imu_rate / gnss_rate;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0) {
      throw std::invalid_argument("imu_rate must be an integer multiple of gnss_rate");
    }
    if (route.empty()) throw std::invalid_argument("route needs at least one waypoint");
    for (const auto& w : route) {
      if (!(w.speed > 0.0)) throw std::invalid_argument("waypoint speed must be > 0");
    }
    imu_noise.validate();
    if (sat_count_min < 4 || sat_count_max < sat_count_min) {
      throw std::invalid_argument("satellite count range invalid (need 4 <= min <= max)");
    }
    if (!(pseudorange_sigma > 0.0)) throw std::invalid_argument("pseudorange_sigma must be > 0");
    if (!(clock_walk_sigma > 0.0)) throw std::invalid_argument("clock_walk_sigma must be > 0");
    if (outlier_fraction < 0.0 || outlier_fraction > 1.0) {
      throw std::invalid_argument("outlier_fraction must be in [0, 1]");
    }
    if (!(outlier_bias_min > 0.0) || outlier_bias_max < outlier_bias_min) {
      throw std::invalid_argument("outlier bias range must be positive with max >= min");
    }
    for (const auto& w : outlier_windows) {
      if (w.last < w.first || w.first < 0) throw std::invalid_argument("bad outlier window");
    }
    if (noise_scale < 0.0) throw std::invalid_argument("noise_scale must be >= 0");
  }

  GeodeticCoord origin() const {
    return {origin_lat_deg * M_PI / 180.0, origin_lon_deg * M_PI / 180.0, origin_height_m};
  }

  int epoch_count() const {
    return static_cast<int>(std::floor(duration * gnss_rate + 1e-9)) + 1;
  }
  int imu_steps_per_epoch() const { return static_cast<int>(std::round(imu_rate / gnss_rate)); }
};

// ===========================================================================
// Key-value config file
// ===========================================================================

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

inline double to_double(const std::string& s, const std::string& key) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("scenario config: bad numeric value for '" + key + "': " + s);
  }
}

inline Eigen::Vector3d to_vec3(const std::string& s, const std::string& key) {
  const auto parts = split_on(s, ',');
  if (parts.size() != 3) {
    throw std::invalid_argument("scenario config: '" + key + "' needs 3 comma-separated values");
  }
  return {to_double(trim(parts[0]), key), to_double(trim(parts[1]), key),
          to_double(trim(parts[2]), key)};
}

}  // namespace detail

/// Parses the flat key=value scenario format. '#' starts a comment; unknown
/// keys are an error.
inline ScenarioConfig parse_scenario_text(const std::string& text) {
  ScenarioConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = detail::trim(line.substr(0, line.find('#')));
    if (stripped.empty()) continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("scenario config line " + std::to_string(line_no) +
                                  ": expected key=value");
    }
    const std::string key = detail::trim(stripped.substr(0, eq));
    const std::string value = detail::trim(stripped.substr(eq + 1));

    if (key == "duration") cfg.duration = detail::to_double(value, key);
    else if (key == "imu_rate") cfg.imu_rate = detail::to_double(value, key);
    else if (key == "gnss_rate") cfg.gnss_rate = detail::to_double(value, key);
    else if (key == "origin_lat_deg") cfg.origin_lat_deg = detail::to_double(value, key);
    else if (key == "origin_lon_deg") cfg.origin_lon_deg = detail::to_double(value, key);
    else if (key == "origin_height_m") cfg.origin_height_m = detail::to_double(value, key);
    else if (key == "route") {
      cfg.route.clear();
      for (const auto& item : detail::split_on(value, ';')) {
        const auto parts = detail::split_on(detail::trim(item), ',');
        if (parts.size() != 4) {
          throw std::invalid_argument("scenario config: route items are 'e,n,u,speed'");
        }
        Waypoint w;
        w.enu = {detail::to_double(detail::trim(parts[0]), key),
                 detail::to_double(detail::trim(parts[1]), key),
                 detail::to_double(detail::trim(parts[2]), key)};
        w.speed = detail::to_double(detail::trim(parts[3]), key);
        cfg.route.push_back(w);
      }
    } else if (key == "gyro_noise_density") cfg.imu_noise.gyro_noise_density = detail::to_double(value, key);
    else if (key == "accel_noise_density") cfg.imu_noise.accel_noise_density = detail::to_double(value, key);
    else if (key == "gyro_bias_walk") cfg.imu_noise.gyro_bias_walk = detail::to_double(value, key);
    else if (key == "accel_bias_walk") cfg.imu_noise.accel_bias_walk = detail::to_double(value, key);
    else if (key == "init_gyro_bias") cfg.init_gyro_bias = detail::to_vec3(value, key);
    else if (key == "init_accel_bias") cfg.init_accel_bias = detail::to_vec3(value, key);
    else if (key == "sat_count_min") cfg.sat_count_min = static_cast<int>(detail::to_double(value, key));
    else if (key == "sat_count_max") cfg.sat_count_max = static_cast<int>(detail::to_double(value, key));
    else if (key == "pseudorange_sigma") cfg.pseudorange_sigma = detail::to_double(value, key);
    else if (key == "clock_walk_sigma") cfg.clock_walk_sigma = detail::to_double(value, key);
    else if (key == "outlier_fraction") cfg.outlier_fraction = detail::to_double(value, key);
    else if (key == "outlier_bias_min") cfg.outlier_bias_min = detail::to_double(value, key);
    else if (key == "outlier_bias_max") cfg.outlier_bias_max = detail::to_double(value, key);
    else if (key == "outlier_windows") {
      cfg.outlier_windows.clear();
      for (const auto& item : detail::split_on(value, ';')) {
        const std::string w = detail::trim(item);
        if (w.empty()) continue;
        const auto parts = detail::split_on(w, ':');
        if (parts.size() != 2) {
          throw std::invalid_argument("scenario config: outlier windows are 'first:last'");
        }
        cfg.outlier_windows.push_back(
            {static_cast<int>(detail::to_double(detail::trim(parts[0]), key)),
             static_cast<int>(detail::to_double(detail::trim(parts[1]), key))});
      }
    } else if (key == "outlier_symmetric") {
      cfg.outlier_symmetric = (value == "1" || value == "true" || value == "yes");
    } else if (key == "noise_scale") cfg.noise_scale = detail::to_double(value, key);
    else if (key == "seed") cfg.seed = static_cast<uint64_t>(detail::to_double(value, key));
    else {
      throw std::invalid_argument("scenario config: unknown key '" + key + "'");
    }
  }
  return cfg;
}

inline ScenarioConfig load_scenario_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str());
}

// ===========================================================================
// Natural cubic spline
// ===========================================================================

class CubicSpline1D {
 public:
  CubicSpline1D() = default;

  CubicSpline1D(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const int n = static_cast<int>(x_.size());
    if (n < 2) throw std::invalid_argument("spline needs at least 2 knots");
    m_.assign(n, 0.0);
    if (n == 2) return;  // linear segment, second derivatives stay 0

    // Solve the natural-spline tridiagonal system for second derivatives.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n - 2, n - 2);
    Eigen::VectorXd b(n - 2);
    for (int i = 1; i < n - 1; ++i) {
      const double h0 = x_[i] - x_[i - 1];
      const double h1 = x_[i + 1] - x_[i];
      if (i > 1) a(i - 1, i - 2) = h0;
      a(i - 1, i - 1) = 2.0 * (h0 + h1);
      if (i < n - 2) a(i - 1, i) = h1;
      b(i - 1) = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
    }
    const Eigen::VectorXd m = a.ldlt().solve(b);
    for (int i = 1; i < n - 1; ++i) m_[i] = m(i - 1);
  }

  double value(double t) const {
    const int i = segment(t);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - t) / h;
    const double b = (t - x_[i]) / h;
    return a * y_[i] + b * y_[i + 1] +
           ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
  }

  double derivative(double t) const {
    const int i = segment(t);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - t) / h;
    const double b = (t - x_[i]) / h;
    return (y_[i + 1] - y_[i]) / h +
           ((3.0 * b * b - 1.0) * m_[i + 1] - (3.0 * a * a - 1.0) * m_[i]) * h / 6.0;
  }

 private:
  int segment(double t) const {
    const int n = static_cast<int>(x_.size());
    if (t <= x_.front()) return 0;
    if (t >= x_.back()) return n - 2;
    const int i = static_cast<int>(std::upper_bound(x_.begin(), x_.end(), t) - x_.begin()) - 1;
    return std::min(std::max(i, 0), n - 2);
  }

  std::vector<double> x_, y_;
  std::vector<double> m_;
};

// ===========================================================================
// Scenario generation
// ===========================================================================

struct SimulatedScenario {
  Trajectory truth;               // discrete states at GNSS epochs, ECEF
  std::vector<ImuSample> imu;     // biased + noisy measurements
  std::vector<ObsEpoch> obs;      // clean pseudoranges (pre-outlier)
  std::vector<double> true_clock; // receiver clock bias per epoch, m
  GeodeticCoord origin;
  GravityVector gravity;
};

namespace detail {

// RNG stream ids; outlier injection has its own stream so contaminating a
// dataset never changes the clean bytes.
inline constexpr uint64_t kStreamImuNoise = 0;
inline constexpr uint64_t kStreamBiasWalk = 1;
inline constexpr uint64_t kStreamClockWalk = 2;
inline constexpr uint64_t kStreamConstellation = 3;
inline constexpr uint64_t kStreamVisibility = 4;
inline constexpr uint64_t kStreamPrNoise = 5;
inline constexpr uint64_t kStreamOutliers = 10;

struct SplineRoute {
  CubicSpline1D e, n, u;
  double t_end{0.0};
  bool stationary{false};
  Eigen::Vector3d fixed_point{0.0, 0.0, 0.0};

  Eigen::Vector3d position(double t) const {
    if (stationary) return fixed_point;
    t = std::clamp(t, 0.0, t_end);
    return {e.value(t), n.value(t), u.value(t)};
  }
  Eigen::Vector3d velocity(double t) const {
    if (stationary) return Eigen::Vector3d::Zero();
    t = std::clamp(t, 0.0, t_end);
    return {e.derivative(t), n.derivative(t), u.derivative(t)};
  }
};

inline SplineRoute build_route(const ScenarioConfig& cfg) {
  SplineRoute r;
  r.t_end = cfg.duration;
  if (cfg.route.size() == 1) {
    r.stationary = true;
    r.fixed_point = cfg.route[0].enu;
    return r;
  }
  // Time allocation by segment length over mean endpoint speed, then scaled
  // so the full route takes exactly `duration`.
  std::vector<double> knots(cfg.route.size(), 0.0);
  for (size_t i = 1; i < cfg.route.size(); ++i) {
    const double dist = (cfg.route[i].enu - cfg.route[i - 1].enu).norm();
    const double speed = 0.5 * (cfg.route[i].speed + cfg.route[i - 1].speed);
    double dt = dist / speed;
    if (dt <= 0.0) dt = 1e-3;  // coincident waypoints still need distinct knots
    knots[i] = knots[i - 1] + dt;
  }
  const double scale = cfg.duration / knots.back();
  std::vector<double> xs(knots.size());
  std::vector<double> ye(knots.size()), yn(knots.size()), yu(knots.size());
  for (size_t i = 0; i < knots.size(); ++i) {
    xs[i] = knots[i] * scale;
    ye[i] = cfg.route[i].enu.x();
    yn[i] = cfg.route[i].enu.y();
    yu[i] = cfg.route[i].enu.z();
  }
  r.e = CubicSpline1D(xs, ye);
  r.n = CubicSpline1D(xs, yn);
  r.u = CubicSpline1D(xs, yu);
  return r;
}

}  // namespace detail

inline SimulatedScenario generate_scenario(const ScenarioConfig& cfg) {
  cfg.validate();

  SimulatedScenario out;
  out.origin = cfg.origin();
  const FrameRef frame = FrameRef::at(out.origin);
  const Eigen::Matrix3d r_enu_to_ecef = frame.rot_ecef_to_enu.transpose();
  out.gravity.g = -9.81 * r_enu_to_ecef.col(2);

  const detail::SplineRoute route = detail::build_route(cfg);

  const int steps_per_epoch = cfg.imu_steps_per_epoch();
  const int n_epochs = cfg.epoch_count();
  const int n_steps = (n_epochs - 1) * steps_per_epoch;
  const double dt = 1.0 / cfg.imu_rate;

  // --- body orientation: level, yaw following the horizontal velocity -----
  std::vector<Rotation> r_truth(n_steps + 1);
  std::vector<Eigen::Vector3d> v_truth(n_steps + 1);
  {
    double yaw_prev = 0.0;
    bool yaw_init = false;
    for (int k = 0; k <= n_steps; ++k) {
      const double t = k * dt;
      const Eigen::Vector3d v_enu = route.velocity(t);
      double yaw = yaw_prev;
      if (v_enu.head<2>().norm() > 0.1) {
        yaw = std::atan2(v_enu.y(), v_enu.x());
        if (yaw_init) {
          while (yaw - yaw_prev > M_PI) yaw -= 2.0 * M_PI;
          while (yaw - yaw_prev < -M_PI) yaw += 2.0 * M_PI;
        }
        yaw_init = true;
      }
      yaw_prev = yaw;
      Rotation rz;
      rz = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
      r_truth[k] = r_enu_to_ecef * rz;
      v_truth[k] = r_enu_to_ecef * v_enu;
    }
  }

  // --- exact IMU truth + discrete position propagation --------------------
  std::vector<Eigen::Vector3d> p_truth(n_steps + 1);
  p_truth[0] = frame.origin_ecef.vec() + r_enu_to_ecef * route.position(0.0);

  Rng rng_noise(cfg.seed, detail::kStreamImuNoise);
  Rng rng_bias(cfg.seed, detail::kStreamBiasWalk);
  const double gyro_sigma_d = cfg.imu_noise.gyro_noise_density * std::sqrt(cfg.imu_rate);
  const double accel_sigma_d = cfg.imu_noise.accel_noise_density * std::sqrt(cfg.imu_rate);
  const double sqrt_dt = std::sqrt(dt);

  ImuBias bias{cfg.init_gyro_bias, cfg.init_accel_bias};
  std::vector<ImuBias> bias_at_step(n_steps + 1);
  bias_at_step[0] = bias;

  out.imu.reserve(n_steps);
  double max_speed = 0.0, max_rate = 0.0;
  for (int k = 0; k < n_steps; ++k) {
    const Eigen::Vector3d omega = so3_log(r_truth[k].transpose() * r_truth[k + 1]) / dt;
    const Eigen::Vector3d f =
        r_truth[k].transpose() * ((v_truth[k + 1] - v_truth[k]) / dt - out.gravity.g);
    p_truth[k + 1] = p_truth[k] + v_truth[k] * dt + 0.5 * out.gravity.g * dt * dt +
                     0.5 * (r_truth[k] * f) * dt * dt;

    max_speed = std::max(max_speed, v_truth[k].norm());
    max_rate = std::max(max_rate, omega.norm());

    ImuSample s;
    s.t = k * dt;
    s.gyro = omega + bias.gyro + cfg.noise_scale * rng_noise.gaussian3(gyro_sigma_d);
    s.accel = f + bias.accel + cfg.noise_scale * rng_noise.gaussian3(accel_sigma_d);
    out.imu.push_back(s);

    bias.gyro += cfg.noise_scale * rng_bias.gaussian3(cfg.imu_noise.gyro_bias_walk * sqrt_dt);
    bias.accel += cfg.noise_scale * rng_bias.gaussian3(cfg.imu_noise.accel_bias_walk * sqrt_dt);
    bias_at_step[k + 1] = bias;
  }
  if (max_speed > 100.0 || max_rate > 3.0) {
    throw std::runtime_error("infeasible route: speed " + std::to_string(max_speed) +
                             " m/s, turn rate " + std::to_string(max_rate) + " rad/s");
  }

  out.truth.reserve(n_epochs);
  for (int e = 0; e < n_epochs; ++e) {
    const int k = e * steps_per_epoch;
    TrajectorySample s;
    s.t = k * dt;
    s.state.R = r_truth[k];
    s.state.v = v_truth[k];
    s.state.p = p_truth[k];
    out.truth.push_back(s);
  }

  // --- constellation: static satellites on the orbital shell --------------
  constexpr double kShellRadius = 26560e3;  // m
  constexpr double kMinElevationDeg = 10.0;
  Rng rng_const(cfg.seed, detail::kStreamConstellation);
  const Eigen::Vector3d o = frame.origin_ecef.vec();
  std::vector<Eigen::Vector3d> sats(cfg.sat_count_max);
  for (int i = 0; i < cfg.sat_count_max; ++i) {
    const double el = rng_const.uniform(kMinElevationDeg * M_PI / 180.0, 85.0 * M_PI / 180.0);
    const double az = rng_const.uniform(0.0, 2.0 * M_PI);
    const Eigen::Vector3d d_enu(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                                std::sin(el));
    const Eigen::Vector3d d = r_enu_to_ecef * d_enu;
    const double od = o.dot(d);
    const double s = -od + std::sqrt(od * od + kShellRadius * kShellRadius - o.squaredNorm());
    sats[i] = o + s * d;
  }

  // --- visible set follows a clamped random walk in count -----------------
  Rng rng_vis(cfg.seed, detail::kStreamVisibility);
  std::vector<int> active, inactive;
  {
    std::vector<int> ids(cfg.sat_count_max);
    for (int i = 0; i < cfg.sat_count_max; ++i) ids[i] = i;
    for (int i = cfg.sat_count_max - 1; i > 0; --i) {
      std::swap(ids[i], ids[rng_vis.index(static_cast<size_t>(i) + 1)]);
    }
    const int n0 = cfg.sat_count_min +
                   static_cast<int>(rng_vis.index(
                       static_cast<size_t>(cfg.sat_count_max - cfg.sat_count_min) + 1));
    active.assign(ids.begin(), ids.begin() + n0);
    inactive.assign(ids.begin() + n0, ids.end());
  }

  Rng rng_clk(cfg.seed, detail::kStreamClockWalk);
  Rng rng_pr(cfg.seed, detail::kStreamPrNoise);
  double clock = 0.0;

  out.obs.reserve(n_epochs);
  out.true_clock.reserve(n_epochs);
  for (int e = 0; e < n_epochs; ++e) {
    if (e > 0) {
      clock += cfg.noise_scale * rng_clk.gaussian(cfg.clock_walk_sigma);
      const int delta = static_cast<int>(rng_vis.index(3)) - 1;
      if (delta > 0 && !inactive.empty() &&
          static_cast<int>(active.size()) < cfg.sat_count_max) {
        const size_t pick = rng_vis.index(inactive.size());
        active.push_back(inactive[pick]);
        inactive.erase(inactive.begin() + static_cast<long>(pick));
      } else if (delta < 0 && static_cast<int>(active.size()) > cfg.sat_count_min) {
        const size_t pick = rng_vis.index(active.size());
        inactive.push_back(active[pick]);
        active.erase(active.begin() + static_cast<long>(pick));
      }
    }
    out.true_clock.push_back(clock);

    ObsEpoch epoch;
    epoch.t = out.truth[e].t;
    std::vector<int> visible = active;
    std::sort(visible.begin(), visible.end());
    const Eigen::Vector3d& p = out.truth[e].state.p;
    for (int id : visible) {
      SatObservation obs;
      obs.sat_id = id + 1;
      obs.t = epoch.t;
      obs.sat_pos = sats[id];
      obs.pseudorange = (sats[id] - p).norm() + clock +
                        cfg.noise_scale * rng_pr.gaussian(cfg.pseudorange_sigma);
      obs.sigma = cfg.pseudorange_sigma;
      if (obs.pseudorange < 1.9e7 || obs.pseudorange > 4.5e7) {
        throw std::runtime_error("generated pseudorange outside plausible orbit range");
      }
      epoch.obs.push_back(obs);
    }
    out.obs.push_back(std::move(epoch));
  }
  return out;
}

// ===========================================================================
// Outlier injection
// ===========================================================================

struct OutlierMask {
  // flagged[e][i] is true when observation i of epoch e carries an injected
  // bias; bias[e][i] holds the amount.
  std::vector<std::vector<bool>> flagged;
  std::vector<std::vector<double>> bias;
  int total{0};
};

/// Adds +Uniform(bias range) to ceil(fraction * n) observations per epoch
/// inside the configured burst windows. Uses a dedicated RNG stream: clean
/// observations are byte-identical to the uncontaminated dataset.
inline OutlierMask inject_outliers(std::vector<ObsEpoch>& epochs, const ScenarioConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed, detail::kStreamOutliers);

  OutlierMask mask;
  mask.flagged.resize(epochs.size());
  mask.bias.resize(epochs.size());
  for (size_t e = 0; e < epochs.size(); ++e) {
    auto& epoch = epochs[e];
    mask.flagged[e].assign(epoch.obs.size(), false);
    mask.bias[e].assign(epoch.obs.size(), 0.0);

    bool in_window = false;
    for (const auto& w : cfg.outlier_windows) in_window = in_window || w.contains(static_cast<int>(e));
    if (!in_window || cfg.outlier_fraction <= 0.0 || epoch.obs.empty()) continue;

    const int n = static_cast<int>(epoch.obs.size());
    // Epsilon guard keeps exact products like 0.3*20 from ceiling up.
    const int k = std::min(
        n, static_cast<int>(std::ceil(cfg.outlier_fraction * n - 1e-9)));

    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = 0; i < k; ++i) {
      const size_t pick = i + rng.index(static_cast<size_t>(n - i));
      std::swap(idx[i], idx[pick]);
    }
    for (int i = 0; i < k; ++i) {
      double b = rng.uniform(cfg.outlier_bias_min, cfg.outlier_bias_max);
      if (cfg.outlier_symmetric && rng.uniform() < 0.5) b = -b;
      epoch.obs[idx[i]].pseudorange += b;
      mask.flagged[e][idx[i]] = true;
      mask.bias[e][idx[i]] = b;
      mask.total += 1;
    }
  }
  return mask;
}

}  // namespace navfuse
