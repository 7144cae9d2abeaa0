#pragma once

// Epoch-wise iterative weighted least squares on pseudoranges: the classical
// GNSS-only single-point solution over [position, receiver clock].

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "navfuse/geo.hpp"
#include "navfuse/types.hpp"

namespace navfuse {

class InsufficientObservationsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct WlsSolution {
  EcefCoord position;
  double clock_m{0.0};
  Eigen::Matrix4d covariance{Eigen::Matrix4d::Zero()};
  int iterations{0};
  bool converged{false};
};

/// Gauss-Newton on the residuals rho - (range + clock), rows weighted by
/// 1/sigma. Converged when the step norm drops below 1e-8 m.
inline WlsSolution wls_solve_epoch(const std::vector<SatObservation>& observations,
                                   const EcefCoord& init_position, double init_clock_m = 0.0) {
  const int n = static_cast<int>(observations.size());
  if (n < 4) {
    throw InsufficientObservationsError("wls_solve_epoch: need at least 4 observations, got " +
                                        std::to_string(n));
  }

  Eigen::Vector3d p = init_position.vec();
  double clk = init_clock_m;

  // Whitened design matrix A = (1/sigma) * dh/dx with h = range + clock.
  const auto assemble = [&](Eigen::MatrixXd& a, Eigen::VectorXd& b) {
    for (int i = 0; i < n; ++i) {
      const SatObservation& obs = observations[i];
      if (!(obs.sigma > 0.0)) throw std::invalid_argument("wls_solve_epoch: sigma must be > 0");
      const Eigen::Vector3d to_sat = obs.sat_pos - p;
      const double range = to_sat.norm();
      const double w = 1.0 / obs.sigma;
      a.block<1, 3>(i, 0) = -w * to_sat.transpose() / range;
      a(i, 3) = w;
      b(i) = w * (obs.pseudorange - range - clk);
    }
  };

  WlsSolution sol;
  Eigen::MatrixXd a(n, 4);
  Eigen::VectorXd b(n);

  constexpr int kMaxIterations = 20;
  constexpr double kStepTol = 1e-8;
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    assemble(a, b);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (smin <= 0.0 || smax / smin > 1e12) {
      throw GeometryError("wls_solve_epoch: singular satellite geometry");
    }
    const Eigen::Vector4d dx = svd.solve(b);

    p += dx.head<3>();
    clk += dx(3);
    sol.iterations = iter + 1;
    if (dx.norm() < kStepTol) {
      sol.converged = true;
      break;
    }
  }

  sol.position = EcefCoord::from(p);
  sol.clock_m = clk;
  assemble(a, b);
  const Eigen::Matrix4d info = a.transpose() * a;
  sol.covariance = info.inverse();
  sol.covariance = 0.5 * (sol.covariance + sol.covariance.transpose()).eval();
  return sol;
}

}  // namespace navfuse
