#pragma once

// Nonlinear least-squares solver over a FactorGraph: Gauss-Newton and
// Levenberg-Marquardt with robust kernels realized as IRLS row weights,
// plus fixed-lag marginalization (slide_window).

#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "navfuse/factor_graph.hpp"

namespace navfuse {

struct SolverConfig {
  enum class Algorithm { GaussNewton, LevenbergMarquardt };

  Algorithm algorithm{Algorithm::LevenbergMarquardt};
  int max_iterations{50};
  double abs_tolerance{1e-9};
  double rel_tolerance{1e-7};
  double lm_initial_damping{1e-4};
  double lm_damping_up{10.0};
  double lm_damping_down{10.0};
  int window_lag{0};  // 0 = full batch
};

struct IterationRecord {
  int index{0};
  double cost{0.0};
  double damping{0.0};
};

struct SolveReport {
  int iterations{0};
  double initial_cost{0.0};
  double final_cost{0.0};
  bool converged{false};
  std::vector<IterationRecord> records;

  /// Key-value text, one line per iteration, for regression diffing.
  std::string format() const {
    char line[160];
    std::string out;
    std::snprintf(line, sizeof(line), "initial_cost=%.12g\n", initial_cost);
    out += line;
    for (const auto& rec : records) {
      std::snprintf(line, sizeof(line), "iter=%d cost=%.12g damping=%.6g\n", rec.index, rec.cost,
                    rec.damping);
      out += line;
    }
    std::snprintf(line, sizeof(line), "final_cost=%.12g iterations=%d converged=%s\n", final_cost,
                  iterations, converged ? "true" : "false");
    out += line;
    return out;
  }
};

// ===========================================================================
// Linearization
// ===========================================================================

struct VariableOrdering {
  std::vector<VariableKey> keys;
  std::map<VariableKey, int> offset;
  int total_dim{0};

  static VariableOrdering of(const FactorGraph& g) {
    VariableOrdering ord;
    for (const auto& k : g.variables()) {
      ord.offset[k] = ord.total_dim;
      ord.keys.push_back(k);
      ord.total_dim += var_dim(k.kind);
    }
    return ord;
  }
};

struct LinearSystem {
  Eigen::SparseMatrix<double> jacobian;  // IRLS-weighted, whitened
  Eigen::VectorXd residual;              // IRLS-weighted, whitened
  VariableOrdering ordering;
};

/// Whitened Jacobian/residual of the whole graph at `values`, with each
/// robust factor's rows scaled by sqrt of its IRLS weight.
inline LinearSystem linearize_graph(const FactorGraph& g, const Values& values) {
  LinearSystem sys;
  sys.ordering = VariableOrdering::of(g);

  const int m = g.residual_dim();
  sys.residual.resize(m);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<size_t>(m) * 8);

  int row = 0;
  std::vector<Eigen::MatrixXd> jac;
  for (const auto& f : g.factors()) {
    const Eigen::VectorXd r = f->linearize(values, jac);
    double s = 1.0;
    if (f->kernel()) {
      s = std::sqrt(kernel_eval(*f->kernel(), r.norm()).irls_weight);
    }
    sys.residual.segment(row, f->dim()) = s * r;
    for (size_t i = 0; i < f->keys().size(); ++i) {
      const int col0 = sys.ordering.offset.at(f->keys()[i]);
      const Eigen::MatrixXd& block = jac[i];
      for (int rr = 0; rr < block.rows(); ++rr) {
        for (int cc = 0; cc < block.cols(); ++cc) {
          if (block(rr, cc) != 0.0) {
            triplets.emplace_back(row + rr, col0 + cc, s * block(rr, cc));
          }
        }
      }
    }
    row += f->dim();
  }

  sys.jacobian.resize(m, sys.ordering.total_dim);
  sys.jacobian.setFromTriplets(triplets.begin(), triplets.end());
  return sys;
}

// ===========================================================================
// Optimization
// ===========================================================================

namespace detail {

inline void apply_step(Values& v, const VariableOrdering& ord, const Eigen::VectorXd& dx) {
  int at = 0;
  for (const auto& k : ord.keys) {
    const int d = var_dim(k.kind);
    v.retract(k, dx.segment(at, d));
    at += d;
  }
}

/// Solves (H + lambda*diag(H)) dx = -grad, escalating lambda while the
/// factorization is not positive definite.
inline bool solve_damped(const Eigen::SparseMatrix<double>& h, const Eigen::VectorXd& grad,
                         double& lambda, double lambda_up, Eigen::VectorXd& dx) {
  Eigen::VectorXd diag = h.diagonal().cwiseMax(1e-12);
  while (lambda <= 1e12) {
    Eigen::SparseMatrix<double> damped = h;
    if (lambda > 0.0) {
      Eigen::SparseMatrix<double> d(h.rows(), h.cols());
      std::vector<Eigen::Triplet<double>> t;
      t.reserve(h.rows());
      for (int i = 0; i < h.rows(); ++i) t.emplace_back(i, i, lambda * diag(i));
      d.setFromTriplets(t.begin(), t.end());
      damped = h + d;
    }
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(damped);
    if (ldlt.info() == Eigen::Success) {
      dx = ldlt.solve(-grad);
      if (dx.allFinite()) return true;
    }
    lambda = (lambda == 0.0) ? 1e-6 : lambda * lambda_up;
  }
  return false;
}

}  // namespace detail

/// Minimizes the graph objective starting from `init`; the graph estimate is
/// left at the solution. LM accepts a step only if the true robust cost does
/// not increase; IRLS weights are recomputed once per outer iteration.
inline SolveReport optimize(FactorGraph& g, const Values& init, const SolverConfig& cfg = {}) {
  g.estimate() = init;
  SolveReport report;
  double cost = total_cost(g, g.estimate());
  report.initial_cost = cost;
  report.final_cost = cost;

  if (cost <= cfg.abs_tolerance) {
    report.converged = true;
    return report;
  }

  const bool lm = cfg.algorithm == SolverConfig::Algorithm::LevenbergMarquardt;
  double lambda = lm ? cfg.lm_initial_damping : 0.0;

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    const LinearSystem sys = linearize_graph(g, g.estimate());
    const Eigen::SparseMatrix<double> h =
        Eigen::SparseMatrix<double>(sys.jacobian.transpose()) * sys.jacobian;
    const Eigen::VectorXd grad = sys.jacobian.transpose() * sys.residual;

    bool accepted = false;
    double new_cost = cost;
    while (!accepted) {
      Eigen::VectorXd dx;
      if (!detail::solve_damped(h, grad, lambda, cfg.lm_damping_up, dx)) {
        report.iterations = iter;
        report.final_cost = cost;
        return report;  // damping exhausted; converged stays false
      }
      Values candidate = g.estimate();
      detail::apply_step(candidate, sys.ordering, dx);
      new_cost = total_cost(g, candidate);

      if (!lm || new_cost <= cost) {
        g.estimate() = std::move(candidate);
        accepted = true;
      } else {
        lambda *= cfg.lm_damping_up;
        if (lambda > 1e12) {
          // No acceptable step from this linearization; treat as stalled.
          report.iterations = iter;
          report.final_cost = cost;
          report.converged = true;  // cost can no longer decrease
          return report;
        }
      }
    }

    report.records.push_back({iter, new_cost, lambda});
    report.iterations = iter + 1;
    if (lm) lambda = std::max(lambda / cfg.lm_damping_down, 1e-12);

    const double drop = cost - new_cost;
    cost = new_cost;
    report.final_cost = cost;
    if (std::abs(drop) < cfg.abs_tolerance || std::abs(drop) < cfg.rel_tolerance * cost) {
      report.converged = true;
      return report;
    }
  }
  return report;  // max iterations reached, converged = false
}

inline SolveReport optimize(FactorGraph& g, const SolverConfig& cfg = {}) {
  return optimize(g, g.estimate(), cfg);
}

// ===========================================================================
// Fixed-lag marginalization
// ===========================================================================

/// Drops all variables older than new_epoch - lag, replacing the factors that
/// touched them with a Gaussian prior on the boundary variables obtained by
/// Schur complement of the dropped block at the current estimate.
inline void slide_window(FactorGraph& g, int new_epoch, int lag) {
  if (lag < 1) throw std::invalid_argument("slide_window: lag must be >= 1");
  const int cutoff = new_epoch - lag;
  if (g.variables().empty() || g.variables().begin()->epoch >= cutoff) return;

  const Values est = g.estimate();  // snapshot before stripping
  const std::vector<std::shared_ptr<Factor>> removed = g.strip_before(cutoff);
  if (removed.empty()) return;

  std::set<VariableKey> touched;
  for (const auto& f : removed) {
    for (const auto& k : f->keys()) touched.insert(k);
  }
  std::vector<VariableKey> dropped, boundary;
  for (const auto& k : touched) {
    (k.epoch < cutoff ? dropped : boundary).push_back(k);
  }
  if (boundary.empty()) return;  // nothing spans the cut

  std::map<VariableKey, int> offset;
  int nd = 0;
  for (const auto& k : dropped) {
    offset[k] = nd;
    nd += var_dim(k.kind);
  }
  int nb = 0;
  for (const auto& k : boundary) {
    offset[k] = nd + nb;
    nb += var_dim(k.kind);
  }

  int m = 0;
  for (const auto& f : removed) m += f->dim();
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(m, nd + nb);
  Eigen::VectorXd res(m);
  int row = 0;
  std::vector<Eigen::MatrixXd> blocks;
  for (const auto& f : removed) {
    const Eigen::VectorXd r = f->linearize(est, blocks);
    double s = 1.0;
    if (f->kernel()) s = std::sqrt(kernel_eval(*f->kernel(), r.norm()).irls_weight);
    res.segment(row, f->dim()) = s * r;
    for (size_t i = 0; i < f->keys().size(); ++i) {
      jac.block(row, offset.at(f->keys()[i]), f->dim(), blocks[i].cols()) = s * blocks[i];
    }
    row += f->dim();
  }

  const Eigen::MatrixXd h = jac.transpose() * jac;
  const Eigen::VectorXd grad = jac.transpose() * res;
  const Eigen::MatrixXd h_dd = h.topLeftCorner(nd, nd);
  const Eigen::MatrixXd h_bd = h.bottomLeftCorner(nb, nd);
  const Eigen::MatrixXd h_bb = h.bottomRightCorner(nb, nb);

  // Pseudo-inverse of the dropped block; unconstrained directions (gauge
  // freedom inside the removed subgraph) contribute nothing.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_dd(h_dd);
  const double thresh_dd = 1e-10 * std::max(eig_dd.eigenvalues().maxCoeff(), 0.0);
  Eigen::VectorXd inv_dd = eig_dd.eigenvalues();
  for (int i = 0; i < inv_dd.size(); ++i) {
    inv_dd(i) = inv_dd(i) > thresh_dd ? 1.0 / inv_dd(i) : 0.0;
  }
  const Eigen::MatrixXd h_dd_pinv =
      eig_dd.eigenvectors() * inv_dd.asDiagonal() * eig_dd.eigenvectors().transpose();

  const Eigen::MatrixXd schur = h_bb - h_bd * h_dd_pinv * h_bd.transpose();
  const Eigen::VectorXd grad_b = grad.tail(nb) - h_bd * h_dd_pinv * grad.head(nd);

  // Square root of the marginal information: schur = A^T A, A^T b = grad_b.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_s(schur);
  const double thresh_s = 1e-10 * std::max(eig_s.eigenvalues().maxCoeff(), 0.0);
  Eigen::VectorXd sqrt_l = eig_s.eigenvalues();
  Eigen::VectorXd inv_sqrt_l = sqrt_l;
  for (int i = 0; i < sqrt_l.size(); ++i) {
    if (sqrt_l(i) > thresh_s) {
      sqrt_l(i) = std::sqrt(sqrt_l(i));
      inv_sqrt_l(i) = 1.0 / sqrt_l(i);
    } else {
      sqrt_l(i) = 0.0;
      inv_sqrt_l(i) = 0.0;
    }
  }
  const Eigen::MatrixXd a = sqrt_l.asDiagonal() * eig_s.eigenvectors().transpose();
  const Eigen::VectorXd b = inv_sqrt_l.asDiagonal() * eig_s.eigenvectors().transpose() * grad_b;

  Values lin;
  for (const auto& k : boundary) {
    switch (k.kind) {
      case VarKind::Pose: lin.poses[k.epoch] = est.poses.at(k.epoch); break;
      case VarKind::Velocity: lin.velocities[k.epoch] = est.velocities.at(k.epoch); break;
      case VarKind::Bias: lin.biases[k.epoch] = est.biases.at(k.epoch); break;
      case VarKind::Clock: lin.clocks[k.epoch] = est.clocks.at(k.epoch); break;
    }
  }
  g.add(std::make_shared<LinearMarginalFactor>(boundary, std::move(lin), a, b));
}

}  // namespace navfuse
