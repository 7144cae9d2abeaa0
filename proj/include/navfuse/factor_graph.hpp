#pragma once

// Factor-graph variables, values, and factors for tightly or loosely coupled
// GNSS/IMU fusion. Variables per epoch: Pose (orientation + position, 6 dof),
// Velocity (3), Bias (gyro + accel, 6), Clock (1, meters).
//
// Orientation updates use the right-multiplicative exponential retraction
// R <- R * exp(dtheta); all other blocks are additive. Robust kernels attach
// only to GNSS-type factors (pseudorange, position fix); IMU, prior, and
// random-walk factors always keep the plain quadratic cost.

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <tuple>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "navfuse/geo.hpp"
#include "navfuse/preintegration.hpp"
#include "navfuse/robust.hpp"
#include "navfuse/so3.hpp"
#include "navfuse/types.hpp"

namespace navfuse {

// ===========================================================================
// Keys and values
// ===========================================================================

enum class VarKind : int { Pose = 0, Velocity = 1, Bias = 2, Clock = 3 };

struct VariableKey {
  VarKind kind{VarKind::Pose};
  int epoch{0};

  // Elimination order: ascending epoch, then Pose, Vel, Bias, Clock.
  friend bool operator<(const VariableKey& a, const VariableKey& b) {
    return std::tie(a.epoch, a.kind) < std::tie(b.epoch, b.kind);
  }
  friend bool operator==(const VariableKey& a, const VariableKey& b) {
    return a.kind == b.kind && a.epoch == b.epoch;
  }
};

inline int var_dim(VarKind k) {
  switch (k) {
    case VarKind::Pose: return 6;
    case VarKind::Velocity: return 3;
    case VarKind::Bias: return 6;
    case VarKind::Clock: return 1;
  }
  return 0;
}

struct PoseBlock {
  Rotation R{Rotation::Identity()};
  Eigen::Vector3d p{0.0, 0.0, 0.0};
};

/// Current estimate of every variable, keyed by epoch within each kind.
struct Values {
  std::map<int, PoseBlock> poses;
  std::map<int, Eigen::Vector3d> velocities;
  std::map<int, ImuBias> biases;
  std::map<int, double> clocks;

  bool has(const VariableKey& k) const {
    switch (k.kind) {
      case VarKind::Pose: return poses.count(k.epoch) > 0;
      case VarKind::Velocity: return velocities.count(k.epoch) > 0;
      case VarKind::Bias: return biases.count(k.epoch) > 0;
      case VarKind::Clock: return clocks.count(k.epoch) > 0;
    }
    return false;
  }

  NavState nav_state(int epoch) const {
    NavState s;
    const PoseBlock& pb = poses.at(epoch);
    s.R = pb.R;
    s.p = pb.p;
    s.v = velocities.at(epoch);
    return s;
  }

  /// Applies one increment block to the variable identified by `key`.
  void retract(const VariableKey& key, const Eigen::VectorXd& dx) {
    switch (key.kind) {
      case VarKind::Pose: {
        PoseBlock& pb = poses.at(key.epoch);
        pb.R = pb.R * so3_exp(dx.head<3>());
        pb.p += dx.tail<3>();
        break;
      }
      case VarKind::Velocity:
        velocities.at(key.epoch) += dx;
        break;
      case VarKind::Bias: {
        ImuBias& b = biases.at(key.epoch);
        b.gyro += dx.head<3>();
        b.accel += dx.tail<3>();
        break;
      }
      case VarKind::Clock:
        clocks.at(key.epoch) += dx(0);
        break;
    }
  }

  /// Local coordinates of this value about `lin` for one variable
  /// (log of the relative rotation for poses, plain difference otherwise).
  Eigen::VectorXd local(const VariableKey& key, const Values& lin) const {
    switch (key.kind) {
      case VarKind::Pose: {
        const PoseBlock& a = lin.poses.at(key.epoch);
        const PoseBlock& b = poses.at(key.epoch);
        Eigen::VectorXd d(6);
        d.head<3>() = so3_log(a.R.transpose() * b.R);
        d.tail<3>() = b.p - a.p;
        return d;
      }
      case VarKind::Velocity:
        return velocities.at(key.epoch) - lin.velocities.at(key.epoch);
      case VarKind::Bias:
        return biases.at(key.epoch).vec() - lin.biases.at(key.epoch).vec();
      case VarKind::Clock: {
        Eigen::VectorXd d(1);
        d(0) = clocks.at(key.epoch) - lin.clocks.at(key.epoch);
        return d;
      }
    }
    throw std::logic_error("Values::local: bad key");
  }
};

// ===========================================================================
// Factor base
// ===========================================================================

class Factor {
 public:
  virtual ~Factor() = default;

  const std::vector<VariableKey>& keys() const { return keys_; }
  int dim() const { return dim_; }

  /// Whitened residual at the given values.
  virtual Eigen::VectorXd error(const Values& v) const = 0;

  /// Whitened residual plus whitened Jacobian blocks in keys() order.
  virtual Eigen::VectorXd linearize(const Values& v,
                                    std::vector<Eigen::MatrixXd>& jac) const = 0;

  /// Robust kernel, if any. Only GNSS-type factors may carry one.
  const std::optional<RobustKernel>& kernel() const { return kernel_; }

 protected:
  Factor(std::vector<VariableKey> keys, int dim, std::optional<RobustKernel> kernel)
      : keys_(std::move(keys)), dim_(dim), kernel_(std::move(kernel)) {}

  std::vector<VariableKey> keys_;
  int dim_;
  std::optional<RobustKernel> kernel_;
};

namespace detail {

/// Square-root information whitener W = L^-1 with cov = L L^T.
inline Eigen::MatrixXd sqrt_information(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("factor covariance is not positive definite");
  }
  return llt.matrixL().solve(Eigen::MatrixXd::Identity(cov.rows(), cov.cols()));
}

}  // namespace detail

// ===========================================================================
// Concrete factors
// ===========================================================================

class PriorPoseFactor final : public Factor {
 public:
  PriorPoseFactor(int epoch, const PoseBlock& prior, const Eigen::Matrix<double, 6, 6>& cov)
      : Factor({{VarKind::Pose, epoch}}, 6, std::nullopt),
        prior_(prior),
        w_(detail::sqrt_information(cov)) {}

  Eigen::VectorXd error(const Values& v) const override {
    const PoseBlock& pb = v.poses.at(keys_[0].epoch);
    Eigen::Matrix<double, 6, 1> r;
    r.head<3>() = so3_log(prior_.R.transpose() * pb.R);
    r.tail<3>() = pb.p - prior_.p;
    return w_ * r;
  }

  Eigen::VectorXd linearize(const Values& v, std::vector<Eigen::MatrixXd>& jac) const override {
    const PoseBlock& pb = v.poses.at(keys_[0].epoch);
    Eigen::Matrix<double, 6, 1> r;
    r.head<3>() = so3_log(prior_.R.transpose() * pb.R);
    r.tail<3>() = pb.p - prior_.p;
    Eigen::Matrix<double, 6, 6> j = Eigen::Matrix<double, 6, 6>::Zero();
    j.block<3, 3>(0, 0) = so3_right_jacobian_inverse(r.head<3>());
    j.block<3, 3>(3, 3).setIdentity();
    jac = {w_ * j};
    return w_ * r;
  }

 private:
  PoseBlock prior_;
  Eigen::Matrix<double, 6, 6> w_;
};

/// Prior on orientation only; gauge-fixes graphs whose measurements observe
/// position but not attitude.
class PriorRotationFactor final : public Factor {
 public:
  PriorRotationFactor(int epoch, const Rotation& prior, const Eigen::Matrix3d& cov)
      : Factor({{VarKind::Pose, epoch}}, 3, std::nullopt),
        prior_(prior),
        w_(detail::sqrt_information(cov)) {}

  Eigen::VectorXd error(const Values& v) const override {
    return w_ * so3_log(prior_.transpose() * v.poses.at(keys_[0].epoch).R);
  }

  Eigen::VectorXd linearize(const Values& v, std::vector<Eigen::MatrixXd>& jac) const override {
    const Eigen::Vector3d r = so3_log(prior_.transpose() * v.poses.at(keys_[0].epoch).R);
    Eigen::Matrix<double, 3, 6> j = Eigen::Matrix<double, 3, 6>::Zero();
    j.block<3, 3>(0, 0) = so3_right_jacobian_inverse(r);
    jac = {w_ * j};
    return w_ * r;
  }

 private:
  Rotation prior_;
  Eigen::Matrix3d w_;
};

class PriorVelocityFactor final : public Factor {
 public:
  PriorVelocityFactor(int epoch, const Eigen::Vector3d& prior, const Eigen::Matrix3d& cov)
      : Factor({{VarKind::Velocity, epoch}}, 3, std::nullopt),
        prior_(prior),
        w_(detail::sqrt_information(cov)) {}

  Eigen::VectorXd error(const Values& v) const override {
    return w_ * (v.velocities.at(keys_[0].epoch) - prior_);
  }

  Eigen::VectorXd linearize(const Values& v, std::vector<Eigen::MatrixXd>& jac) const override {
    jac = {w_};
    return error(v);
  }

 private:
  Eigen::Vector3d prior_;
  Eigen::Matrix3d w_;
};

class PriorBiasFactor final : public Factor {
 public:
  PriorBiasFactor(int epoch, const ImuBias& prior, const Eigen::Matrix<double, 6, 6>& cov)
      : Factor({{VarKind::Bias, epoch}}, 6, std::nullopt),
        prior_(prior),
        w_(detail::sqrt_information(cov)) {}

  Eigen::VectorXd error(const Values& v) const override {
    return w_ * (v.biases.at(keys_[0].epoch).vec() - prior_.vec());
  }

  Eigen::VectorXd linearize(const Values& v, std::vector<Eigen::MatrixXd>& jac) const override {
    jac = {w_};
    return error(v);
  }

 private:
  ImuBias prior_;
  Eigen::Matrix<double, 6, 6> w_;
};

class PriorClockFactor final : public Factor {
 public:
  PriorClockFactor(int epoch, double prior, double sigma)
      : Factor({{VarKind::Clock, epoch}}, 1, std::nullopt), prior_(prior), inv_sigma_(1.0 / sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("clock prior sigma must be > 0");
  }

  Eigen::VectorXd error(const Values& v) const override {
    Eigen::VectorXd r(1);
    r(0) = inv_sigma_ * (v.clocks.at(keys_[0].epoch) - prior_);
    return r;
  }

  Eigen::VectorXd linearize(const Values& v, std::vector<Eigen::MatrixXd>& jac) const override {
    Eigen::MatrixXd j(1, 1);
    j(0, 0) = inv_sigma_;
    jac = {j};
    return error(v);
  }

 private:
  double prior_;
  double inv_sigma_;
};

/// Scalar pseudorange factor on {Pose(k), Clock(k)}. Residual is
/// (predicted - measured) / sigma, so the Jacobian wrt receiver position is
/// minus the unit line of sight and wrt clock is +1 (before whitening).
class PseudorangeFactor final : public Factor {
 public:
  PseudorangeFactor(int epoch, SatObservation obs, std::optional<RobustKernel> kernel)
      : Factor({{VarKind::Pose, epoch}, {VarKind::Clock, epoch}}, 1, std::move(kernel)),
        obs_(std::move(obs)) {
    if (!(obs_.sigma > 0.0)) throw std::invalid_argument("pseudorange sigma must be > 0");
  }

  Eigen::VectorXd error(const Values& v) const override {
    const PoseBlock& pb = v.poses.at(keys_[0].epoch);
    const double range = (obs_.sat_pos - pb.p).norm();
    Eigen::VectorXd r(1);
    r(0) = (range + v.clocks.at(keys_[1].epoch) - obs_.pseudorange) / obs_.sigma;
    return r;
  }

  Eigen::VectorXd linearize(const Values& v, std::vector<Eigen::MatrixXd>& jac) const override {
    const PoseBlock& pb = v.poses.at(keys_[0].epoch);
    const Eigen::Vector3d to_sat = obs_.sat_pos - pb.p;
    const double range = to_sat.norm();
    const Eigen::Vector3d los = to_sat / range;

    Eigen::MatrixXd j_pose = Eigen::MatrixXd::Zero(1, 6);
    j_pose.block<1, 3>(0, 3) = -los.transpose() / obs_.sigma;
    Eigen::MatrixXd j_clk(1, 1);
    j_clk(0, 0) = 1.0 / obs_.sigma;
    jac = {j_pose, j_clk};

    Eigen::VectorXd r(1);
    r(0) = (range + v.clocks.at(keys_[1].epoch) - obs_.pseudorange) / obs_.sigma;
    return r;
  }

  const SatObservation& observation() const { return obs_; }

 private:
  SatObservation obs_;
};

/// Loosely coupled position-fix factor on {Pose(k)}; residual z - p.
class GnssPositionFactor final : public Factor {
 public:
  GnssPositionFactor(int epoch, const Eigen::Vector3d& z, const Eigen::Matrix3d& cov,
                     std::optional<RobustKernel> kernel)
      : Factor({{VarKind::Pose, epoch}}, 3, std::move(kernel)),
        z_(z),
        w_(detail::sqrt_information(cov)) {}

  Eigen::VectorXd error(const Values& v) const override {
    return w_ * (z_ - v.poses.at(keys_[0].epoch).p);
  }

  Eigen::VectorXd linearize(const Values& v, std::vector<Eigen::MatrixXd>& jac) const override {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(3, 6);
    j.block<3, 3>(0, 3) = -w_;
    jac = {j};
    return error(v);
  }

 private:
  Eigen::Vector3d z_;
  Eigen::Matrix3d w_;
};

/// Preintegrated IMU factor on {Pose(i), Vel(i), Bias(i), Pose(j), Vel(j)}.
class ImuFactor final : public Factor {
 public:
  ImuFactor(int epoch_i, int epoch_j, PreintegratedImu pim, const GravityVector& gravity)
      : Factor({{VarKind::Pose, epoch_i},
                {VarKind::Velocity, epoch_i},
                {VarKind::Bias, epoch_i},
                {VarKind::Pose, epoch_j},
                {VarKind::Velocity, epoch_j}},
               9, std::nullopt),
        pim_(std::move(pim)),
        gravity_(gravity),
        w_(detail::sqrt_information(pim_.cov)) {}

  Eigen::VectorXd error(const Values& v) const override {
    const int i = keys_[0].epoch, j = keys_[3].epoch;
    return w_ * imu_residual(v.nav_state(i), v.nav_state(j), v.biases.at(i), pim_, gravity_);
  }

  Eigen::VectorXd linearize(const Values& v, std::vector<Eigen::MatrixXd>& jac) const override {
    const int i = keys_[0].epoch, j = keys_[3].epoch;
    ImuResidualJacobians raw;
    const Vector9d r = imu_residual_jacobians(v.nav_state(i), v.nav_state(j), v.biases.at(i),
                                              pim_, gravity_, raw);
    jac = {w_ * raw.pose_i, w_ * raw.vel_i, w_ * raw.bias_i, w_ * raw.pose_j, w_ * raw.vel_j};
    return w_ * r;
  }

  const PreintegratedImu& pim() const { return pim_; }

 private:
  PreintegratedImu pim_;
  GravityVector gravity_;
  Matrix9d w_;
};

/// Zero-mean bias difference between consecutive epochs.
class BiasWalkFactor final : public Factor {
 public:
  BiasWalkFactor(int epoch_i, int epoch_j, const Eigen::Matrix<double, 6, 1>& sigma)
      : Factor({{VarKind::Bias, epoch_i}, {VarKind::Bias, epoch_j}}, 6, std::nullopt),
        inv_sigma_(sigma.cwiseInverse()) {
    if (!(sigma.minCoeff() > 0.0)) throw std::invalid_argument("bias walk sigma must be > 0");
  }

  Eigen::VectorXd error(const Values& v) const override {
    return inv_sigma_.asDiagonal() *
           (v.biases.at(keys_[1].epoch).vec() - v.biases.at(keys_[0].epoch).vec());
  }

  Eigen::VectorXd linearize(const Values& v, std::vector<Eigen::MatrixXd>& jac) const override {
    const Eigen::MatrixXd w = inv_sigma_.asDiagonal();
    jac = {-w, w};
    return error(v);
  }

 private:
  Eigen::Matrix<double, 6, 1> inv_sigma_;
};

/// Zero-mean clock-bias difference between consecutive epochs.
class ClockWalkFactor final : public Factor {
 public:
  ClockWalkFactor(int epoch_i, int epoch_j, double sigma)
      : Factor({{VarKind::Clock, epoch_i}, {VarKind::Clock, epoch_j}}, 1, std::nullopt),
        inv_sigma_(1.0 / sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("clock walk sigma must be > 0");
  }

  Eigen::VectorXd error(const Values& v) const override {
    Eigen::VectorXd r(1);
    r(0) = inv_sigma_ * (v.clocks.at(keys_[1].epoch) - v.clocks.at(keys_[0].epoch));
    return r;
  }

  Eigen::VectorXd linearize(const Values& v, std::vector<Eigen::MatrixXd>& jac) const override {
    Eigen::MatrixXd ji(1, 1), jj(1, 1);
    ji(0, 0) = -inv_sigma_;
    jj(0, 0) = inv_sigma_;
    jac = {ji, jj};
    return error(v);
  }

 private:
  double inv_sigma_;
};

/// Gaussian prior left behind by marginalization: residual
/// A * (x [-] x_lin) + b over the retained boundary variables.
class LinearMarginalFactor final : public Factor {
 public:
  LinearMarginalFactor(std::vector<VariableKey> keys, Values lin, Eigen::MatrixXd a,
                       Eigen::VectorXd b)
      : Factor(keys, static_cast<int>(a.rows()), std::nullopt),
        lin_(std::move(lin)),
        a_(std::move(a)),
        b_(std::move(b)) {
    int total = 0;
    for (const auto& k : keys_) total += var_dim(k.kind);
    if (a_.cols() != total) throw std::invalid_argument("marginal factor dimension mismatch");
  }

  Eigen::VectorXd error(const Values& v) const override {
    return a_ * stacked_local(v) + b_;
  }

  Eigen::VectorXd linearize(const Values& v, std::vector<Eigen::MatrixXd>& jac) const override {
    jac.clear();
    int col = 0;
    Eigen::VectorXd local = stacked_local(v);
    for (const auto& k : keys_) {
      const int d = var_dim(k.kind);
      Eigen::MatrixXd block = a_.middleCols(col, d);
      if (k.kind == VarKind::Pose) {
        // Chain rule through the local coordinates of the rotation part.
        block.leftCols(3) =
            block.leftCols(3) * so3_right_jacobian_inverse(local.segment<3>(col));
      }
      jac.push_back(block);
      col += d;
    }
    return a_ * local + b_;
  }

 private:
  Eigen::VectorXd stacked_local(const Values& v) const {
    int total = 0;
    for (const auto& k : keys_) total += var_dim(k.kind);
    Eigen::VectorXd out(total);
    int at = 0;
    for (const auto& k : keys_) {
      const int d = var_dim(k.kind);
      out.segment(at, d) = v.local(k, lin_);
      at += d;
    }
    return out;
  }

  Values lin_;
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
};

// ===========================================================================
// Graph
// ===========================================================================

class FactorGraph {
 public:
  /// Declares the variables of one epoch and seeds identity/zero estimate
  /// entries for them (callers overwrite with real initializations). Times
  /// feed the random-walk factor scaling; with_clock is false in loosely
  /// coupled mode.
  void add_epoch(int epoch, double t, bool with_clock = true) {
    variables_.insert({VarKind::Pose, epoch});
    variables_.insert({VarKind::Velocity, epoch});
    variables_.insert({VarKind::Bias, epoch});
    estimate_.poses.try_emplace(epoch);
    estimate_.velocities.try_emplace(epoch, Eigen::Vector3d::Zero());
    estimate_.biases.try_emplace(epoch);
    if (with_clock) {
      variables_.insert({VarKind::Clock, epoch});
      estimate_.clocks.try_emplace(epoch, 0.0);
    }
    epoch_time_[epoch] = t;
  }

  void add(std::shared_ptr<Factor> f) {
    for (const auto& k : f->keys()) {
      if (variables_.find(k) == variables_.end()) {
        throw std::invalid_argument("factor references unknown variable");
      }
    }
    factors_.push_back(std::move(f));
  }

  const std::vector<std::shared_ptr<Factor>>& factors() const { return factors_; }
  const std::set<VariableKey>& variables() const { return variables_; }
  double epoch_time(int epoch) const { return epoch_time_.at(epoch); }

  Values& estimate() { return estimate_; }
  const Values& estimate() const { return estimate_; }

  int variable_dim() const {
    int n = 0;
    for (const auto& k : variables_) n += var_dim(k.kind);
    return n;
  }

  int residual_dim() const {
    int m = 0;
    for (const auto& f : factors_) m += f->dim();
    return m;
  }

  /// Removes every variable older than `cutoff_epoch` together with all
  /// factors touching them. Returns the removed factors (for marginalization).
  std::vector<std::shared_ptr<Factor>> strip_before(int cutoff_epoch) {
    std::vector<std::shared_ptr<Factor>> removed;
    std::vector<std::shared_ptr<Factor>> kept;
    for (auto& f : factors_) {
      bool touches = false;
      for (const auto& k : f->keys()) touches = touches || k.epoch < cutoff_epoch;
      (touches ? removed : kept).push_back(std::move(f));
    }
    factors_ = std::move(kept);
    for (auto it = variables_.begin(); it != variables_.end();) {
      it = it->epoch < cutoff_epoch ? variables_.erase(it) : std::next(it);
    }
    const auto drop = [cutoff_epoch](auto& m) {
      for (auto it = m.begin(); it != m.end();) {
        it = it->first < cutoff_epoch ? m.erase(it) : std::next(it);
      }
    };
    drop(estimate_.poses);
    drop(estimate_.velocities);
    drop(estimate_.biases);
    drop(estimate_.clocks);
    for (auto it = epoch_time_.begin(); it != epoch_time_.end();) {
      it = it->first < cutoff_epoch ? epoch_time_.erase(it) : std::next(it);
    }
    return removed;
  }

 private:
  std::set<VariableKey> variables_;
  std::vector<std::shared_ptr<Factor>> factors_;
  std::map<int, double> epoch_time_;
  Values estimate_;
};

// ===========================================================================
// Graph construction helpers
// ===========================================================================

inline void add_pseudorange_factor(FactorGraph& g, int epoch, const SatObservation& obs,
                                   std::optional<RobustKernel> kernel) {
  if (!g.variables().count({VarKind::Pose, epoch}) ||
      !g.variables().count({VarKind::Clock, epoch})) {
    throw std::invalid_argument("add_pseudorange_factor: unknown epoch");
  }
  g.add(std::make_shared<PseudorangeFactor>(epoch, obs, std::move(kernel)));
}

inline void add_gnss_position_factor(FactorGraph& g, int epoch, const EcefCoord& z,
                                     const Eigen::Matrix3d& cov,
                                     std::optional<RobustKernel> kernel) {
  if (!g.variables().count({VarKind::Pose, epoch})) {
    throw std::invalid_argument("add_gnss_position_factor: unknown epoch");
  }
  g.add(std::make_shared<GnssPositionFactor>(epoch, z.vec(), cov, std::move(kernel)));
}

inline void add_imu_factor(FactorGraph& g, int epoch_i, int epoch_j, PreintegratedImu pim,
                           const GravityVector& gravity) {
  if (epoch_j - epoch_i != 1) {
    throw std::invalid_argument("add_imu_factor: keyframes must be consecutive");
  }
  g.add(std::make_shared<ImuFactor>(epoch_i, epoch_j, std::move(pim), gravity));
}

/// Bias and clock random-walk links. Bias sigma scales with sqrt of the
/// elapsed seconds; the clock sigma is specified per sqrt(epoch step).
inline void add_random_walk_factors(FactorGraph& g, int epoch_i, int epoch_j,
                                    const ImuNoiseParams& sigma_bias,
                                    double sigma_clock_per_sqrt_epoch) {
  const double dt = g.epoch_time(epoch_j) - g.epoch_time(epoch_i);
  if (!(dt > 0.0)) throw std::invalid_argument("add_random_walk_factors: non-positive dt");
  Eigen::Matrix<double, 6, 1> sigma;
  sigma.head<3>().setConstant(sigma_bias.gyro_bias_walk * std::sqrt(dt));
  sigma.tail<3>().setConstant(sigma_bias.accel_bias_walk * std::sqrt(dt));
  g.add(std::make_shared<BiasWalkFactor>(epoch_i, epoch_j, sigma));
  if (g.variables().count({VarKind::Clock, epoch_i}) &&
      g.variables().count({VarKind::Clock, epoch_j})) {
    const double steps = epoch_j - epoch_i;
    g.add(std::make_shared<ClockWalkFactor>(epoch_i, epoch_j,
                                            sigma_clock_per_sqrt_epoch * std::sqrt(steps)));
  }
}

/// Total objective: robust zeta(|whitened residual|) for kernel-carrying
/// factors, 0.5 * |whitened residual|^2 otherwise.
inline double total_cost(const FactorGraph& g, const Values& estimate) {
  double cost = 0.0;
  for (const auto& f : g.factors()) {
    const Eigen::VectorXd e = f->error(estimate);
    if (f->kernel()) {
      cost += kernel_eval(*f->kernel(), e.norm()).value;
    } else {
      cost += 0.5 * e.squaredNorm();
    }
  }
  return cost;
}

}  // namespace navfuse
