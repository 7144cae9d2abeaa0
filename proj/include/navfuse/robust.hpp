#pragma once

// Robust loss kernels: L2, Huber, Tukey, Cauchy, and the general adaptive
// (Barron) family with shape alpha and scale c.
//
// Kernels always receive the Mahalanobis-whitened residual norm, so all
// thresholds and scales here are dimensionless. Each kernel exposes the loss
// value zeta(r), its derivative, and the IRLS weight w(r) = zeta'(r)/r with
// the r -> 0 limit taken analytically.

#include <cmath>
#include <limits>
#include <stdexcept>

namespace navfuse {

enum class KernelKind { L2, Huber, Tukey, Cauchy, Barron };

/// Sentinel for the Welsch limit of the adaptive family (alpha -> -inf).
inline constexpr double kBarronAlphaNegInf = -std::numeric_limits<double>::infinity();

/// Shape dispatch uses the Cauchy branch for |alpha| below this.
inline constexpr double kBarronAlphaEps = 1e-9;

/// Finite alpha magnitudes beyond this are not representable; the sentinel
/// (and anything below -1e6) routes to the Welsch branch instead, where the
/// general formula loses accuracy.
inline constexpr double kBarronAlphaMax = 1e6;

struct RobustKernel {
  KernelKind kind{KernelKind::L2};
  double threshold{1.0};  ///< Huber/Tukey threshold or Cauchy scale
  double alpha{2.0};      ///< adaptive shape
  double c{1.0};          ///< adaptive scale

  static RobustKernel l2() { return {KernelKind::L2, 1.0, 2.0, 1.0}; }

  static RobustKernel huber(double k) {
    require(k > 0.0, "huber threshold must be > 0");
    return {KernelKind::Huber, k, 2.0, 1.0};
  }

  static RobustKernel tukey(double k) {
    require(k > 0.0, "tukey threshold must be > 0");
    return {KernelKind::Tukey, k, 2.0, 1.0};
  }

  static RobustKernel cauchy(double k) {
    require(k > 0.0, "cauchy scale must be > 0");
    return {KernelKind::Cauchy, k, 2.0, 1.0};
  }

  static RobustKernel barron(double alpha, double c) {
    require(c > 0.0 && std::isfinite(c), "barron scale c must be > 0");
    require(!std::isnan(alpha), "barron alpha must not be NaN");
    const bool finite_ok = std::isfinite(alpha) && std::abs(alpha) <= kBarronAlphaMax;
    require(finite_ok || alpha == kBarronAlphaNegInf,
            "barron alpha must be finite in [-1e6, 1e6] or the -inf sentinel");
    return {KernelKind::Barron, 1.0, alpha, c};
  }

 private:
  static void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
  }
};

struct LossEval {
  double value{0.0};        ///< zeta(r), >= 0, zero at r = 0
  double derivative{0.0};   ///< d zeta / d r
  double irls_weight{0.0};  ///< zeta'(r) / r with the analytic r -> 0 limit
};

namespace detail {

// General adaptive loss, valid away from alpha = 2 and stable down to
// alpha ~ -1e6 through log1p/expm1.
inline LossEval barron_general(double r, double alpha, double c) {
  const double x = (r / c) * (r / c);
  const double d = std::abs(alpha - 2.0);
  const double t = std::log1p(x / d);
  LossEval out;
  out.value = (d / alpha) * std::expm1(0.5 * alpha * t);
  out.irls_weight = std::exp((0.5 * alpha - 1.0) * t) / (c * c);
  out.derivative = r * out.irls_weight;
  return out;
}

inline LossEval barron_quadratic(double r, double c) {
  LossEval out;
  out.irls_weight = 1.0 / (c * c);
  out.derivative = r * out.irls_weight;
  out.value = 0.5 * r * r * out.irls_weight;
  return out;
}

inline LossEval barron_cauchy_limit(double r, double c) {
  const double x = (r / c) * (r / c);
  LossEval out;
  out.value = std::log1p(0.5 * x);
  out.irls_weight = 2.0 / (r * r + 2.0 * c * c);
  out.derivative = r * out.irls_weight;
  return out;
}

inline LossEval barron_welsch(double r, double c) {
  const double x = (r / c) * (r / c);
  LossEval out;
  out.value = -std::expm1(-0.5 * x);
  out.irls_weight = std::exp(-0.5 * x) / (c * c);
  out.derivative = r * out.irls_weight;
  return out;
}

}  // namespace detail

/// Evaluates loss, derivative, and IRLS weight for a whitened residual.
inline LossEval kernel_eval(const RobustKernel& k, double r) {
  if (!std::isfinite(r)) throw std::invalid_argument("kernel_eval: residual not finite");
  LossEval out;
  switch (k.kind) {
    case KernelKind::L2: {
      out.value = 0.5 * r * r;
      out.derivative = r;
      out.irls_weight = 1.0;
      return out;
    }
    case KernelKind::Huber: {
      const double a = k.threshold;
      if (std::abs(r) <= a) {
        out.value = 0.5 * r * r;
        out.derivative = r;
        out.irls_weight = 1.0;
      } else {
        out.value = a * std::abs(r) - 0.5 * a * a;
        out.derivative = a * (r > 0.0 ? 1.0 : -1.0);
        out.irls_weight = a / std::abs(r);
      }
      return out;
    }
    case KernelKind::Tukey: {
      const double a = k.threshold;
      if (std::abs(r) <= a) {
        const double u = 1.0 - (r / a) * (r / a);
        out.value = (a * a / 6.0) * (1.0 - u * u * u);
        out.irls_weight = u * u;
        out.derivative = r * out.irls_weight;
      } else {
        out.value = a * a / 6.0;
        out.derivative = 0.0;
        out.irls_weight = 0.0;
      }
      return out;
    }
    case KernelKind::Cauchy: {
      const double a = k.threshold;
      out.value = 0.5 * a * a * std::log1p((r / a) * (r / a));
      out.irls_weight = 1.0 / (1.0 + (r / a) * (r / a));
      out.derivative = r * out.irls_weight;
      return out;
    }
    case KernelKind::Barron: {
      if (std::isinf(k.alpha) || k.alpha < -kBarronAlphaMax) {
        return detail::barron_welsch(r, k.c);
      }
      if (k.alpha == 2.0) return detail::barron_quadratic(r, k.c);
      if (std::abs(k.alpha) < kBarronAlphaEps) return detail::barron_cauchy_limit(r, k.c);
      return detail::barron_general(r, k.alpha, k.c);
    }
  }
  throw std::logic_error("kernel_eval: unknown kernel kind");
}

/// Branch-continuity report for the adaptive family: value of the general
/// formula vs the special branch alpha is close to.
struct BarronLimitReport {
  double general{0.0};
  double special{0.0};
  double abs_diff{0.0};
};

inline BarronLimitReport barron_limit_check(double alpha, double c, double r) {
  BarronLimitReport rep;
  rep.general = detail::barron_general(r, alpha, c).value;
  if (std::abs(alpha - 2.0) <= 1e-4) {
    rep.special = detail::barron_quadratic(r, c).value;
  } else if (std::abs(alpha) <= 1e-4) {
    rep.special = detail::barron_cauchy_limit(r, c).value;
  } else if (alpha <= -1e4) {
    rep.special = detail::barron_welsch(r, c).value;
  } else {
    throw std::invalid_argument("barron_limit_check: alpha not near a special value");
  }
  rep.abs_diff = std::abs(rep.general - rep.special);
  return rep;
}

}  // namespace navfuse
