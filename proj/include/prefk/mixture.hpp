// Kernel mixtures: softmax-parameterized weights, the flat four-kernel
// mixture, the two-level hierarchical mixture (HMK), entropy regularization,
// weight stepping and collapse detection.
#pragma once

#include "prefk/core.hpp"
#include "prefk/kernels.hpp"

#include <array>
#include <optional>
#include <vector>

namespace prefk {

using Weights4 = std::array<double, 4>;
using Weights2 = std::array<double, 2>;

/// The four component kernels shared by both mixture forms.
struct KernelQuartet {
  PolynomialKernel polynomial{};
  RbfKernel rbf{};
  SpectralKernel spectral{};
  MahalanobisScalarKernel mahalanobis{};
};

// Flat mixture slots follow (Polynomial, RBF, Spectral, Mahalanobis).
// Hierarchical slots follow (RBF, Polynomial | Spectral, Mahalanobis), with
// tau_1 weighting the local pair and tau_2 the global pair.
enum FlatSlot : std::size_t { kFlatPoly = 0, kFlatRbf = 1, kFlatSpectral = 2, kFlatMaha = 3 };
enum HmkSlot : std::size_t { kHmkRbf = 0, kHmkPoly = 1, kHmkSpectral = 2, kHmkMaha = 3 };

inline constexpr std::array<const char*, 4> kFlatSlotNames{"polynomial", "rbf", "spectral", "mahalanobis"};
inline constexpr std::array<const char*, 4> kHmkSlotNames{"rbf", "polynomial", "spectral", "mahalanobis"};

inline KernelSpec flat_component(const KernelQuartet& q, std::size_t slot) {
  switch (slot) {
    case kFlatPoly: return q.polynomial;
    case kFlatRbf: return q.rbf;
    case kFlatSpectral: return q.spectral;
    default: return q.mahalanobis;
  }
}

inline KernelSpec hmk_component(const KernelQuartet& q, std::size_t slot) {
  switch (slot) {
    case kHmkRbf: return q.rbf;
    case kHmkPoly: return q.polynomial;
    case kHmkSpectral: return q.spectral;
    default: return q.mahalanobis;
  }
}

template <std::size_t N>
struct SimplexWeights {
  std::array<double, N> weights;
  RealMatrix jacobian;  // d weights_i / d logits_j = w_i (delta_ij - w_j)
};

template <std::size_t N>
SimplexWeights<N> weights_from_logits(const std::array<double, N>& logits) {
  RealVector v(static_cast<Eigen::Index>(N));
  for (std::size_t i = 0; i < N; ++i) v(static_cast<Eigen::Index>(i)) = logits[i];
  if (!v.allFinite()) throw Error(ErrorKind::InvalidInput, "mixture logits must be finite");
  const RealVector w = softmax(v);
  SimplexWeights<N> out;
  for (std::size_t i = 0; i < N; ++i) out.weights[i] = w(static_cast<Eigen::Index>(i));
  out.jacobian = RealMatrix(w.asDiagonal()) - w * w.transpose();
  return out;
}

struct MixtureState {
  Weights4 theta{0.0, 0.0, 0.0, 0.0};
  Weights4 lambda() const { return weights_from_logits(theta).weights; }
};

struct HMKState {
  Weights4 theta{0.0, 0.0, 0.0, 0.0};
  Weights2 psi{0.0, 0.0};
  Weights4 lambda() const { return weights_from_logits(theta).weights; }
  Weights2 tau() const { return weights_from_logits(psi).weights; }
};

struct FlatMixture {
  KernelQuartet kernels{};
  MixtureState state{};
};

struct HierarchicalMixture {
  KernelQuartet kernels{};
  HMKState state{};
};

/// Convex combination of four kernel values in flat-slot order.
inline double flat_mixture_kernel(const Weights4& lambda, const Weights4& values) {
  double sum = 0.0;
  for (std::size_t i = 0; i < 4; ++i) sum += lambda[i] * values[i];
  return sum;
}

inline double flat_mixture_kernel(const MixtureState& state, const KernelQuartet& kernels, double z) {
  Weights4 values{};
  for (std::size_t i = 0; i < 4; ++i) values[i] = scalar_kernel(flat_component(kernels, i), z);
  return flat_mixture_kernel(state.lambda(), values);
}

inline double flat_mixture_kernel(const MixtureState& state, const KernelQuartet& kernels, const RealVector& u,
                                  const RealVector& v) {
  Weights4 values{};
  for (std::size_t i = 0; i < 4; ++i) values[i] = vector_kernel(flat_component(kernels, i), u, v);
  return flat_mixture_kernel(state.lambda(), values);
}

/// tau_1 (lambda_1 K_rbf + lambda_2 K_poly) + tau_2 (lambda_3 K_spec + lambda_4 K_maha),
/// with `values` in hierarchical-slot order.
inline double hmk_kernel(const Weights4& lambda, const Weights2& tau, const Weights4& values) {
  const double local = lambda[kHmkRbf] * values[kHmkRbf] + lambda[kHmkPoly] * values[kHmkPoly];
  const double global = lambda[kHmkSpectral] * values[kHmkSpectral] + lambda[kHmkMaha] * values[kHmkMaha];
  return tau[0] * local + tau[1] * global;
}

inline double hmk_kernel(const HMKState& state, const KernelQuartet& kernels, double z) {
  Weights4 values{};
  for (std::size_t i = 0; i < 4; ++i) values[i] = scalar_kernel(hmk_component(kernels, i), z);
  return hmk_kernel(state.lambda(), state.tau(), values);
}

inline double hmk_kernel(const HMKState& state, const KernelQuartet& kernels, const RealVector& u,
                         const RealVector& v) {
  Weights4 values{};
  for (std::size_t i = 0; i < 4; ++i) values[i] = vector_kernel(hmk_component(kernels, i), u, v);
  return hmk_kernel(state.lambda(), state.tau(), values);
}

struct EntropyRegConfig {
  double weight = 0.1;
};

template <std::size_t N>
struct EntropyValue {
  double value;
  std::array<double, N> grad;  // dR / d lambda_i = -ln lambda_i - 1
};

template <std::size_t N>
EntropyValue<N> entropy_reg(const std::array<double, N>& lambda) {
  EntropyValue<N> out{0.0, {}};
  for (std::size_t i = 0; i < N; ++i) {
    if (!(lambda[i] > 0.0)) throw Error(ErrorKind::InvalidInput, "entropy needs strictly positive weights");
    out.value -= lambda[i] * std::log(lambda[i]);
    out.grad[i] = -std::log(lambda[i]) - 1.0;
  }
  return out;
}

namespace detail {

// One descent step on logits for a loss whose gradient in the simplex weights
// is `grad_weights`. Entropy enters the loss as -weight * R(lambda).
template <std::size_t N>
std::array<double, N> descend_logits(const std::array<double, N>& logits, const std::array<double, N>& grad_weights,
                                     double entropy_weight, double eta) {
  const auto sw = weights_from_logits(logits);
  RealVector g(static_cast<Eigen::Index>(N));
  const bool regularize = entropy_weight > 0.0;
  std::array<double, N> reg_grad{};
  if (regularize) reg_grad = entropy_reg(sw.weights).grad;
  for (std::size_t i = 0; i < N; ++i) {
    g(static_cast<Eigen::Index>(i)) = grad_weights[i] - (regularize ? entropy_weight * reg_grad[i] : 0.0);
  }
  if (!g.allFinite()) throw Error(ErrorKind::NumericalFailure, "mixture gradient is not finite");
  const RealVector dlogits = sw.jacobian.transpose() * g;
  std::array<double, N> next{};
  for (std::size_t i = 0; i < N; ++i) next[i] = logits[i] - eta * dlogits(static_cast<Eigen::Index>(i));
  const auto check = weights_from_logits(next).weights;
  for (double w : check) {
    if (!(w > 0.0)) throw Error(ErrorKind::NumericalFailure, "mixture weight underflowed to zero");
  }
  return next;
}

inline void require_step(double eta, double entropy_weight) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw Error(ErrorKind::InvalidInput, "step size must be positive");
  if (!(entropy_weight >= 0.0)) throw Error(ErrorKind::InvalidInput, "entropy weight must be nonnegative");
}

}  // namespace detail

/// Gradient-descent step on the logits of a loss L_task - w R(lambda), where
/// `grad_lambda` is dL_task / d lambda. Gradients pass through the full
/// softmax Jacobian.
inline MixtureState mixture_step(const MixtureState& state, const Weights4& grad_lambda, const EntropyRegConfig& reg,
                                 double eta) {
  detail::require_step(eta, reg.weight);
  return MixtureState{detail::descend_logits(state.theta, grad_lambda, reg.weight, eta)};
}

/// As above for HMK; the entropy term acts on lambda only, tau follows its own
/// task gradient.
inline HMKState mixture_step(const HMKState& state, const Weights4& grad_lambda, const Weights2& grad_tau,
                             const EntropyRegConfig& reg, double eta) {
  detail::require_step(eta, reg.weight);
  HMKState next;
  next.theta = detail::descend_logits(state.theta, grad_lambda, reg.weight, eta);
  next.psi = detail::descend_logits(state.psi, grad_tau, 0.0, eta);
  return next;
}

struct CollapseReport {
  std::vector<double> min_lambda_trajectory;
  bool collapsed = false;
  std::optional<std::size_t> dominant_index;  // 0-based slot of the dominant kernel
};

inline constexpr double kDefaultCollapseThreshold = 0.05;

/// Collapsed iff the smallest weight over the final 10% of steps (at least one
/// step) falls below `threshold`.
inline CollapseReport collapse_detect(const std::vector<Weights4>& trace, double threshold = kDefaultCollapseThreshold) {
  if (trace.empty()) throw Error(ErrorKind::InvalidInput, "collapse detection needs a nonempty trace");
  if (!(threshold > 0.0) || threshold > 0.25) throw Error(ErrorKind::InvalidInput, "threshold must lie in (0, 0.25]");
  CollapseReport report;
  report.min_lambda_trajectory.reserve(trace.size());
  for (const auto& w : trace) report.min_lambda_trajectory.push_back(*std::min_element(w.begin(), w.end()));

  const std::size_t n = trace.size();
  const std::size_t window = std::max<std::size_t>(1, (n + 9) / 10);
  double window_min = 1.0;
  for (std::size_t i = n - window; i < n; ++i) window_min = std::min(window_min, report.min_lambda_trajectory[i]);
  report.collapsed = window_min < threshold;
  if (report.collapsed) {
    const auto& last = trace.back();
    report.dominant_index = static_cast<std::size_t>(std::max_element(last.begin(), last.end()) - last.begin());
  }
  return report;
}

}  // namespace prefk
