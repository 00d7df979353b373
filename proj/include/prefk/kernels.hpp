// The four kernel families (plus the identity used by plain DPO), evaluated
// either on a scalar argument (log-ratio or dot-product ratio) or on a pair of
// embedding vectors.
#pragma once

#include "prefk/core.hpp"

#include <memory>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

namespace prefk {

/// kappa(z) = z. Reduces the kernelized hybrid loss to the plain hybrid loss.
struct IdentityKernel {};

struct PolynomialKernel {
  double c = 1.0;
  int d = 2;
};

struct RbfKernel {
  double sigma = 1.0;
};

/// Cosine-basis spectral kernel: sum_i exp(-lambda_i z^2) cos(i z), i = 1..p.
struct SpectralKernel {
  std::vector<double> lambdas{1.0};
  std::size_t p() const noexcept { return lambdas.size(); }
};

/// Scalar Mahalanobis form. (mu, sigma) act on the probability log-ratio and
/// (mu_prime, sigma_prime) on the embedding dot-product ratio.
struct MahalanobisScalarKernel {
  double mu = 0.0;
  double sigma = 1.0;
  double mu_prime = 1.0;
  double sigma_prime = 1.0;
};

/// exp(-(u - v)^T Sigma^{-1} (u - v) / 2). The factorization of Sigma is
/// computed once and shared between copies.
class MahalanobisVectorKernel {
 public:
  explicit MahalanobisVectorKernel(RealMatrix sigma)
      : sigma_(std::move(sigma)), factor_(std::make_shared<const SpdFactor>(sigma_)) {}

  const RealMatrix& sigma() const noexcept { return sigma_; }
  const SpdFactor& factor() const noexcept { return *factor_; }

 private:
  RealMatrix sigma_;
  std::shared_ptr<const SpdFactor> factor_;
};

using KernelSpec = std::variant<IdentityKernel, PolynomialKernel, RbfKernel, SpectralKernel, MahalanobisScalarKernel,
                                MahalanobisVectorKernel>;

inline std::string kernel_name(const KernelSpec& spec) {
  struct {
    std::string operator()(const IdentityKernel&) const { return "identity"; }
    std::string operator()(const PolynomialKernel&) const { return "polynomial"; }
    std::string operator()(const RbfKernel&) const { return "rbf"; }
    std::string operator()(const SpectralKernel&) const { return "spectral"; }
    std::string operator()(const MahalanobisScalarKernel&) const { return "mahalanobis"; }
    std::string operator()(const MahalanobisVectorKernel&) const { return "mahalanobis_vector"; }
  } visitor;
  return std::visit(visitor, spec);
}

inline void validate(const PolynomialKernel& k) {
  if (!std::isfinite(k.c)) throw Error(ErrorKind::InvalidInput, "polynomial offset must be finite");
  if (k.d < 1) throw Error(ErrorKind::InvalidInput, "polynomial degree must be positive");
}
inline void validate(const RbfKernel& k) {
  if (!(k.sigma > 0.0) || !std::isfinite(k.sigma)) throw Error(ErrorKind::InvalidInput, "RBF sigma must be positive");
}
inline void validate(const SpectralKernel& k) {
  if (k.lambdas.empty()) throw Error(ErrorKind::InvalidInput, "spectral kernel needs p >= 1 eigenvalues");
  for (double l : k.lambdas) {
    if (!(l > 0.0) || !std::isfinite(l)) throw Error(ErrorKind::InvalidInput, "spectral eigenvalues must be positive");
  }
}
inline void validate(const MahalanobisScalarKernel& k) {
  if (!(k.sigma > 0.0) || !(k.sigma_prime > 0.0) || !std::isfinite(k.sigma) || !std::isfinite(k.sigma_prime)) {
    throw Error(ErrorKind::InvalidInput, "Mahalanobis scales must be positive");
  }
  if (!std::isfinite(k.mu) || !std::isfinite(k.mu_prime)) {
    throw Error(ErrorKind::InvalidInput, "Mahalanobis centers must be finite");
  }
}
inline void validate(const IdentityKernel&) {}
inline void validate(const MahalanobisVectorKernel&) {}
inline void validate(const KernelSpec& spec) {
  std::visit([](const auto& k) { validate(k); }, spec);
}

struct BasisValue {
  double phi;
  double phi_prime;
};

/// Cosine eigenfunction i (1-based) and its derivative.
inline BasisValue spectral_basis(std::size_t i, double z, std::size_t p) {
  if (i < 1 || i > p) throw Error(ErrorKind::InvalidInput, "spectral basis index out of range");
  const double fi = static_cast<double>(i);
  return {std::cos(fi * z), -fi * std::sin(fi * z)};
}

/// Value and first derivative of a scalar kernel at z.
struct ScalarEval {
  double value;
  double derivative;
};

inline ScalarEval eval_polynomial(const PolynomialKernel& k, double z) {
  const double base = z + k.c;
  return {std::pow(base, k.d), k.d * std::pow(base, k.d - 1)};
}

inline ScalarEval eval_gaussian(double z, double center, double sigma) {
  const double dz = z - center;
  const double v = std::exp(-dz * dz / (2.0 * sigma * sigma));
  return {v, -dz / (sigma * sigma) * v};
}

inline ScalarEval eval_spectral(const SpectralKernel& k, double z) {
  ScalarEval out{0.0, 0.0};
  for (std::size_t i = 1; i <= k.p(); ++i) {
    const double lam = k.lambdas[i - 1];
    const double envelope = std::exp(-lam * z * z);
    const BasisValue b = spectral_basis(i, z, k.p());
    out.value += envelope * b.phi;
    out.derivative += envelope * (b.phi_prime - 2.0 * lam * z * b.phi);
  }
  return out;
}

/// Scalar kernel applied to the probability log-ratio z.
inline ScalarEval scalar_kernel_eval(const KernelSpec& spec, double z) {
  if (!std::isfinite(z)) throw Error(ErrorKind::InvalidInput, "scalar kernel argument must be finite");
  struct {
    double z;
    ScalarEval operator()(const IdentityKernel&) const { return {z, 1.0}; }
    ScalarEval operator()(const PolynomialKernel& k) const { return eval_polynomial(k, z); }
    ScalarEval operator()(const RbfKernel& k) const { return eval_gaussian(z, 0.0, k.sigma); }
    ScalarEval operator()(const SpectralKernel& k) const { return eval_spectral(k, z); }
    ScalarEval operator()(const MahalanobisScalarKernel& k) const { return eval_gaussian(z, k.mu, k.sigma); }
    ScalarEval operator()(const MahalanobisVectorKernel&) const {
      throw Error(ErrorKind::InvalidKernelForm, "vector Mahalanobis kernel has no scalar form");
    }
  } visitor{z};
  return std::visit(visitor, spec);
}

inline double scalar_kernel(const KernelSpec& spec, double z) { return scalar_kernel_eval(spec, z).value; }

/// Embedding-side term of the kernelized hybrid loss with its partial
/// derivatives in the two dot products.
struct EmbedEval {
  double value;
  double d_dot_pos;
  double d_dot_neg;
};

/// Embedding term for dot products e_x.e_{y+} = dot_pos and e_x.e_{y-} = dot_neg.
/// Identity: ln(dot_pos / dot_neg). Polynomial: ((dot_pos + c) / (dot_neg + c))^d.
/// RBF, Spectral, Mahalanobis: the scalar kernel of r = dot_pos / dot_neg, with
/// Mahalanobis centered at (mu_prime, sigma_prime).
inline EmbedEval embedding_term(const KernelSpec& spec, double dot_pos, double dot_neg) {
  if (!std::isfinite(dot_pos) || !std::isfinite(dot_neg)) {
    throw Error(ErrorKind::InvalidInput, "dot products must be finite");
  }
  if (dot_neg == 0.0) throw Error(ErrorKind::DegenerateRatio, "dot product with the rejected embedding is zero");
  const double r = dot_pos / dot_neg;

  auto through_ratio = [&](ScalarEval k) {
    return EmbedEval{k.value, k.derivative / dot_neg, -k.derivative * dot_pos / (dot_neg * dot_neg)};
  };

  struct {
    double dot_pos, dot_neg, r;
    decltype(through_ratio)& via_r;
    EmbedEval operator()(const IdentityKernel&) const {
      if (!(r > 0.0)) throw Error(ErrorKind::DegenerateRatio, "embedding ratio must be positive for the log term");
      // ln|dp| - ln|dn| keeps each dot product's contribution bit-identical across triplets.
      return {std::log(std::abs(dot_pos)) - std::log(std::abs(dot_neg)), 1.0 / dot_pos, -1.0 / dot_neg};
    }
    EmbedEval operator()(const PolynomialKernel& k) const {
      const double den = dot_neg + k.c;
      if (den == 0.0) throw Error(ErrorKind::DegenerateRatio, "polynomial embedding denominator is zero");
      const double rho = (dot_pos + k.c) / den;
      const double outer = k.d * std::pow(rho, k.d - 1);
      return {std::pow(rho, k.d), outer / den, -outer * rho / den};
    }
    EmbedEval operator()(const RbfKernel& k) const { return via_r(eval_gaussian(r, 0.0, k.sigma)); }
    EmbedEval operator()(const SpectralKernel& k) const { return via_r(eval_spectral(k, r)); }
    EmbedEval operator()(const MahalanobisScalarKernel& k) const {
      return via_r(eval_gaussian(r, k.mu_prime, k.sigma_prime));
    }
    EmbedEval operator()(const MahalanobisVectorKernel&) const {
      throw Error(ErrorKind::InvalidKernelForm, "vector Mahalanobis kernel has no scalar form");
    }
  } visitor{dot_pos, dot_neg, r, through_ratio};
  return std::visit(visitor, spec);
}

inline double scalar_kernel_embed(const KernelSpec& spec, double dot_pos, double dot_neg) {
  return embedding_term(spec, dot_pos, dot_neg).value;
}

/// Kernel on a pair of embedding vectors.
inline double vector_kernel(const KernelSpec& spec, const RealVector& u, const RealVector& v) {
  if (u.size() != v.size() || u.size() == 0) throw Error(ErrorKind::InvalidInput, "vector kernel: dimension mismatch");
  struct {
    const RealVector& u;
    const RealVector& v;
    double operator()(const IdentityKernel&) const { return u.dot(v); }
    double operator()(const PolynomialKernel& k) const { return std::pow(u.dot(v) + k.c, k.d); }
    double operator()(const RbfKernel& k) const {
      return std::exp(-(u - v).squaredNorm() / (2.0 * k.sigma * k.sigma));
    }
    double operator()(const SpectralKernel& k) const {
      const double dist2 = (u - v).squaredNorm();
      const double dot = u.dot(v);
      double sum = 0.0;
      for (std::size_t i = 1; i <= k.p(); ++i) {
        sum += std::exp(-k.lambdas[i - 1] * dist2) * spectral_basis(i, dot, k.p()).phi;
      }
      return sum;
    }
    double operator()(const MahalanobisScalarKernel& k) const {
      // Isotropic covariance sigma^2 I around the difference vector.
      return std::exp(-(u - v).squaredNorm() / (2.0 * k.sigma * k.sigma));
    }
    double operator()(const MahalanobisVectorKernel& k) const {
      if (k.factor().dim() != u.size()) throw Error(ErrorKind::InvalidInput, "Sigma does not match vector dimension");
      const RealVector diff = u - v;
      return std::exp(-0.5 * diff.dot(k.factor().solve(diff)));
    }
  } visitor{u, v};
  return std::visit(visitor, spec);
}

/// Distance at which the kernel decays to 1% of its self-similarity.
struct EffectiveRange {
  double r = 0.0;
  double r_major = 0.0;
  double r_minor = 0.0;
};

inline EffectiveRange effective_range(const KernelSpec& spec) {
  static constexpr double kFraction = 0.01;
  const double log_inv = std::log(1.0 / kFraction);
  struct {
    double log_inv;
    EffectiveRange operator()(const RbfKernel& k) const {
      const double r = std::sqrt(2.0 * k.sigma * k.sigma * log_inv);
      return {r, r, r};
    }
    EffectiveRange operator()(const PolynomialKernel& k) const {
      // Self-similarity of a unit-norm reference vector: (1 + c)^d.
      const double self = std::pow(1.0 + k.c, k.d);
      const double r = std::pow(kFraction / self, 1.0 / k.d);
      return {r, r, r};
    }
    EffectiveRange operator()(const MahalanobisVectorKernel& k) const {
      const double scale = std::sqrt(2.0 * log_inv);
      const double major = std::sqrt(k.factor().max_eigenvalue()) * scale;
      const double minor = std::sqrt(k.factor().min_eigenvalue()) * scale;
      return {major, major, minor};
    }
    EffectiveRange operator()(const SpectralKernel&) const {
      throw Error(ErrorKind::RangeUndefined, "spectral kernel range is defined by graph connectivity");
    }
    EffectiveRange operator()(const IdentityKernel&) const {
      throw Error(ErrorKind::RangeUndefined, "identity kernel has no effective range");
    }
    EffectiveRange operator()(const MahalanobisScalarKernel&) const {
      throw Error(ErrorKind::RangeUndefined, "use the vector Mahalanobis form for ranges");
    }
  } visitor{log_inv};
  return std::visit(visitor, spec);
}

}  // namespace prefk
