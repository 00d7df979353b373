#include "prefk/kernels.hpp"

#include "support.hpp"

#include <numbers>
#include <random>

using namespace prefk;
using prefk::testing::kind_of;

namespace {

RealVector random_vec(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  RealVector v(dim);
  for (auto& x : v) x = n(rng);
  return v;
}

}  // namespace

TEST(ScalarKernel, HandValues) {
  EXPECT_DOUBLE_EQ(scalar_kernel(PolynomialKernel{1.0, 2}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(scalar_kernel(RbfKernel{1.0}, 0.0), 1.0);
  EXPECT_NEAR(scalar_kernel(RbfKernel{1.0}, 1.0), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(scalar_kernel(RbfKernel{1.0}, 1.0), 0.60653, 5e-6);
  EXPECT_DOUBLE_EQ(scalar_kernel(SpectralKernel{{1.0}}, 0.0), 1.0);
}

TEST(ScalarKernel, MahalanobisCentersAtMu) {
  const MahalanobisScalarKernel k{0.5, 2.0, 1.0, 1.0};
  EXPECT_DOUBLE_EQ(scalar_kernel(k, 0.5), 1.0);
  EXPECT_NEAR(scalar_kernel(k, 2.5), std::exp(-0.5), 1e-15);
}

TEST(ScalarKernel, VectorOnlyFormRejected) {
  const KernelSpec spec = MahalanobisVectorKernel(RealMatrix::Identity(2, 2));
  EXPECT_EQ(kind_of([&] { scalar_kernel(spec, 0.0); }), ErrorKind::InvalidKernelForm);
}

TEST(ScalarKernel, DerivativesMatchFiniteDifferences) {
  const std::vector<KernelSpec> specs{IdentityKernel{}, PolynomialKernel{0.5, 3}, RbfKernel{0.7},
                                      SpectralKernel{{0.3, 1.2, 0.8}}, MahalanobisScalarKernel{0.2, 1.5, 1.0, 1.0}};
  for (const auto& spec : specs) {
    for (double z = -2.0; z <= 2.0; z += 0.37) {
      const double h = 1e-6;
      const double numeric = (scalar_kernel(spec, z + h) - scalar_kernel(spec, z - h)) / (2 * h);
      EXPECT_NEAR(scalar_kernel_eval(spec, z).derivative, numeric, 1e-7) << kernel_name(spec) << " z=" << z;
    }
  }
}

TEST(ScalarKernel, RbfAndMahalanobisBoundedAndPeaked) {
  for (double z = -5.0; z <= 5.0; z += 0.25) {
    const double r = scalar_kernel(RbfKernel{0.8}, z);
    const double m = scalar_kernel(MahalanobisScalarKernel{0.3, 0.9, 1.0, 1.0}, z);
    EXPECT_GT(r, 0.0);
    EXPECT_LE(r, 1.0);
    EXPECT_GT(m, 0.0);
    EXPECT_LE(m, 1.0);
  }
}

TEST(ScalarKernel, RbfStrictlyDecaysInMagnitude) {
  double prev = scalar_kernel(RbfKernel{1.0}, 0.0);
  for (double z = 0.1; z <= 6.0; z += 0.1) {
    const double cur = scalar_kernel(RbfKernel{1.0}, z);
    EXPECT_LT(cur, prev);
    EXPECT_DOUBLE_EQ(cur, scalar_kernel(RbfKernel{1.0}, -z));
    prev = cur;
  }
}

TEST(EmbeddingTerm, PartialsMatchFiniteDifferences) {
  const std::vector<KernelSpec> specs{IdentityKernel{}, PolynomialKernel{1.0, 2}, RbfKernel{1.3},
                                      SpectralKernel{{0.5, 1.0}}, MahalanobisScalarKernel{0.0, 1.0, 0.8, 0.6}};
  for (const auto& spec : specs) {
    for (const auto& [dp, dn] : std::vector<std::pair<double, double>>{{1.2, 0.7}, {0.4, 2.1}, {3.0, 1.5}}) {
      const double h = 1e-6;
      const EmbedEval e = embedding_term(spec, dp, dn);
      const double np = (scalar_kernel_embed(spec, dp + h, dn) - scalar_kernel_embed(spec, dp - h, dn)) / (2 * h);
      const double nn = (scalar_kernel_embed(spec, dp, dn + h) - scalar_kernel_embed(spec, dp, dn - h)) / (2 * h);
      EXPECT_NEAR(e.d_dot_pos, np, 1e-7) << kernel_name(spec);
      EXPECT_NEAR(e.d_dot_neg, nn, 1e-7) << kernel_name(spec);
    }
  }
}

TEST(EmbeddingTerm, DegenerateRatios) {
  EXPECT_EQ(kind_of([] { embedding_term(RbfKernel{}, 1.0, 0.0); }), ErrorKind::DegenerateRatio);
  EXPECT_EQ(kind_of([] { embedding_term(IdentityKernel{}, -1.0, 1.0); }), ErrorKind::DegenerateRatio);
  EXPECT_EQ(kind_of([] { embedding_term(PolynomialKernel{1.0, 2}, 1.0, -1.0); }), ErrorKind::DegenerateRatio);
}

TEST(VectorKernel, HandValues) {
  EXPECT_DOUBLE_EQ(vector_kernel(PolynomialKernel{1.0, 2}, make_vector({1, 1}), make_vector({1, 0})), 4.0);
  EXPECT_DOUBLE_EQ(vector_kernel(RbfKernel{1.0}, make_vector({0.3, -2}), make_vector({0.3, -2})), 1.0);
  const KernelSpec maha = MahalanobisVectorKernel(RealMatrix::Identity(2, 2));
  const double m = vector_kernel(maha, make_vector({0, 0}), make_vector({1, 1}));
  EXPECT_NEAR(m, std::exp(-1.0), 1e-15);
  EXPECT_NEAR(m, vector_kernel(RbfKernel{1.0}, make_vector({0, 0}), make_vector({1, 1})), 1e-15);
}

TEST(VectorKernel, Errors) {
  EXPECT_EQ(kind_of([] { vector_kernel(RbfKernel{}, make_vector({1, 2}), make_vector({1, 2, 3})); }),
            ErrorKind::InvalidInput);
  RealMatrix singular(2, 2);
  singular << 1, 1, 1, 1;
  EXPECT_EQ(kind_of([&] { MahalanobisVectorKernel k(singular); }), ErrorKind::SingularMatrix);
}

TEST(VectorKernel, SymmetricAndIdentityCovarianceReducesToRbf) {
  std::mt19937_64 rng(31);
  const KernelSpec maha = MahalanobisVectorKernel(RealMatrix::Identity(3, 3));
  RealMatrix a(3, 3);
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = std::normal_distribution<double>(0.0, 1.0)(rng);
  const KernelSpec general = MahalanobisVectorKernel(a * a.transpose() + RealMatrix::Identity(3, 3));
  const std::vector<KernelSpec> specs{RbfKernel{0.9}, PolynomialKernel{1.0, 3}, maha, general};
  for (int t = 0; t < 200; ++t) {
    const RealVector u = random_vec(rng, 3), v = random_vec(rng, 3);
    for (const auto& spec : specs) {
      EXPECT_NEAR(vector_kernel(spec, u, v), vector_kernel(spec, v, u), 1e-12 * std::max(1.0, std::abs(vector_kernel(spec, u, v))));
    }
    EXPECT_NEAR(vector_kernel(maha, u, v), vector_kernel(RbfKernel{1.0}, u, v), 1e-12);
  }
}

TEST(SpectralBasis, HandValues) {
  const double half_pi = std::numbers::pi / 2.0;
  auto b = spectral_basis(1, 0.0, 2);
  EXPECT_DOUBLE_EQ(b.phi, 1.0);
  EXPECT_DOUBLE_EQ(b.phi_prime, 0.0);
  b = spectral_basis(2, half_pi, 2);
  EXPECT_NEAR(b.phi, -1.0, 1e-15);
  EXPECT_NEAR(b.phi_prime, 0.0, 1e-15);
  b = spectral_basis(1, half_pi, 2);
  EXPECT_NEAR(b.phi, 0.0, 1e-15);
  EXPECT_NEAR(b.phi_prime, -1.0, 1e-15);
  EXPECT_EQ(kind_of([] { spectral_basis(0, 0.0, 2); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { spectral_basis(3, 0.0, 2); }), ErrorKind::InvalidInput);
}

TEST(EffectiveRange, RbfMahalanobisPolynomial) {
  const double r = std::sqrt(2.0 * std::log(100.0));
  EXPECT_NEAR(effective_range(RbfKernel{1.0}).r, r, 1e-12);
  EXPECT_NEAR(r, 3.0349, 5e-5);
  const auto m = effective_range(MahalanobisVectorKernel(RealMatrix::Identity(2, 2)));
  EXPECT_NEAR(m.r_major, r, 1e-12);
  EXPECT_NEAR(m.r_minor, r, 1e-12);
  EXPECT_NEAR(effective_range(PolynomialKernel{1.0, 2}).r, 0.05, 1e-15);
}

TEST(EffectiveRange, AnisotropicCovarianceOrdersAxes) {
  RealMatrix s = RealMatrix::Zero(2, 2);
  s(0, 0) = 4.0;
  s(1, 1) = 1.0;
  const auto m = effective_range(MahalanobisVectorKernel(s));
  EXPECT_NEAR(m.r_major, 2.0 * m.r_minor, 1e-12);
  EXPECT_GE(m.r_major, m.r_minor);
}

TEST(EffectiveRange, SpectralUndefined) {
  EXPECT_EQ(kind_of([] { effective_range(SpectralKernel{}); }), ErrorKind::RangeUndefined);
}

TEST(KernelValidation, RejectsBadHyperparameters) {
  EXPECT_EQ(kind_of([] { validate(KernelSpec{RbfKernel{0.0}}); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { validate(KernelSpec{SpectralKernel{{}}}); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { validate(KernelSpec{SpectralKernel{{1.0, -1.0}}}); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { validate(KernelSpec{MahalanobisScalarKernel{0, 1, 1, 0}}); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { validate(KernelSpec{PolynomialKernel{1.0, 0}}); }), ErrorKind::InvalidInput);
}
