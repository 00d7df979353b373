#include "prefk/gradcheck.hpp"
#include "prefk/gradient.hpp"
#include "prefk/loss.hpp"

#include "support.hpp"

#include <random>

using namespace prefk;
using prefk::testing::kind_of;

namespace {

const double kLn2 = std::log(2.0);

TripletSignals signals(double z, double dot_pos, double dot_neg) {
  return TripletSignals::from_log_ratio(z, dot_pos, dot_neg);
}

std::vector<KernelSpec> scalar_specs() {
  return {IdentityKernel{}, PolynomialKernel{1.0, 2}, RbfKernel{1.0}, SpectralKernel{{0.5, 1.5}},
          MahalanobisScalarKernel{0.1, 1.2, 0.9, 0.7}};
}

}  // namespace

TEST(HybridLoss, HandValues) {
  EXPECT_NEAR(hybrid_loss(signals(kLn2, 3.0, 5.0), 0.0), 0.69315, 5e-6);
  EXPECT_NEAR(hybrid_loss(signals(kLn2, 2.0, 1.0), 0.5), 1.5 * kLn2, 1e-15);
  EXPECT_NEAR(hybrid_loss(signals(kLn2, 2.0, 1.0), 0.5), 1.03972, 5e-6);
}

TEST(HybridLoss, DegenerateRatios) {
  EXPECT_EQ(kind_of([] { hybrid_loss(signals(0.1, 1.0, 0.0), 0.5); }), ErrorKind::DegenerateRatio);
  EXPECT_EQ(kind_of([] { hybrid_loss(signals(0.1, -1.0, 1.0), 0.5); }), ErrorKind::DegenerateRatio);
}

TEST(HybridLoss, LogProbabilitiesDefineZ) {
  const TripletSignals s{std::log(0.6), std::log(0.3), 1.0, 1.0, std::nullopt};
  EXPECT_NEAR(s.z(), kLn2, 1e-15);
  EXPECT_NEAR(hybrid_loss(s, 0.0), kLn2, 1e-15);
}

TEST(KernelizedLoss, TableRows) {
  EXPECT_DOUBLE_EQ(kernelized_hybrid_loss(KernelSpec{RbfKernel{1.0}}, signals(0.0, 0.0, 1.0), 0.5), 1.5);
  const double rbf = std::exp(-kLn2 * kLn2 / 2.0) + 0.5 * std::exp(-2.0);
  EXPECT_NEAR(kernelized_hybrid_loss(KernelSpec{RbfKernel{1.0}}, signals(kLn2, 2.0, 1.0), 0.5), rbf, 1e-15);
  EXPECT_NEAR(rbf, 0.85412, 5e-6);
  EXPECT_NEAR(kernelized_hybrid_loss(KernelSpec{PolynomialKernel{1.0, 2}}, signals(0.5, 1.0, 1.0), 1.0), 3.25, 1e-14);
}

TEST(KernelizedLoss, RejectsVectorOnlyKernel) {
  const KernelSpec spec = MahalanobisVectorKernel(RealMatrix::Identity(2, 2));
  EXPECT_EQ(kind_of([&] { kernelized_hybrid_loss(spec, signals(0.1, 1.0, 1.0), 0.5); }), ErrorKind::InvalidKernelForm);
  EXPECT_EQ(kind_of([] { kernelized_hybrid_loss(KernelSpec{PolynomialKernel{1.0, 2}}, signals(0.1, 1.0, -1.0), 0.5); }),
            ErrorKind::DegenerateRatio);
}

TEST(KernelizedLoss, IdentityWithoutEmbeddingIsZ) {
  std::mt19937_64 rng(51);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int t = 0; t < 1000; ++t) {
    const TripletSignals s{n(rng), n(rng), n(rng), n(rng), std::nullopt};
    EXPECT_EQ(kernelized_hybrid_loss(KernelSpec{IdentityKernel{}}, s, 0.0), s.z());
  }
}

TEST(KernelizedLoss, ComposesKernelModule) {
  std::mt19937_64 rng(52);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> dots(0.2, 3.0);
  for (int t = 0; t < 500; ++t) {
    const TripletSignals s = signals(n(rng), dots(rng), dots(rng));
    const double gamma = 0.1 + 0.9 * std::abs(std::tanh(n(rng)));
    for (const auto& spec : scalar_specs()) {
      const double composed = scalar_kernel(spec, s.z()) + gamma * scalar_kernel_embed(spec, s.dot_pos, s.dot_neg);
      EXPECT_NEAR(kernelized_hybrid_loss(spec, s, gamma), composed, 1e-12);
      EXPECT_NEAR(kernelized_hybrid_loss(ObjectiveKernel{spec}, s, gamma), composed, 1e-12);
    }
  }
}

TEST(KernelizedLoss, MixtureIsWeightedSumOfRows) {
  FlatMixture flat;
  flat.state.theta = {0.4, -0.3, 0.2, 0.0};
  const TripletSignals s = signals(0.3, 1.4, 0.9);
  const Weights4 l = flat.state.lambda();
  double expect = 0.0;
  for (std::size_t i = 0; i < 4; ++i) expect += l[i] * kernelized_hybrid_loss(flat_component(flat.kernels, i), s, 0.5);
  EXPECT_NEAR(kernelized_hybrid_loss(ObjectiveKernel{flat}, s, 0.5), expect, 1e-14);
}

TEST(FullObjective, IdenticalPolicyHasNoRegularizer) {
  ObjectiveConfig cfg;
  const ProbabilityDistribution p{0.3, 0.7};
  const TripletSignals s = signals(kLn2, 2.0, 1.0);
  const LossBreakdown b = full_objective(cfg, {s}, {p}, {p});
  EXPECT_EQ(b.regularizer, 0.0);
  EXPECT_NEAR(b.total, kernelized_hybrid_loss(cfg.kernel, s, cfg.gamma), 1e-15);
}

TEST(FullObjective, AlphaZeroSkipsRegularizer) {
  ObjectiveConfig cfg;
  cfg.alpha = 0.0;
  cfg.allow_out_of_range = true;
  const TripletSignals s = signals(0.2, 1.0, 2.0);
  // Disjoint supports would make KL infinite; alpha = 0 never evaluates it.
  const LossBreakdown b = full_objective(cfg, {s}, {ProbabilityDistribution{1.0, 0.0}}, {ProbabilityDistribution{0.0, 1.0}});
  EXPECT_EQ(b.total, kernelized_hybrid_loss(cfg.kernel, s, cfg.gamma));
}

TEST(FullObjective, TwoTripletBatchByHand) {
  ObjectiveConfig cfg;
  cfg.alpha = 0.5;
  cfg.beta = 1.0;
  cfg.gamma = 0.5;
  const TripletSignals a = signals(kLn2, 2.0, 1.0), b = signals(0.0, 1.0, 1.0);
  const ProbabilityDistribution p{0.5, 0.5}, q{0.25, 0.75};
  const double kl = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
  const double term_a = std::exp(-kLn2 * kLn2 / 2.0) + 0.5 * std::exp(-2.0);
  const double term_b = 1.0 + 0.5 * std::exp(-0.5);
  const LossBreakdown out = full_objective(cfg, {a, b}, {p, p}, {q, p});
  EXPECT_NEAR(out.total, (term_a + term_b) / 2.0 - 0.5 * kl / 2.0, 1e-14);
  EXPECT_NEAR(out.regularizer, kl / 2.0, 1e-15);
  EXPECT_NEAR(out.total, out.prob_term + cfg.gamma * out.embed_term - cfg.alpha * cfg.beta * out.regularizer, 1e-12);
}

TEST(FullObjective, Errors) {
  ObjectiveConfig cfg;
  const ProbabilityDistribution p{0.5, 0.5};
  EXPECT_EQ(kind_of([&] { full_objective(cfg, {}, {}, {}); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([&] { full_objective(cfg, {signals(0, 1, 1)}, {p, p}, {p}); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([&] { full_objective(cfg, {signals(0, 1, 1)}, {p}, {ProbabilityDistribution{1.0, 0.0}}); }),
            ErrorKind::InfiniteDivergence);
}

TEST(ObjectiveConfig, RangeChecks) {
  ObjectiveConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.gamma = 0.0;
  EXPECT_EQ(kind_of([&] { cfg.validate(); }), ErrorKind::InvalidInput);
  cfg.allow_out_of_range = true;
  EXPECT_NO_THROW(cfg.validate());
  cfg.alpha = NAN;
  EXPECT_EQ(kind_of([&] { cfg.validate(); }), ErrorKind::InvalidInput);
}

TEST(Decomposition, HoldsForRandomBatches) {
  std::mt19937_64 rng(53);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> dots(0.3, 2.0);
  for (int t = 0; t < 200; ++t) {
    ObjectiveConfig cfg;
    cfg.kernel = KernelSpec{scalar_specs()[t % 5]};
    cfg.divergence = gradcheck_divergence(t % 7);
    std::vector<TripletSignals> batch;
    std::vector<ProbabilityDistribution> pol, ref;
    for (int i = 0; i < 5; ++i) {
      batch.push_back(signals(n(rng), dots(rng), dots(rng)));
      pol.push_back(softmax_distribution(make_vector({n(rng), n(rng), n(rng)})));
      ref.push_back(softmax_distribution(make_vector({n(rng), n(rng), n(rng)})));
    }
    const LossBreakdown b = full_objective(cfg, batch, pol, ref);
    EXPECT_NEAR(b.total, b.prob_term + cfg.gamma * b.embed_term - cfg.alpha * cfg.beta * b.regularizer, 1e-12);
  }
}

TEST(AnalyticGrad, IdentityWithoutEmbeddingIsOneHotDifference) {
  ObjectiveConfig cfg;
  cfg.kernel = KernelSpec{IdentityKernel{}};
  cfg.gamma = 0.0;
  cfg.alpha = 0.0;
  cfg.allow_out_of_range = true;
  ToyPolicy pol{RealMatrix::Zero(2, 3), RealMatrix::Ones(2, 2), RealMatrix::Ones(3, 2)};
  pol.logits(1, 0) = 0.7;
  const RealVector g = analytic_grad(cfg, {{1, 0, 2}}, pol, pol);
  RealVector expect = RealVector::Zero(pol.parameter_count());
  expect(pol.logit_offset(1, 0)) = 1.0;
  expect(pol.logit_offset(1, 2)) = -1.0;
  EXPECT_EQ(g, expect);
}

TEST(AnalyticGrad, RbfAtOriginHasNoProbabilityTerm) {
  ObjectiveConfig cfg;
  cfg.kernel = KernelSpec{RbfKernel{1.0}};
  cfg.gamma = 0.0;
  cfg.alpha = 0.0;
  cfg.allow_out_of_range = true;
  const ToyPolicy pol{RealMatrix::Zero(1, 2), RealMatrix::Ones(1, 2), RealMatrix::Ones(2, 2)};
  EXPECT_TRUE(analytic_grad(cfg, {{0, 0, 1}}, pol, pol).isZero(0.0));
}

TEST(FiniteDiff, QuadraticAndConstant) {
  const RealVector g = central_difference([](const RealVector& x) { return x(0) * x(0); }, make_vector({3.0}));
  EXPECT_NEAR(g(0), 6.0, 1e-9);
  const RealVector c = central_difference([](const RealVector&) { return 2.5; }, make_vector({1.0, -2.0, 0.3}));
  EXPECT_TRUE(c.isZero(0.0));
  EXPECT_EQ(kind_of([] { central_difference([](const RealVector&) { return 0.0; }, make_vector({1.0}), 0.0); }),
            ErrorKind::InvalidInput);
}

TEST(GradCheck, ZeroParameterModelIsVacuous) {
  const GradientReport r = compare_gradients(RealVector(), RealVector());
  EXPECT_EQ(r.analytic.size(), 0);
  EXPECT_EQ(r.max_rel_err, 0.0);
}

TEST(GradCheck, EveryKernelDivergencePair) {
  const auto outcomes = run_gradcheck_trials(ObjectiveConfig{}, KernelQuartet{}, 7, 420);
  std::array<std::array<int, kGradcheckDivergenceCount>, kGradcheckKernelCount> seen{};
  for (const auto& o : outcomes) {
    ++seen[o.kernel_index][o.divergence_index];
    EXPECT_LE(o.max_rel_err, 1e-4) << gradcheck_kernel_label(o.kernel_index) << " x "
                                   << gradcheck_divergence_label(o.divergence_index) << " trial " << o.trial;
  }
  for (const auto& row : seen)
    for (int count : row) EXPECT_EQ(count, 10);
}

TEST(GradCheck, FlatMixtureAndOtherHyperparameters) {
  KernelQuartet q;
  q.polynomial = {0.5, 3};
  q.rbf = {0.8};
  q.spectral = {{0.3, 0.9, 1.4}};
  q.mahalanobis = {0.2, 1.3, 1.1, 0.6};
  for (std::uint64_t seed = 0; seed < 42; ++seed) {
    GradcheckCase gc = make_gradcheck_case(seed % 6, seed % 7, 900 + seed, ObjectiveConfig{}, q);
    EXPECT_LE(grad_check(gc.config, gc.records, gc.policy, gc.reference).max_rel_err, 1e-4);
    FlatMixture flat{q, {}};
    flat.state.theta = {0.3, -0.5, 0.8, 0.1};
    gc.config.kernel = flat;
    EXPECT_LE(grad_check(gc.config, gc.records, gc.policy, gc.reference).max_rel_err, 1e-4);
  }
}

TEST(GradCheck, WideObjectiveMatchesDouble) {
  for (std::uint64_t t = 0; t < 84; ++t) {
    GradcheckCase gc = make_gradcheck_case(t % 6, (t / 6) % 7, 500 + t, ObjectiveConfig{});
    const double total = evaluate_objective(gc.config, gc.policy, gc.reference, gc.records).total;
    EXPECT_NEAR(static_cast<double>(wide::objective_total(gc.config, gc.policy, gc.reference, gc.records)), total,
                1e-12 * std::max(1.0, std::abs(total)));
    gc.config.kernel = FlatMixture{KernelQuartet{}, MixtureState{{0.4, -0.2, 0.1, 0.7}}};
    const double flat = evaluate_objective(gc.config, gc.policy, gc.reference, gc.records).total;
    EXPECT_NEAR(static_cast<double>(wide::objective_total(gc.config, gc.policy, gc.reference, gc.records)), flat,
                1e-12 * std::max(1.0, std::abs(flat)));
  }
}

TEST(GradCheck, WideObjectivePropagatesDegenerateRatio) {
  ObjectiveConfig cfg;
  ToyPolicy pol{RealMatrix::Zero(1, 2), RealMatrix::Ones(1, 2), RealMatrix::Zero(2, 2)};
  pol.V(0, 0) = 1.0;
  EXPECT_EQ(kind_of([&] { wide::objective_total(cfg, pol, pol, {{0, 0, 1}}); }), ErrorKind::DegenerateRatio);
}

TEST(GradCheck, ZeroedCoordinateIsCaught) {
  const GradcheckCase gc = make_gradcheck_case(2, 0, 99, ObjectiveConfig{});
  RealVector analytic = analytic_grad(gc.config, gc.records, gc.policy, gc.reference);
  const RealVector numeric = finite_diff_grad(gc.config, gc.records, gc.policy, gc.reference);
  Eigen::Index largest = 0;
  numeric.cwiseAbs().maxCoeff(&largest);
  analytic(largest) = 0.0;
  EXPECT_GT(compare_gradients(analytic, numeric).max_rel_err, 0.5);
  EXPECT_EQ(compare_gradients(analytic, numeric).worst_index, largest);
}

TEST(GradCheck, DegenerateEmbeddingPropagates) {
  ObjectiveConfig cfg;
  ToyPolicy pol{RealMatrix::Zero(1, 2), RealMatrix::Ones(1, 2), RealMatrix::Zero(2, 2)};
  pol.V(0, 0) = 1.0;
  EXPECT_EQ(kind_of([&] { analytic_grad(cfg, {{0, 0, 1}}, pol, pol); }), ErrorKind::DegenerateRatio);
}
