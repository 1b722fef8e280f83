#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "sefusion/fusion.hpp"
#include "sefusion/gradcheck.hpp"

using namespace sefusion;

namespace {

Matrix<double> random_row(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Matrix<double> m(1, n);
  for (auto& v : m.values()) v = d(rng);
  return m;
}

FusionParams<double> random_params(const FusionConfig& cfg, std::mt19937_64& rng) {
  auto p = FusionParams<double>::init(cfg, rng);
  std::normal_distribution<double> d(0.0, 0.5);
  for (auto* b : {&p.b1, &p.b2, &p.b3, &p.b4})
    for (auto& v : b->value.values()) v = d(rng);
  return p;
}

FusionConfig small(bool biases = true) { return FusionConfig{6, 4, biases}; }

}  // namespace

TEST(FusionConfig, RejectsOddTotalWidth) {
  EXPECT_THROW(FusionParams<double>::zeros(FusionConfig{3, 4, true}), ShapeError);
  EXPECT_NO_THROW(FusionParams<double>::zeros(FusionConfig{}));
}

TEST(FusionParams, DeclaredShapes) {
  auto p = FusionParams<double>::zeros(FusionConfig{});
  EXPECT_EQ(p.w1.value.shape_string(), "768x1");
  EXPECT_EQ(p.w2.value.shape_string(), "512x1");
  EXPECT_EQ(p.w3.value.shape_string(), "2x1");
  EXPECT_EQ(p.w4.value.shape_string(), "1x2");
  EXPECT_EQ(p.b4.value.shape_string(), "1x2");
  EXPECT_EQ(p.parameters().size(), 8u);
  auto literal = FusionParams<double>::zeros(FusionConfig{768, 512, false});
  EXPECT_EQ(literal.parameters().size(), 4u);
}

TEST(Squeeze, ZeroWeightsGiveZero) {
  auto p = FusionParams<double>::zeros(small());
  std::mt19937_64 rng(1);
  auto z = squeeze(random_row(6, rng), random_row(4, rng), p);
  EXPECT_EQ(z, (Matrix<double>{{0, 0}}));
}

TEST(Squeeze, HandProduct) {
  auto p = FusionParams<double>::zeros(FusionConfig{2, 2, false});
  p.w1.value = Matrix<double>{{3}, {4}};
  auto z = squeeze(Matrix<double>{{1, 2}}, Matrix<double>{{5, 6}}, p);
  EXPECT_EQ(z[0], 11.0);
  EXPECT_EQ(z[1], 0.0);
}

TEST(Squeeze, MatchesAffineConcatOracle) {
  std::mt19937_64 rng(2);
  auto p = random_params(small(), rng);
  auto xt = random_row(6, rng);
  auto xi = random_row(4, rng);
  auto z = squeeze(xt, xi, p);
  double zt = p.b1.value[0], zi = p.b2.value[0];
  for (std::size_t k = 0; k < 6; ++k) zt += xt[k] * p.w1.value[k];
  for (std::size_t k = 0; k < 4; ++k) zi += xi[k] * p.w2.value[k];
  EXPECT_NEAR(z[0], zt, 1e-14);
  EXPECT_NEAR(z[1], zi, 1e-14);
  EXPECT_THROW(squeeze(random_row(5, rng), xi, p), ShapeError);
}

TEST(Excite, ZeroInputGivesHalf) {
  std::mt19937_64 rng(3);
  auto p = FusionParams<double>::init(small(), rng);
  EXPECT_EQ(excite(Matrix<double>{{0, 0}}, p), (Matrix<double>{{0.5, 0.5}}));
}

TEST(Excite, DeadReluGivesHalf) {
  auto p = FusionParams<double>::zeros(small());
  p.w3.value = Matrix<double>{{-1}, {-1}};
  p.w4.value = Matrix<double>{{2, -5}};
  EXPECT_EQ(excite(Matrix<double>{{1, 2}}, p), (Matrix<double>{{0.5, 0.5}}));
}

TEST(Excite, ScalarFormula) {
  auto p = FusionParams<double>::zeros(FusionConfig{2, 2, false});
  p.w3.value = Matrix<double>{{1}, {1}};
  p.w4.value = Matrix<double>{{1, -1}};
  auto s = excite(Matrix<double>{{1, 2}}, p);
  EXPECT_NEAR(s[0], oracle::sigmoid_direct(3.0), 1e-15);
  EXPECT_NEAR(s[1], oracle::sigmoid_direct(-3.0), 1e-15);
  EXPECT_NEAR(s[0], 0.95257, 5e-6);
  EXPECT_NEAR(s[1], 0.04743, 5e-6);
}

TEST(Fuse, RowSelectorsReturnFlatHalvesExactly) {
  std::mt19937_64 rng(4);
  auto xt = random_row(768, rng);
  auto xi = random_row(512, rng);
  auto first = fuse(xt, xi, Matrix<double>{{1, 0}});
  auto second = fuse(xt, xi, Matrix<double>{{0, 1}});
  ASSERT_EQ(first.cols(), 640u);
  for (std::size_t j = 0; j < 640; ++j) EXPECT_EQ(first[j], xt[j]);
  // Second row: text 640..767, then every image feature.
  for (std::size_t j = 0; j < 128; ++j) EXPECT_EQ(second[j], xt[640 + j]);
  for (std::size_t j = 0; j < 512; ++j) EXPECT_EQ(second[128 + j], xi[j]);
}

TEST(Fuse, TwoByTwoHandExpansion) {
  const double a = 1.5, b = -2, c = 0.25, d = 4, s0 = 0.3, s1 = 0.9;
  auto out = fuse(Matrix<double>{{a, b}}, Matrix<double>{{c, d}}, Matrix<double>{{s0, s1}});
  EXPECT_DOUBLE_EQ(out[0], s0 * a + s1 * c);
  EXPECT_DOUBLE_EQ(out[1], s0 * b + s1 * d);
}

TEST(Fuse, OddWidthRejected) {
  EXPECT_THROW(fuse(Matrix<double>(1, 3), Matrix<double>(1, 2), Matrix<double>{{1, 1}}),
               ShapeError);
  EXPECT_THROW(fuse_rows(Matrix<double>(2, 3), Matrix<double>(2, 2), Matrix<double>(2, 2)),
               ShapeError);
}

TEST(Fuse, BatchedMatchesPerSample) {
  std::mt19937_64 rng(5);
  Matrix<double> xt(5, 6), xi(5, 4), s(5, 2);
  std::normal_distribution<double> d;
  for (auto& v : xt.values()) v = d(rng);
  for (auto& v : xi.values()) v = d(rng);
  for (auto& v : s.values()) v = std::abs(d(rng));
  auto batched = fuse_rows(xt, xi, s);
  for (std::size_t r = 0; r < 5; ++r) {
    Matrix<double> rt(1, 6, std::vector<double>(xt.row_view(r).begin(), xt.row_view(r).end()));
    Matrix<double> ri(1, 4, std::vector<double>(xi.row_view(r).begin(), xi.row_view(r).end()));
    Matrix<double> rs(1, 2, std::vector<double>(s.row_view(r).begin(), s.row_view(r).end()));
    auto single = fuse(rt, ri, rs);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(batched(r, j), single[j], 1e-15);
  }
}

TEST(Fuse, LinearInWeightsAndFeatures) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int t = 0; t < 100; ++t) {
    auto xt = random_row(6, rng), xi = random_row(4, rng);
    auto yt = random_row(6, rng), yi = random_row(4, rng);
    Matrix<double> s1{{u(rng), u(rng)}}, s2{{u(rng), u(rng)}};
    const double alpha = u(rng), beta = u(rng);
    auto lhs = fuse(xt, xi, alpha * s1 + beta * s2);
    auto rhs = alpha * fuse(xt, xi, s1) + beta * fuse(xt, xi, s2);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(lhs[j], rhs[j], 1e-6);

    auto lhs2 = fuse(alpha * xt + beta * yt, alpha * xi + beta * yi, s1);
    auto rhs2 = alpha * fuse(xt, xi, s1) + beta * fuse(yt, yi, s1);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(lhs2[j], rhs2[j], 1e-6);
  }
}

TEST(SefusionForward, DefaultDimensions) {
  std::mt19937_64 rng(7);
  auto p = FusionParams<double>::init(FusionConfig{}, rng);
  auto trace = sefusion_forward(random_row(768, rng), random_row(512, rng), p);
  EXPECT_EQ(trace.z.shape_string(), "1x2");
  EXPECT_EQ(trace.s.shape_string(), "1x2");
  EXPECT_EQ(trace.fused.shape_string(), "1x640");
}

TEST(SefusionForward, ZeroWeightsAverageTheRows) {
  auto p = FusionParams<double>::zeros(small());
  std::mt19937_64 rng(8);
  auto xt = random_row(6, rng), xi = random_row(4, rng);
  auto trace = sefusion_forward(xt, xi, p);
  EXPECT_EQ(trace.s, (Matrix<double>{{0.5, 0.5}}));
  auto stacked = reshape(concat_cols(xt, xi), 2, 5);
  for (std::size_t j = 0; j < 5; ++j)
    EXPECT_DOUBLE_EQ(trace.fused[j], 0.5 * stacked(0, j) + 0.5 * stacked(1, j));
}

TEST(SefusionForward, WeightsStayInOpenInterval) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 300; ++t) {
    auto p = random_params(small(t % 2 == 0), rng);
    for (auto& v : p.w4.value.values()) v *= 50.0;
    auto trace = sefusion_forward(random_row(6, rng, 10.0), random_row(4, rng, 10.0), p);
    for (double v : trace.s.values()) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  }
}

TEST(SefusionForward, TapeMatchesPureForward) {
  std::mt19937_64 rng(10);
  auto p = random_params(small(), rng);
  Matrix<double> xt(3, 6), xi(3, 4);
  std::normal_distribution<double> d;
  for (auto& v : xt.values()) v = d(rng);
  for (auto& v : xi.values()) v = d(rng);
  Tape<double> tape;
  auto vars = record_fusion(tape, tape.constant(xt), tape.constant(xi), p);
  auto pure = sefusion_forward(xt, xi, p);
  for (std::size_t k = 0; k < pure.fused.size(); ++k)
    EXPECT_NEAR(tape.value(vars.fused)[k], pure.fused[k], 1e-14);
  for (std::size_t k = 0; k < pure.s.size(); ++k)
    EXPECT_NEAR(tape.value(vars.s)[k], pure.s[k], 1e-15);
}

class FusionGradient : public ::testing::TestWithParam<std::tuple<int, bool>> {};

TEST_P(FusionGradient, SumOfFusedMatchesFiniteDifferences) {
  const auto [seed, biases] = GetParam();
  std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
  auto p = random_params(small(biases), rng);
  // Keep the excitation ReLU away from its kink.
  p.w3.value = Matrix<double>{{0.8}, {0.6}};
  if (biases) p.b3.value[0] = 1.0;
  auto xt = random_row(6, rng), xi = random_row(4, rng);

  Tape<double> tape;
  auto params = p.parameters();
  tape.backward(tape.sum(record_fusion(tape, tape.constant(xt), tape.constant(xi), p).fused));
  auto loss = [&] { return sum(sefusion_forward(xt, xi, p).fused); };
  const auto report = finite_diff_check(loss, params, 1e-5);
  EXPECT_LT(report.max_relative_error, 1e-5) << report.parameter << "[" << report.index << "]";
}

INSTANTIATE_TEST_SUITE_P(Seeds, FusionGradient,
                         ::testing::Combine(::testing::Values(1, 2, 3), ::testing::Bool()));

TEST(MultiFusion, TwoModalitiesReduceToPair) {
  std::mt19937_64 rng(11);
  auto pair = random_params(small(), rng);
  auto multi = MultiFusionParams<double>::from_pair(pair);
  EXPECT_EQ(multi.bottleneck(), 1u);
  auto xt = random_row(6, rng), xi = random_row(4, rng);
  std::vector<Matrix<double>> feats{xt, xi};
  auto a = sefusion_forward(xt, xi, pair);
  auto b = sefusion_forward_multi<double>(feats, multi);
  EXPECT_EQ(a.z, b.z);
  EXPECT_EQ(a.s, b.s);
  for (std::size_t j = 0; j < a.fused.size(); ++j) EXPECT_DOUBLE_EQ(a.fused[j], b.fused[j]);
}

TEST(MultiFusion, SingleModalityScalesInput) {
  std::mt19937_64 rng(12);
  auto p = MultiFusionParams<double>::init({5}, true, rng);
  auto x = random_row(5, rng);
  std::vector<Matrix<double>> feats{x};
  auto trace = sefusion_forward_multi<double>(feats, p);
  ASSERT_EQ(trace.s.shape_string(), "1x1");
  ASSERT_EQ(trace.fused.shape_string(), "1x5");
  for (std::size_t j = 0; j < 5; ++j) EXPECT_DOUBLE_EQ(trace.fused[j], trace.s[0] * x[j]);
}

TEST(MultiFusion, FourEqualModalitiesWithEqualWeights) {
  std::mt19937_64 rng(13);
  auto p = MultiFusionParams<double>::init({3, 3, 3, 3}, true, rng);
  EXPECT_EQ(p.bottleneck(), 2u);
  // Equal columns in the excitation output map -> equal modality weights.
  for (std::size_t h = 0; h < 2; ++h)
    for (std::size_t k = 0; k < 4; ++k) p.excite_out.value(h, k) = 0.3 + 0.1 * h;
  auto row = random_row(3, rng);
  std::vector<Matrix<double>> feats(4, row);
  auto trace = sefusion_forward_multi<double>(feats, p);
  ASSERT_EQ(trace.fused.cols(), 3u);
  for (std::size_t k = 1; k < 4; ++k) EXPECT_DOUBLE_EQ(trace.s[k], trace.s[0]);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(trace.fused[j], 4.0 * trace.s[0] * row[j], 1e-14);
}

TEST(MultiFusion, DivisibilityAndArity) {
  EXPECT_THROW(MultiFusionParams<double>::zeros({3, 4, 4}), ShapeError);
  auto p = MultiFusionParams<double>::zeros({2, 4});
  std::vector<Matrix<double>> one{Matrix<double>(1, 2)};
  EXPECT_THROW(sefusion_forward_multi<double>(one, p), ShapeError);
}
