#include <gtest/gtest.h>

#include "gbmcert/oracle/finite_difference.hpp"
#include "test_util.hpp"

using namespace gbmcert;

namespace {

CnnParams<double> random_cnn(std::vector<std::size_t> ks, std::size_t filters, std::size_t d0,
                             std::mt19937_64& rng, ConvActivation act = ConvActivation::Relu) {
  auto p = CnnParams<double>::zeros(ks, filters, d0);
  p.activation = act;
  for (auto& k : p.kernels) {
    k.weights = testutil::random_matrix(filters, d0 * k.width, rng);
    k.bias = testutil::random_vector(filters, rng, 0.2);
  }
  return p;
}

std::vector<Vector> split_words(const Vector& x, std::size_t d0) {
  std::vector<Vector> w(x.size() / d0, Vector(d0));
  for (std::size_t j = 0; j < x.size(); ++j) w[j / d0][j % d0] = x[j];
  return w;
}

Vector run(const CnnParams<double>& p, const Vector& x) {
  const auto w = split_words(x, p.input_size);
  return cnn_forward(p, std::span<const Vector>(w));
}

// Direct nested-loop convolution and max-pool.
Vector naive_cnn(const CnnParams<double>& p, const std::vector<Vector>& w) {
  Vector out(p.output_size());
  for (std::size_t kp = 0; kp < p.kernels.size(); ++kp) {
    const auto& k = p.kernels[kp];
    for (std::size_t f = 0; f < p.filters; ++f) {
      double best = -INFINITY;
      for (std::size_t s = 0; s + k.width <= w.size(); ++s) {
        double a = k.bias[f];
        for (std::size_t l = 0; l < k.width; ++l)
          for (std::size_t c = 0; c < p.input_size; ++c) a += k.w(f, c, l) * w[s + l][c];
        a = p.activation == ConvActivation::Relu ? std::max(a, 0.0) : std::tanh(a);
        best = std::max(best, a);
      }
      out[kp * p.filters + f] = best;
    }
  }
  return out;
}

}  // namespace

TEST(CnnForward, ZeroWeights) {
  const auto p = CnnParams<double>::zeros({2, 3}, 4, 2);
  std::mt19937_64 rng(1);
  std::vector<Vector> w(5, testutil::random_vector(2, rng));
  for (double y : cnn_forward(p, std::span<const Vector>(w))) EXPECT_EQ(y, 0.0);
}

TEST(CnnForward, SingleWindow) {
  std::mt19937_64 rng(2);
  const auto p = random_cnn({3}, 2, 2, rng, ConvActivation::Tanh);
  std::vector<Vector> w{testutil::random_vector(2, rng), testutil::random_vector(2, rng),
                        testutil::random_vector(2, rng)};
  const Vector y = cnn_forward(p, std::span<const Vector>(w));
  for (std::size_t f = 0; f < 2; ++f) {
    double a = p.kernels[0].bias[f];
    for (std::size_t l = 0; l < 3; ++l)
      for (std::size_t c = 0; c < 2; ++c) a += p.kernels[0].w(f, c, l) * w[l][c];
    EXPECT_NEAR(y[f], std::tanh(a), 1e-15);
  }
}

TEST(CnnForward, MatchesNaiveConvolution) {
  std::mt19937_64 rng(3);
  for (auto act : {ConvActivation::Relu, ConvActivation::Tanh}) {
    const auto p = random_cnn({2, 3, 4}, 5, 3, rng, act);
    std::vector<Vector> w;
    for (int t = 0; t < 9; ++t) w.push_back(testutil::random_vector(3, rng));
    const Vector a = cnn_forward(p, std::span<const Vector>(w)), b = naive_cnn(p, w);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  }
}

TEST(CnnForward, ShortSequenceIsDomainError) {
  const auto p = CnnParams<double>::zeros({4}, 1, 1);
  std::vector<Vector> w(3, Vector(1));
  EXPECT_THROW(cnn_forward(p, std::span<const Vector>(w)), Error);
}

TEST(IndexFunctions, HandValues) {
  EXPECT_EQ(index_alpha(1, 1, 4), 1u);
  EXPECT_EQ(index_beta(1, 1, 4), 1u);
  EXPECT_EQ(index_alpha(5, 1, 4), 2u);
  EXPECT_EQ(index_beta(5, 1, 4), 1u);
  EXPECT_EQ(index_alpha(7, 2, 3), 2u);
  EXPECT_EQ(index_beta(7, 2, 3), 3u);
  EXPECT_THROW(index_alpha(1, 2, 3), Error);
  EXPECT_THROW(index_beta(3, 1, 0), Error);
}

TEST(IndexFunctions, EnumerationMatchesBlockWalk) {
  for (std::size_t a = 1; a <= 3; ++a)
    for (std::size_t d = 1; d <= 6; ++d) {
      std::size_t block = 1, off = 1;
      for (std::size_t i = a; i <= 24; ++i) {
        EXPECT_EQ(index_alpha(i, a, d), block);
        EXPECT_EQ(index_beta(i, a, d), off);
        if (++off > d) {
          off = 1;
          ++block;
        }
      }
    }
}

TEST(GbmCnn, ZeroWeights) {
  const auto g = gbm_cnn(CnnParams<double>::zeros({2, 3}, 3, 2), 6);
  EXPECT_EQ(g.total(), 0.0);
  g.validate();
}

TEST(GbmCnn, TwoTapKernelOverThreeWords) {
  auto p = CnnParams<double>::zeros({2}, 1, 1);
  p.kernels[0].w(0, 0, 0) = -0.3;
  p.kernels[0].w(0, 0, 1) = 0.8;
  const auto g = gbm_cnn(p, 3);
  // Word 0 is only ever under offset 0, word 2 only under offset 1.
  EXPECT_DOUBLE_EQ(g.m(0, 0), 0.3);
  EXPECT_DOUBLE_EQ(g.m(0, 1), 0.8);
  EXPECT_DOUBLE_EQ(g.m(0, 2), 0.8);
  p.kernels[0].w(0, 0, 1) = 0.1;
  const auto h = gbm_cnn(p, 3);
  EXPECT_DOUBLE_EQ(h.m(0, 0), 0.3);
  EXPECT_DOUBLE_EQ(h.m(0, 1), 0.3);
  EXPECT_DOUBLE_EQ(h.m(0, 2), 0.1);
}

TEST(GbmCnn, WindowEnumerationOracle) {
  std::mt19937_64 rng(4);
  const auto p = random_cnn({2, 3}, 2, 2, rng);
  const std::size_t n = 5;
  const auto g = gbm_cnn(p, n);
  for (std::size_t kp = 0; kp < 2; ++kp) {
    const auto& k = p.kernels[kp];
    for (std::size_t f = 0; f < 2; ++f)
      for (std::size_t pos = 0; pos < n; ++pos)
        for (std::size_t c = 0; c < 2; ++c) {
          double best = 0;
          for (std::size_t s = 0; s + k.width <= n; ++s)
            if (pos >= s && pos < s + k.width) best = std::max(best, std::abs(k.w(f, c, pos - s)));
          EXPECT_EQ(g.m(kp * 2 + f, pos * 2 + c), best);
        }
  }
}

TEST(GbmCnn, SampledPartialsAreBounded) {
  std::mt19937_64 rng(5);
  const auto p = random_cnn({2, 3}, 3, 2, rng);
  const std::size_t n = 6;
  const auto g = gbm_cnn(p, n);
  std::size_t checked = 0;
  for (int k = 0; k < 2000; ++k) {
    const Vector x = testutil::random_vector(n * 2, rng);
    const auto j = oracle::fd_jacobian([&](const Vector& y) { return run(p, y); }, x);
    for (std::size_t c = 0; c < x.size(); ++c) {
      if (j.kink[c]) continue;
      for (std::size_t i = 0; i < g.rows(); ++i) {
        ASSERT_LE(std::abs(j.jacobian(i, c)), g.m(i, c) + 1e-6);
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 100000u);
}
