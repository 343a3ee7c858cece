#include <gtest/gtest.h>

#include <cmath>

#include "gbmcert/oracle/finite_difference.hpp"
#include "test_util.hpp"

using namespace gbmcert;

namespace {

// Plain scalar LSTM written against the gate equations directly.
struct RefState {
  std::vector<double> h, c;
};

RefState reference_lstm(const LstmCellParams<double>& p, const std::vector<double>& v,
                        const std::vector<double>& h, const std::vector<double>& c) {
  const std::size_t d = p.hidden_size();
  auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  auto pre = [&](Gate g, std::size_t i) {
    const auto& gp = p.gate(g);
    double s = gp.b[i];
    for (std::size_t j = 0; j < v.size(); ++j) s += gp.theta(i, j) * v[j];
    for (std::size_t j = 0; j < d; ++j) s += gp.u(i, j) * h[j];
    return s;
  };
  RefState out{std::vector<double>(d), std::vector<double>(d)};
  for (std::size_t i = 0; i < d; ++i) {
    const double ig = sig(pre(Gate::Input, i)), fg = sig(pre(Gate::Forget, i));
    const double gg = std::tanh(pre(Gate::Cell, i)), og = sig(pre(Gate::Output, i));
    out.c[i] = fg * c[i] + ig * gg;
    out.h[i] = og * std::tanh(out.c[i]);
  }
  return out;
}

LstmDomain<double> random_domain(std::size_t d0, std::size_t d, std::mt19937_64& rng) {
  return {testutil::random_box(d0, rng, 1.0, 1.0), testutil::random_box(d, rng, 0.5, 0.5),
          testutil::random_box(d, rng, 1.0, 1.0)};
}

// x = (v, h, c) flattened.
Vector cell_output(const LstmCellParams<double>& p, const Vector& x, bool cell_state) {
  const std::size_t d0 = p.input_size(), d = p.hidden_size();
  Vector v(d0), h(d), c(d);
  for (std::size_t j = 0; j < d0; ++j) v[j] = x[j];
  for (std::size_t j = 0; j < d; ++j) {
    h[j] = x[d0 + j];
    c[j] = x[d0 + d + j];
  }
  const auto s = lstm_cell_forward(p, v, h, c);
  return cell_state ? s.c : s.h;
}

Vector sample_domain(const LstmDomain<double>& dom, std::mt19937_64& rng) {
  const Vector v = testutil::sample_box(dom.v_box, rng), h = testutil::sample_box(dom.h_box, rng),
               c = testutil::sample_box(dom.c_box, rng);
  Vector x(v.size() + h.size() + c.size());
  std::size_t k = 0;
  for (double e : v) x[k++] = e;
  for (double e : h) x[k++] = e;
  for (double e : c) x[k++] = e;
  return x;
}

}  // namespace

TEST(LstmForward, ZeroNetwork) {
  const auto p = LstmCellParams<double>::zeros(2, 1);
  const auto s = lstm_cell_forward(p, Vector{0.3, -1}, Vector{0.0}, Vector{0.0});
  EXPECT_EQ(s.h[0], 0.0);
  EXPECT_EQ(s.c[0], 0.0);
}

TEST(LstmForward, ZeroNetworkWithUnitCell) {
  const auto p = LstmCellParams<double>::zeros(1, 1);
  const auto s = lstm_cell_forward(p, Vector{0.0}, Vector{0.0}, Vector{1.0});
  EXPECT_DOUBLE_EQ(s.c[0], 0.5);
  EXPECT_NEAR(s.h[0], 0.5 * std::tanh(0.5), 1e-15);
  EXPECT_NEAR(s.h[0], 0.231059, 1e-6);
}

TEST(LstmForward, MatchesReferenceImplementation) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = testutil::random_lstm(2, 2, rng);
    const Vector v = testutil::random_vector(2, rng), h = testutil::random_vector(2, rng),
                 c = testutil::random_vector(2, rng);
    const auto s = lstm_cell_forward(p, v, h, c);
    const auto r = reference_lstm(p, v.values(), h.values(), c.values());
    for (std::size_t i = 0; i < 2; ++i) {
      EXPECT_NEAR(s.h[i], r.h[i], 1e-10);
      EXPECT_NEAR(s.c[i], r.c[i], 1e-10);
    }
  }
}

TEST(CellStateBounds, PointDomainIsExact) {
  std::mt19937_64 rng(2);
  const auto p = testutil::random_lstm(2, 2, rng);
  const Vector v{0.1, -0.2}, h{0.3, 0.0}, c{-0.5, 0.4};
  const LstmDomain<double> dom{BoxInterval::point(v), BoxInterval::point(h),
                               BoxInterval::point(c)};
  const auto box = cell_state_bounds(p, dom);
  const auto s = lstm_cell_forward(p, v, h, c);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(box.lo()[i], s.c[i], 1e-15);
    EXPECT_NEAR(box.hi()[i], s.c[i], 1e-15);
  }
}

TEST(CellStateBounds, ZeroParamsEncloseSamples) {
  const auto p = LstmCellParams<double>::zeros(1, 1);
  const LstmDomain<double> dom{BoxInterval(Vector{-1}, Vector{1}), BoxInterval(Vector{-1}, Vector{1}),
                               BoxInterval(Vector{0}, Vector{1})};
  const auto box = cell_state_bounds(p, dom);
  // c = 0.5 c_prev: midpoint 0.25, D^c term 0.5 * width 1.
  EXPECT_DOUBLE_EQ(box.lo()[0], 0.25 - 0.5);
  EXPECT_DOUBLE_EQ(box.hi()[0], 0.25 + 0.5);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 100000; ++k) {
    const Vector x = sample_domain(dom, rng);
    EXPECT_TRUE(box.contains(cell_output(p, x, true).span(), 1e-12));
  }
}

TEST(CellStateBounds, RandomInstanceEnclosesSamples) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = testutil::random_lstm(2, 2, rng);
    const auto dom = random_domain(2, 2, rng);
    const auto box = cell_state_bounds(p, dom);
    for (int k = 0; k < 20000; ++k) {
      const Vector x = sample_domain(dom, rng);
      ASSERT_TRUE(box.contains(cell_output(p, x, true).span(), 1e-12));
    }
  }
}

TEST(JacobianBounds, ZeroInputWeightsGiveZeroAc) {
  std::mt19937_64 rng(6);
  auto p = testutil::random_lstm(2, 3, rng);
  for (auto& g : p.gates) g.theta = Matrix(3, 2);
  const auto ac = jacobian_bounds_ac(p, random_domain(2, 3, rng));
  for (double x : ac.lo.span()) EXPECT_EQ(x, 0.0);
  for (double x : ac.hi.span()) EXPECT_EQ(x, 0.0);
}

TEST(JacobianBounds, ZeroRecurrentWeightsGiveZeroBc) {
  std::mt19937_64 rng(7);
  auto p = testutil::random_lstm(2, 3, rng);
  for (auto& g : p.gates) g.u = Matrix(3, 3);
  const auto bc = jacobian_bounds_bc(p, random_domain(2, 3, rng));
  for (double x : bc.lo.span()) EXPECT_EQ(x, 0.0);
  for (double x : bc.hi.span()) EXPECT_EQ(x, 0.0);
}

TEST(JacobianBounds, SymmetricInstanceGivesEqualAcAndBc) {
  std::mt19937_64 rng(8);
  auto p = testutil::random_lstm(2, 2, rng);
  for (auto& g : p.gates) g.u = g.theta;
  const auto dom = random_domain(2, 2, rng);
  const auto ac = jacobian_bounds_ac(p, dom);
  const auto bc = jacobian_bounds_bc(p, dom);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(ac.lo.span()[k], bc.lo.span()[k]);
    EXPECT_EQ(ac.hi.span()[k], bc.hi.span()[k]);
  }
}

TEST(JacobianBounds, DcDiagonal) {
  const auto p = LstmCellParams<double>::zeros(1, 2);
  const LstmDomain<double> dom{BoxInterval(Vector{-1}, Vector{1}),
                               BoxInterval(Vector{0, 0}, Vector{1, 1}),
                               BoxInterval(Vector{0, 0}, Vector{1, 1})};
  const auto dc = jacobian_bounds_dc(p, dom);
  EXPECT_DOUBLE_EQ(dc.lo(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(dc.hi(1, 1), 0.5);
  EXPECT_EQ(dc.lo(0, 1), 0.0);
  EXPECT_EQ(dc.hi(1, 0), 0.0);
}

TEST(JacobianBounds, DcSaturatingForgetGate) {
  auto p = LstmCellParams<double>::zeros(1, 1);
  p.gate(Gate::Forget).theta(0, 0) = 20.0;
  const LstmDomain<double> dom{BoxInterval(Vector{-1}, Vector{1}), BoxInterval(Vector{0}, Vector{0}),
                               BoxInterval(Vector{0}, Vector{0})};
  const auto dc = jacobian_bounds_dc(p, dom);
  EXPECT_NEAR(dc.lo(0, 0), 0.0, 1e-8);
  EXPECT_NEAR(dc.hi(0, 0), 1.0, 1e-8);
}

TEST(JacobianBounds, ScalarCellContainsGridJacobians) {
  LstmCellParams<double> p = LstmCellParams<double>::zeros(1, 1);
  p.gate(Gate::Input).theta(0, 0) = 1.5;
  p.gate(Gate::Forget).theta(0, 0) = -0.8;
  p.gate(Gate::Cell).theta(0, 0) = 2.0;
  p.gate(Gate::Output).theta(0, 0) = 0.7;
  const LstmDomain<double> dom{BoxInterval(Vector{-1}, Vector{1}),
                               BoxInterval(Vector{-0.2}, Vector{0.2}),
                               BoxInterval(Vector{-0.5}, Vector{0.5})};
  const auto ac = jacobian_bounds_ac(p, dom);
  for (int a = 0; a <= 40; ++a)
    for (int b = 0; b <= 10; ++b) {
      const double v = -1 + a / 20.0, c = -0.5 + b / 10.0;
      const auto fd = oracle::fd_partial(
          [&](double x) {
            return lstm_cell_forward(p, Vector{x}, Vector{0.0}, Vector{c}).c[0];
          },
          v);
      EXPECT_TRUE(ac.contains(0, 0, fd.value, 1e-6)) << v << ' ' << c;
    }
}

TEST(JacobianBounds, RandomInstanceContainsSampledPartials) {
  std::mt19937_64 rng(9);
  const auto p = testutil::random_lstm(2, 2, rng);
  const auto dom = random_domain(2, 2, rng);
  const auto ac = jacobian_bounds_ac(p, dom);
  const auto bc = jacobian_bounds_bc(p, dom);
  for (int k = 0; k < 10000; ++k) {
    const Vector x = sample_domain(dom, rng);
    const auto j = oracle::fd_jacobian([&](const Vector& y) { return cell_output(p, y, true); }, x);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t c = 0; c < 2; ++c) {
        ASSERT_TRUE(ac.contains(i, c, j.jacobian(i, c), 1e-6));
        ASSERT_TRUE(bc.contains(i, c, j.jacobian(i, 2 + c), 1e-6));
      }
  }
}

TEST(GbmLstm, ZeroNetworkAtZeroCell) {
  const auto p = LstmCellParams<double>::zeros(2, 2);
  const LstmDomain<double> dom{BoxInterval(Vector{-1, -1}, Vector{1, 1}),
                               BoxInterval(Vector{-1, -1}, Vector{1, 1}),
                               BoxInterval(Vector{0, 0}, Vector{0, 0})};
  const auto g = gbm_lstm(p, dom);
  ASSERT_EQ(g.rows(), 2u);
  ASSERT_EQ(g.cols(), 6u);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 6; ++j) {
      const double expected = (j >= 4 && j - 4 == i) ? 0.25 : 0.0;
      EXPECT_DOUBLE_EQ(g.m(i, j), expected) << i << ',' << j;
    }
  EXPECT_EQ(g.block("cell").begin, 4u);
  g.validate();
}

TEST(GbmLstm, RandomInstanceIsSound) {
  std::mt19937_64 rng(10);
  const auto p = testutil::random_lstm(2, 2, rng);
  const LstmDomain<double> dom{BoxInterval(Vector{-1, -1}, Vector{1, 1}),
                               BoxInterval(Vector{-1, -1}, Vector{1, 1}),
                               BoxInterval(Vector{-1, -1}, Vector{1, 1})};
  const auto g = gbm_lstm(p, dom);
  std::uniform_int_distribution<std::size_t> row(0, 1), col(0, 5);
  for (int k = 0; k < 100000; ++k) {
    Vector x = sample_domain(dom, rng);
    const std::size_t i = row(rng), j = col(rng);
    const double x0 = x[j];
    const auto fd = oracle::fd_partial(
        [&](double t) {
          x[j] = t;
          return cell_output(p, x, false)[i];
        },
        x0);
    ASSERT_LE(std::abs(fd.value), g.m(i, j) + 1e-6);
  }
}

TEST(GbmLstm, OffDiagonalCellBlockVanishes) {
  std::mt19937_64 rng(12);
  const auto p = testutil::random_lstm(3, 3, rng);
  const auto g = gbm_lstm(p, random_domain(3, 3, rng));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 3; ++k)
      if (i != k) EXPECT_EQ(g.m(i, 3 + 3 + k), 0.0);
}
