#include <gtest/gtest.h>

#include "gbmcert/oracle/substitutions.hpp"
#include "test_util.hpp"

using namespace gbmcert;

namespace {

ModelShape tiny_shape(ModelKind kind) {
  ModelShape s;
  s.kind = kind;
  s.input_size = 3;
  s.hidden_size = 3;
  s.state_per_channel = 2;
  s.kernel_sizes = {2, 3};
  s.filters = 3;
  s.gbm_words = 3;
  return s;
}

// Three concepts with a centre word and two close variants each.
struct ToyVocab {
  EmbeddingTable emb{3};
  SynonymTable syn;
};

ToyVocab toy_vocab(double spread, std::mt19937_64& rng) {
  ToyVocab t;
  for (int c = 0; c < 3; ++c) {
    const Vector centre = testutil::random_vector(3, rng, 1.5);
    for (int f = 0; f < 3; ++f) {
      Vector w = centre;
      if (f > 0)
        for (double& x : w) x += std::uniform_real_distribution<double>(-spread, spread)(rng);
      t.emb.add("w" + std::to_string(c) + "_" + std::to_string(f), w.span());
    }
  }
  t.syn = build_synonyms(t.emb, 2, 10.0 * spread + 1e-9);
  return t;
}

}  // namespace

TEST(OutputBounds, ZeroRadiusIsDegenerate) {
  Gbm g;
  g.m = Matrix{{1, 2}, {3, 4}};
  g.blocks = {{"input", 0, 2}};
  const Vector f{0.5, -0.25};
  const auto b = output_bounds(f, g, PerturbationSpec{Vector(2)});
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(b.lo()[i], f[i]);
    EXPECT_EQ(b.hi()[i], f[i]);
  }
}

TEST(OutputBounds, AffineCornersAttainTheBox) {
  std::mt19937_64 rng(1);
  const std::size_t n = 6;
  const Matrix w = testutil::random_matrix(3, n, rng);
  Gbm g{abs_entries(w), {{"input", 0, n}}};
  const Vector x = testutil::random_vector(n, rng);
  const Vector fx = mat_vec(w, x);
  const auto box = output_bounds(fx, g, PerturbationSpec{Vector(n, 1.0)});
  Vector lo(3, INFINITY), hi(3, -INFINITY);
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    Vector y = x;
    for (std::size_t j = 0; j < n; ++j) y[j] += (mask >> j) & 1 ? 1.0 : -1.0;
    const Vector fy = mat_vec(w, y);
    for (std::size_t i = 0; i < 3; ++i) {
      lo[i] = std::min(lo[i], fy[i]);
      hi[i] = std::max(hi[i], fy[i]);
    }
  }
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(box.lo()[i], lo[i], 1e-9);
    EXPECT_NEAR(box.hi()[i], hi[i], 1e-9);
  }
}

TEST(OutputBounds, NegativeRadiusRejected) {
  Gbm g{Matrix{{1}}, {{"input", 0, 1}}};
  EXPECT_THROW(output_bounds(Vector{0}, g, PerturbationSpec{Vector{-1}}), Error);
}

TEST(OutputBounds, LstmSamplesStayInside) {
  std::mt19937_64 rng(2);
  const auto p = testutil::random_lstm(2, 3, rng);
  const LstmDomain<double> dom{testutil::random_box(2, rng, 1, 1), testutil::random_box(3, rng, 0.5, 0.5),
                               testutil::random_box(3, rng, 1, 1)};
  const auto g = gbm_lstm(p, dom);
  const BoxInterval all(
      Vector{dom.v_box.lo()[0], dom.v_box.lo()[1], dom.h_box.lo()[0], dom.h_box.lo()[1],
             dom.h_box.lo()[2], dom.c_box.lo()[0], dom.c_box.lo()[1], dom.c_box.lo()[2]},
      Vector{dom.v_box.hi()[0], dom.v_box.hi()[1], dom.h_box.hi()[0], dom.h_box.hi()[1],
             dom.h_box.hi()[2], dom.c_box.hi()[0], dom.c_box.hi()[1], dom.c_box.hi()[2]});
  auto f = [&](const Vector& x) {
    return lstm_cell_forward(p, Vector{x[0], x[1]}, Vector{x[2], x[3], x[4]},
                             Vector{x[5], x[6], x[7]})
        .h;
  };
  const Vector x = all.mid();
  Vector half = all.width();
  for (double& e : half) e *= 0.5;
  const auto box = output_bounds(f(x), g, PerturbationSpec{half});
  for (int k = 0; k < 10000; ++k) {
    const Vector y = testutil::sample_box(all, rng);
    ASSERT_TRUE(box.contains(f(y).span(), 1e-12));
  }
}

TEST(Lipschitz, Basics) {
  EXPECT_EQ(lipschitz_constant(Gbm{Matrix(2, 2), {{"input", 0, 2}}}), 0.0);
  Gbm g{Matrix(2, 3), {{"input", 0, 3}}};
  g.m(1, 2) = 3.5;
  EXPECT_EQ(lipschitz_constant(g), 3.5);
}

TEST(ChainRecurrent, ZeroRadiiGiveZeroBounds) {
  std::mt19937_64 rng(3);
  const auto p = testutil::random_lstm(2, 2, rng);
  const LstmDomain<double> dom{testutil::random_box(2, rng, 1, 1), testutil::random_box(2, rng, 0.5, 0.5),
                               testutil::random_box(2, rng, 1, 1)};
  const auto chain = chain_recurrent_bounds(lstm_sensitivity(lstm_cell_bounds(p, dom)),
                                            std::vector<Vector>(4, Vector(2)));
  for (const auto& o : chain.output)
    for (double x : o) EXPECT_EQ(x, 0.0);
}

TEST(ChainRecurrent, FinalPositionOnlyUsesInputBlock) {
  std::mt19937_64 rng(4);
  const auto p = testutil::random_lstm(2, 2, rng);
  const LstmDomain<double> dom{testutil::random_box(2, rng, 1, 1), testutil::random_box(2, rng, 0.5, 0.5),
                               testutil::random_box(2, rng, 1, 1)};
  const auto cb = lstm_cell_bounds(p, dom);
  const Vector r{0.1, 0.3};
  const auto chain = chain_recurrent_bounds(lstm_sensitivity(cb), {Vector(2), Vector(2), r});
  for (std::size_t i = 0; i < 2; ++i)
    EXPECT_DOUBLE_EQ(chain.output.back()[i], cb.gbm.m(i, 0) * r[0] + cb.gbm.m(i, 1) * r[1]);
}

TEST(ChainRecurrent, ThreeStepLstmSampledDeviations) {
  std::mt19937_64 rng(5);
  const auto p = testutil::random_lstm(2, 2, rng, 0.6);
  const Sequence xs{testutil::random_vector(2, rng), testutil::random_vector(2, rng),
                    testutil::random_vector(2, rng)};
  const std::vector<Vector> radii{Vector(2), Vector{0.2, 0.1}, Vector(2)};
  // Domain covering every perturbed trajectory: calibrate on samples.
  std::vector<Sequence> samples;
  for (int k = 0; k < 2000; ++k) {
    Sequence ys = xs;
    for (std::size_t j = 0; j < 2; ++j)
      ys[1][j] += std::uniform_real_distribution<double>(-radii[1][j], radii[1][j])(rng);
    samples.push_back(ys);
  }
  samples.push_back(xs);
  const auto dom = calibrate_direction(p, samples, false, 1.5);
  const auto chain =
      chain_recurrent_bounds(lstm_sensitivity(lstm_cell_bounds(p, dom)), radii);
  const Vector h0 = lstm_trajectory(p, xs, false).back().h;
  for (int k = 0; k < 10000; ++k) {
    Sequence ys = xs;
    for (std::size_t j = 0; j < 2; ++j)
      ys[1][j] += std::uniform_real_distribution<double>(-radii[1][j], radii[1][j])(rng);
    const Vector h = lstm_trajectory(p, ys, false).back().h;
    for (std::size_t i = 0; i < 2; ++i) ASSERT_LE(std::abs(h[i] - h0[i]), chain.output.back()[i] + 1e-12);
  }
}

TEST(CertifyMode, RoundTripsThroughStrings) {
  EXPECT_EQ(certify_mode_from_string(to_string(CertifyMode::FinalCell)), CertifyMode::FinalCell);
  EXPECT_EQ(certify_mode_from_string("chained"), CertifyMode::Chained);
  EXPECT_THROW(certify_mode_from_string("bogus"), Error);
}

TEST(Certificate, InvalidDomainHasNullMargin) {
  Certificate c;
  c.domain_valid = false;
  finalize_certificate(c, Vector{3, -3}, Vector{0, 0});
  EXPECT_FALSE(c.certified);
  EXPECT_TRUE(to_json(c)["margin"].is_null());
}

TEST(CertifySentence, EmptySynonymSetsGiveCleanMargin) {
  std::mt19937_64 rng(6);
  for (auto kind : {ModelKind::Lstm, ModelKind::BiLstm, ModelKind::S4, ModelKind::Cnn}) {
    auto m = init_model(tiny_shape(kind), 3);
    EmbeddingTable emb(3);
    for (int w = 0; w < 4; ++w) emb.add("t" + std::to_string(w), testutil::random_vector(3, rng).span());
    const SynonymTable none(3, 8, 0.5);
    const std::vector<std::string> sent{"t0", "t1", "t2", "t3"};
    const auto e = embed_sentence(sent, emb, &none, m.shape.min_length());
    calibrate(m, {e.x}, 1.1);
    const auto c = certify_sentence(m, sent, emb, none);
    const Vector z = logits(m, e.x);
    EXPECT_NEAR(c.margin, std::abs(z[0] - z[1]), 1e-12) << to_string(kind);
    EXPECT_EQ(c.certified, z[0] != z[1]);
  }
}

TEST(CertifySentence, SelfSynonymMeansZeroRadius) {
  EmbeddingTable emb(2);
  emb.add("a", Vector{0.5, 0.5}.span());
  emb.add("b", Vector{0.5, 0.5}.span());
  const auto syn = build_synonyms(emb, 8, 0.5);
  EXPECT_EQ(syn.find("a")->synonyms, std::vector<std::string>{"b"});
  for (double r : syn.radius_of("a")) EXPECT_EQ(r, 0.0);
  ModelShape s = tiny_shape(ModelKind::S4);
  s.input_size = 2;
  auto m = init_model(s, 1);
  const auto c = certify_sentence(m, {"a", "b"}, emb, syn);
  const Vector z = logits(m, embed_sentence({"a", "b"}, emb, nullptr).x);
  EXPECT_EQ(c.predicted, argmax(z));
  EXPECT_NEAR(c.margin, std::abs(z[0] - z[1]), 1e-12);
}

TEST(CertifySentence, ExhaustiveEnumerationAgreesWhenCertified) {
  std::mt19937_64 rng(7);
  std::size_t certified = 0;
  for (auto kind : {ModelKind::Lstm, ModelKind::BiLstm, ModelKind::S4, ModelKind::Cnn}) {
    for (int trial = 0; trial < 10; ++trial) {
      const ToyVocab v = toy_vocab(0.05, rng);
      auto m = init_model(tiny_shape(kind), 100 + trial, 4.0);
      std::vector<std::string> sent;
      for (int t = 0; t < 3; ++t)
        sent.push_back("w" + std::to_string(t) + "_" + std::to_string(rng() % 3));
      auto en = oracle::enumerate_substitutions(sent, v.syn, 1000);
      ASSERT_EQ(en.count(), 27u);
      std::vector<Sequence> all;
      std::vector<std::string> s;
      while (en.next(s)) all.push_back(embed_sentence(s, v.emb, nullptr, m.shape.min_length()).x);
      calibrate(m, all, 1.1);
      for (auto mode : {CertifyMode::Chained, CertifyMode::FinalCell}) {
        const auto c = certify_sentence(m, sent, v.emb, v.syn, mode);
        if (!c.certified) continue;
        ++certified;
        for (const auto& xs : all) ASSERT_EQ(predict(m, xs), c.predicted) << to_string(kind);
      }
    }
  }
  EXPECT_GT(certified, 0u);
}
