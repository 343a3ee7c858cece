#pragma once

// Synthetic two-class corpora.  Words come in concepts: each concept has a
// centre and a few surface forms jittered around it, which become each
// other's synonyms.  Class-indicative concepts sit at +-margin/2 along a
// hidden direction u; neutral concepts and all jitter are orthogonal to u,
// so the mean word vector separates the classes.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gbmcert/core/error.hpp"
#include "gbmcert/data/dataset.hpp"
#include "gbmcert/data/embeddings.hpp"

namespace gbmcert {

struct SyntheticConfig {
  std::size_t dim = 16;
  std::size_t concepts_per_class = 6;
  std::size_t neutral_concepts = 24;
  std::size_t surface_forms = 3;
  double margin = 10.0;
  double centre_scale = 1.5;  // per-coordinate std of concept centres
  double spread = 0.05;  // per-coordinate jitter of surface forms
  std::size_t min_length = 8;
  std::size_t max_length = 16;
  std::size_t min_indicators = 2;
  double indicator_rate = 0.25;
  std::size_t n_train = 2000;
  std::size_t n_val = 500;
  std::size_t n_test = 500;
  std::uint64_t seed = 42;

  void validate() const {
    require_dims(dim >= 2, "synthetic: dim must be >= 2");
    require_dims(concepts_per_class > 0 && surface_forms > 0, "synthetic: empty vocabulary");
    require_dims(min_length >= 1 && min_length <= max_length, "synthetic: bad length range");
    require_dims(min_indicators <= min_length, "synthetic: min_indicators > min_length");
    if (neutral_concepts == 0)
      require_dims(indicator_rate >= 1.0, "synthetic: no neutral words to fill sentences");
    if (!(margin > 0.0)) fail(ErrorKind::Usage, "synthetic: margin must be > 0");
    if (!(centre_scale >= 0.0 && spread >= 0.0))
      fail(ErrorKind::Usage, "synthetic: scales must be >= 0");
  }
};

struct SyntheticCorpus {
  EmbeddingTable embeddings;
  TextDataset train;
  TextDataset val;
  TextDataset test;
  Vector direction;  // u
};

inline SyntheticCorpus make_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t d = cfg.dim;

  SyntheticCorpus out;
  out.direction = Vector(d);
  double norm = 0.0;
  for (double& x : out.direction) {
    x = normal(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (double& x : out.direction) x /= norm;
  const Vector& u = out.direction;

  auto orthogonal = [&](double scale) {
    Vector v(d);
    for (double& x : v) x = scale * normal(rng);
    double along = 0.0;
    for (std::size_t i = 0; i < d; ++i) along += v[i] * u[i];
    for (std::size_t i = 0; i < d; ++i) v[i] -= along * u[i];
    return v;
  };

  out.embeddings = EmbeddingTable(d);
  // Surface-form names per concept, indexed [group][concept][form];
  // groups are negative, positive, neutral.
  std::vector<std::vector<std::vector<std::string>>> names(3);
  const char* prefix[3] = {"neg", "pos", "neu"};
  const std::size_t count[3] = {cfg.concepts_per_class, cfg.concepts_per_class,
                                cfg.neutral_concepts};
  const double offset[3] = {-0.5 * cfg.margin, 0.5 * cfg.margin, 0.0};
  for (int g = 0; g < 3; ++g) {
    for (std::size_t c = 0; c < count[g]; ++c) {
      Vector centre = orthogonal(cfg.centre_scale);
      for (std::size_t i = 0; i < d; ++i) centre[i] += offset[g] * u[i];
      std::vector<std::string> forms;
      for (std::size_t f = 0; f < cfg.surface_forms; ++f) {
        const Vector jitter = orthogonal(cfg.spread);
        Vector w = add(centre, jitter);
        std::string name = std::string(prefix[g]) + std::to_string(c) + "_" + std::to_string(f);
        out.embeddings.add(name, w.span());
        forms.push_back(std::move(name));
      }
      names[g].push_back(std::move(forms));
    }
  }

  auto pick = [&](int group) -> const std::string& {
    std::uniform_int_distribution<std::size_t> c(0, names[group].size() - 1);
    const auto& forms = names[group][c(rng)];
    std::uniform_int_distribution<std::size_t> f(0, forms.size() - 1);
    return forms[f(rng)];
  };

  auto make_split = [&](std::size_t n, const std::string& split) {
    TextDataset ds;
    ds.num_classes = 2;
    ds.split = split;
    std::uniform_int_distribution<std::size_t> len(cfg.min_length, cfg.max_length);
    std::bernoulli_distribution indicator(cfg.indicator_rate);
    for (std::size_t e = 0; e < n; ++e) {
      TextExample ex;
      ex.label = e % 2;
      const std::size_t l = len(rng);
      std::vector<bool> is_ind(l);
      std::size_t n_ind = 0;
      for (std::size_t t = 0; t < l; ++t) {
        is_ind[t] = cfg.neutral_concepts == 0 || indicator(rng);
        n_ind += is_ind[t] ? 1 : 0;
      }
      std::uniform_int_distribution<std::size_t> pos(0, l - 1);
      while (n_ind < cfg.min_indicators) {
        const std::size_t t = pos(rng);
        if (!is_ind[t]) {
          is_ind[t] = true;
          ++n_ind;
        }
      }
      for (std::size_t t = 0; t < l; ++t)
        ex.tokens.push_back(pick(is_ind[t] ? static_cast<int>(ex.label) : 2));
      ds.examples.push_back(std::move(ex));
    }
    return ds;
  };

  out.train = make_split(cfg.n_train, "train");
  out.val = make_split(cfg.n_val, "val");
  out.test = make_split(cfg.n_test, "test");
  return out;
}

}  // namespace gbmcert
