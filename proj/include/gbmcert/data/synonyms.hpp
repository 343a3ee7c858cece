#pragma once

// Synonym sets: the k nearest vocabulary words of each word, kept if within
// Euclidean distance d_e, with the per-coordinate radius
// max over synonyms of |v(w') - v(w)|.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gbmcert/core/error.hpp"
#include "gbmcert/core/matrix.hpp"
#include "gbmcert/data/embeddings.hpp"

namespace gbmcert {

struct SynonymEntry {
  std::vector<std::string> synonyms;
  Vector radius;
};

class SynonymTable {
 public:
  SynonymTable() = default;
  SynonymTable(std::size_t dim, std::size_t k, double d_e) : dim_(dim), k_(k), d_e_(d_e) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t k() const noexcept { return k_; }
  double max_distance() const noexcept { return d_e_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<std::string>& words() const noexcept { return order_; }

  void set(const std::string& word, SynonymEntry e) {
    require_dims(e.radius.size() == dim_, "synonyms: radius length mismatch for '" + word + "'");
    if (entries_.count(word) == 0) order_.push_back(word);
    entries_[word] = std::move(e);
  }

  const SynonymEntry* find(const std::string& word) const {
    auto it = entries_.find(word);
    return it == entries_.end() ? nullptr : &it->second;
  }

  // Words with no entry behave as having no synonyms.
  Vector radius_of(const std::string& word) const {
    const SynonymEntry* e = find(word);
    return e ? e->radius : Vector(dim_);
  }

 private:
  std::size_t dim_ = 0;
  std::size_t k_ = 0;
  double d_e_ = 0.0;
  std::vector<std::string> order_;
  std::unordered_map<std::string, SynonymEntry> entries_;
};

inline Vector synonym_radius(const EmbeddingTable& emb, const std::string& word,
                             const std::vector<std::string>& synonyms) {
  Vector r(emb.dim());
  const Vector v = emb.vector_of(word);
  for (const auto& s : synonyms) {
    const Vector w = emb.vector_of(s);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = std::max(r[j], std::abs(w[j] - v[j]));
  }
  return r;
}

// Exact brute force.  Neighbours are ordered by distance, ties broken
// lexicographically; the k nearest are taken first and then filtered by d_e.
inline SynonymTable build_synonyms(const EmbeddingTable& emb, std::size_t k, double d_e) {
  if (!(d_e > 0.0)) fail(ErrorKind::Usage, "build_synonyms: d_e must be > 0");
  const std::size_t n = emb.size();
  const std::size_t dim = emb.dim();
  SynonymTable table(dim, k, d_e);
  std::vector<std::pair<double, std::size_t>> cand;
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    const auto vi = emb.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto vj = emb.row(j);
      double s = 0.0;
      for (std::size_t c = 0; c < dim; ++c) {
        const double diff = vi[c] - vj[c];
        s += diff * diff;
      }
      cand.emplace_back(std::sqrt(s), j);
    }
    const auto less = [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return emb.words()[a.second] < emb.words()[b.second];
    };
    const std::size_t take = std::min(k, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end(),
                      less);
    SynonymEntry e;
    for (std::size_t r = 0; r < take; ++r)
      if (cand[r].first <= d_e) e.synonyms.push_back(emb.words()[cand[r].second]);
    e.radius = synonym_radius(emb, emb.words()[i], e.synonyms);
    table.set(emb.words()[i], std::move(e));
  }
  return table;
}

inline constexpr int kSynonymCacheVersion = 1;

inline nlohmann::json to_json(const SynonymTable& t) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& w : t.words()) {
    const SynonymEntry* e = t.find(w);
    entries.push_back({{"word", w}, {"synonyms", e->synonyms}, {"radius", e->radius.values()}});
  }
  return {{"version", kSynonymCacheVersion},
          {"dim", t.dim()},
          {"k", t.k()},
          {"d_e", t.max_distance()},
          {"entries", std::move(entries)}};
}

inline SynonymTable synonyms_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != kSynonymCacheVersion)
      fail(ErrorKind::Data, "synonym cache: unsupported version");
    SynonymTable t(j.at("dim").get<std::size_t>(), j.at("k").get<std::size_t>(),
                   j.at("d_e").get<double>());
    for (const auto& e : j.at("entries")) {
      t.set(e.at("word").get<std::string>(),
            {e.at("synonyms").get<std::vector<std::string>>(),
             Vector(e.at("radius").get<std::vector<double>>())});
    }
    return t;
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::Data, std::string("synonym cache: ") + ex.what());
  }
}

inline void save_synonyms(const SynonymTable& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Data, "cannot write synonym cache '" + path + "'");
  out << to_json(t).dump() << '\n';
}

inline SynonymTable load_synonyms(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Data, "cannot open synonym cache '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::Data, "synonym cache '" + path + "': " + ex.what());
  }
  return synonyms_from_json(j);
}

}  // namespace gbmcert
