#pragma once

// The perturbed input space of a sentence: every sentence obtained by keeping
// each word or replacing it with one of its synonyms.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "gbmcert/core/error.hpp"
#include "gbmcert/data/synonyms.hpp"

namespace gbmcert::oracle {

// Per position: the original word first, then its synonyms.
inline std::vector<std::vector<std::string>> substitution_options(
    const std::vector<std::string>& sentence, const SynonymTable& syn) {
  std::vector<std::vector<std::string>> opts;
  for (const auto& w : sentence) {
    std::vector<std::string> o{w};
    if (const SynonymEntry* e = syn.find(w))
      o.insert(o.end(), e->synonyms.begin(), e->synonyms.end());
    opts.push_back(std::move(o));
  }
  return opts;
}

// prod_t (|S(w_t)| + 1), saturating at the maximum of uint64.
inline std::uint64_t substitution_count(const std::vector<std::vector<std::string>>& opts) {
  std::uint64_t n = 1;
  for (const auto& o : opts) {
    if (n > std::numeric_limits<std::uint64_t>::max() / o.size())
      return std::numeric_limits<std::uint64_t>::max();
    n *= o.size();
  }
  return n;
}

// Odometer over all substitutions; the original sentence comes first.
class SubstitutionEnumerator {
 public:
  SubstitutionEnumerator(std::vector<std::vector<std::string>> opts, std::uint64_t cap)
      : opts_(std::move(opts)), digits_(opts_.size(), 0) {
    count_ = substitution_count(opts_);
    if (count_ > cap)
      fail(ErrorKind::Domain, "enumerate_substitutions: " + std::to_string(count_) +
                                  " substitutions exceed the cap of " + std::to_string(cap));
  }

  std::uint64_t count() const noexcept { return count_; }

  bool next(std::vector<std::string>& out) {
    if (done_) return false;
    out.resize(opts_.size());
    for (std::size_t t = 0; t < opts_.size(); ++t) out[t] = opts_[t][digits_[t]];
    std::size_t t = 0;
    for (; t < digits_.size(); ++t) {
      if (++digits_[t] < opts_[t].size()) break;
      digits_[t] = 0;
    }
    done_ = t == digits_.size();
    return true;
  }

 private:
  std::vector<std::vector<std::string>> opts_;
  std::vector<std::size_t> digits_;
  std::uint64_t count_ = 0;
  bool done_ = false;
};

inline SubstitutionEnumerator enumerate_substitutions(const std::vector<std::string>& sentence,
                                                      const SynonymTable& syn,
                                                      std::uint64_t cap) {
  return {substitution_options(sentence, syn), cap};
}

// Uniform draw from the perturbed input space: independent uniform choices
// per position give the uniform distribution over the product set.
template <class Rng>
std::vector<std::string> sample_substitution(const std::vector<std::vector<std::string>>& opts,
                                             Rng& rng) {
  std::vector<std::string> out;
  out.reserve(opts.size());
  for (const auto& o : opts) {
    std::uniform_int_distribution<std::size_t> pick(0, o.size() - 1);
    out.push_back(o[pick(rng)]);
  }
  return out;
}

}  // namespace gbmcert::oracle
