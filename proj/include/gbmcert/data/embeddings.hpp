#pragma once

// Word embedding tables in GloVe text format: one token followed by d0
// whitespace-separated floats per line.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gbmcert/core/error.hpp"
#include "gbmcert/core/matrix.hpp"

namespace gbmcert {

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return words_.size(); }
  const std::vector<std::string>& words() const noexcept { return words_; }

  // Returns false (and keeps the existing row) when the word is present.
  bool add(const std::string& word, std::span<const double> vec) {
    require_dims(vec.size() == dim_, "embeddings: vector for '" + word + "' has length " +
                                         std::to_string(vec.size()) + ", expected " +
                                         std::to_string(dim_));
    if (index_.count(word) != 0) return false;
    index_.emplace(word, words_.size());
    words_.push_back(word);
    data_.insert(data_.end(), vec.begin(), vec.end());
    return true;
  }

  const std::size_t* find(const std::string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? nullptr : &it->second;
  }
  bool contains(const std::string& word) const { return index_.count(word) != 0; }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }

  // Zero vector for unknown words.
  Vector vector_of(const std::string& word) const {
    Vector out(dim_);
    if (const std::size_t* i = find(word)) {
      auto r = row(*i);
      std::copy(r.begin(), r.end(), out.begin());
    }
    return out;
  }

  Matrix matrix() const { return Matrix(size(), dim_, data_); }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> data_;
};

struct EmbeddingLoad {
  EmbeddingTable table;
  std::size_t duplicate_warnings = 0;
};

inline std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline double parse_double(std::string_view s, const std::string& where) {
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(x))
    fail(ErrorKind::Data, where + ": cannot parse '" + std::string(s) + "' as a number");
  return x;
}

// Streams the file line by line.  The first line fixes the dimension; a
// repeated word keeps its first vector and counts one warning.
inline EmbeddingLoad load_embeddings(std::istream& in, const std::string& name = "embeddings") {
  EmbeddingLoad out;
  std::string line;
  std::vector<double> vec;
  std::size_t line_no = 0;
  bool sized = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    const std::string where = name + ":" + std::to_string(line_no);
    if (fields.size() < 2) fail(ErrorKind::Data, where + ": expected a word and a vector");
    if (!sized) {
      out.table = EmbeddingTable(fields.size() - 1);
      sized = true;
    }
    if (fields.size() - 1 != out.table.dim())
      fail(ErrorKind::Data, where + ": expected " + std::to_string(out.table.dim()) +
                                " values, found " + std::to_string(fields.size() - 1));
    vec.resize(fields.size() - 1);
    for (std::size_t k = 1; k < fields.size(); ++k) vec[k - 1] = parse_double(fields[k], where);
    if (!out.table.add(std::string(fields[0]), vec)) ++out.duplicate_warnings;
  }
  if (!sized) fail(ErrorKind::Data, name + ": no embedding rows");
  return out;
}

inline EmbeddingLoad load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Data, "cannot open embedding file '" + path + "'");
  return load_embeddings(in, path);
}

inline void write_embeddings(std::ostream& out, const EmbeddingTable& t) {
  char buf[32];
  for (std::size_t i = 0; i < t.size(); ++i) {
    out << t.words()[i];
    for (double x : t.row(i)) {
      const auto res = std::to_chars(buf, buf + sizeof buf, x);
      out << ' ' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
}

}  // namespace gbmcert
