#pragma once

// Labelled text: header-less "label<TAB>text" (tsv) or "label,text" (csv,
// text optionally double-quoted) rows.

#include <cctype>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "gbmcert/core/error.hpp"
#include "gbmcert/data/embeddings.hpp"
#include "gbmcert/data/synonyms.hpp"

namespace gbmcert {

struct TextExample {
  std::vector<std::string> tokens;
  std::size_t label = 0;
};

struct TextDataset {
  std::vector<TextExample> examples;
  std::size_t num_classes = 2;
  std::string split;
};

enum class DatasetFormat { Tsv, Csv };

inline DatasetFormat dataset_format_from_string(const std::string& s) {
  if (s == "tsv") return DatasetFormat::Tsv;
  if (s == "csv") return DatasetFormat::Csv;
  fail(ErrorKind::Usage, "unknown dataset format '" + s + "' (expected tsv or csv)");
}

// Lowercase, drop ASCII punctuation, split on whitespace.
inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char ch : text) {
    if (std::isspace(ch)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else if (!std::ispunct(ch)) {
      cur.push_back(static_cast<char>(std::tolower(ch)));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

inline std::size_t parse_label(const std::string& s, const std::string& where) {
  if (s.empty() || s.size() > 6) fail(ErrorKind::Data, where + ": bad label '" + s + "'");
  std::size_t v = 0;
  for (char ch : s) {
    if (ch < '0' || ch > '9') fail(ErrorKind::Data, where + ": bad label '" + s + "'");
    v = v * 10 + static_cast<std::size_t>(ch - '0');
  }
  return v;
}

inline TextDataset load_dataset(std::istream& in, DatasetFormat format, std::size_t max_length,
                                const std::string& name = "dataset") {
  if (max_length == 0) fail(ErrorKind::Usage, "max_length must be positive");
  TextDataset ds;
  ds.split = name;
  std::size_t max_label = 0;
  std::string line;
  std::size_t line_no = 0;
  const char sep = format == DatasetFormat::Tsv ? '\t' : ',';
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = name + ":" + std::to_string(line_no);
    const std::size_t cut = line.find(sep);
    if (cut == std::string::npos) fail(ErrorKind::Data, where + ": missing separator");
    std::string label = line.substr(0, cut);
    std::string text = line.substr(cut + 1);
    while (!label.empty() && std::isspace(static_cast<unsigned char>(label.back()))) label.pop_back();
    if (format == DatasetFormat::Csv && text.size() >= 2 && text.front() == '"' &&
        text.back() == '"') {
      std::string unq;
      for (std::size_t i = 1; i + 1 < text.size(); ++i) {
        if (text[i] == '"' && i + 2 < text.size() && text[i + 1] == '"') ++i;
        unq.push_back(text[i]);
      }
      text = std::move(unq);
    }
    TextExample ex;
    ex.label = parse_label(label, where);
    ex.tokens = tokenize(text);
    if (ex.tokens.empty()) fail(ErrorKind::Data, where + ": empty text");
    if (ex.tokens.size() > max_length) ex.tokens.resize(max_length);
    max_label = std::max(max_label, ex.label);
    ds.examples.push_back(std::move(ex));
  }
  if (ds.examples.empty()) fail(ErrorKind::Data, name + ": no examples");
  ds.num_classes = std::max<std::size_t>(2, max_label + 1);
  return ds;
}

inline TextDataset load_dataset(const std::string& path, DatasetFormat format,
                                std::size_t max_length) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Data, "cannot open dataset '" + path + "'");
  return load_dataset(in, format, max_length, path);
}

inline void write_dataset(std::ostream& out, const TextDataset& ds) {
  for (const auto& ex : ds.examples) {
    out << ex.label << '\t';
    for (std::size_t i = 0; i < ex.tokens.size(); ++i) out << (i ? " " : "") << ex.tokens[i];
    out << '\n';
  }
}

enum class OovPolicy { ZeroVector, Reject };

// Word vectors and per-position perturbation radii of one sentence.  Unknown
// words become zero vectors with zero radius, or are rejected.  Sequences
// are right-padded with zero vectors up to `min_length`.
struct EmbeddedSentence {
  std::vector<Vector> x;
  std::vector<Vector> radius;
};

inline EmbeddedSentence embed_sentence(const std::vector<std::string>& tokens,
                                       const EmbeddingTable& emb, const SynonymTable* syn,
                                       std::size_t min_length = 1,
                                       OovPolicy oov = OovPolicy::ZeroVector) {
  EmbeddedSentence out;
  for (const auto& t : tokens) {
    const bool known = emb.contains(t);
    if (!known && oov == OovPolicy::Reject)
      fail(ErrorKind::Data, "out-of-vocabulary token '" + t + "'");
    out.x.push_back(emb.vector_of(t));
    out.radius.push_back(known && syn ? syn->radius_of(t) : Vector(emb.dim()));
  }
  while (out.x.size() < min_length) {
    out.x.emplace_back(emb.dim());
    out.radius.emplace_back(emb.dim());
  }
  return out;
}

}  // namespace gbmcert
