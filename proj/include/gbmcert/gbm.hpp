#pragma once

#include <string>
#include <vector>

#include "gbmcert/core/error.hpp"
#include "gbmcert/core/matrix.hpp"

namespace gbmcert {

// A named range of GBM columns (e.g. the input, hidden and cell blocks of an
// LSTM cell).
struct GbmBlock {
  std::string tag;
  std::size_t begin = 0;
  std::size_t width = 0;

  friend bool operator==(const GbmBlock&, const GbmBlock&) = default;
};

// Growth bound matrix: entry (i, j) bounds |d F_i / d x_j| over a domain.
template <class T>
struct BasicGbm {
  BasicMatrix<T> m;
  std::vector<GbmBlock> blocks;

  std::size_t rows() const { return m.rows(); }
  std::size_t cols() const { return m.cols(); }

  T total() const { return sum(m.span()); }

  const GbmBlock& block(const std::string& tag) const {
    for (const auto& b : blocks)
      if (b.tag == tag) return b;
    fail(ErrorKind::Usage, "gbm: no column block tagged '" + tag + "'");
  }

  std::string tag_of_column(std::size_t col) const {
    for (const auto& b : blocks)
      if (col >= b.begin && col < b.begin + b.width) return b.tag;
    return {};
  }

  void validate() const {
    std::size_t covered = 0;
    for (const auto& b : blocks) covered += b.width;
    require_dims(covered == m.cols(), "gbm: block widths do not sum to column count");
    for (const auto& x : m.span()) {
      if (value_of(x) < 0.0) fail(ErrorKind::Numeric, "gbm: negative entry");
    }
  }
};

using Gbm = BasicGbm<double>;

template <class T>
Gbm values_of(const BasicGbm<T>& g) {
  return {values_of(g.m), g.blocks};
}

// Block-diagonal stacking with blocks renamed by prefix (used for the
// forward and backward cells of a bidirectional model).
template <class T>
BasicGbm<T> block_diagonal(const BasicGbm<T>& top, const std::string& top_prefix,
                                  const BasicGbm<T>& bottom, const std::string& bottom_prefix) {
  BasicGbm<T> out;
  out.m = BasicMatrix<T>(top.rows() + bottom.rows(), top.cols() + bottom.cols());
  for (std::size_t r = 0; r < top.rows(); ++r)
    for (std::size_t c = 0; c < top.cols(); ++c) out.m(r, c) = top.m(r, c);
  for (std::size_t r = 0; r < bottom.rows(); ++r)
    for (std::size_t c = 0; c < bottom.cols(); ++c)
      out.m(top.rows() + r, top.cols() + c) = bottom.m(r, c);
  for (const auto& b : top.blocks) out.blocks.push_back({top_prefix + b.tag, b.begin, b.width});
  for (const auto& b : bottom.blocks)
    out.blocks.push_back({bottom_prefix + b.tag, top.cols() + b.begin, b.width});
  return out;
}

}  // namespace gbmcert
