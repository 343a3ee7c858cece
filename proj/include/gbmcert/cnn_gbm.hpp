#pragma once

// TextCNN layer: for each kernel width k, d filters slide over the word
// sequence (valid convolution), pass through ReLU or tanh and are max-pooled
// over time; the pooled vectors of all widths are concatenated.
//
// Both activations are 1-Lipschitz and max-pooling selects one window, so
// |dF_i/dx_j| is at most the largest |weight| that ever multiplies input
// coordinate j in filter i.  The GBM takes that maximum over every window
// alignment that actually covers the input position.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gbmcert/core/error.hpp"
#include "gbmcert/core/matrix.hpp"
#include "gbmcert/core/scalar.hpp"
#include "gbmcert/gbm.hpp"

namespace gbmcert {

enum class ConvActivation { Relu, Tanh };

// 1-based block index: alpha(i, a, d) = floor((i - a) / d) + 1.
inline std::size_t index_alpha(std::size_t i, std::size_t a, std::size_t d) {
  if (i < a) fail(ErrorKind::Domain, "index_alpha: i < a");
  if (d == 0) fail(ErrorKind::Domain, "index_alpha: d must be >= 1");
  return (i - a) / d + 1;
}

// 1-based offset within a block: beta(i, a, d) = 1 + ((i - a) mod d).
inline std::size_t index_beta(std::size_t i, std::size_t a, std::size_t d) {
  if (i < a) fail(ErrorKind::Domain, "index_beta: i < a");
  if (d == 0) fail(ErrorKind::Domain, "index_beta: d must be >= 1");
  return 1 + (i - a) % d;
}

template <class T>
struct ConvKernel {
  std::size_t width = 0;
  BasicMatrix<T> weights;  // filters x (d0 * width), column = coord * width + offset
  BasicVector<T> bias;     // filters

  const T& w(std::size_t filter, std::size_t coord, std::size_t offset) const {
    return weights(filter, coord * width + offset);
  }
  T& w(std::size_t filter, std::size_t coord, std::size_t offset) {
    return weights(filter, coord * width + offset);
  }
};

template <class T>
struct CnnParams {
  std::vector<ConvKernel<T>> kernels;  // in concatenation order
  std::size_t filters = 0;
  std::size_t input_size = 0;
  ConvActivation activation = ConvActivation::Relu;

  static CnnParams zeros(std::vector<std::size_t> kernel_sizes, std::size_t filters,
                         std::size_t input_size) {
    CnnParams p;
    p.filters = filters;
    p.input_size = input_size;
    for (std::size_t k : kernel_sizes) {
      p.kernels.push_back(
          {k, BasicMatrix<T>(filters, input_size * k), BasicVector<T>(filters)});
    }
    p.validate();
    return p;
  }

  std::size_t max_width() const {
    std::size_t m = 0;
    for (const auto& k : kernels) m = std::max(m, k.width);
    return m;
  }
  std::size_t output_size() const { return kernels.size() * filters; }

  void validate() const {
    require_dims(!kernels.empty(), "cnn: at least one kernel size is required");
    for (const auto& k : kernels) {
      if (k.width < 2) fail(ErrorKind::Domain, "cnn: kernel sizes must be >= 2");
      require_dims(k.weights.rows() == filters && k.weights.cols() == input_size * k.width,
                   "cnn: kernel weight shape mismatch");
      require_dims(k.bias.size() == filters, "cnn: kernel bias length mismatch");
    }
  }

  template <class Fn>
  void visit(const std::string& prefix, Fn&& fn) {
    for (auto& k : kernels) {
      const std::string base = prefix + "k" + std::to_string(k.width);
      fn(base + ".w", k.weights.span());
      fn(base + ".b", k.bias.span());
    }
  }
};

template <class T>
T conv_activation(ConvActivation a, const T& x) {
  if (a == ConvActivation::Tanh) return tanh(x);
  return max_first(x, T{0.0});
}

template <class T>
BasicVector<T> cnn_forward(const CnnParams<T>& p, std::span<const BasicVector<T>> words) {
  p.validate();
  const std::size_t n = words.size();
  if (n < p.max_width())
    fail(ErrorKind::Domain, "cnn_forward: sequence of " + std::to_string(n) +
                                " words is shorter than the widest kernel");
  for (const auto& w : words)
    require_dims(w.size() == p.input_size, "cnn_forward: word vector length mismatch");

  BasicVector<T> out(p.output_size());
  std::vector<T> window;
  for (std::size_t kp = 0; kp < p.kernels.size(); ++kp) {
    const auto& ker = p.kernels[kp];
    const std::size_t positions = n - ker.width + 1;
    std::vector<T> pooled(p.filters);
    window.assign(p.input_size * ker.width, T{});
    for (std::size_t t = 0; t < positions; ++t) {
      for (std::size_t c = 0; c < p.input_size; ++c)
        for (std::size_t l = 0; l < ker.width; ++l) window[c * ker.width + l] = words[t + l][c];
      for (std::size_t f = 0; f < p.filters; ++f) {
        const T act = conv_activation(
            p.activation, dot(ker.weights.row(f), std::span<const T>(window)) + ker.bias[f]);
        pooled[f] = t == 0 ? act : max_first(pooled[f], act);
      }
    }
    for (std::size_t f = 0; f < p.filters; ++f) out[kp * p.filters + f] = pooled[f];
  }
  return out;
}

template <class T>
BasicGbm<T> gbm_cnn(const CnnParams<T>& p, std::size_t n_words) {
  p.validate();
  if (n_words < p.max_width())
    fail(ErrorKind::Domain, "gbm_cnn: n_words is smaller than the widest kernel");
  const std::size_t d = p.filters;
  const std::size_t d0 = p.input_size;
  BasicGbm<T> out;
  out.m = BasicMatrix<T>(p.output_size(), n_words * d0);
  out.blocks.reserve(n_words);
  for (std::size_t pos = 0; pos < n_words; ++pos)
    out.blocks.push_back({"word" + std::to_string(pos), pos * d0, d0});

  for (std::size_t i = 1; i <= p.output_size(); ++i) {
    const auto& ker = p.kernels[index_alpha(i, 1, d) - 1];
    const std::size_t filter = index_beta(i, 1, d) - 1;
    const std::size_t k = ker.width;
    std::vector<T> mag(d0 * k);
    for (std::size_t c = 0; c < d0; ++c)
      for (std::size_t l = 0; l < k; ++l) mag[c * k + l] = magnitude(ker.w(filter, c, l));

    for (std::size_t j = 1; j <= n_words * d0; ++j) {
      const std::size_t pos = index_alpha(j, 1, d0) - 1;
      const std::size_t coord = index_beta(j, 1, d0) - 1;
      // Window start s = pos - l must lie in [0, n_words - k].
      const std::size_t l_min = pos + k > n_words ? pos + k - n_words : 0;
      const std::size_t l_max = std::min(k - 1, pos);
      T best = mag[coord * k + l_min];
      for (std::size_t l = l_min + 1; l <= l_max; ++l) best = max_first(best, mag[coord * k + l]);
      out.m(i - 1, j - 1) = best;
    }
  }
  return out;
}

}  // namespace gbmcert
