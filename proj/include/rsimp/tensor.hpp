#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace rsimp {

/// Dense row-major tensor. The model math works on rank-2 tensors; rank-1
/// is used for biases and layer-norm parameters.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int64_t> shape) : shape_(std::move(shape)) {
    int64_t n = 1;
    for (int64_t d : shape_) n *= d;
    data_.assign(static_cast<size_t>(n), T{0});
  }
  static Tensor zeros(std::vector<int64_t> shape) { return Tensor(std::move(shape)); }

  const std::vector<int64_t>& shape() const { return shape_; }
  int64_t rank() const { return static_cast<int64_t>(shape_.size()); }
  int64_t dim(size_t i) const { return shape_[i]; }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& raw() { return data_; }
  const std::vector<T>& raw() const { return data_; }

  int64_t rows() const { return shape_[0]; }
  int64_t cols() const { return rank() == 2 ? shape_[1] : 1; }

  T& operator()(int64_t i, int64_t j) {
    return data_[static_cast<size_t>(i * cols() + j)];
  }
  T operator()(int64_t i, int64_t j) const {
    return data_[static_cast<size_t>(i * cols() + j)];
  }
  T& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  T operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  void add_(const Tensor& other) {
    assert(same_shape(other));
    for (size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  }

 private:
  std::vector<int64_t> shape_;
  std::vector<T> data_;
};

template <typename T>
using ParamMap = std::map<std::string, Tensor<T>>;

// ---------------------------------------------------------------------------
// rank-2 kernels (single-threaded, fixed reduction order)

/// C = A(m×k) * B(k×n)
template <typename T>
Tensor<T> matmul(const Tensor<T>& A, const Tensor<T>& B) {
  const int64_t m = A.rows(), k = A.cols(), n = B.cols();
  assert(B.rows() == k);
  Tensor<T> C({m, n});
  const T* a = A.data();
  const T* b = B.data();
  T* c = C.data();
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t p = 0; p < k; ++p) {
      const T aip = a[i * k + p];
      if (aip == T{0}) continue;
      const T* brow = b + p * n;
      T* crow = c + i * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
  return C;
}

/// C = A(m×k) * B(n×k)^T
template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& A, const Tensor<T>& B) {
  const int64_t m = A.rows(), k = A.cols(), n = B.rows();
  assert(B.cols() == k);
  Tensor<T> C({m, n});
  for (int64_t i = 0; i < m; ++i) {
    const T* arow = A.data() + i * k;
    for (int64_t j = 0; j < n; ++j) {
      const T* brow = B.data() + j * k;
      T acc{0};
      for (int64_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      C(i, j) = acc;
    }
  }
  return C;
}

/// C = A(k×m)^T * B(k×n)
template <typename T>
Tensor<T> matmul_tn(const Tensor<T>& A, const Tensor<T>& B) {
  const int64_t k = A.rows(), m = A.cols(), n = B.cols();
  assert(B.rows() == k);
  Tensor<T> C({m, n});
  T* c = C.data();
  for (int64_t p = 0; p < k; ++p) {
    const T* arow = A.data() + p * m;
    const T* brow = B.data() + p * n;
    for (int64_t i = 0; i < m; ++i) {
      const T aip = arow[i];
      if (aip == T{0}) continue;
      T* crow = c + i * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
  return C;
}

template <typename T>
void add_bias_rows(Tensor<T>& M, const Tensor<T>& bias) {
  assert(bias.numel() == M.cols());
  for (int64_t i = 0; i < M.rows(); ++i)
    for (int64_t j = 0; j < M.cols(); ++j) M(i, j) += bias[j];
}

template <typename T>
void accumulate_colsum(const Tensor<T>& M, Tensor<T>& bias_grad) {
  assert(bias_grad.numel() == M.cols());
  for (int64_t i = 0; i < M.rows(); ++i)
    for (int64_t j = 0; j < M.cols(); ++j) bias_grad[j] += M(i, j);
}

/// Row-wise softmax where only positions with allow(i, j) true participate;
/// disallowed entries are exactly zero. Every row must allow something.
template <typename T, typename F>
Tensor<T> masked_softmax_rows(const Tensor<T>& S, F&& allow) {
  Tensor<T> P({S.rows(), S.cols()});
  for (int64_t i = 0; i < S.rows(); ++i) {
    T max_val = T{0};
    bool any = false;
    for (int64_t j = 0; j < S.cols(); ++j) {
      if (!allow(i, j)) continue;
      if (!any || S(i, j) > max_val) max_val = S(i, j);
      any = true;
    }
    assert(any && "softmax row fully masked");
    T sum{0};
    for (int64_t j = 0; j < S.cols(); ++j) {
      if (!allow(i, j)) continue;
      const T e = std::exp(S(i, j) - max_val);
      P(i, j) = e;
      sum += e;
    }
    for (int64_t j = 0; j < S.cols(); ++j)
      if (allow(i, j)) P(i, j) /= sum;
  }
  return P;
}

/// dS for P = softmax(S): (dP - rowdot(dP, P)) ⊙ P.
/// Masked entries have P = 0, hence dS = 0 there.
template <typename T>
Tensor<T> softmax_backward_rows(const Tensor<T>& P, const Tensor<T>& dP) {
  Tensor<T> dS({P.rows(), P.cols()});
  for (int64_t i = 0; i < P.rows(); ++i) {
    T dot{0};
    for (int64_t j = 0; j < P.cols(); ++j) dot += dP(i, j) * P(i, j);
    for (int64_t j = 0; j < P.cols(); ++j)
      dS(i, j) = (dP(i, j) - dot) * P(i, j);
  }
  return dS;
}

constexpr double kLayerNormEps = 1e-5;

template <typename T>
struct LayerNormCache {
  Tensor<T> xhat;
  std::vector<T> inv_std;
};

/// y = g ⊙ (x - mean)/sqrt(var + eps) + b, per row over the feature axis.
template <typename T>
Tensor<T> layer_norm_forward(const Tensor<T>& x, const Tensor<T>& gain,
                             const Tensor<T>& bias, LayerNormCache<T>& cache) {
  const int64_t rows = x.rows(), cols = x.cols();
  Tensor<T> y({rows, cols});
  cache.xhat = Tensor<T>({rows, cols});
  cache.inv_std.assign(static_cast<size_t>(rows), T{0});
  for (int64_t i = 0; i < rows; ++i) {
    T mean{0};
    for (int64_t j = 0; j < cols; ++j) mean += x(i, j);
    mean /= static_cast<T>(cols);
    T var{0};
    for (int64_t j = 0; j < cols; ++j) {
      const T d = x(i, j) - mean;
      var += d * d;
    }
    var /= static_cast<T>(cols);
    const T inv = T{1} / std::sqrt(var + static_cast<T>(kLayerNormEps));
    cache.inv_std[static_cast<size_t>(i)] = inv;
    for (int64_t j = 0; j < cols; ++j) {
      const T xh = (x(i, j) - mean) * inv;
      cache.xhat(i, j) = xh;
      y(i, j) = gain[j] * xh + bias[j];
    }
  }
  return y;
}

template <typename T>
Tensor<T> layer_norm_backward(const Tensor<T>& dy, const Tensor<T>& gain,
                              const LayerNormCache<T>& cache,
                              Tensor<T>& dgain, Tensor<T>& dbias) {
  const int64_t rows = dy.rows(), cols = dy.cols();
  Tensor<T> dx({rows, cols});
  for (int64_t i = 0; i < rows; ++i) {
    T mean_dxhat{0}, mean_dxhat_xhat{0};
    for (int64_t j = 0; j < cols; ++j) {
      const T dxh = dy(i, j) * gain[j];
      mean_dxhat += dxh;
      mean_dxhat_xhat += dxh * cache.xhat(i, j);
      dgain[j] += dy(i, j) * cache.xhat(i, j);
      dbias[j] += dy(i, j);
    }
    mean_dxhat /= static_cast<T>(cols);
    mean_dxhat_xhat /= static_cast<T>(cols);
    const T inv = cache.inv_std[static_cast<size_t>(i)];
    for (int64_t j = 0; j < cols; ++j) {
      const T dxh = dy(i, j) * gain[j];
      dx(i, j) = inv * (dxh - mean_dxhat - cache.xhat(i, j) * mean_dxhat_xhat);
    }
  }
  return dx;
}

}  // namespace rsimp
