#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "cbart/common.hpp"

namespace cbart {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A parameter or gradient tensor. Rank-1 tensors are stored as 1 x d
// matrices; the rank is kept for checkpointing.
template <typename T>
struct NamedTensor {
  std::string name;
  int rank = 2;
  Mat<T> value;
};

// Ordered collection of named tensors. Iteration order is creation order and
// is part of the determinism contract (init, optimizer, checkpoint).
template <typename T>
class ParamStore {
 public:
  NamedTensor<T>& add(const std::string& name, Eigen::Index rows, Eigen::Index cols, int rank) {
    if (index_.count(name) > 0) throw std::logic_error("duplicate tensor name: " + name);
    index_[name] = tensors_.size();
    tensors_.push_back(NamedTensor<T>{name, rank, Mat<T>::Zero(rows, cols)});
    return tensors_.back();
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  Mat<T>& operator[](const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::logic_error("unknown tensor: " + name);
    return tensors_[it->second].value;
  }
  const Mat<T>& operator[](const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::logic_error("unknown tensor: " + name);
    return tensors_[it->second].value;
  }

  std::vector<NamedTensor<T>>& tensors() { return tensors_; }
  const std::vector<NamedTensor<T>>& tensors() const { return tensors_; }
  std::size_t size() const { return tensors_.size(); }

  ParamStore<T> zeros_like() const {
    ParamStore<T> out;
    for (const auto& t : tensors_) out.add(t.name, t.value.rows(), t.value.cols(), t.rank);
    return out;
  }

  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& t : tensors_) {
      auto& nt = out.add(t.name, t.value.rows(), t.value.cols(), t.rank);
      nt.value = t.value.template cast<U>();
    }
    return out;
  }

 private:
  std::vector<NamedTensor<T>> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

namespace nn {

inline constexpr double kLayerNormEps = 1e-5;

template <typename T>
void softmax_rows_inplace(Mat<T>& x) {
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const T m = x.row(i).maxCoeff();
    x.row(i) = (x.row(i).array() - m).exp();
    const T s = x.row(i).sum();
    x.row(i) /= s;
  }
}

// d(softmax)/dx given probs p and upstream dp, row-wise.
template <typename T>
Mat<T> softmax_rows_backward(const Mat<T>& probs, const Mat<T>& dprobs) {
  Mat<T> dx(probs.rows(), probs.cols());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const T dot = probs.row(i).dot(dprobs.row(i));
    dx.row(i) = probs.row(i).array() * (dprobs.row(i).array() - dot);
  }
  return dx;
}

// ---------------------------------------------------------------------------
// LayerNorm
// ---------------------------------------------------------------------------

template <typename T>
struct LayerNormCache {
  Mat<T> xhat;               // n x d
  std::vector<T> rstd;       // per row
};

template <typename T>
Mat<T> layer_norm_forward(const Mat<T>& gain, const Mat<T>& bias, const Mat<T>& x,
                          LayerNormCache<T>& cache) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  cache.xhat.resize(n, d);
  cache.rstd.resize(static_cast<std::size_t>(n));
  Mat<T> y(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const T mean = x.row(i).mean();
    const T var = (x.row(i).array() - mean).square().sum() / static_cast<T>(d);
    const T rstd = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
    cache.rstd[static_cast<std::size_t>(i)] = rstd;
    cache.xhat.row(i) = (x.row(i).array() - mean) * rstd;
    y.row(i) = cache.xhat.row(i).cwiseProduct(gain.row(0)) + bias.row(0);
  }
  return y;
}

template <typename T>
Mat<T> layer_norm_backward(const Mat<T>& gain, const LayerNormCache<T>& cache, const Mat<T>& dy,
                           Mat<T>& dgain, Mat<T>& dbias) {
  const Eigen::Index n = dy.rows();
  const Eigen::Index d = dy.cols();
  Mat<T> dx(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    dgain.row(0) += dy.row(i).cwiseProduct(cache.xhat.row(i));
    dbias.row(0) += dy.row(i);
    const Eigen::Matrix<T, 1, Eigen::Dynamic> dxhat = dy.row(i).cwiseProduct(gain.row(0));
    const T mean_dxhat = dxhat.mean();
    const T mean_dxhat_xhat = dxhat.cwiseProduct(cache.xhat.row(i)).mean();
    dx.row(i) = cache.rstd[static_cast<std::size_t>(i)] *
                (dxhat.array() - mean_dxhat - cache.xhat.row(i).array() * mean_dxhat_xhat);
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Linear: y = x * W^T + b with W stored (out x in), b (1 x out)
// ---------------------------------------------------------------------------

template <typename T>
Mat<T> linear_forward(const Mat<T>& w, const Mat<T>& b, const Mat<T>& x) {
  Mat<T> y = x * w.transpose();
  y.rowwise() += b.row(0);
  return y;
}

template <typename T>
Mat<T> linear_backward(const Mat<T>& w, const Mat<T>& x, const Mat<T>& dy, Mat<T>& dw,
                       Mat<T>& db) {
  dw += dy.transpose() * x;
  db.row(0) += dy.colwise().sum();
  return dy * w;
}

// ---------------------------------------------------------------------------
// GELU (exact, erf form)
// ---------------------------------------------------------------------------

template <typename T>
Mat<T> gelu_forward(const Mat<T>& x) {
  return x.unaryExpr([](T v) {
    return T(0.5) * v * (T(1) + std::erf(v * T(0.7071067811865475)));
  });
}

template <typename T>
Mat<T> gelu_backward(const Mat<T>& x, const Mat<T>& dy) {
  Mat<T> dx = x.unaryExpr([](T v) {
    const T cdf = T(0.5) * (T(1) + std::erf(v * T(0.7071067811865475)));
    const T pdf = std::exp(T(-0.5) * v * v) * T(0.3989422804014327);
    return cdf + v * pdf;
  });
  return dx.cwiseProduct(dy);
}

// ---------------------------------------------------------------------------
// Dropout (inverted). Applied only when a generator is supplied.
// ---------------------------------------------------------------------------

template <typename T>
struct DropoutCache {
  Mat<T> scale;  // 0 or 1/(1-p) per element; empty when dropout was off
};

template <typename T>
Mat<T> dropout_forward(const Mat<T>& x, double p, Rng* rng, DropoutCache<T>& cache) {
  if (rng == nullptr || p <= 0.0) {
    cache.scale.resize(0, 0);
    return x;
  }
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  cache.scale.resize(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      cache.scale(i, j) = rng->uniform_real() < p ? T(0) : keep_scale;
    }
  }
  return x.cwiseProduct(cache.scale);
}

template <typename T>
Mat<T> dropout_backward(const DropoutCache<T>& cache, const Mat<T>& dy) {
  if (cache.scale.size() == 0) return dy;
  return dy.cwiseProduct(cache.scale);
}

// ---------------------------------------------------------------------------
// Multi-head attention
// ---------------------------------------------------------------------------

template <typename T>
struct AttentionParams {
  const Mat<T>*wq, *bq, *wk, *bk, *wv, *bv, *wo, *bo;
};

template <typename T>
struct AttentionGrads {
  Mat<T>*wq, *bq, *wk, *bk, *wv, *bv, *wo, *bo;
};

template <typename T>
struct AttentionCache {
  Mat<T> xq, xkv;             // inputs
  Mat<T> q, k, v;             // nq x d, nk x d, nk x d
  std::vector<Mat<T>> probs;  // per head, nq x nk
  Mat<T> ctx;                 // nq x d
};

template <typename T>
Mat<T> attention_forward(const AttentionParams<T>& p, int n_head, const Mat<T>& xq,
                         const Mat<T>& xkv, bool causal, AttentionCache<T>& cache) {
  const Eigen::Index d = xq.cols();
  const Eigen::Index dh = d / n_head;
  const Eigen::Index nq = xq.rows();
  const Eigen::Index nk = xkv.rows();
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  const T neg_inf = -std::numeric_limits<T>::infinity();

  cache.xq = xq;
  cache.xkv = xkv;
  cache.q = linear_forward(*p.wq, *p.bq, xq);
  cache.k = linear_forward(*p.wk, *p.bk, xkv);
  cache.v = linear_forward(*p.wv, *p.bv, xkv);
  cache.probs.assign(static_cast<std::size_t>(n_head), Mat<T>());
  cache.ctx.resize(nq, d);

  for (int h = 0; h < n_head; ++h) {
    const auto qh = cache.q.middleCols(h * dh, dh);
    const auto kh = cache.k.middleCols(h * dh, dh);
    const auto vh = cache.v.middleCols(h * dh, dh);
    Mat<T> scores = (qh * kh.transpose()) * scale;
    if (causal) {
      for (Eigen::Index i = 0; i < nq; ++i) {
        for (Eigen::Index j = i + 1; j < nk; ++j) scores(i, j) = neg_inf;
      }
    }
    softmax_rows_inplace(scores);
    cache.probs[static_cast<std::size_t>(h)] = scores;
    cache.ctx.middleCols(h * dh, dh) = scores * vh;
  }
  return linear_forward(*p.wo, *p.bo, cache.ctx);
}

// Returns dxq; dxkv is accumulated into *dxkv_acc (self-attention callers pass
// the same buffer twice by summing the returned value themselves).
template <typename T>
Mat<T> attention_backward(const AttentionParams<T>& p, const AttentionGrads<T>& g, int n_head,
                          const AttentionCache<T>& cache, const Mat<T>& dout, Mat<T>& dxkv_acc) {
  const Eigen::Index d = cache.xq.cols();
  const Eigen::Index dh = d / n_head;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));

  Mat<T> dctx = linear_backward(*p.wo, cache.ctx, dout, *g.wo, *g.bo);
  Mat<T> dq = Mat<T>::Zero(cache.q.rows(), d);
  Mat<T> dk = Mat<T>::Zero(cache.k.rows(), d);
  Mat<T> dv = Mat<T>::Zero(cache.v.rows(), d);

  for (int h = 0; h < n_head; ++h) {
    const auto qh = cache.q.middleCols(h * dh, dh);
    const auto kh = cache.k.middleCols(h * dh, dh);
    const auto vh = cache.v.middleCols(h * dh, dh);
    const Mat<T>& probs = cache.probs[static_cast<std::size_t>(h)];
    const auto dctx_h = dctx.middleCols(h * dh, dh);

    Mat<T> dprobs = dctx_h * vh.transpose();
    dv.middleCols(h * dh, dh) = probs.transpose() * dctx_h;
    Mat<T> dscores = softmax_rows_backward(probs, dprobs);
    dq.middleCols(h * dh, dh) = (dscores * kh) * scale;
    dk.middleCols(h * dh, dh) = (dscores.transpose() * qh) * scale;
  }

  Mat<T> dxq = linear_backward(*p.wq, cache.xq, dq, *g.wq, *g.bq);
  dxkv_acc += linear_backward(*p.wk, cache.xkv, dk, *g.wk, *g.bk);
  dxkv_acc += linear_backward(*p.wv, cache.xkv, dv, *g.wv, *g.bv);
  return dxq;
}

// ---------------------------------------------------------------------------
// Feed-forward block: linear -> GELU -> linear
// ---------------------------------------------------------------------------

template <typename T>
struct FfnCache {
  Mat<T> x;
  Mat<T> pre;  // n x d_ff, pre-activation
  Mat<T> act;  // n x d_ff
};

template <typename T>
Mat<T> ffn_forward(const Mat<T>& w1, const Mat<T>& b1, const Mat<T>& w2, const Mat<T>& b2,
                   const Mat<T>& x, FfnCache<T>& cache) {
  cache.x = x;
  cache.pre = linear_forward(w1, b1, x);
  cache.act = gelu_forward(cache.pre);
  return linear_forward(w2, b2, cache.act);
}

template <typename T>
Mat<T> ffn_backward(const Mat<T>& w1, const Mat<T>& w2, const FfnCache<T>& cache, const Mat<T>& dy,
                    Mat<T>& dw1, Mat<T>& db1, Mat<T>& dw2, Mat<T>& db2) {
  Mat<T> dact = linear_backward(w2, cache.act, dy, dw2, db2);
  Mat<T> dpre = gelu_backward(cache.pre, dact);
  return linear_backward(w1, cache.x, dpre, dw1, db1);
}

}  // namespace nn
}  // namespace cbart
