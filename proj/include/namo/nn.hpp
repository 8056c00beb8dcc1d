// Copyright 2025 The namopush Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NAMOPUSH_NN_HPP_
#define NAMOPUSH_NN_HPP_

#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "namo/math.hpp"
#include "namo/rng.hpp"

namespace namo {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// View into one named parameter block (weights + gradient accumulator).
// Compute runs in double; checkpoints quantize to 32-bit floats.
struct ParamRef {
  std::string name;
  double* w = nullptr;
  double* g = nullptr;
  std::ptrdiff_t n = 0;
};

class ParamOwner {
 public:
  virtual ~ParamOwner() = default;
  virtual void collect(std::vector<ParamRef>& out) = 0;

  void zero_grad() {
    std::vector<ParamRef> ps;
    collect(ps);
    for (auto& p : ps) std::memset(p.g, 0, sizeof(double) * p.n);
  }
  std::ptrdiff_t param_count() {
    std::vector<ParamRef> ps;
    collect(ps);
    std::ptrdiff_t n = 0;
    for (auto& p : ps) n += p.n;
    return n;
  }
  // Rounds every weight through float32 so serialized and in-memory values
  // agree bit-for-bit after a save/load round trip.
  void quantize_weights() {
    std::vector<ParamRef> ps;
    collect(ps);
    for (auto& p : ps)
      for (std::ptrdiff_t i = 0; i < p.n; ++i)
        p.w[i] = static_cast<double>(static_cast<float>(p.w[i]));
  }
};

// Fully connected layer, y = W x + b. Caches the last input for backward.
class Dense : public ParamOwner {
 public:
  Dense() = default;
  Dense(int in, int out, Rng& rng, const std::string& name = "dense")
      : name_(name), w_(out, in), b_(VecX::Zero(out)), dw_(MatX::Zero(out, in)),
        db_(VecX::Zero(out)) {
    // scaled-uniform init suited to tanh hidden layers
    const double s = std::sqrt(6.0 / (in + out));
    for (int i = 0; i < w_.size(); ++i) w_.data()[i] = rng.uniform(-s, s);
  }

  int in_dim() const { return static_cast<int>(w_.cols()); }
  int out_dim() const { return static_cast<int>(w_.rows()); }
  MatX& weight() { return w_; }
  VecX& bias() { return b_; }

  VecX forward(const VecX& x) {
    if (x.size() != w_.cols()) throw std::invalid_argument(name_ + ": bad input dim");
    x_ = x;
    return w_ * x + b_;
  }
  // dy -> dx; accumulates parameter gradients.
  VecX backward(const VecX& dy) {
    dw_.noalias() += dy * x_.transpose();
    db_ += dy;
    return w_.transpose() * dy;
  }

  void collect(std::vector<ParamRef>& out) override {
    out.push_back({name_ + ".w", w_.data(), dw_.data(), w_.size()});
    out.push_back({name_ + ".b", b_.data(), db_.data(), b_.size()});
  }

 private:
  std::string name_;
  MatX w_, dw_;
  VecX b_, db_;
  VecX x_;
};

// Tanh MLP: hidden layers with tanh, linear output layer.
class Mlp : public ParamOwner {
 public:
  Mlp() = default;
  Mlp(const std::vector<int>& dims, Rng& rng, const std::string& name = "mlp") {
    for (std::size_t i = 0; i + 1 < dims.size(); ++i)
      layers_.emplace_back(dims[i], dims[i + 1], rng,
                           name + ".l" + std::to_string(i));
  }

  int in_dim() const { return layers_.front().in_dim(); }
  int out_dim() const { return layers_.back().out_dim(); }

  VecX forward(const VecX& x) {
    VecX h = x;
    acts_.clear();
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      h = layers_[i].forward(h);
      if (i + 1 < layers_.size()) {
        h = h.array().tanh();
        acts_.push_back(h);
      }
    }
    return h;
  }
  VecX backward(const VecX& dy) {
    VecX d = dy;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      d = layers_[i].backward(d);
      if (i > 0) d = d.array() * (1.0 - acts_[i - 1].array().square());
    }
    return d;
  }

  void collect(std::vector<ParamRef>& out) override {
    for (auto& l : layers_) l.collect(out);
  }

 private:
  std::vector<Dense> layers_;
  std::vector<VecX> acts_;
};

// LSTM cell (hidden H over input I). Stateless API: the caller keeps (h, c)
// and the per-step caches needed for truncated backprop through time.
class LstmCell : public ParamOwner {
 public:
  struct Cache {
    VecX x, h_prev, c_prev;
    VecX i, f, g, o, c, tanh_c, h;
  };

  LstmCell() = default;
  LstmCell(int in, int hidden, Rng& rng, const std::string& name = "lstm")
      : name_(name), in_(in), hidden_(hidden), w_(4 * hidden, in + hidden),
        b_(VecX::Zero(4 * hidden)), dw_(MatX::Zero(4 * hidden, in + hidden)),
        db_(VecX::Zero(4 * hidden)) {
    const double s = std::sqrt(6.0 / (in + 2 * hidden));
    for (int i = 0; i < w_.size(); ++i) w_.data()[i] = rng.uniform(-s, s);
    // forget-gate bias starts positive: standard stability trick
    b_.segment(hidden, hidden).setConstant(1.0);
  }

  int in_dim() const { return in_; }
  int hidden_dim() const { return hidden_; }

  Cache forward(const VecX& x, const VecX& h_prev, const VecX& c_prev) const {
    if (x.size() != in_) throw std::invalid_argument(name_ + ": bad input dim");
    Cache cc;
    cc.x = x;
    cc.h_prev = h_prev;
    cc.c_prev = c_prev;
    VecX xh(in_ + hidden_);
    xh << x, h_prev;
    const VecX z = w_ * xh + b_;
    auto sigm = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    cc.i = z.segment(0, hidden_).unaryExpr(sigm);
    cc.f = z.segment(hidden_, hidden_).unaryExpr(sigm);
    cc.g = z.segment(2 * hidden_, hidden_).array().tanh();
    cc.o = z.segment(3 * hidden_, hidden_).unaryExpr(sigm);
    cc.c = cc.f.cwiseProduct(c_prev) + cc.i.cwiseProduct(cc.g);
    cc.tanh_c = cc.c.array().tanh();
    cc.h = cc.o.cwiseProduct(cc.tanh_c);
    return cc;
  }

  // Given upstream dh, dc for this step, accumulates parameter grads and
  // returns (dx, dh_prev, dc_prev).
  void backward(const Cache& cc, const VecX& dh, const VecX& dc_in, VecX* dx,
                VecX* dh_prev, VecX* dc_prev) {
    const VecX dc = dc_in + dh.cwiseProduct(cc.o).cwiseProduct(
                                (1.0 - cc.tanh_c.array().square()).matrix());
    const VecX do_ = dh.cwiseProduct(cc.tanh_c);
    const VecX di = dc.cwiseProduct(cc.g);
    const VecX dg = dc.cwiseProduct(cc.i);
    const VecX df = dc.cwiseProduct(cc.c_prev);
    VecX dz(4 * hidden_);
    dz.segment(0, hidden_) =
        di.cwiseProduct(cc.i).cwiseProduct((1.0 - cc.i.array()).matrix());
    dz.segment(hidden_, hidden_) =
        df.cwiseProduct(cc.f).cwiseProduct((1.0 - cc.f.array()).matrix());
    dz.segment(2 * hidden_, hidden_) =
        dg.cwiseProduct((1.0 - cc.g.array().square()).matrix());
    dz.segment(3 * hidden_, hidden_) =
        do_.cwiseProduct(cc.o).cwiseProduct((1.0 - cc.o.array()).matrix());
    VecX xh(in_ + hidden_);
    xh << cc.x, cc.h_prev;
    dw_.noalias() += dz * xh.transpose();
    db_ += dz;
    const VecX dxh = w_.transpose() * dz;
    *dx = dxh.segment(0, in_);
    *dh_prev = dxh.segment(in_, hidden_);
    *dc_prev = dc.cwiseProduct(cc.f);
  }

  void collect(std::vector<ParamRef>& out) override {
    out.push_back({name_ + ".w", w_.data(), dw_.data(), w_.size()});
    out.push_back({name_ + ".b", b_.data(), db_.data(), b_.size()});
  }

 private:
  std::string name_;
  int in_ = 0, hidden_ = 0;
  MatX w_, dw_;
  VecX b_, db_;
};

// 3x3 stride-2 convolution with padding 1 (halves each spatial dimension).
// Buffers are CHW row-major flattened into VecX.
class Conv2d : public ParamOwner {
 public:
  static constexpr int kK = 3;
  static constexpr int kStride = 2;
  static constexpr int kPad = 1;

  Conv2d() = default;
  Conv2d(int c_in, int c_out, int h, int w, Rng& rng,
         const std::string& name = "conv")
      : name_(name), c_in_(c_in), c_out_(c_out), h_(h), w_(w),
        ho_((h + 2 * kPad - kK) / kStride + 1), wo_((w + 2 * kPad - kK) / kStride + 1),
        wgt_(VecX::Zero(c_out * c_in * kK * kK)), b_(VecX::Zero(c_out)),
        dwgt_(VecX::Zero(c_out * c_in * kK * kK)), db_(VecX::Zero(c_out)) {
    const double s = std::sqrt(6.0 / (c_in * kK * kK + c_out));
    for (int i = 0; i < wgt_.size(); ++i) wgt_[i] = rng.uniform(-s, s);
  }

  int in_size() const { return c_in_ * h_ * w_; }
  int out_size() const { return c_out_ * ho_ * wo_; }
  int out_h() const { return ho_; }
  int out_w() const { return wo_; }

  VecX forward(const VecX& x) {
    if (x.size() != in_size()) throw std::invalid_argument(name_ + ": bad input dim");
    x_ = x;
    VecX y(out_size());
    for (int co = 0; co < c_out_; ++co) {
      for (int oy = 0; oy < ho_; ++oy) {
        for (int ox = 0; ox < wo_; ++ox) {
          double acc = b_[co];
          for (int ci = 0; ci < c_in_; ++ci) {
            for (int ky = 0; ky < kK; ++ky) {
              const int iy = oy * kStride + ky - kPad;
              if (iy < 0 || iy >= h_) continue;
              for (int kx = 0; kx < kK; ++kx) {
                const int ix = ox * kStride + kx - kPad;
                if (ix < 0 || ix >= w_) continue;
                acc += wgt_[widx(co, ci, ky, kx)] * x[(ci * h_ + iy) * w_ + ix];
              }
            }
          }
          y[(co * ho_ + oy) * wo_ + ox] = acc;
        }
      }
    }
    return y;
  }

  VecX backward(const VecX& dy) {
    VecX dx = VecX::Zero(in_size());
    for (int co = 0; co < c_out_; ++co) {
      for (int oy = 0; oy < ho_; ++oy) {
        for (int ox = 0; ox < wo_; ++ox) {
          const double d = dy[(co * ho_ + oy) * wo_ + ox];
          db_[co] += d;
          for (int ci = 0; ci < c_in_; ++ci) {
            for (int ky = 0; ky < kK; ++ky) {
              const int iy = oy * kStride + ky - kPad;
              if (iy < 0 || iy >= h_) continue;
              for (int kx = 0; kx < kK; ++kx) {
                const int ix = ox * kStride + kx - kPad;
                if (ix < 0 || ix >= w_) continue;
                const int xi = (ci * h_ + iy) * w_ + ix;
                dwgt_[widx(co, ci, ky, kx)] += d * x_[xi];
                dx[xi] += d * wgt_[widx(co, ci, ky, kx)];
              }
            }
          }
        }
      }
    }
    return dx;
  }

  void collect(std::vector<ParamRef>& out) override {
    out.push_back({name_ + ".w", wgt_.data(), dwgt_.data(), wgt_.size()});
    out.push_back({name_ + ".b", b_.data(), db_.data(), b_.size()});
  }

 private:
  int widx(int co, int ci, int ky, int kx) const {
    return ((co * c_in_ + ci) * kK + ky) * kK + kx;
  }
  std::string name_;
  int c_in_ = 0, c_out_ = 0, h_ = 0, w_ = 0, ho_ = 0, wo_ = 0;
  VecX wgt_, b_, dwgt_, db_;
  VecX x_;
};

// Adaptive-moment optimizer with global gradient-norm clipping.
class Adam {
 public:
  explicit Adam(double lr = 3e-4, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8, double clip_norm = 1.0)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), clip_(clip_norm) {}

  void step(std::vector<ParamRef>& params) {
    std::ptrdiff_t total = 0;
    for (auto& p : params) total += p.n;
    if (m_.size() != total) {
      m_ = VecX::Zero(total);
      v_ = VecX::Zero(total);
      t_ = 0;
    }
    double norm2 = 0.0;
    for (auto& p : params)
      for (std::ptrdiff_t i = 0; i < p.n; ++i) norm2 += p.g[i] * p.g[i];
    const double norm = std::sqrt(norm2);
    const double scale = (clip_ > 0.0 && norm > clip_) ? clip_ / norm : 1.0;
    t_ += 1;
    const double bc1 = 1.0 - std::pow(b1_, t_);
    const double bc2 = 1.0 - std::pow(b2_, t_);
    std::ptrdiff_t off = 0;
    for (auto& p : params) {
      for (std::ptrdiff_t i = 0; i < p.n; ++i) {
        const double g = p.g[i] * scale;
        m_[off + i] = b1_ * m_[off + i] + (1.0 - b1_) * g;
        v_[off + i] = b2_ * v_[off + i] + (1.0 - b2_) * g * g;
        p.w[i] -= lr_ * (m_[off + i] / bc1) / (std::sqrt(v_[off + i] / bc2) + eps_);
      }
      off += p.n;
    }
  }

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  double lr_, b1_, b2_, eps_, clip_;
  VecX m_, v_;
  std::int64_t t_ = 0;
};

// Central-finite-difference gradient check of a scalar loss against the
// analytic gradients accumulated by `backward_fn`. Returns max relative error.
inline double gradient_check(ParamOwner& net, const std::function<double()>& loss_fn,
                             const std::function<void()>& backward_fn,
                             double h = 1e-6, int max_params_per_block = 24) {
  net.zero_grad();
  backward_fn();
  std::vector<ParamRef> ps;
  net.collect(ps);
  double max_rel = 0.0;
  for (auto& p : ps) {
    const std::ptrdiff_t stride = std::max<std::ptrdiff_t>(1, p.n / max_params_per_block);
    for (std::ptrdiff_t i = 0; i < p.n; i += stride) {
      const double orig = p.w[i];
      p.w[i] = orig + h;
      const double lp = loss_fn();
      p.w[i] = orig - h;
      const double lm = loss_fn();
      p.w[i] = orig;
      const double fd = (lp - lm) / (2.0 * h);
      const double rel = std::abs(fd - p.g[i]) / std::max(1.0, std::abs(fd));
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace namo

#endif  // NAMOPUSH_NN_HPP_
