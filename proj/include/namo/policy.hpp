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

#ifndef NAMOPUSH_POLICY_HPP_
#define NAMOPUSH_POLICY_HPP_

#include <fstream>
#include <memory>

#include "namo/nn.hpp"
#include "namo/types.hpp"

namespace namo {

// Diagonal-Gaussian actor-critic head: tanh trunk [256,128,64], linear mean
// and value heads, state-independent log-std. Log-probs are taken in the raw
// (pre-squash) action space; environments apply the tanh*bound mapping.
class GaussianPolicy : public ParamOwner {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(int obs_dim, int act_dim, Rng& rng, const std::string& name = "pi")
      : obs_dim_(obs_dim), act_dim_(act_dim),
        trunk_({obs_dim, 256, 128, 64}, rng, name + ".trunk"),
        mean_head_(64, act_dim, rng, name + ".mean"),
        value_head_(64, 1, rng, name + ".value"),
        log_std_(VecX::Constant(act_dim, -0.5)),
        dlog_std_(VecX::Zero(act_dim)) {}

  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }
  const VecX& log_std() const { return log_std_; }

  struct Output {
    VecX mean;
    double value = 0.0;
  };

  Output forward(const VecX& obs) {
    feat_ = trunk_.forward(obs).array().tanh();
    Output out;
    out.mean = mean_head_.forward(feat_);
    out.value = value_head_.forward(feat_)[0];
    return out;
  }

  // Backward for the most recent forward; returns the observation gradient.
  // dlog_std entries accumulate directly.
  VecX backward(const VecX& dmean, double dvalue, const VecX& dlog_std) {
    VecX dfeat = mean_head_.backward(dmean);
    dfeat += value_head_.backward(VecX::Constant(1, dvalue));
    dfeat = dfeat.array() * (1.0 - feat_.array().square());
    dlog_std_ += dlog_std;
    return trunk_.backward(dfeat);
  }

  double log_prob(const VecX& mean, const VecX& a) const {
    double lp = 0.0;
    for (int i = 0; i < act_dim_; ++i) {
      const double s = std::exp(log_std_[i]);
      const double z = (a[i] - mean[i]) / s;
      lp += -0.5 * z * z - log_std_[i] - 0.5 * std::log(2.0 * kPi);
    }
    return lp;
  }
  double entropy() const {
    double e = 0.0;
    for (int i = 0; i < act_dim_; ++i)
      e += log_std_[i] + 0.5 * std::log(2.0 * kPi * std::exp(1.0));
    return e;
  }
  VecX sample(const VecX& mean, Rng& rng) const {
    VecX a(act_dim_);
    for (int i = 0; i < act_dim_; ++i)
      a[i] = mean[i] + std::exp(log_std_[i]) * rng.normal();
    return a;
  }

  void collect(std::vector<ParamRef>& out) override {
    trunk_.collect(out);
    mean_head_.collect(out);
    value_head_.collect(out);
    out.push_back({"pi.log_std", log_std_.data(), dlog_std_.data(), log_std_.size()});
  }

 private:
  int obs_dim_ = 0, act_dim_ = 0;
  Mlp trunk_;
  Dense mean_head_, value_head_;
  VecX log_std_, dlog_std_;
  VecX feat_;
};

// Privileged-property estimator e_x: LSTM(64) over the low-level observation
// stream, then MLP [128,64,32] -> 6 (contact logit + 5 property dims). The
// raw observation is augmented with fixed contact-geometry features and with
// running episode-evidence accumulators (all deterministic functions of the
// observation stream) so the recurrent net does not have to rediscover frame
// rotation products or integrate slow evidence over hundreds of steps.
class Estimator : public ParamOwner {
 public:
  static constexpr int kHidden = 96;
  static constexpr int kExtraFeatures = 8;
  static constexpr int kAccFeatures = 12;
  static constexpr int kInputDim = kLowObsDim + kExtraFeatures + kAccFeatures;
  static constexpr int kHeadIn = kHidden + kAccFeatures;
  static constexpr double kNominalDt = 0.02;  // control period the streams use

  Estimator() = default;
  explicit Estimator(Rng& rng)
      : cell_(kInputDim, kHidden, rng, "ex.lstm"),
        head_({kHeadIn, 128, 64, 32, kPrivilegedDim}, rng, "ex.head") {}

  // Derived features appended to the low-level observation: the ee expressed
  // in the obstacle's local frame, the signed gaps to the +-x/+-y faces
  // (scaled so millimetre-level compliance residuals are O(0.1)), the contact
  // height fraction, the tilt magnitude, and the relative-yaw sin/cos.
  static VecX features(const VecX& o) {
    VecX f = VecX::Zero(kExtraFeatures);
    const double sx = o[21], sy = o[22], sz = o[23];
    if (sz < 1e-9) return f;  // no tracked obstacle: block is zeroed
    const double yaw = o[20];
    const double cs = std::cos(yaw), sn = std::sin(yaw);
    const double dx = o[9] - o[15], dy = o[10] - o[16];
    const double lx = cs * dx + sn * dy;   // ee in box frame
    const double ly = -sn * dx + cs * dy;
    f[0] = lx;
    f[1] = ly;
    f[2] = 10.0 * (0.5 * sx - std::abs(lx));  // signed face gaps
    f[3] = 10.0 * (0.5 * sy - std::abs(ly));
    f[4] = o[11] / sz;                        // contact height fraction
    f[5] = std::sqrt(o[18] * o[18] + o[19] * o[19]);  // tilt magnitude
    f[6] = sn;
    f[7] = cs;
    return f;
  }

  struct State {
    VecX h = VecX::Zero(kHidden);
    VecX c = VecX::Zero(kHidden);
    VecX acc = VecX::Zero(kAccFeatures);  // exposed accumulator features
    // raw evidence trackers behind acc
    bool has_prev = false;
    double prev_yaw = 0.0;
    double cum_yaw = 0.0, cum_slide = 0.0;
    double pen_sum = 0.0, pen_max = 0.0, h_at_pen_max = 0.0;
    double contact_steps = 0.0, steps = 0.0;
    double max_tilt = 0.0, max_dtilt = 0.0, prev_tilt = 0.0;
    bool tilted = false;
    double onset_h = 0.0, onset_pen = 0.0;
  };

  struct StepCache {
    LstmCell::Cache cc;
    VecX acc;
  };

  LstmCell& cell() { return cell_; }
  Mlp& head() { return head_; }

  static VecX head_input(const StepCache& c) {
    VecX v(kHeadIn);
    v << c.cc.h, c.acc;
    return v;
  }

  // Episode-evidence accumulators: running integrals and extrema of the same
  // observation stream (rotation per metre pushed, compliance-residual
  // penetration, tilt onset/rate). These are the summary statistics the
  // hidden properties are identifiable from; computing them outside the
  // recurrent cell spares it 250-step numerical integration.
  static void update_acc(const VecX& o, State& s) {
    const double sx = o[21], sy = o[22], sz = o[23];
    if (sz < 1e-9) {
      s.has_prev = false;  // no tracked obstacle: freeze the evidence
      return;
    }
    const double yaw = o[20];
    const double cs = std::cos(yaw), sn = std::sin(yaw);
    const double dx = o[9] - o[15], dy = o[10] - o[16];
    const double lx = cs * dx + sn * dy;
    const double ly = -sn * dx + cs * dy;
    const double pen =
        std::max(0.0, std::min(0.5 * sx - std::abs(lx), 0.5 * sy - std::abs(ly)));
    const bool contact = pen > 1e-4 && o[11] > 0.0 && o[11] < sz;
    const double tilt = std::sqrt(o[18] * o[18] + o[19] * o[19]);
    if (s.has_prev) {
      if (contact) {
        s.cum_yaw += wrap_angle(yaw - s.prev_yaw);
        s.cum_slide += std::max(0.0, o[7]) * kNominalDt;
      }
      s.max_dtilt = std::max(s.max_dtilt, tilt - s.prev_tilt);
    }
    if (contact) {
      s.pen_sum += pen;
      s.contact_steps += 1.0;
      if (pen > s.pen_max) {
        s.pen_max = pen;
        s.h_at_pen_max = o[11] / sz;
      }
    }
    if (!s.tilted && tilt > 0.02) {
      s.tilted = true;
      s.onset_h = o[11] / sz;
      s.onset_pen = pen;
    }
    s.max_tilt = std::max(s.max_tilt, tilt);
    s.steps += 1.0;
    s.prev_yaw = yaw;
    s.prev_tilt = tilt;
    s.has_prev = true;

    s.acc[0] = 20.0 * s.pen_max;
    s.acc[1] = 20.0 * s.pen_sum / std::max(1.0, s.contact_steps);
    s.acc[2] = s.cum_yaw;
    s.acc[3] = s.cum_slide;
    s.acc[4] = s.cum_yaw / (s.cum_slide + 0.05);
    s.acc[5] = s.onset_h;
    s.acc[6] = 20.0 * s.onset_pen;
    s.acc[7] = 5.0 * s.max_tilt;
    s.acc[8] = s.tilted ? 1.0 : 0.0;
    s.acc[9] = s.contact_steps / std::max(1.0, s.steps);
    s.acc[10] = 100.0 * s.max_dtilt;
    s.acc[11] = s.h_at_pen_max;
  }

  // One recurrent step; the head output is the x-hat prediction (element 0 is
  // a raw contact logit, 1..5 the normalized properties). The head sees the
  // accumulator features directly alongside the recurrent state.
  VecX step(const VecX& low_obs, State& state, StepCache* cache = nullptr) {
    update_acc(low_obs, state);
    VecX in(kInputDim);
    in << low_obs, features(low_obs), state.acc;
    LstmCell::Cache cc = cell_.forward(in, state.h, state.c);
    state.h = cc.h;
    state.c = cc.c;
    VecX hin(kHeadIn);
    hin << cc.h, state.acc;
    if (cache) {
      cache->cc = cc;
      cache->acc = state.acc;
    }
    return head_.forward(hin);
  }

  void collect(std::vector<ParamRef>& out) override {
    cell_.collect(out);
    head_.collect(out);
  }

 private:
  LstmCell cell_;
  Mlp head_;
};

// Map encoder e_l: 3 conv layers (8/16/16 channels, 3x3, stride 2) over the
// 80x80 local map, then MLP [128,64,32] -> 16.
class MapEncoder : public ParamOwner {
 public:
  MapEncoder() = default;
  explicit MapEncoder(Rng& rng)
      : c1_(1, 8, 80, 80, rng, "el.c1"), c2_(8, 16, 40, 40, rng, "el.c2"),
        c3_(16, 16, 20, 20, rng, "el.c3"),
        head_({16 * 10 * 10, 128, 64, 32, kMapCodeDim}, rng, "el.head") {}

  VecX forward(const VecX& map_cells) {
    a1_ = c1_.forward(map_cells).array().tanh();
    a2_ = c2_.forward(a1_).array().tanh();
    a3_ = c3_.forward(a2_).array().tanh();
    return head_.forward(a3_);
  }
  void backward(const VecX& dcode) {
    VecX d = head_.backward(dcode);
    d = d.array() * (1.0 - a3_.array().square());
    d = c3_.backward(d);
    d = d.array() * (1.0 - a2_.array().square());
    d = c2_.backward(d);
    d = d.array() * (1.0 - a1_.array().square());
    c1_.backward(d);
  }

  void collect(std::vector<ParamRef>& out) override {
    c1_.collect(out);
    c2_.collect(out);
    c3_.collect(out);
    head_.collect(out);
  }

 private:
  Conv2d c1_, c2_, c3_;
  Mlp head_;
  VecX a1_, a2_, a3_;
};

inline VecX local_map_to_vec(const std::array<std::uint8_t, kLocalMapSize * kLocalMapSize>& cells) {
  VecX v(kLocalMapSize * kLocalMapSize);
  for (int i = 0; i < kLocalMapSize * kLocalMapSize; ++i)
    v[i] = static_cast<double>(cells[i]);
  return v;
}

// Element-wise convex combination of ground-truth and estimated privileged
// vectors; alpha outside [0, 1] is clamped.
inline VecX blend_privileged(const VecX& x, const VecX& x_hat, double alpha) {
  const double a = std::clamp(alpha, 0.0, 1.0);
  return (1.0 - a) * x + a * x_hat;
}

// ---------------------------------------------------------------------------
// Checkpoint bundle. Binary layout:
//   magic "NAMO1" (5 bytes), version u32 = 1, block count u32, then per block
//   name length u32, name bytes, element count u64, float32 data (row-major).
// Weights are float32-quantized in memory on save so a round trip is exact.
// ---------------------------------------------------------------------------

struct PolicyBundle {
  std::unique_ptr<GaussianPolicy> low;     // 41 -> 8
  std::unique_ptr<GaussianPolicy> high;    // 63 -> 3
  std::unique_ptr<GaussianPolicy> e2e;     // 57 -> 8 (no-hierarchy ablation)
  std::unique_ptr<Estimator> ex;
  std::unique_ptr<MapEncoder> el;

  static constexpr int kLowPolicyIn = kLowObsDim + kPrivilegedDim + kCommandDim;  // 41
  static constexpr int kHighPolicyIn = kHighObsDim + kLowObsDim + kPrivilegedDim;  // 63
  static constexpr int kE2eIn = kLowObsDim + kHighObsDim;  // 57

  std::vector<ParamOwner*> owners() {
    std::vector<ParamOwner*> out;
    if (low) out.push_back(low.get());
    if (high) out.push_back(high.get());
    if (e2e) out.push_back(e2e.get());
    if (ex) out.push_back(ex.get());
    if (el) out.push_back(el.get());
    return out;
  }

  std::vector<ParamRef> all_params() {
    std::vector<ParamRef> ps;
    for (ParamOwner* o : owners()) o->collect(ps);
    return ps;
  }

  void save(const std::string& path) {
    for (ParamOwner* o : owners()) o->quantize_weights();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("bundle save: cannot open " + path);
    f.write("NAMO1", 5);
    const std::uint32_t version = 1;
    f.write(reinterpret_cast<const char*>(&version), 4);
    auto ps = all_params();
    const std::uint32_t count = static_cast<std::uint32_t>(ps.size());
    f.write(reinterpret_cast<const char*>(&count), 4);
    for (auto& p : ps) {
      const std::uint32_t nl = static_cast<std::uint32_t>(p.name.size());
      f.write(reinterpret_cast<const char*>(&nl), 4);
      f.write(p.name.data(), nl);
      const std::uint64_t n = static_cast<std::uint64_t>(p.n);
      f.write(reinterpret_cast<const char*>(&n), 8);
      for (std::ptrdiff_t i = 0; i < p.n; ++i) {
        const float v = static_cast<float>(p.w[i]);
        f.write(reinterpret_cast<const char*>(&v), 4);
      }
    }
    if (!f) throw std::runtime_error("bundle save: write failed for " + path);
  }

  // Loads into the already-constructed networks; every block must match the
  // allocated parameter list in name, order, and size.
  void load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("bundle load: cannot open " + path);
    char magic[5];
    f.read(magic, 5);
    if (!f || std::memcmp(magic, "NAMO1", 5) != 0)
      throw std::runtime_error("bundle load: bad magic in " + path);
    std::uint32_t version = 0, count = 0;
    f.read(reinterpret_cast<char*>(&version), 4);
    if (!f || version != 1)
      throw std::runtime_error("bundle load: unsupported version " +
                               std::to_string(version));
    f.read(reinterpret_cast<char*>(&count), 4);
    auto ps = all_params();
    if (!f || count != ps.size())
      throw std::runtime_error("bundle load: block count mismatch");
    for (auto& p : ps) {
      std::uint32_t nl = 0;
      f.read(reinterpret_cast<char*>(&nl), 4);
      std::string name(nl, '\0');
      f.read(name.data(), nl);
      std::uint64_t n = 0;
      f.read(reinterpret_cast<char*>(&n), 8);
      if (!f || name != p.name || n != static_cast<std::uint64_t>(p.n))
        throw std::runtime_error("bundle load: block mismatch at " + p.name);
      for (std::ptrdiff_t i = 0; i < p.n; ++i) {
        float v = 0.0f;
        f.read(reinterpret_cast<char*>(&v), 4);
        p.w[i] = static_cast<double>(v);
      }
      if (!f) throw std::runtime_error("bundle load: truncated file " + path);
    }
  }
};

// Squash a raw policy output into symmetric bounds via tanh.
inline double squash(double raw, double bound) { return bound * std::tanh(raw); }

// Map raw 8-dim policy output to the executed whole-body action.
inline Action squash_action(const VecX& raw) {
  Action a;
  for (int i = 0; i < 6; ++i) a[i] = squash(raw[i], 0.5);   // ee twist
  a[6] = squash(raw[6], 0.4);                               // base forward
  a[7] = squash(raw[7], 1.0);                               // base yaw rate
  return a;
}

// Map raw 3-dim high-level output to a bounded pushing command.
inline PushingCommand squash_command(const VecX& raw, const Range& v_range) {
  PushingCommand c;
  c.p = squash(raw[0], 0.5);
  c.theta = squash(raw[1], kPi / 2.0);
  c.v = v_range.mid() + squash(raw[2], 0.5 * v_range.span());
  return c;
}

}  // namespace namo

#endif  // NAMOPUSH_POLICY_HPP_
