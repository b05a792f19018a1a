#include "aenr/time_align.h"

#include <algorithm>
#include <cmath>

#include <string>

#include "aenr/errors.h"

namespace aenr {

namespace {

// The kernels below are shared by the batch and streaming paths so that both
// accumulate in the same order and agree bit for bit.

// out[h * out_stride + p] = b[h] + sum_l W[h, l] * in[l * in_stride + p]
void Project(const std::vector<double>& weight, const std::vector<double>& bias,
             int in_ch, int out_ch, int features, const double* in,
             std::size_t in_stride, double* out, std::size_t out_stride) {
  for (int h = 0; h < out_ch; ++h) {
    const double* wrow = &weight[static_cast<std::size_t>(h) * in_ch];
    for (int p = 0; p < features; ++p) {
      double acc = bias[h];
      for (int l = 0; l < in_ch; ++l) acc += wrow[l] * in[l * in_stride + p];
      out[h * out_stride + p] = acc;
    }
  }
}

// Similarity row C(., t, .) laid out H x D. far_at(d) returns the projected
// far-end frame at lag d (channel stride far_stride) or nullptr before the
// stream start.
template <typename FarAt>
void SimilarityRow(const double* near, std::size_t near_stride, FarAt far_at,
                   std::size_t far_stride, int sim_ch, int max_delay,
                   int features, double* row) {
  for (int h = 0; h < sim_ch; ++h) {
    for (int d = 0; d < max_delay; ++d) {
      const double* f = far_at(d);
      double acc = 0.0;
      if (f != nullptr) {
        const double* n = near + h * near_stride;
        const double* fh = f + h * far_stride;
        for (int p = 0; p < features; ++p) acc += n[p] * fh[p];
      }
      row[static_cast<std::size_t>(h) * max_delay + d] = acc;
    }
  }
}

// Causal (time) x centred (delay) convolution collapsing H channels.
// sim_at(i) returns the H x D similarity row of frame t - i or nullptr.
template <typename SimAt>
void ScoreRow(const TaWeights& w, SimAt sim_at, int max_delay, double* scores) {
  const int sim_ch = w.sim_channels;
  for (int d = 0; d < max_delay; ++d) {
    double acc = w.score_bias;
    for (int h = 0; h < sim_ch; ++h) {
      for (int i = 0; i < kScoreTimeTaps; ++i) {
        const double* c = sim_at(i);
        if (c == nullptr) continue;
        const double* ch = c + static_cast<std::size_t>(h) * max_delay;
        const double* k =
            &w.score_kernel[(static_cast<std::size_t>(h) * kScoreTimeTaps + i) * kScoreDelayTaps];
        for (int j = 0; j < kScoreDelayTaps; ++j) {
          const int dd = d + j - 1;
          if (dd < 0 || dd >= max_delay) continue;
          acc += k[j] * ch[dd];
        }
      }
    }
    scores[d] = acc;
  }
}

void SoftmaxInPlace(double* v, int n) {
  const double m = *std::max_element(v, v + n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    v[i] = std::exp(v[i] - m);
    sum += v[i];
  }
  for (int i = 0; i < n; ++i) v[i] /= sum;
}

template <typename FarAt>
void AlignedFrame(const double* dist_row, FarAt far_at, std::size_t far_stride,
                  int sim_ch, int max_delay, int features, double* out,
                  std::size_t out_stride) {
  for (int h = 0; h < sim_ch; ++h) {
    for (int p = 0; p < features; ++p) {
      double acc = 0.0;
      for (int d = 0; d < max_delay; ++d) {
        const double* f = far_at(d);
        if (f == nullptr) continue;
        acc += dist_row[d] * f[h * far_stride + p];
      }
      out[h * out_stride + p] = acc;
    }
  }
}

void CheckLatent(const LatentTensor& t, const char* name) {
  if (t.data.size() != static_cast<std::size_t>(t.channels) * t.frames * t.features)
    throw ConfigError(std::string("latent tensor '") + name + "' has inconsistent size");
  for (double v : t.data)
    if (!std::isfinite(v))
      throw ConfigError(std::string("latent tensor '") + name + "' is not finite");
}

}  // namespace

std::vector<double> DelayDistribution::TimeAverage() const {
  std::vector<double> avg(max_delay, 0.0);
  if (frames == 0) return avg;
  for (int t = 0; t < frames; ++t)
    for (int d = 0; d < max_delay; ++d) avg[d] += at(t, d);
  for (double& v : avg) v /= frames;
  return avg;
}

TaWeights TaWeights::Zeros(int in_channels, int sim_channels) {
  TaWeights w;
  w.in_channels = in_channels;
  w.sim_channels = sim_channels;
  const auto proj = static_cast<std::size_t>(in_channels) * sim_channels;
  w.ne_weight.assign(proj, 0.0);
  w.fe_weight.assign(proj, 0.0);
  w.ne_bias.assign(sim_channels, 0.0);
  w.fe_bias.assign(sim_channels, 0.0);
  w.score_kernel.assign(
      static_cast<std::size_t>(sim_channels) * kScoreTimeTaps * kScoreDelayTaps, 0.0);
  w.score_bias = 0.0;
  return w;
}

TaWeights TaWeights::Identity(int in_channels, int sim_channels) {
  TaWeights w = Zeros(in_channels, sim_channels);
  for (int h = 0; h < std::min(in_channels, sim_channels); ++h) {
    w.ne_weight[static_cast<std::size_t>(h) * in_channels + h] = 1.0;
    w.fe_weight[static_cast<std::size_t>(h) * in_channels + h] = 1.0;
  }
  for (int h = 0; h < sim_channels; ++h)
    w.score_kernel[(static_cast<std::size_t>(h) * kScoreTimeTaps) * kScoreDelayTaps + 1] =
        1.0 / sim_channels;
  return w;
}

void TaWeights::CheckShapes() const {
  const auto proj = static_cast<std::size_t>(in_channels) * sim_channels;
  if (in_channels < 1 || sim_channels < 1 || ne_weight.size() != proj ||
      fe_weight.size() != proj || ne_bias.size() != static_cast<std::size_t>(sim_channels) ||
      fe_bias.size() != static_cast<std::size_t>(sim_channels) ||
      score_kernel.size() !=
          static_cast<std::size_t>(sim_channels) * kScoreTimeTaps * kScoreDelayTaps)
    throw ConfigError("time-alignment weights have inconsistent shapes");
}

TaForwardResult TaForward(const LatentTensor& ne, const LatentTensor& fe,
                          const TaWeights& w, int max_delay,
                          std::shared_ptr<TaCache>* cache) {
  if (max_delay < 1) throw ConfigError("max_delay must be >= 1");
  CheckLatent(ne, "ne");
  CheckLatent(fe, "fe");
  if (ne.channels != fe.channels || ne.frames != fe.frames || ne.features != fe.features)
    throw ConfigError("near-end and far-end latent tensors differ in shape");
  w.CheckShapes();
  if (ne.channels != w.in_channels)
    throw ConfigError("latent channel count does not match time-alignment weights");

  const int L = w.in_channels, H = w.sim_channels, T = ne.frames, P = ne.features;
  const int D = max_delay;
  const std::size_t in_stride = static_cast<std::size_t>(T) * P;

  LatentTensor n_proj(H, T, P), f_proj(H, T, P);
  for (int t = 0; t < T; ++t) {
    Project(w.ne_weight, w.ne_bias, L, H, P, &ne.at(0, t, 0), in_stride,
            &n_proj.at(0, t, 0), in_stride);
    Project(w.fe_weight, w.fe_bias, L, H, P, &fe.at(0, t, 0), in_stride,
            &f_proj.at(0, t, 0), in_stride);
  }

  const std::size_t row = static_cast<std::size_t>(H) * D;
  std::vector<double> sim(row * T);
  for (int t = 0; t < T; ++t) {
    auto far_at = [&](int d) -> const double* {
      return t - d >= 0 ? &f_proj.at(0, t - d, 0) : nullptr;
    };
    SimilarityRow(&n_proj.at(0, t, 0), in_stride, far_at, in_stride, H, D, P,
                  &sim[row * t]);
  }

  TaForwardResult res;
  res.dist.frames = T;
  res.dist.max_delay = D;
  res.dist.data.assign(static_cast<std::size_t>(T) * D, 0.0);
  res.aligned = LatentTensor(H, T, P);
  for (int t = 0; t < T; ++t) {
    auto sim_at = [&](int i) -> const double* {
      return t - i >= 0 ? &sim[row * (t - i)] : nullptr;
    };
    double* drow = &res.dist.at(t, 0);
    ScoreRow(w, sim_at, D, drow);
    SoftmaxInPlace(drow, D);
    auto far_at = [&](int d) -> const double* {
      return t - d >= 0 ? &f_proj.at(0, t - d, 0) : nullptr;
    };
    AlignedFrame(drow, far_at, in_stride, H, D, P, &res.aligned.at(0, t, 0), in_stride);
  }

  if (cache != nullptr) {
    auto c = std::make_shared<TaCache>();
    c->ne = ne;
    c->fe = fe;
    c->weights = w;
    c->max_delay = D;
    c->near_proj = std::move(n_proj);
    c->far_proj = std::move(f_proj);
    c->similarity = std::move(sim);
    c->dist = res.dist;
    *cache = std::move(c);
  }
  return res;
}

TaGradients TaBackward(const std::shared_ptr<TaCache>& cache,
                       const LatentTensor& grad_aligned,
                       const DelayDistribution& grad_dist) {
  if (!cache) throw ConfigError("TaBackward: forward cache is missing");
  const TaCache& c = *cache;
  const TaWeights& w = c.weights;
  const int L = w.in_channels, H = w.sim_channels;
  const int T = c.ne.frames, P = c.ne.features, D = c.max_delay;
  if (grad_aligned.channels != H || grad_aligned.frames != T ||
      grad_aligned.features != P ||
      grad_aligned.data.size() != static_cast<std::size_t>(H) * T * P)
    throw ConfigError("TaBackward: grad_aligned has the wrong shape");
  if (grad_dist.frames != T || grad_dist.max_delay != D ||
      grad_dist.data.size() != static_cast<std::size_t>(T) * D)
    throw ConfigError("TaBackward: grad_dist has the wrong shape");

  const auto& N = c.near_proj;
  const auto& F = c.far_proj;
  const std::size_t row = static_cast<std::size_t>(H) * D;
  auto sim = [&](int h, int t, int d) { return c.similarity[row * t + h * D + d]; };

  LatentTensor gN(H, T, P), gF(H, T, P);
  std::vector<double> g_sim(row * T, 0.0);
  std::vector<double> g_score(static_cast<std::size_t>(T) * D, 0.0);

  for (int t = 0; t < T; ++t) {
    // Upstream into the distribution, including the weighted-sum path.
    std::vector<double> g_d(D);
    for (int d = 0; d < D; ++d) {
      double acc = grad_dist.at(t, d);
      if (t - d >= 0)
        for (int h = 0; h < H; ++h)
          for (int p = 0; p < P; ++p) acc += grad_aligned.at(h, t, p) * F.at(h, t - d, p);
      g_d[d] = acc;
    }
    // Weighted sum -> far-end projections.
    for (int d = 0; d < D; ++d) {
      if (t - d < 0) continue;
      const double pd = c.dist.at(t, d);
      for (int h = 0; h < H; ++h)
        for (int p = 0; p < P; ++p) gF.at(h, t - d, p) += pd * grad_aligned.at(h, t, p);
    }
    // Softmax Jacobian.
    double dot = 0.0;
    for (int d = 0; d < D; ++d) dot += c.dist.at(t, d) * g_d[d];
    for (int d = 0; d < D; ++d) g_score[static_cast<std::size_t>(t) * D + d] =
        c.dist.at(t, d) * (g_d[d] - dot);
  }

  TaGradients g;
  g.grad_w = TaWeights::Zeros(L, H);
  // Score convolution.
  for (int t = 0; t < T; ++t) {
    for (int d = 0; d < D; ++d) {
      const double gs = g_score[static_cast<std::size_t>(t) * D + d];
      g.grad_w.score_bias += gs;
      for (int h = 0; h < H; ++h) {
        for (int i = 0; i < kScoreTimeTaps; ++i) {
          if (t - i < 0) continue;
          for (int j = 0; j < kScoreDelayTaps; ++j) {
            const int dd = d + j - 1;
            if (dd < 0 || dd >= D) continue;
            const std::size_t ki =
                (static_cast<std::size_t>(h) * kScoreTimeTaps + i) * kScoreDelayTaps + j;
            g.grad_w.score_kernel[ki] += gs * sim(h, t - i, dd);
            g_sim[row * (t - i) + h * D + dd] += gs * w.score_kernel[ki];
          }
        }
      }
    }
  }
  // Dot products.
  for (int t = 0; t < T; ++t)
    for (int h = 0; h < H; ++h)
      for (int d = 0; d < D; ++d) {
        if (t - d < 0) continue;
        const double gc = g_sim[row * t + h * D + d];
        for (int p = 0; p < P; ++p) {
          gN.at(h, t, p) += gc * F.at(h, t - d, p);
          gF.at(h, t - d, p) += gc * N.at(h, t, p);
        }
      }
  // Point-wise projections.
  g.grad_ne = LatentTensor(L, T, P);
  g.grad_fe = LatentTensor(L, T, P);
  auto project_back = [&](const LatentTensor& g_out, const LatentTensor& input,
                          const std::vector<double>& weight, std::vector<double>& g_weight,
                          std::vector<double>& g_bias, LatentTensor& g_in) {
    for (int h = 0; h < H; ++h)
      for (int t = 0; t < T; ++t)
        for (int p = 0; p < P; ++p) {
          const double go = g_out.at(h, t, p);
          g_bias[h] += go;
          for (int l = 0; l < L; ++l) {
            g_weight[static_cast<std::size_t>(h) * L + l] += go * input.at(l, t, p);
            g_in.at(l, t, p) += go * weight[static_cast<std::size_t>(h) * L + l];
          }
        }
  };
  project_back(gN, c.ne, w.ne_weight, g.grad_w.ne_weight, g.grad_w.ne_bias, g.grad_ne);
  project_back(gF, c.fe, w.fe_weight, g.grad_w.fe_weight, g.grad_w.fe_bias, g.grad_fe);
  return g;
}

StreamingTimeAlignment::StreamingTimeAlignment(const TaWeights& w, int max_delay,
                                               int features)
    : w_(w), max_delay_(max_delay), features_(features) {
  if (max_delay < 1) throw ConfigError("max_delay must be >= 1");
  w_.CheckShapes();
  near_proj_.resize(static_cast<std::size_t>(w_.sim_channels) * features_);
}

void StreamingTimeAlignment::Reset() {
  far_history_.clear();
  sim_history_.clear();
}

void StreamingTimeAlignment::Process(const double* ne_frame, const double* fe_frame,
                                     double* aligned, double* dist_row) {
  const int L = w_.in_channels, H = w_.sim_channels, P = features_, D = max_delay_;
  const auto stride = static_cast<std::size_t>(P);

  std::vector<double> far(static_cast<std::size_t>(H) * P);
  Project(w_.ne_weight, w_.ne_bias, L, H, P, ne_frame, stride, near_proj_.data(), stride);
  Project(w_.fe_weight, w_.fe_bias, L, H, P, fe_frame, stride, far.data(), stride);
  far_history_.push_front(std::move(far));
  if (far_history_.size() > static_cast<std::size_t>(D)) far_history_.pop_back();

  auto far_at = [&](int d) -> const double* {
    return d < static_cast<int>(far_history_.size()) ? far_history_[d].data() : nullptr;
  };
  std::vector<double> sim(static_cast<std::size_t>(H) * D);
  SimilarityRow(near_proj_.data(), stride, far_at, stride, H, D, P, sim.data());
  sim_history_.push_front(std::move(sim));
  if (sim_history_.size() > static_cast<std::size_t>(kScoreTimeTaps)) sim_history_.pop_back();

  auto sim_at = [&](int i) -> const double* {
    return i < static_cast<int>(sim_history_.size()) ? sim_history_[i].data() : nullptr;
  };
  ScoreRow(w_, sim_at, D, dist_row);
  SoftmaxInPlace(dist_row, D);
  AlignedFrame(dist_row, far_at, stride, H, D, P, aligned, stride);
}

}  // namespace aenr
