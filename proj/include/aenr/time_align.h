#ifndef AENR_TIME_ALIGN_H_
#define AENR_TIME_ALIGN_H_

#include <cstddef>
#include <deque>
#include <memory>
#include <vector>

namespace aenr {

// channels x frames x features, row-major.
struct LatentTensor {
  int channels = 0;
  int frames = 0;
  int features = 0;
  std::vector<double> data;

  LatentTensor() = default;
  LatentTensor(int c, int t, int p)
      : channels(c), frames(t), features(p),
        data(static_cast<std::size_t>(c) * t * p, 0.0) {}

  double& at(int c, int t, int p) {
    return data[(static_cast<std::size_t>(c) * frames + t) * features + p];
  }
  const double& at(int c, int t, int p) const {
    return data[(static_cast<std::size_t>(c) * frames + t) * features + p];
  }
};

// Row t is a probability distribution over delay index d; index d (0-based)
// corresponds to a lag of d frames, i.e. d = 0 is the "d = 1" column.
struct DelayDistribution {
  int frames = 0;
  int max_delay = 0;
  std::vector<double> data;

  double& at(int t, int d) { return data[static_cast<std::size_t>(t) * max_delay + d]; }
  const double& at(int t, int d) const { return data[static_cast<std::size_t>(t) * max_delay + d]; }
  // Mean over frames.
  std::vector<double> TimeAverage() const;
};

inline constexpr int kScoreTimeTaps = 5;
inline constexpr int kScoreDelayTaps = 3;

struct TaWeights {
  int in_channels = 32;   // L
  int sim_channels = 32;  // H
  std::vector<double> ne_weight;  // H x L
  std::vector<double> ne_bias;    // H
  std::vector<double> fe_weight;  // H x L
  std::vector<double> fe_bias;    // H
  // H x kScoreTimeTaps x kScoreDelayTaps. Time tap i reads frame t - i;
  // delay tap j reads delay d + j - 1.
  std::vector<double> score_kernel;
  double score_bias = 0.0;

  static TaWeights Zeros(int in_channels, int sim_channels);
  // Projections copy the first min(L, H) channels; the score kernel averages
  // the current-frame similarity over H channels.
  static TaWeights Identity(int in_channels, int sim_channels);
  void CheckShapes() const;
};

struct TaForwardResult {
  LatentTensor aligned;  // H x T x P
  DelayDistribution dist;
};

// Intermediate values of one batch forward pass, needed by TaBackward.
struct TaCache {
  LatentTensor ne, fe;
  TaWeights weights;
  int max_delay = 0;
  LatentTensor near_proj, far_proj;  // N, F
  std::vector<double> similarity;    // C, H x T x D
  DelayDistribution dist;
};

TaForwardResult TaForward(const LatentTensor& ne, const LatentTensor& fe,
                          const TaWeights& w, int max_delay,
                          std::shared_ptr<TaCache>* cache = nullptr);

struct TaGradients {
  LatentTensor grad_ne;
  LatentTensor grad_fe;
  TaWeights grad_w;
};

// Gradients of sum(grad_aligned * aligned) + sum(grad_dist * dist).
TaGradients TaBackward(const std::shared_ptr<TaCache>& cache,
                       const LatentTensor& grad_aligned,
                       const DelayDistribution& grad_dist);

// Frame-by-frame time alignment. Keeps the last max_delay projected far-end
// frames and the similarity rows needed by the causal score kernel. Produces
// the same values as TaForward.
class StreamingTimeAlignment {
 public:
  StreamingTimeAlignment(const TaWeights& w, int max_delay, int features);

  // ne_frame, fe_frame: L x P. aligned: H x P, dist_row: max_delay.
  void Process(const double* ne_frame, const double* fe_frame, double* aligned,
               double* dist_row);
  void Reset();

 private:
  TaWeights w_;
  int max_delay_;
  int features_;
  std::deque<std::vector<double>> far_history_;  // front = current frame
  std::deque<std::vector<double>> sim_history_;  // front = current frame
  std::vector<double> near_proj_;
};

}  // namespace aenr

#endif  // AENR_TIME_ALIGN_H_
