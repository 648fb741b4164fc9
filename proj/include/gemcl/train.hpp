#pragma once

// Episodic meta-training. A step samples a batch of N-way-K-shot episodes,
// fits the Bayes head on each episode's support set, scores the queries,
// takes the cross-entropy loss, and backpropagates exactly through the
// posterior updates and the Student's-t log density into the encoder
// parameters and the prior scalars. One AdamW update per batch.

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gemcl/bayes_head.hpp"
#include "gemcl/encoder.hpp"

namespace gemcl {

struct EpisodeClass {
  std::string word;
  std::vector<FeatureMatrix> support;  // K samples
  std::vector<FeatureMatrix> query;    // Q samples
};

struct Episode {
  std::vector<EpisodeClass> classes;  // N entries
  std::string language;
  std::uint64_t seed = 0;
};

struct TrainConfig {
  int steps = 2000;
  int batch_episodes = 16;
  int n_way = 25;
  int k_shot = 5;
  int q_queries = 5;
  double lr = 5e-5;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct MetaGrads {
  EncoderGrads encoder;
  double raw_alpha0 = 0.0;
  double raw_beta0 = 0.0;
};

struct EpisodeResult {
  double loss = 0.0;
  double accuracy = 0.0;
  MetaGrads grads;
};

// Mean cross-entropy over the episode's N*Q queries plus exact gradients
// with respect to every encoder parameter and the raw prior scalars. The
// support path contributes: posterior mean and beta depend on the support
// embeddings, which depend on the encoder.
EpisodeResult episode_loss(const MlpEncoderParams& params, const PriorParams& priors,
                           const Episode& episode);

struct OptimizerState {
  EncoderGrads m_enc, v_enc;
  double m_ra = 0.0, v_ra = 0.0;
  double m_rb = 0.0, v_rb = 0.0;
  long step = 0;

  static OptimizerState zeros_like(const MlpEncoderParams& p) {
    OptimizerState s;
    s.m_enc = EncoderGrads::zeros_like(p);
    s.v_enc = EncoderGrads::zeros_like(p);
    return s;
  }
};

// Decoupled weight decay on the weight matrices only; biases and the prior
// scalars get the plain bias-corrected Adam update.
void adamw_step(MlpEncoderParams& params, PriorParams& priors, const MetaGrads& grads,
                OptimizerState& state, const TrainConfig& config);

// Deterministic episode stream: one episode per (language, index).
class EpisodeSource {
 public:
  virtual ~EpisodeSource() = default;
  virtual Episode make_episode(const std::string& language, std::uint64_t index) const = 0;
};

// Ordered per-language episode counts for one batch; counts must sum to
// TrainConfig::batch_episodes.
struct BatchComposition {
  std::vector<std::pair<std::string, int>> per_language;

  int total() const {
    int t = 0;
    for (const auto& [lang, count] : per_language) t += count;
    return t;
  }
};

struct TrainLogRecord {
  int step = 0;
  double loss = 0.0;
  double query_accuracy = 0.0;
  long wall_ms = 0;
};

struct GemclModel {
  bool identity_encoder = false;
  MlpEncoderParams encoder;
  PriorParams priors;
  std::uint64_t init_seed = 0;
};

struct TrainResult {
  GemclModel model;
  std::vector<TrainLogRecord> log;
};

TrainResult meta_train(const EpisodeSource& source, const BatchComposition& composition,
                       GemclModel init, const TrainConfig& config,
                       const std::function<void(const TrainLogRecord&)>& on_step = {});

// Runs fn(i) for i in [0, n) on up to `threads` workers; callers index into
// preallocated result slots so the reduction order stays fixed.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace gemcl
