#include "gemcl/synthetic.hpp"

#include <cmath>
#include <stdexcept>

#include "gemcl/rng.hpp"

namespace gemcl {

SyntheticTaskGen::SyntheticTaskGen(SyntheticTaskConfig config, std::uint64_t seed)
    : config_(config), seed_(seed) {
  if (config_.signal_dims > config_.input_dim)
    throw std::invalid_argument("synthetic config: signal_dims exceeds input_dim");
  const int n = config_.input_dim;
  Rng rng(mix_seed(config_.mixing_seed, 0x6d6978ULL));
  mixing_.resize(static_cast<std::size_t>(n) * n);
  double scale = config_.mixing_gain / std::sqrt(static_cast<double>(n));
  for (double& m : mixing_) m = scale * rng.normal();
}

std::vector<double> SyntheticTaskGen::observe(std::vector<double> latent) const {
  const int n = config_.input_dim;
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    const double* row = &mixing_[static_cast<std::size_t>(i) * n];
    for (int j = 0; j < n; ++j) acc += row[j] * latent[j];
    out[i] = std::tanh(acc);
  }
  return out;
}

Episode SyntheticTaskGen::make_episode(const std::string& language,
                                       std::uint64_t index) const {
  Rng rng(mix_seed(seed_, fnv1a64(language), index));
  Episode ep;
  ep.language = language;
  ep.seed = seed_;

  const int n = config_.input_dim;
  for (int c = 0; c < config_.n_way; ++c) {
    std::vector<double> mean(n, 0.0);
    for (int j = 0; j < config_.signal_dims; ++j) mean[j] = config_.mean_scale * rng.normal();

    auto draw_sample = [&]() {
      std::vector<double> latent(n);
      for (int j = 0; j < n; ++j) {
        latent[j] = j < config_.signal_dims ? mean[j] + config_.signal_noise * rng.normal()
                                            : config_.nuisance_noise * rng.normal();
      }
      FeatureMatrix f;
      f.rows = 1;
      f.cols = n;
      f.data = observe(std::move(latent));
      return f;
    };

    EpisodeClass cls;
    cls.word = "class_" + std::to_string(c);
    for (int i = 0; i < config_.k_shot; ++i) cls.support.push_back(draw_sample());
    for (int i = 0; i < config_.q_queries; ++i) cls.query.push_back(draw_sample());
    ep.classes.push_back(std::move(cls));
  }
  return ep;
}

}  // namespace gemcl
