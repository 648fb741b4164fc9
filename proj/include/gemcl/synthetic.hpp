#pragma once

// Synthetic episodic tasks: every class is a Gaussian in a latent space
// whose first `signal_dims` coordinates carry the class mean and whose
// remaining coordinates are high-variance nuisance noise. Observations are
// passed through a fixed random linear mix followed by tanh, so an
// untrained encoder sees the class signal buried in mixed nuisance while a
// trained one can learn to recover it. Support and query samples are drawn
// independently from the same class distribution.

#include <cstdint>
#include <vector>

#include "gemcl/train.hpp"

namespace gemcl {

struct SyntheticTaskConfig {
  int n_way = 5;
  int k_shot = 5;
  int q_queries = 5;
  int input_dim = 8;
  int signal_dims = 2;
  double mean_scale = 3.0;
  double signal_noise = 0.4;
  double nuisance_noise = 4.0;
  double mixing_gain = 0.12;  // scales the mixing matrix before tanh
  std::uint64_t mixing_seed = 7;
};

class SyntheticTaskGen : public EpisodeSource {
 public:
  SyntheticTaskGen(SyntheticTaskConfig config, std::uint64_t seed);

  // The language tag only labels the stream; episodes differ by index.
  Episode make_episode(const std::string& language, std::uint64_t index) const override;

  const SyntheticTaskConfig& config() const { return config_; }

 private:
  std::vector<double> observe(std::vector<double> latent) const;

  SyntheticTaskConfig config_;
  std::uint64_t seed_;
  std::vector<double> mixing_;  // input_dim x input_dim, row-major
};

}  // namespace gemcl
