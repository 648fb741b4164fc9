#pragma once

// Meta-class splitting and deterministic episode sampling. The random
// stream for an episode is derived from (seed, language, episode index)
// alone, so episode e can be regenerated, or generated in parallel,
// without replaying the stream for episodes 0..e-1.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gemcl/manifest.hpp"
#include "gemcl/train.hpp"

namespace gemcl {

struct LanguageSplit {
  std::uint64_t seed = 0;
  std::vector<std::string> meta_train;
  std::vector<std::string> meta_test;
};

struct MetaSplit {
  std::map<std::string, LanguageSplit> languages;
};

// Seeded shuffle, then the first ceil(0.7 n) words become meta-train and
// the rest meta-test. Word lists in the result keep the shuffled order.
LanguageSplit make_meta_split(std::vector<std::string> words, std::uint64_t seed);

void save_meta_split_json(const std::string& path, const MetaSplit& split);
MetaSplit load_meta_split_json(const std::string& path);

// True iff the language has at least n_way words eligible for K-shot
// support and Q-query sampling.
bool language_eligible_for_eval(const CorpusIndex& index, const std::string& language,
                                int n_way = 25, int k_shot = 5, int q_queries = 5);

struct SamplerConfig {
  int n_way = 25;
  int k_shot = 5;
  int q_queries = 5;
  std::string support_split = "train";
  std::string query_split = "test";
  std::uint64_t seed = 0;
};

// Clip-level description of one sampled episode; no audio is touched.
struct EpisodeSelection {
  struct ClassSelection {
    std::string word;
    std::vector<int> support;  // record indices into the manifest
    std::vector<int> query;
  };
  std::string language;
  std::uint64_t seed = 0;
  std::vector<ClassSelection> classes;
};

// N distinct words from the pool, then K distinct support clips from the
// support split and Q distinct query clips from the query split per word.
// Deterministic given (config.seed, language, episode_index).
EpisodeSelection select_episode(const CorpusIndex& index,
                                const std::vector<std::string>& class_pool,
                                const SamplerConfig& config, const std::string& language,
                                std::uint64_t episode_index);

using FeatureLoader = std::function<FeatureMatrix(const ManifestRecord&)>;

Episode load_episode(const Manifest& manifest, const EpisodeSelection& selection,
                     const FeatureLoader& loader);

// Episode stream over a corpus: one class pool per language. Validates at
// construction that every pool supports n_way-way sampling.
class CorpusEpisodeSource : public EpisodeSource {
 public:
  CorpusEpisodeSource(const Manifest& manifest, const CorpusIndex& index,
                      std::map<std::string, std::vector<std::string>> pools,
                      SamplerConfig config, FeatureLoader loader);

  Episode make_episode(const std::string& language, std::uint64_t index) const override;
  EpisodeSelection select(const std::string& language, std::uint64_t index) const;

 private:
  const Manifest& manifest_;
  const CorpusIndex& index_;
  std::map<std::string, std::vector<std::string>> pools_;
  SamplerConfig config_;
  FeatureLoader loader_;
};

struct HoursSimResult {
  std::vector<double> per_run_hours;
  double mean_hours = 0.0;
};

// Replays the full training sampling schedule (steps x batch composition)
// per run without loading audio, accumulating the distinct clips drawn and
// summing their durations. Run r uses seed mix(config.seed, r).
HoursSimResult simulate_unique_hours(const Manifest& manifest, const CorpusIndex& index,
                                     const std::map<std::string, std::vector<std::string>>& pools,
                                     const BatchComposition& composition,
                                     const SamplerConfig& config, int steps, int runs = 10);

}  // namespace gemcl
