#include "gemcl/episodes.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "gemcl/rng.hpp"

namespace gemcl {

LanguageSplit make_meta_split(std::vector<std::string> words, std::uint64_t seed) {
  if (words.size() < 2) throw std::runtime_error("too few words for a meta split");
  Rng rng(mix_seed(seed, 0x73706c6974ULL));
  rng.shuffle(words);
  std::size_t n_train =
      static_cast<std::size_t>(std::ceil(0.7 * static_cast<double>(words.size())));
  LanguageSplit split;
  split.seed = seed;
  split.meta_train.assign(words.begin(), words.begin() + n_train);
  split.meta_test.assign(words.begin() + n_train, words.end());
  return split;
}

void save_meta_split_json(const std::string& path, const MetaSplit& split) {
  nlohmann::json j;
  for (const auto& [lang, ls] : split.languages) {
    j[lang] = {{"seed", ls.seed}, {"meta_train", ls.meta_train}, {"meta_test", ls.meta_test}};
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

MetaSplit load_meta_split_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  nlohmann::json j;
  in >> j;
  MetaSplit split;
  for (auto it = j.begin(); it != j.end(); ++it) {
    LanguageSplit ls;
    ls.seed = it.value().at("seed").get<std::uint64_t>();
    ls.meta_train = it.value().at("meta_train").get<std::vector<std::string>>();
    ls.meta_test = it.value().at("meta_test").get<std::vector<std::string>>();
    split.languages[it.key()] = std::move(ls);
  }
  return split;
}

bool language_eligible_for_eval(const CorpusIndex& index, const std::string& language,
                                int n_way, int k_shot, int q_queries) {
  if (!index.has_language(language)) return false;
  auto words = eligible_words(index, language, k_shot, q_queries);
  return static_cast<int>(words.size()) >= n_way;
}

EpisodeSelection select_episode(const CorpusIndex& index,
                                const std::vector<std::string>& class_pool,
                                const SamplerConfig& config, const std::string& language,
                                std::uint64_t episode_index) {
  if (config.support_split == config.query_split)
    throw std::invalid_argument("sampler config: support and query splits must differ");
  if (static_cast<int>(class_pool.size()) < config.n_way)
    throw std::runtime_error("class pool exhausted for language " + language + ": have " +
                             std::to_string(class_pool.size()) + ", need " +
                             std::to_string(config.n_way));
  auto lang_it = index.languages.find(language);
  if (lang_it == index.languages.end())
    throw std::runtime_error("unknown language: " + language);

  Rng rng(mix_seed(config.seed, fnv1a64(language), episode_index));

  EpisodeSelection sel;
  sel.language = language;
  sel.seed = config.seed;

  auto word_indices = rng.choose(class_pool.size(), static_cast<std::size_t>(config.n_way));
  for (std::size_t wi : word_indices) {
    const std::string& word = class_pool[wi];
    auto word_it = lang_it->second.find(word);
    if (word_it == lang_it->second.end())
      throw std::logic_error("sampler pool references unknown word: " + word);
    const WordClips& wc = word_it->second;
    const std::vector<int>& support_clips = config.support_split == "train" ? wc.train : wc.test;
    const std::vector<int>& query_clips = config.query_split == "test" ? wc.test : wc.train;
    if (static_cast<int>(support_clips.size()) < config.k_shot ||
        static_cast<int>(query_clips.size()) < config.q_queries)
      throw std::logic_error("word '" + word + "' lacks clips for sampling; pool not filtered");

    EpisodeSelection::ClassSelection cls;
    cls.word = word;
    for (std::size_t i : rng.choose(support_clips.size(), static_cast<std::size_t>(config.k_shot)))
      cls.support.push_back(support_clips[i]);
    for (std::size_t i : rng.choose(query_clips.size(), static_cast<std::size_t>(config.q_queries)))
      cls.query.push_back(query_clips[i]);
    sel.classes.push_back(std::move(cls));
  }
  return sel;
}

Episode load_episode(const Manifest& manifest, const EpisodeSelection& selection,
                     const FeatureLoader& loader) {
  Episode ep;
  ep.language = selection.language;
  ep.seed = selection.seed;
  for (const auto& cls : selection.classes) {
    EpisodeClass ec;
    ec.word = cls.word;
    for (int idx : cls.support) ec.support.push_back(loader(manifest.records[idx]));
    for (int idx : cls.query) ec.query.push_back(loader(manifest.records[idx]));
    ep.classes.push_back(std::move(ec));
  }
  return ep;
}

CorpusEpisodeSource::CorpusEpisodeSource(const Manifest& manifest, const CorpusIndex& index,
                                         std::map<std::string, std::vector<std::string>> pools,
                                         SamplerConfig config, FeatureLoader loader)
    : manifest_(manifest),
      index_(index),
      pools_(std::move(pools)),
      config_(std::move(config)),
      loader_(std::move(loader)) {
  for (const auto& [lang, pool] : pools_) {
    if (static_cast<int>(pool.size()) < config_.n_way)
      throw std::runtime_error("language " + lang + " has " + std::to_string(pool.size()) +
                               " classes, need " + std::to_string(config_.n_way) +
                               " for " + std::to_string(config_.n_way) + "-way episodes");
  }
}

EpisodeSelection CorpusEpisodeSource::select(const std::string& language,
                                             std::uint64_t index) const {
  auto it = pools_.find(language);
  if (it == pools_.end()) throw std::runtime_error("unknown language: " + language);
  return select_episode(index_, it->second, config_, language, index);
}

Episode CorpusEpisodeSource::make_episode(const std::string& language,
                                          std::uint64_t index) const {
  return load_episode(manifest_, select(language, index), loader_);
}

HoursSimResult simulate_unique_hours(const Manifest& manifest, const CorpusIndex& index,
                                     const std::map<std::string, std::vector<std::string>>& pools,
                                     const BatchComposition& composition,
                                     const SamplerConfig& config, int steps, int runs) {
  HoursSimResult result;
  for (int run = 0; run < runs; ++run) {
    SamplerConfig run_config = config;
    run_config.seed = mix_seed(config.seed, static_cast<std::uint64_t>(run));
    std::set<int> seen;
    for (const auto& [language, per_step] : composition.per_language) {
      auto pool_it = pools.find(language);
      if (pool_it == pools.end()) throw std::runtime_error("unknown language: " + language);
      for (int step = 0; step < steps; ++step) {
        for (int e = 0; e < per_step; ++e) {
          std::uint64_t episode_index = static_cast<std::uint64_t>(step) * per_step + e;
          EpisodeSelection sel =
              select_episode(index, pool_it->second, run_config, language, episode_index);
          for (const auto& cls : sel.classes) {
            seen.insert(cls.support.begin(), cls.support.end());
            seen.insert(cls.query.begin(), cls.query.end());
          }
        }
      }
    }
    double seconds = 0.0;
    for (int idx : seen) seconds += manifest.records[idx].duration_s;
    result.per_run_hours.push_back(seconds / 3600.0);
  }
  double sum = 0.0;
  for (double h : result.per_run_hours) sum += h;
  result.mean_hours = result.per_run_hours.empty() ? 0.0 : sum / result.per_run_hours.size();
  return result;
}

}  // namespace gemcl
