// gemcl: few-shot spoken word classification workflows.
//
// Subcommands cover the full pipeline: ingest a corpus manifest, make
// meta-class splits, extract MFCC features into a cache, meta-train a
// model, evaluate it per language, compare models with bootstrap CIs, and
// simulate the unique hours of audio a training run draws. Every command
// emits a run manifest (seeds, config, input hashes) so it can be re-run
// bit-identically. Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gemcl/checkpoint.hpp"
#include "gemcl/episodes.hpp"
#include "gemcl/eval.hpp"
#include "gemcl/manifest.hpp"
#include "gemcl/mfcc.hpp"
#include "gemcl/rng.hpp"
#include "gemcl/synthetic.hpp"
#include "gemcl/train.hpp"
#include "gemcl/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string utc_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

// Accumulates the run manifest while a command executes.
class RunManifest {
 public:
  RunManifest(std::string command) {
    j_["command"] = std::move(command);
    j_["tool_version"] = kVersion;
    j_["started_at"] = utc_now();
    j_["inputs"] = json::object();
    j_["config"] = json::object();
  }

  void input(const std::string& path) { j_["inputs"][path] = gemcl::file_hash_hex(path); }
  json& config() { return j_["config"]; }

  void write(const std::string& path) {
    j_["finished_at"] = utc_now();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j_.dump(2) << "\n";
  }

 private:
  json j_;
};

// Expands "--config file" into the equivalent command-line flags for every
// key=value line whose flag is not already present, giving the precedence
// flags > config file > defaults. Unknown keys fail option parsing.
std::vector<std::string> apply_config_file(std::vector<std::string> args) {
  std::string config_path;
  for (std::size_t i = 0; i + 1 < args.size(); ++i)
    if (args[i] == "--config") config_path = args[i + 1];
  if (config_path.empty()) return args;

  std::ifstream in(config_path);
  if (!in) throw UsageError("cannot open config file: " + config_path);
  std::string line;
  while (std::getline(in, line)) {
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto strip = [](std::string s) {
      std::size_t b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      std::size_t e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    std::string key = strip(line.substr(0, eq));
    std::string value = strip(line.substr(eq + 1));
    if (key.empty()) continue;
    std::string flag = "--" + key;
    bool given = false;
    for (const auto& a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) given = true;
    if (!given) {
      args.push_back(flag);
      if (!value.empty()) args.push_back(value);
    }
  }
  return args;
}

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

gemcl::BatchComposition regime_composition(const std::string& regime,
                                           const std::vector<std::string>& languages,
                                           int batch_episodes) {
  gemcl::BatchComposition comp;
  if (regime == "mono") {
    if (languages.size() != 1)
      throw UsageError("--regime mono needs exactly one language, got " +
                       std::to_string(languages.size()));
    comp.per_language.push_back({languages[0], batch_episodes});
  } else if (regime == "bi") {
    if (languages.size() != 2) throw UsageError("--regime bi needs exactly two languages");
    if (batch_episodes % 2 != 0)
      throw UsageError("--regime bi needs an even batch size, got " +
                       std::to_string(batch_episodes));
    for (const auto& lang : languages)
      comp.per_language.push_back({lang, batch_episodes / 2});
  } else if (regime == "multi") {
    if (languages.size() < 2) throw UsageError("--regime multi needs at least two languages");
    if (batch_episodes % static_cast<int>(languages.size()) != 0)
      throw UsageError("batch size " + std::to_string(batch_episodes) +
                       " is not divisible by " + std::to_string(languages.size()) +
                       " languages");
    for (const auto& lang : languages)
      comp.per_language.push_back({lang, batch_episodes / static_cast<int>(languages.size())});
  } else {
    throw UsageError("unknown regime: " + regime);
  }
  return comp;
}

std::string cache_path_for(const std::string& cache_dir, const std::string& clip_path) {
  return (fs::path(cache_dir) / (clip_path + ".mfcc")).string();
}

// Feature lookup used by train/eval: cache hit first, else compute from
// audio. Features are quantized to f32 either way, so both paths agree.
gemcl::FeatureLoader make_loader(const std::string& cache_dir, const std::string& audio_root) {
  return [cache_dir, audio_root](const gemcl::ManifestRecord& rec) -> gemcl::FeatureMatrix {
    if (!cache_dir.empty()) {
      std::string cached = cache_path_for(cache_dir, rec.clip_path);
      if (fs::exists(cached)) {
        gemcl::FeatureMatrix f = gemcl::read_feature_cache(cached);
        f.sample_id = rec.clip_path;
        return f;
      }
    }
    if (!audio_root.empty()) {
      gemcl::Waveform wave = gemcl::read_audio((fs::path(audio_root) / rec.clip_path).string());
      gemcl::FeatureMatrix f = gemcl::quantize_f32(gemcl::mfcc(wave));
      f.sample_id = rec.clip_path;
      return f;
    }
    throw std::runtime_error("no feature source for " + rec.clip_path +
                             "; pass --cache-dir and/or --audio-root");
  };
}

// Class pools for the requested languages: meta-train or meta-test words
// for languages in the split file, all eligible words for unseen languages
// (meta-test side only).
std::map<std::string, std::vector<std::string>> build_pools(
    const gemcl::CorpusIndex& index, const gemcl::MetaSplit& split,
    const std::vector<std::string>& languages, bool meta_train_side, int k_shot, int q_queries) {
  std::map<std::string, std::vector<std::string>> pools;
  for (const auto& lang : languages) {
    if (!index.has_language(lang)) throw UsageError("unknown language: " + lang);
    auto split_it = split.languages.find(lang);
    if (split_it != split.languages.end()) {
      const auto& words =
          meta_train_side ? split_it->second.meta_train : split_it->second.meta_test;
      // keep only words still eligible under the manifest
      auto eligible = gemcl::eligible_words(index, lang, k_shot, q_queries);
      std::set<std::string> ok(eligible.begin(), eligible.end());
      std::vector<std::string> pool;
      for (const auto& w : words)
        if (ok.count(w)) pool.push_back(w);
      pools[lang] = std::move(pool);
    } else if (!meta_train_side) {
      pools[lang] = gemcl::eligible_words(index, lang, k_shot, q_queries);
    } else {
      throw UsageError("language " + lang + " is not in the meta split");
    }
  }
  return pools;
}

// ---- subcommand implementations ----

struct IngestOpts {
  std::vector<std::string> inputs;
  std::string format = "generic_manifest_csv";
  std::string out;
};

int run_ingest(const IngestOpts& o) {
  gemcl::ManifestFormat fmt;
  if (o.format == "mswc_splits_csv")
    fmt = gemcl::ManifestFormat::mswc_splits_csv;
  else if (o.format == "generic_manifest_csv")
    fmt = gemcl::ManifestFormat::generic_manifest_csv;
  else
    throw UsageError("unknown format: " + o.format);

  RunManifest run("ingest");
  for (const auto& p : o.inputs) run.input(p);
  run.config()["format"] = o.format;
  run.config()["out"] = o.out;

  gemcl::Manifest manifest = gemcl::ingest_all(o.inputs, fmt);
  gemcl::save_manifest_json(o.out, manifest);
  run.write(o.out + ".run.json");
  std::cout << "wrote " << manifest.records.size() << " records to " << o.out << "\n";
  return 0;
}

struct SplitOpts {
  std::string manifest;
  std::string languages;
  std::uint64_t seed = 0;
  std::string out;
};

int run_split(const SplitOpts& o) {
  RunManifest run("split");
  run.input(o.manifest);
  run.config()["languages"] = o.languages;
  run.config()["seed"] = o.seed;

  gemcl::Manifest manifest = gemcl::load_manifest(o.manifest);
  gemcl::CorpusIndex index = gemcl::CorpusIndex::build(manifest);

  gemcl::MetaSplit split;
  for (const auto& lang : split_csv_list(o.languages)) {
    if (!index.has_language(lang)) throw UsageError("unknown language: " + lang);
    auto words = gemcl::eligible_words(index, lang);
    if (words.size() < 2)
      throw std::runtime_error("language " + lang + " has only " +
                               std::to_string(words.size()) + " eligible words");
    split.languages[lang] =
        gemcl::make_meta_split(words, gemcl::mix_seed(o.seed, gemcl::fnv1a64(lang)));
  }
  gemcl::save_meta_split_json(o.out, split);
  run.write(o.out + ".run.json");
  for (const auto& [lang, ls] : split.languages)
    std::cout << lang << ": " << ls.meta_train.size() << " meta-train / "
              << ls.meta_test.size() << " meta-test classes\n";
  return 0;
}

struct FeaturesOpts {
  std::string manifest;
  std::string audio_root;
  std::string cache_dir;
  bool resample = false;
  int threads = 1;
};

int run_features(const FeaturesOpts& o) {
  RunManifest run("features");
  run.input(o.manifest);
  run.config()["audio_root"] = o.audio_root;
  run.config()["cache_dir"] = o.cache_dir;

  gemcl::Manifest manifest = gemcl::load_manifest(o.manifest);
  fs::create_directories(o.cache_dir);
  const int n = static_cast<int>(manifest.records.size());
  std::vector<int> status(n, 0);  // 0 processed, 1 skipped, 2 failed
  std::vector<std::string> errors(n);

  gemcl::parallel_for(n, o.threads, [&](int i) {
    const auto& rec = manifest.records[i];
    fs::path in_path = fs::path(o.audio_root) / rec.clip_path;
    std::string out_path = cache_path_for(o.cache_dir, rec.clip_path);
    try {
      if (fs::exists(out_path) && fs::exists(in_path) &&
          fs::last_write_time(out_path) >= fs::last_write_time(in_path)) {
        status[i] = 1;
        return;
      }
      gemcl::Waveform wave = gemcl::read_audio(in_path.string(), o.resample);
      gemcl::FeatureMatrix f = gemcl::quantize_f32(gemcl::mfcc(wave));
      fs::create_directories(fs::path(out_path).parent_path());
      gemcl::write_feature_cache(out_path, f);
    } catch (const std::exception& e) {
      status[i] = 2;
      errors[i] = e.what();
    }
  });

  int processed = 0, skipped = 0, failed = 0;
  for (int i = 0; i < n; ++i) {
    if (status[i] == 0) ++processed;
    if (status[i] == 1) ++skipped;
    if (status[i] == 2) {
      ++failed;
      std::cerr << "failed: " << manifest.records[i].clip_path << ": " << errors[i] << "\n";
    }
  }
  run.config()["processed"] = processed;
  run.config()["skipped"] = skipped;
  run.config()["failed"] = failed;
  run.write((fs::path(o.cache_dir) / "run.json").string());
  std::cout << "processed " << processed << ", skipped " << skipped << ", failed " << failed
            << "\n";
  return failed == 0 ? 0 : 1;
}

struct TrainOpts {
  std::string manifest;
  std::string split;
  std::string regime = "mono";
  std::string languages;
  std::string out;
  std::string cache_dir;
  std::string audio_root;
  bool episode_log = false;
  gemcl::TrainConfig config;
  int hidden = 128;
  int embed_dim = 64;
  double init_alpha0 = 1.0;
  double init_beta0 = 1.0;
};

// Audit trail: the clip ids of every episode the schedule draws, replayed
// from the seeds without touching features.
void write_episode_log(const std::string& path, const gemcl::CorpusEpisodeSource& source,
                       const gemcl::Manifest& manifest,
                       const gemcl::BatchComposition& comp, int steps) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open episode log for writing: " + path);
  for (int step = 0; step < steps; ++step) {
    for (const auto& [language, per_step] : comp.per_language) {
      for (int rank = 0; rank < per_step; ++rank) {
        std::uint64_t index = static_cast<std::uint64_t>(step) * per_step + rank;
        gemcl::EpisodeSelection sel = source.select(language, index);
        json classes = json::array();
        for (const auto& cls : sel.classes) {
          json support = json::array(), query = json::array();
          for (int i : cls.support) support.push_back(manifest.records[i].clip_path);
          for (int i : cls.query) query.push_back(manifest.records[i].clip_path);
          classes.push_back({{"word", cls.word}, {"support", support}, {"query", query}});
        }
        json rec = {{"step", step + 1},
                    {"language", language},
                    {"episode_index", index},
                    {"classes", classes}};
        out << rec.dump() << "\n";
      }
    }
  }
}

int run_train(const TrainOpts& o) {
  RunManifest run("train");
  run.input(o.manifest);
  run.input(o.split);

  gemcl::Manifest manifest = gemcl::load_manifest(o.manifest);
  gemcl::CorpusIndex index = gemcl::CorpusIndex::build(manifest);
  gemcl::MetaSplit split = gemcl::load_meta_split_json(o.split);

  std::vector<std::string> languages = split_csv_list(o.languages);
  gemcl::BatchComposition comp =
      regime_composition(o.regime, languages, o.config.batch_episodes);

  auto pools = build_pools(index, split, languages, /*meta_train_side=*/true,
                           o.config.k_shot, o.config.q_queries);

  gemcl::SamplerConfig sampler;
  sampler.n_way = o.config.n_way;
  sampler.k_shot = o.config.k_shot;
  sampler.q_queries = o.config.q_queries;
  sampler.seed = gemcl::mix_seed(o.config.seed, gemcl::fnv1a64("train-sampler"));
  gemcl::CorpusEpisodeSource source(manifest, index, pools, sampler,
                                    make_loader(o.cache_dir, o.audio_root));

  gemcl::GemclModel init;
  init.init_seed = o.config.seed;
  init.encoder = gemcl::init_encoder(o.config.seed, o.hidden, o.embed_dim, 13);
  init.priors = gemcl::PriorParams::from_values(o.init_alpha0, o.init_beta0);

  fs::create_directories(o.out);
  std::ofstream log_out(fs::path(o.out) / "train_log.jsonl");
  if (!log_out) throw std::runtime_error("cannot open training log for writing");

  gemcl::TrainResult result =
      gemcl::meta_train(source, comp, init, o.config, [&](const gemcl::TrainLogRecord& rec) {
        json j = {{"step", rec.step},
                  {"loss", rec.loss},
                  {"query_accuracy", rec.query_accuracy},
                  {"wall_ms", rec.wall_ms}};
        log_out << j.dump() << "\n";
      });
  log_out.close();

  std::string ckpt_path = (fs::path(o.out) / "checkpoint.bin").string();
  gemcl::save_checkpoint(ckpt_path, result.model);

  if (o.episode_log)
    write_episode_log((fs::path(o.out) / "episodes.jsonl").string(), source, manifest, comp,
                      o.config.steps);

  json comp_json = json::object();
  for (const auto& [lang, count] : comp.per_language) comp_json[lang] = count;
  run.config() = {{"regime", o.regime},
                  {"languages", o.languages},
                  {"composition", comp_json},
                  {"steps", o.config.steps},
                  {"batch_episodes", o.config.batch_episodes},
                  {"n_way", o.config.n_way},
                  {"k_shot", o.config.k_shot},
                  {"q_queries", o.config.q_queries},
                  {"lr", o.config.lr},
                  {"weight_decay", o.config.weight_decay},
                  {"seed", o.config.seed},
                  {"sampler_seed", sampler.seed},
                  {"hidden", o.hidden},
                  {"embed_dim", o.embed_dim},
                  {"init_alpha0", o.init_alpha0},
                  {"init_beta0", o.init_beta0},
                  {"threads", o.config.threads}};
  run.write((fs::path(o.out) / "run.json").string());

  if (!result.log.empty())
    std::cout << "final loss " << result.log.back().loss << ", query accuracy "
              << result.log.back().query_accuracy << "\n";
  std::cout << "checkpoint: " << ckpt_path << "\n";
  return 0;
}

struct EvalOpts {
  std::string checkpoint;
  std::string manifest;
  std::string split;
  std::string languages;
  std::string out;
  std::string cache_dir;
  std::string audio_root;
  std::string model_id;
  gemcl::EvalConfig config;
};

int run_eval(const EvalOpts& o) {
  RunManifest run("eval");
  run.input(o.checkpoint);
  run.input(o.manifest);
  run.input(o.split);

  gemcl::Manifest manifest = gemcl::load_manifest(o.manifest);
  gemcl::CorpusIndex index = gemcl::CorpusIndex::build(manifest);
  gemcl::MetaSplit split = gemcl::load_meta_split_json(o.split);
  gemcl::GemclModel model = gemcl::load_checkpoint(o.checkpoint);

  std::vector<std::string> languages = split_csv_list(o.languages);
  for (const auto& lang : languages) {
    if (!index.has_language(lang)) throw UsageError("unknown language: " + lang);
    if (!gemcl::language_eligible_for_eval(index, lang, o.config.n_way, o.config.k_shot,
                                           o.config.q_queries))
      throw std::runtime_error("language " + lang + " lacks classes for " +
                               std::to_string(o.config.n_way) + "-way evaluation");
  }

  auto pools = build_pools(index, split, languages, /*meta_train_side=*/false,
                           o.config.k_shot, o.config.q_queries);

  gemcl::SamplerConfig sampler;
  sampler.n_way = o.config.n_way;
  sampler.k_shot = o.config.k_shot;
  sampler.q_queries = o.config.q_queries;
  // model-independent stream: two models with the same seed are paired
  sampler.seed = gemcl::mix_seed(o.config.seed, gemcl::fnv1a64("eval-sampler"));
  gemcl::CorpusEpisodeSource source(manifest, index, pools, sampler,
                                    make_loader(o.cache_dir, o.audio_root));

  std::string model_id =
      o.model_id.empty() ? fs::path(o.checkpoint).stem().string() : o.model_id;
  gemcl::EvalReport report = gemcl::evaluate_model(model, source, languages, o.config, model_id);

  fs::create_directories(o.out);
  std::string report_path = (fs::path(o.out) / "report.json").string();
  gemcl::save_eval_report_json(report_path, report);

  run.config() = {{"model_id", model_id},
                  {"languages", o.languages},
                  {"episodes_per_language", o.config.episodes_per_language},
                  {"n_way", o.config.n_way},
                  {"k_shot", o.config.k_shot},
                  {"q_queries", o.config.q_queries},
                  {"seed", o.config.seed},
                  {"sampler_seed", sampler.seed},
                  {"threads", o.config.threads}};
  run.write((fs::path(o.out) / "run.json").string());

  for (const auto& [lang, acc] : report.languages)
    std::cout << lang << ": mean accuracy " << acc.mean << "\n";
  std::cout << "report: " << report_path << "\n";
  return 0;
}

struct CompareOpts {
  std::vector<std::string> reports;
  std::string reference;
  std::string out;
};

int run_compare(const CompareOpts& o) {
  RunManifest run("compare");
  std::map<std::string, gemcl::EvalReport> reports;
  for (const auto& path : o.reports) {
    run.input(path);
    gemcl::EvalReport r = gemcl::load_eval_report_json(path);
    if (reports.count(r.model_id))
      throw std::runtime_error("duplicate model id in reports: " + r.model_id);
    reports[r.model_id] = std::move(r);
  }
  if (!reports.count(o.reference)) throw UsageError("reference model not found: " + o.reference);

  auto rows = gemcl::compare_models(reports, o.reference);

  fs::create_directories(o.out);
  gemcl::write_comparison_csv((fs::path(o.out) / "comparison.csv").string(), rows);
  gemcl::write_boxplot_csv((fs::path(o.out) / "boxplot.csv").string(), rows);
  gemcl::write_scatter_csv((fs::path(o.out) / "scatter.csv").string(), rows);

  run.config() = {{"reference", o.reference}, {"rows", rows.size()}};
  run.write((fs::path(o.out) / "run.json").string());
  std::cout << "wrote " << rows.size() << " comparison rows to " << o.out << "\n";
  return 0;
}

struct HoursOpts {
  std::string manifest;
  std::string split;
  std::string regime = "mono";
  std::string languages;
  std::string out;
  int steps = 2000;
  int runs = 10;
  int batch_episodes = 16;
  int n_way = 25;
  int k_shot = 5;
  int q_queries = 5;
  std::uint64_t seed = 0;
};

int run_simulate_hours(const HoursOpts& o) {
  RunManifest run("simulate-hours");
  run.input(o.manifest);
  run.input(o.split);

  gemcl::Manifest manifest = gemcl::load_manifest(o.manifest);
  gemcl::CorpusIndex index = gemcl::CorpusIndex::build(manifest);
  gemcl::MetaSplit split = gemcl::load_meta_split_json(o.split);

  std::vector<std::string> languages = split_csv_list(o.languages);
  gemcl::BatchComposition comp = regime_composition(o.regime, languages, o.batch_episodes);
  auto pools =
      build_pools(index, split, languages, /*meta_train_side=*/true, o.k_shot, o.q_queries);

  gemcl::SamplerConfig sampler;
  sampler.n_way = o.n_way;
  sampler.k_shot = o.k_shot;
  sampler.q_queries = o.q_queries;
  sampler.seed = gemcl::mix_seed(o.seed, gemcl::fnv1a64("train-sampler"));

  gemcl::HoursSimResult result =
      gemcl::simulate_unique_hours(manifest, index, pools, comp, sampler, o.steps, o.runs);

  std::ofstream out(o.out);
  if (!out) throw std::runtime_error("cannot open for writing: " + o.out);
  out << "run,hours\n";
  out.precision(10);
  for (std::size_t r = 0; r < result.per_run_hours.size(); ++r)
    out << r << ',' << result.per_run_hours[r] << "\n";
  out << "mean," << result.mean_hours << "\n";

  run.config() = {{"regime", o.regime}, {"languages", o.languages}, {"steps", o.steps},
                  {"runs", o.runs},     {"seed", o.seed},           {"n_way", o.n_way}};
  run.write(o.out + ".run.json");
  std::cout << "mean unique hours over " << o.runs << " runs: " << result.mean_hours << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"few-shot spoken word classification toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  IngestOpts ingest_opts;
  auto* ingest_cmd = app.add_subcommand("ingest", "normalize a corpus CSV into a manifest");
  ingest_cmd->add_option("--input", ingest_opts.inputs, "input CSV file(s)")
      ->required()
      ->check(CLI::ExistingFile);
  ingest_cmd->add_option("--format", ingest_opts.format,
                         "mswc_splits_csv or generic_manifest_csv");
  ingest_cmd->add_option("--out", ingest_opts.out, "output manifest JSON")->required();

  SplitOpts split_opts;
  auto* split_cmd = app.add_subcommand("split", "make 70:30 meta-class splits per language");
  split_cmd->add_option("--manifest", split_opts.manifest)->required()->check(CLI::ExistingFile);
  split_cmd->add_option("--languages", split_opts.languages, "comma-separated list")->required();
  split_cmd->add_option("--seed", split_opts.seed);
  split_cmd->add_option("--out", split_opts.out, "output split JSON")->required();

  FeaturesOpts features_opts;
  auto* features_cmd = app.add_subcommand("features", "extract MFCCs into a feature cache");
  features_cmd->add_option("--manifest", features_opts.manifest)
      ->required()
      ->check(CLI::ExistingFile);
  features_cmd->add_option("--audio-root", features_opts.audio_root)->required();
  features_cmd->add_option("--cache-dir", features_opts.cache_dir)
      ->envname("GEMCL_CACHE_ROOT")
      ->required();
  features_cmd->add_flag("--resample", features_opts.resample,
                         "linearly resample non-16k input");
  features_cmd->add_option("--threads", features_opts.threads);

  TrainOpts train_opts;
  std::string train_config_file, eval_config_file;
  auto* train_cmd = app.add_subcommand("train", "meta-train a model");
  train_cmd->add_option("--config", train_config_file,
                        "key=value config file; flags take precedence");
  train_cmd->add_option("--manifest", train_opts.manifest)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--split", train_opts.split)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--regime", train_opts.regime, "mono, bi or multi")->required();
  train_cmd->add_option("--languages", train_opts.languages, "comma-separated list")->required();
  train_cmd->add_option("--out", train_opts.out, "output directory")->required();
  train_cmd->add_option("--cache-dir", train_opts.cache_dir)->envname("GEMCL_CACHE_ROOT");
  train_cmd->add_option("--audio-root", train_opts.audio_root);
  train_cmd->add_flag("--episode-log", train_opts.episode_log,
                      "write episodes.jsonl with every sampled clip id");
  train_cmd->add_option("--steps", train_opts.config.steps);
  train_cmd->add_option("--batch-episodes", train_opts.config.batch_episodes);
  train_cmd->add_option("--n-way", train_opts.config.n_way);
  train_cmd->add_option("--k-shot", train_opts.config.k_shot);
  train_cmd->add_option("--q-queries", train_opts.config.q_queries);
  train_cmd->add_option("--lr", train_opts.config.lr);
  train_cmd->add_option("--weight-decay", train_opts.config.weight_decay);
  train_cmd->add_option("--seed", train_opts.config.seed);
  train_cmd->add_option("--threads", train_opts.config.threads);
  train_cmd->add_option("--hidden", train_opts.hidden);
  train_cmd->add_option("--embed-dim", train_opts.embed_dim);
  train_cmd->add_option("--init-alpha0", train_opts.init_alpha0);
  train_cmd->add_option("--init-beta0", train_opts.init_beta0);

  EvalOpts eval_opts;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint per language");
  eval_cmd->add_option("--config", eval_config_file,
                       "key=value config file; flags take precedence");
  eval_cmd->add_option("--checkpoint", eval_opts.checkpoint)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--manifest", eval_opts.manifest)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--split", eval_opts.split)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--languages", eval_opts.languages, "comma-separated list")->required();
  eval_cmd->add_option("--out", eval_opts.out, "output directory")->required();
  eval_cmd->add_option("--cache-dir", eval_opts.cache_dir)->envname("GEMCL_CACHE_ROOT");
  eval_cmd->add_option("--audio-root", eval_opts.audio_root);
  eval_cmd->add_option("--model-id", eval_opts.model_id, "defaults to the checkpoint stem");
  eval_cmd->add_option("--episodes", eval_opts.config.episodes_per_language);
  eval_cmd->add_option("--n-way", eval_opts.config.n_way);
  eval_cmd->add_option("--k-shot", eval_opts.config.k_shot);
  eval_cmd->add_option("--q-queries", eval_opts.config.q_queries);
  eval_cmd->add_option("--resamples", eval_opts.config.bootstrap_resamples);
  eval_cmd->add_option("--confidence", eval_opts.config.confidence);
  eval_cmd->add_option("--seed", eval_opts.config.seed);
  eval_cmd->add_option("--threads", eval_opts.config.threads);

  CompareOpts compare_opts;
  auto* compare_cmd = app.add_subcommand("compare", "compare models against a reference");
  compare_cmd->add_option("--reports", compare_opts.reports, "eval report JSON files")
      ->required()
      ->check(CLI::ExistingFile);
  compare_cmd->add_option("--reference", compare_opts.reference, "reference model id")
      ->required();
  compare_cmd->add_option("--out", compare_opts.out, "output directory")->required();

  HoursOpts hours_opts;
  auto* hours_cmd =
      app.add_subcommand("simulate-hours", "estimate unique audio hours drawn by training");
  hours_cmd->add_option("--manifest", hours_opts.manifest)->required()->check(CLI::ExistingFile);
  hours_cmd->add_option("--split", hours_opts.split)->required()->check(CLI::ExistingFile);
  hours_cmd->add_option("--regime", hours_opts.regime)->required();
  hours_cmd->add_option("--languages", hours_opts.languages)->required();
  hours_cmd->add_option("--steps", hours_opts.steps);
  hours_cmd->add_option("--runs", hours_opts.runs);
  hours_cmd->add_option("--batch-episodes", hours_opts.batch_episodes);
  hours_cmd->add_option("--n-way", hours_opts.n_way);
  hours_cmd->add_option("--k-shot", hours_opts.k_shot);
  hours_cmd->add_option("--q-queries", hours_opts.q_queries);
  hours_cmd->add_option("--seed", hours_opts.seed);
  hours_cmd->add_option("--out", hours_opts.out, "output CSV")->required();

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = apply_config_file(std::move(args));
    // CLI11 consumes reversed argument vectors
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*ingest_cmd) return run_ingest(ingest_opts);
    if (*split_cmd) return run_split(split_opts);
    if (*features_cmd) return run_features(features_opts);
    if (*train_cmd) return run_train(train_opts);
    if (*eval_cmd) return run_eval(eval_opts);
    if (*compare_cmd) return run_compare(compare_opts);
    if (*hours_cmd) return run_simulate_hours(hours_opts);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
