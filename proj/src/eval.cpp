#include "gemcl/eval.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "gemcl/bayes_head.hpp"
#include "gemcl/rng.hpp"

namespace gemcl {

namespace {

double run_episode(const GemclModel& model, const Episode& episode) {
  EpisodeModel fitted;
  for (const auto& cls : episode.classes) {
    std::vector<std::vector<double>> support_z;
    support_z.reserve(cls.support.size());
    for (const auto& f : cls.support)
      support_z.push_back(model.identity_encoder ? encode_identity(f)
                                                 : encode(model.encoder, f));
    fitted = add_class(std::move(fitted), support_z, model.priors, cls.word);
  }
  int correct = 0, total = 0;
  for (int y = 0; y < static_cast<int>(episode.classes.size()); ++y) {
    for (const auto& f : episode.classes[y].query) {
      std::vector<double> q =
          model.identity_encoder ? encode_identity(f) : encode(model.encoder, f);
      if (predict(fitted, q) == y) ++correct;
      ++total;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

EvalReport evaluate_model(const GemclModel& model, const EpisodeSource& source,
                          const std::vector<std::string>& languages, const EvalConfig& config,
                          const std::string& model_id) {
  EvalReport report;
  report.model_id = model_id;
  report.config = config;
  for (const auto& language : languages) {
    LanguageAccuracies acc;
    acc.accuracies.resize(config.episodes_per_language);
    parallel_for(config.episodes_per_language, config.threads, [&](int e) {
      Episode ep = source.make_episode(language, static_cast<std::uint64_t>(e));
      acc.accuracies[e] = run_episode(model, ep);
    });
    double sum = 0.0;
    for (double a : acc.accuracies) sum += a;
    acc.mean = sum / static_cast<double>(acc.accuracies.size());
    report.languages[language] = std::move(acc);
  }
  return report;
}

void save_eval_report_json(const std::string& path, const EvalReport& report) {
  nlohmann::json j;
  j["model_id"] = report.model_id;
  j["config"] = {{"episodes_per_language", report.config.episodes_per_language},
                 {"n_way", report.config.n_way},
                 {"k_shot", report.config.k_shot},
                 {"q_queries", report.config.q_queries},
                 {"bootstrap_resamples", report.config.bootstrap_resamples},
                 {"confidence", report.config.confidence},
                 {"seed", report.config.seed}};
  for (const auto& [lang, acc] : report.languages)
    j["languages"][lang] = {{"accuracies", acc.accuracies}, {"mean", acc.mean}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

EvalReport load_eval_report_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  nlohmann::json j;
  in >> j;
  EvalReport report;
  report.model_id = j.at("model_id").get<std::string>();
  const auto& c = j.at("config");
  report.config.episodes_per_language = c.at("episodes_per_language").get<int>();
  report.config.n_way = c.at("n_way").get<int>();
  report.config.k_shot = c.at("k_shot").get<int>();
  report.config.q_queries = c.at("q_queries").get<int>();
  report.config.bootstrap_resamples = c.at("bootstrap_resamples").get<int>();
  report.config.confidence = c.at("confidence").get<double>();
  report.config.seed = c.at("seed").get<std::uint64_t>();
  if (j.contains("languages")) {
    for (auto it = j.at("languages").begin(); it != j.at("languages").end(); ++it) {
      LanguageAccuracies acc;
      acc.accuracies = it.value().at("accuracies").get<std::vector<double>>();
      acc.mean = it.value().at("mean").get<double>();
      report.languages[it.key()] = std::move(acc);
    }
  }
  return report;
}

std::vector<ComparisonRow> compare_models(const std::map<std::string, EvalReport>& reports,
                                          const std::string& reference) {
  auto ref_it = reports.find(reference);
  if (ref_it == reports.end())
    throw std::runtime_error("reference model not found: " + reference);
  const EvalReport& ref = ref_it->second;

  for (const auto& [id, report] : reports) {
    for (const auto& [lang, acc] : ref.languages)
      if (!report.languages.count(lang))
        throw std::runtime_error("model " + id + " is missing language " + lang);
    for (const auto& [lang, acc] : report.languages)
      if (!ref.languages.count(lang))
        throw std::runtime_error("model " + id + " has extra language " + lang);
    if (report.config.seed != ref.config.seed ||
        report.config.episodes_per_language != ref.config.episodes_per_language)
      throw std::runtime_error("model " + id +
                               " was evaluated with a different seed or episode count; "
                               "comparisons must share episode streams");
  }

  std::vector<ComparisonRow> rows;
  for (const auto& [lang, ref_acc] : ref.languages) {
    for (const auto& [id, report] : reports) {
      if (id == reference) continue;
      const LanguageAccuracies& acc = report.languages.at(lang);
      ComparisonRow row;
      row.language = lang;
      row.model = id;
      row.mean = acc.mean;
      row.ref_mean = ref_acc.mean;
      row.diff = acc.mean - ref_acc.mean;
      row.abs_diff = std::fabs(row.diff);
      BootstrapDiff bd = bootstrap_diff(acc.accuracies, ref_acc.accuracies,
                                        ref.config.bootstrap_resamples, ref.config.confidence,
                                        mix_seed(ref.config.seed, fnv1a64(lang), fnv1a64(id)));
      row.ci_lo = bd.ci_lo;
      row.ci_hi = bd.ci_hi;
      row.significant = bd.significant;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_comparison_csv(const std::string& path, const std::vector<ComparisonRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "language,model,mean,ref_mean,diff,abs_diff,ci_lo,ci_hi,significant\n";
  for (const auto& r : rows)
    out << r.language << ',' << r.model << ',' << format_double(r.mean) << ','
        << format_double(r.ref_mean) << ',' << format_double(r.diff) << ','
        << format_double(r.abs_diff) << ',' << format_double(r.ci_lo) << ','
        << format_double(r.ci_hi) << ',' << (r.significant ? "true" : "false") << '\n';
}

void write_boxplot_csv(const std::string& path, const std::vector<ComparisonRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "model,language,abs_diff\n";
  for (const auto& r : rows)
    out << r.model << ',' << r.language << ',' << format_double(r.abs_diff) << '\n';
}

void write_scatter_csv(const std::string& path, const std::vector<ComparisonRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "language,model,mean,ref_mean,significant\n";
  for (const auto& r : rows)
    out << r.language << ',' << r.model << ',' << format_double(r.mean) << ','
        << format_double(r.ref_mean) << ',' << (r.significant ? "true" : "false") << '\n';
}

}  // namespace gemcl
