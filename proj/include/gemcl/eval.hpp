#pragma once

// Meta-testing with frozen parameters, plus the statistics layer: per
// language accuracy vectors, bootstrap CIs on mean differences between
// models, and CSV emission for box-plot / scatter consumers. Episode
// streams depend only on (seed, language, index), so two models evaluated
// with the same seed see identical episodes.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gemcl/bootstrap.hpp"
#include "gemcl/train.hpp"

namespace gemcl {

struct EvalConfig {
  int episodes_per_language = 100;
  int n_way = 25;
  int k_shot = 5;
  int q_queries = 5;
  int bootstrap_resamples = 9999;
  double confidence = 95.0;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct LanguageAccuracies {
  std::vector<double> accuracies;  // one per episode, each k/(N*Q)
  double mean = 0.0;
};

struct EvalReport {
  std::string model_id;
  EvalConfig config;
  std::map<std::string, LanguageAccuracies> languages;
};

// Fits the Bayes head on each episode's support set and scores its queries;
// meta-parameters stay frozen throughout.
EvalReport evaluate_model(const GemclModel& model, const EpisodeSource& source,
                          const std::vector<std::string>& languages, const EvalConfig& config,
                          const std::string& model_id = {});

void save_eval_report_json(const std::string& path, const EvalReport& report);
EvalReport load_eval_report_json(const std::string& path);

struct ComparisonRow {
  std::string language;
  std::string model;
  double mean = 0.0;
  double ref_mean = 0.0;
  double diff = 0.0;      // mean - ref_mean
  double abs_diff = 0.0;
  double ci_lo = 0.0;     // bootstrap CI on the mean difference
  double ci_hi = 0.0;
  bool significant = false;
};

// One row per (language, non-reference model). All reports must cover the
// same languages with the same evaluation seed and episode count.
std::vector<ComparisonRow> compare_models(const std::map<std::string, EvalReport>& reports,
                                          const std::string& reference);

void write_comparison_csv(const std::string& path, const std::vector<ComparisonRow>& rows);
// model,language,abs_diff — long-form data for box plots.
void write_boxplot_csv(const std::string& path, const std::vector<ComparisonRow>& rows);
// language,model,mean,ref_mean,significant — per-language scatter data.
void write_scatter_csv(const std::string& path, const std::vector<ComparisonRow>& rows);

}  // namespace gemcl
