#include "gemcl/bayes_head.hpp"

#include <cmath>
#include <stdexcept>

namespace gemcl {

ClassPosterior fit_class(const std::vector<std::vector<double>>& support_embeddings,
                         const PriorParams& priors, std::string class_id) {
  if (support_embeddings.empty()) throw std::invalid_argument("empty support");
  const std::size_t k = support_embeddings.size();
  const std::size_t d = support_embeddings[0].size();
  for (const auto& z : support_embeddings)
    if (z.size() != d) throw std::invalid_argument("dim mismatch");

  ClassPosterior post;
  post.kappa = static_cast<int>(k);
  post.alpha = priors.alpha0() + 0.5 * static_cast<double>(k);
  post.class_id = std::move(class_id);
  post.mu.assign(d, 0.0);
  post.beta.assign(d, priors.beta0());

  // Fixed left-to-right accumulation for reproducibility.
  for (std::size_t j = 0; j < d; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += support_embeddings[i][j];
    post.mu[j] = sum / static_cast<double>(k);
    double ss = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      double dev = support_embeddings[i][j] - post.mu[j];
      ss += dev * dev;
    }
    post.beta[j] += 0.5 * ss;
  }
  return post;
}

double log_predictive(const ClassPosterior& posterior, const std::vector<double>& query) {
  if (static_cast<int>(query.size()) != posterior.dim())
    throw std::invalid_argument("dim mismatch");
  for (double q : query)
    if (!std::isfinite(q)) throw std::invalid_argument("non-finite input");

  const double a = posterior.alpha;
  const double k = static_cast<double>(posterior.kappa);
  // nu * scale^2 = 2 beta (kappa+1) / kappa; the alpha factors cancel.
  const double kappa_ratio = (k + 1.0) / k;
  const double lg = std::lgamma(a + 0.5) - std::lgamma(a);
  const double pi = 3.14159265358979323846;

  double total = 0.0;
  for (int j = 0; j < posterior.dim(); ++j) {
    double u = query[j] - posterior.mu[j];
    double nus2 = 2.0 * kappa_ratio * posterior.beta[j];
    total += lg - 0.5 * std::log(pi * nus2) -
             (a + 0.5) * std::log1p(u * u / nus2);
  }
  return total;
}

std::vector<double> class_log_posteriors(const EpisodeModel& model,
                                         const std::vector<double>& query) {
  if (model.classes.empty()) throw std::invalid_argument("no classes");
  std::vector<double> scores;
  scores.reserve(model.classes.size());
  for (const auto& post : model.classes) scores.push_back(log_predictive(post, query));
  return scores;
}

int predict(const EpisodeModel& model, const std::vector<double>& query) {
  std::vector<double> scores = class_log_posteriors(model, query);
  int best = 0;
  for (int i = 1; i < static_cast<int>(scores.size()); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

EpisodeModel add_class(EpisodeModel model,
                       const std::vector<std::vector<double>>& support_embeddings,
                       const PriorParams& priors, std::string class_id) {
  ClassPosterior post = fit_class(support_embeddings, priors, std::move(class_id));
  if (model.classes.empty() && model.embed_dim == 0) {
    model.embed_dim = post.dim();
  } else if (post.dim() != model.embed_dim) {
    throw std::invalid_argument("dim mismatch");
  }
  model.classes.push_back(std::move(post));
  return model;
}

EpisodeModel fit_episode(const std::vector<std::vector<std::vector<double>>>& class_supports,
                         const PriorParams& priors) {
  EpisodeModel model;
  for (const auto& support : class_supports) model = add_class(std::move(model), support, priors);
  return model;
}

}  // namespace gemcl
