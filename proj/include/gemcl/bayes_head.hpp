#pragma once

// Generative Bayes classifier head: each class is modelled by a diagonal
// Gaussian whose mean and precision carry a Normal-Gamma prior. Fitting a
// class is a closed-form conjugate update of the support statistics;
// prediction scores a query under each class's Student's-t posterior
// predictive and takes the argmax.

#include <string>
#include <vector>

#include "gemcl/math_util.hpp"

namespace gemcl {

// Trainable prior scalars. alpha0/beta0 live behind a softplus
// reparameterization so unconstrained optimizer steps keep them positive.
// The mean prior is uninformative: kappa0 = mu0 = 0, never updated.
struct PriorParams {
  double raw_alpha0 = 0.541324854612918108;  // softplus(raw) = 1.0
  double raw_beta0 = 0.541324854612918108;

  static constexpr double kappa0 = 0.0;
  static constexpr double mu0 = 0.0;

  double alpha0() const { return softplus(raw_alpha0); }
  double beta0() const { return softplus(raw_beta0); }

  static PriorParams from_values(double alpha0, double beta0) {
    PriorParams p;
    p.raw_alpha0 = inv_softplus(alpha0);
    p.raw_beta0 = inv_softplus(beta0);
    return p;
  }
};

// Per-class Normal-Gamma posterior after absorbing K support embeddings:
//   kappa = K
//   mu    = sample mean
//   alpha = alpha0 + K/2            (shared across dimensions)
//   beta  = beta0 + 1/2 sum (z - mu)^2   (per dimension)
struct ClassPosterior {
  int kappa = 0;
  std::vector<double> mu;
  double alpha = 0.0;
  std::vector<double> beta;
  std::string class_id;

  int dim() const { return static_cast<int>(mu.size()); }
};

// An episode's fitted classifier: one posterior per class, in episode class
// order. Argmax ties resolve to the lowest index.
struct EpisodeModel {
  std::vector<ClassPosterior> classes;
  int embed_dim = 0;

  int n_classes() const { return static_cast<int>(classes.size()); }
};

ClassPosterior fit_class(const std::vector<std::vector<double>>& support_embeddings,
                         const PriorParams& priors, std::string class_id = {});

// Sum over dimensions of the log Student's-t posterior predictive:
// per dimension nu = 2*alpha, scale^2 = beta*(kappa+1)/(alpha*kappa).
double log_predictive(const ClassPosterior& posterior, const std::vector<double>& query);

std::vector<double> class_log_posteriors(const EpisodeModel& model,
                                         const std::vector<double>& query);

int predict(const EpisodeModel& model, const std::vector<double>& query);

// Appends a freshly fitted class; existing posteriors are not touched.
EpisodeModel add_class(EpisodeModel model,
                       const std::vector<std::vector<double>>& support_embeddings,
                       const PriorParams& priors, std::string class_id = {});

EpisodeModel fit_episode(const std::vector<std::vector<std::vector<double>>>& class_supports,
                         const PriorParams& priors);

}  // namespace gemcl
