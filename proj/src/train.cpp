#include "gemcl/train.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "gemcl/math_util.hpp"

namespace gemcl {

namespace {

void check_finite(const std::vector<double>& v) {
  if (!all_finite(v)) throw std::runtime_error("diverged");
}

void axpy(std::vector<double>& y, const std::vector<double>& x, double s) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += s * x[i];
}

// One Adam tensor update. Decay is applied multiplicatively before the
// moment update when decay > 0.
void adam_update(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                 std::vector<double>& v, double lr, double decay, double b1, double b2,
                 double eps, double bc1, double bc2) {
  check_finite(g);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (decay > 0.0) p[i] *= 1.0 - lr * decay;
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    double mhat = m[i] / bc1;
    double vhat = v[i] / bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void adam_update_scalar(double& p, double g, double& m, double& v, double lr, double b1,
                        double b2, double eps, double bc1, double bc2) {
  if (!std::isfinite(g)) throw std::runtime_error("diverged");
  m = b1 * m + (1.0 - b1) * g;
  v = b2 * v + (1.0 - b2) * g * g;
  p -= lr * (m / bc1) / (std::sqrt(v / bc2) + eps);
}

}  // namespace

EpisodeResult episode_loss(const MlpEncoderParams& params, const PriorParams& priors,
                           const Episode& episode) {
  const int n_way = static_cast<int>(episode.classes.size());
  if (n_way < 2) throw std::invalid_argument("degenerate episode: need at least 2 classes");
  const int d = params.out_dim;

  // Forward: encode supports and queries, keeping tapes for the reverse pass.
  std::vector<std::vector<std::vector<double>>> support_z(n_way);
  std::vector<std::vector<EncoderTape>> support_tapes(n_way);
  std::vector<std::vector<std::vector<double>>> query_z(n_way);
  std::vector<std::vector<EncoderTape>> query_tapes(n_way);
  int total_queries = 0;
  for (int c = 0; c < n_way; ++c) {
    const EpisodeClass& cls = episode.classes[c];
    if (cls.support.empty() || cls.query.empty())
      throw std::invalid_argument("degenerate episode: empty support or query set");
    support_z[c].resize(cls.support.size());
    support_tapes[c].resize(cls.support.size());
    for (std::size_t i = 0; i < cls.support.size(); ++i)
      support_z[c][i] = encode(params, cls.support[i], &support_tapes[c][i]);
    query_z[c].resize(cls.query.size());
    query_tapes[c].resize(cls.query.size());
    for (std::size_t i = 0; i < cls.query.size(); ++i)
      query_z[c][i] = encode(params, cls.query[i], &query_tapes[c][i]);
    total_queries += static_cast<int>(cls.query.size());
  }

  EpisodeModel model;
  for (int c = 0; c < n_way; ++c)
    model = add_class(std::move(model), support_z[c], priors, episode.classes[c].word);

  // Classes usually share K, but the loss does not assume it: alpha and the
  // digamma difference are taken per class.
  std::vector<double> dgam(n_way);
  for (int c = 0; c < n_way; ++c)
    dgam[c] = digamma(model.classes[c].alpha + 0.5) - digamma(model.classes[c].alpha);

  EpisodeResult result;
  result.grads.encoder = EncoderGrads::zeros_like(params);

  // Accumulated score gradients with respect to each class's posterior
  // statistics; the support path is resolved after the query loop.
  std::vector<std::vector<double>> grad_mu(n_way, std::vector<double>(d, 0.0));
  std::vector<std::vector<double>> grad_beta(n_way, std::vector<double>(d, 0.0));
  double grad_alpha = 0.0;

  double loss_sum = 0.0;
  int correct = 0;
  const double inv_queries = 1.0 / static_cast<double>(total_queries);

  for (int y = 0; y < n_way; ++y) {
    for (std::size_t qi = 0; qi < query_z[y].size(); ++qi) {
      const std::vector<double>& q = query_z[y][qi];
      std::vector<double> scores = class_log_posteriors(model, q);
      double lse = logsumexp(scores);
      loss_sum += lse - scores[y];

      int best = 0;
      for (int c = 1; c < n_way; ++c)
        if (scores[c] > scores[best]) best = c;
      if (best == y) ++correct;

      std::vector<double> grad_q(d, 0.0);
      for (int c = 0; c < n_way; ++c) {
        double p = std::exp(scores[c] - lse);
        double g = (p - (c == y ? 1.0 : 0.0)) * inv_queries;
        if (g == 0.0) continue;
        const ClassPosterior& post = model.classes[c];
        double a = post.alpha;
        double kappa = static_cast<double>(post.kappa);
        double kr = (kappa + 1.0) / kappa;
        double score_da = static_cast<double>(d) * dgam[c];
        for (int j = 0; j < d; ++j) {
          double u = q[j] - post.mu[j];
          double b = post.beta[j];
          double nus2 = 2.0 * kr * b;
          double big_a = 1.0 + u * u / nus2;
          score_da -= std::log(big_a);
          double ds_du = -(2.0 * a + 1.0) * u / (nus2 * big_a);
          grad_q[j] += g * ds_du;
          grad_mu[c][j] -= g * ds_du;
          double ds_db = -0.5 / b + (a + 0.5) * u * u / (big_a * nus2 * b);
          grad_beta[c][j] += g * ds_db;
        }
        grad_alpha += g * score_da;
      }
      encode_backward(query_tapes[y][qi], grad_q, result.grads.encoder);
    }
  }

  // Support path: mu = mean(z), beta = beta0 + 1/2 sum (z - mu)^2, so
  // dL/dz_i = grad_mu / K + grad_beta * (z_i - mu).
  for (int c = 0; c < n_way; ++c) {
    const ClassPosterior& post = model.classes[c];
    double inv_k = 1.0 / static_cast<double>(post.kappa);
    for (std::size_t i = 0; i < support_z[c].size(); ++i) {
      std::vector<double> gz(d);
      for (int j = 0; j < d; ++j)
        gz[j] = grad_mu[c][j] * inv_k + grad_beta[c][j] * (support_z[c][i][j] - post.mu[j]);
      encode_backward(support_tapes[c][i], gz, result.grads.encoder);
    }
  }

  double grad_beta0 = 0.0;
  for (int c = 0; c < n_way; ++c)
    for (int j = 0; j < d; ++j) grad_beta0 += grad_beta[c][j];
  result.grads.raw_alpha0 = grad_alpha * sigmoid(priors.raw_alpha0);
  result.grads.raw_beta0 = grad_beta0 * sigmoid(priors.raw_beta0);

  result.loss = loss_sum * inv_queries;
  result.accuracy = static_cast<double>(correct) * inv_queries;
  return result;
}

void adamw_step(MlpEncoderParams& params, PriorParams& priors, const MetaGrads& grads,
                OptimizerState& state, const TrainConfig& config) {
  ++state.step;
  double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  // Weight decay on the weight matrices only: decaying biases is pointless
  // and decaying the two prior scalars would distort the Bayesian model.
  adam_update(params.w1, grads.encoder.w1, state.m_enc.w1, state.v_enc.w1, config.lr,
              config.weight_decay, config.beta1, config.beta2, config.eps, bc1, bc2);
  adam_update(params.b1, grads.encoder.b1, state.m_enc.b1, state.v_enc.b1, config.lr, 0.0,
              config.beta1, config.beta2, config.eps, bc1, bc2);
  adam_update(params.w2, grads.encoder.w2, state.m_enc.w2, state.v_enc.w2, config.lr,
              config.weight_decay, config.beta1, config.beta2, config.eps, bc1, bc2);
  adam_update(params.b2, grads.encoder.b2, state.m_enc.b2, state.v_enc.b2, config.lr, 0.0,
              config.beta1, config.beta2, config.eps, bc1, bc2);
  adam_update_scalar(priors.raw_alpha0, grads.raw_alpha0, state.m_ra, state.v_ra, config.lr,
                     config.beta1, config.beta2, config.eps, bc1, bc2);
  adam_update_scalar(priors.raw_beta0, grads.raw_beta0, state.m_rb, state.v_rb, config.lr,
                     config.beta1, config.beta2, config.eps, bc1, bc2);
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  int workers = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

TrainResult meta_train(const EpisodeSource& source, const BatchComposition& composition,
                       GemclModel init, const TrainConfig& config,
                       const std::function<void(const TrainLogRecord&)>& on_step) {
  if (init.identity_encoder)
    throw std::invalid_argument("meta_train: identity encoder has no trainable parameters");
  if (config.steps < 0 || config.batch_episodes < 1 || config.n_way < 2 ||
      config.k_shot < 1 || config.q_queries < 1 || !(config.lr > 0.0) ||
      config.weight_decay < 0.0)
    throw std::invalid_argument("invalid train config");
  if (composition.total() != config.batch_episodes)
    throw std::invalid_argument("batch composition does not sum to batch_episodes");

  // Flatten the composition into ordered batch slots.
  struct Slot {
    std::string language;
    int per_step = 0;  // episodes this language contributes per step
    int rank = 0;      // position within the language's per-step block
  };
  std::vector<Slot> slots;
  for (const auto& [lang, count] : composition.per_language)
    for (int r = 0; r < count; ++r) slots.push_back({lang, count, r});

  TrainResult result;
  result.model = std::move(init);
  OptimizerState opt = OptimizerState::zeros_like(result.model.encoder);

  const int batch = config.batch_episodes;
  for (int step = 0; step < config.steps; ++step) {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<EpisodeResult> episode_results(batch);
    parallel_for(batch, config.threads, [&](int s) {
      const Slot& slot = slots[s];
      std::uint64_t index =
          static_cast<std::uint64_t>(step) * slot.per_step + slot.rank;
      Episode ep = source.make_episode(slot.language, index);
      episode_results[s] = episode_loss(result.model.encoder, result.model.priors, ep);
    });

    // Order-fixed reduction over batch slots.
    MetaGrads grads;
    grads.encoder = EncoderGrads::zeros_like(result.model.encoder);
    double loss = 0.0, accuracy = 0.0;
    for (int s = 0; s < batch; ++s) {
      const EpisodeResult& er = episode_results[s];
      loss += er.loss;
      accuracy += er.accuracy;
      double scale = 1.0 / batch;
      axpy(grads.encoder.w1, er.grads.encoder.w1, scale);
      axpy(grads.encoder.b1, er.grads.encoder.b1, scale);
      axpy(grads.encoder.w2, er.grads.encoder.w2, scale);
      axpy(grads.encoder.b2, er.grads.encoder.b2, scale);
      grads.raw_alpha0 += scale * er.grads.raw_alpha0;
      grads.raw_beta0 += scale * er.grads.raw_beta0;
    }
    loss /= batch;
    accuracy /= batch;

    adamw_step(result.model.encoder, result.model.priors, grads, opt, config);

    auto t1 = std::chrono::steady_clock::now();
    TrainLogRecord rec;
    rec.step = step + 1;
    rec.loss = loss;
    rec.query_accuracy = accuracy;
    rec.wall_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
    result.log.push_back(rec);
    if (on_step) on_step(rec);
  }
  return result;
}

}  // namespace gemcl
