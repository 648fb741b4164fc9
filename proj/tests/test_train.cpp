#include <cmath>
#include <functional>

#include <doctest.h>

#include "gemcl/math_util.hpp"
#include "gemcl/rng.hpp"
#include "gemcl/synthetic.hpp"
#include "gemcl/train.hpp"
#include "test_util.hpp"

using namespace gemcl;
using testutil::random_features;
using testutil::single_frame;

namespace {

Episode make_random_episode(Rng& rng, int n_way, int k_shot, int q_queries, int cols,
                            double scale = 1.0) {
  Episode ep;
  for (int c = 0; c < n_way; ++c) {
    EpisodeClass cls;
    cls.word = "w" + std::to_string(c);
    for (int i = 0; i < k_shot; ++i) cls.support.push_back(random_features(rng, 3, cols, scale));
    for (int i = 0; i < q_queries; ++i) cls.query.push_back(random_features(rng, 3, cols, scale));
    ep.classes.push_back(std::move(cls));
  }
  return ep;
}

double loss_only(const MlpEncoderParams& params, const PriorParams& priors,
                 const Episode& ep) {
  return episode_loss(params, priors, ep).loss;
}

}  // namespace

TEST_CASE("episode loss is exactly log N when all classes coincide") {
  MlpEncoderParams params = init_encoder(4, 6, 4, 3);
  PriorParams priors = PriorParams::from_values(1.0, 1.0);
  Rng rng(5);
  FeatureMatrix shared_support = random_features(rng, 2, 3);
  FeatureMatrix shared_query = random_features(rng, 2, 3);
  Episode ep;
  for (int c = 0; c < 4; ++c) {
    EpisodeClass cls;
    cls.support = {shared_support, shared_support};
    cls.query = {shared_query};
    ep.classes.push_back(std::move(cls));
  }
  EpisodeResult r = episode_loss(params, priors, ep);
  CHECK(r.loss == doctest::Approx(std::log(4.0)).epsilon(1e-14));
}

TEST_CASE("separable episodes score below log N") {
  PriorParams priors = PriorParams::from_values(1.0, 1.0);
  MlpEncoderParams params = init_encoder(8, 8, 4, 4);
  Rng rng(9);
  Episode ep;
  for (int c = 0; c < 3; ++c) {
    EpisodeClass cls;
    for (int i = 0; i < 4; ++i) {
      FeatureMatrix f = random_features(rng, 2, 4, 0.05);
      for (auto& x : f.data) x += 3.0 * c;  // tight, well separated clusters
      (i < 2 ? cls.support : cls.query).push_back(f);
    }
    ep.classes.push_back(std::move(cls));
  }
  EpisodeResult r = episode_loss(params, priors, ep);
  CHECK(r.loss < std::log(3.0));
  CHECK(r.accuracy == 1.0);
}

TEST_CASE("episode loss rejects degenerate episodes") {
  MlpEncoderParams params = init_encoder(4, 4, 2, 2);
  PriorParams priors;
  Rng rng(3);
  Episode one = make_random_episode(rng, 1, 2, 1, 2);
  CHECK_THROWS_WITH_AS(episode_loss(params, priors, one), doctest::Contains("degenerate"),
                       std::invalid_argument);
}

TEST_CASE("episode gradients match central finite differences") {
  // 3-way-2-shot, d=4, H=8 instances; max relative error < 1e-4
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Rng rng(mix_seed(1234, seed));
    MlpEncoderParams params = init_encoder(seed, 8, 4, 4);
    PriorParams priors = PriorParams::from_values(0.9 + 0.2 * seed, 1.1);
    Episode ep = make_random_episode(rng, 3, 2, 2, 4, 1.0);

    EpisodeResult r = episode_loss(params, priors, ep);

    double max_err = 0.0;
    auto fd_tensor = [&](std::vector<double>& p, const std::vector<double>& g) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        double saved = p[i];
        p[i] = saved + 1e-5;
        double up = loss_only(params, priors, ep);
        p[i] = saved - 1e-5;
        double down = loss_only(params, priors, ep);
        p[i] = saved;
        double fd = (up - down) / 2e-5;
        max_err = std::max(max_err, testutil::rel_err(g[i], fd, 1e-6));
      }
    };
    fd_tensor(params.w1, r.grads.encoder.w1);
    fd_tensor(params.b1, r.grads.encoder.b1);
    fd_tensor(params.w2, r.grads.encoder.w2);
    fd_tensor(params.b2, r.grads.encoder.b2);

    for (double* raw : {&priors.raw_alpha0, &priors.raw_beta0}) {
      double saved = *raw;
      *raw = saved + 1e-5;
      double up = loss_only(params, priors, ep);
      *raw = saved - 1e-5;
      double down = loss_only(params, priors, ep);
      *raw = saved;
      double fd = (up - down) / 2e-5;
      double g = raw == &priors.raw_alpha0 ? r.grads.raw_alpha0 : r.grads.raw_beta0;
      max_err = std::max(max_err, testutil::rel_err(g, fd, 1e-6));
    }
    CHECK(max_err < 1e-4);
  }
}

TEST_CASE("gradients stay exact when classes have different support counts") {
  Rng rng(61);
  MlpEncoderParams params = init_encoder(8, 6, 3, 3);
  PriorParams priors = PriorParams::from_values(1.1, 0.8);
  Episode ep;
  for (int c = 0; c < 3; ++c) {
    EpisodeClass cls;
    for (int i = 0; i < c + 1; ++i) cls.support.push_back(random_features(rng, 2, 3));
    cls.query.push_back(random_features(rng, 2, 3));
    ep.classes.push_back(std::move(cls));
  }
  EpisodeResult r = episode_loss(params, priors, ep);
  double max_err = 0.0;
  auto fd = [&](double* p, double g) {
    double saved = *p;
    *p = saved + 1e-5;
    double up = loss_only(params, priors, ep);
    *p = saved - 1e-5;
    double down = loss_only(params, priors, ep);
    *p = saved;
    max_err = std::max(max_err, testutil::rel_err(g, (up - down) / 2e-5, 1e-6));
  };
  for (std::size_t i = 0; i < params.w1.size(); ++i) fd(&params.w1[i], r.grads.encoder.w1[i]);
  for (std::size_t i = 0; i < params.w2.size(); ++i) fd(&params.w2[i], r.grads.encoder.w2[i]);
  fd(&priors.raw_alpha0, r.grads.raw_alpha0);
  fd(&priors.raw_beta0, r.grads.raw_beta0);
  CHECK(max_err < 1e-4);
}

TEST_CASE("loss at initialization on exchangeable data is close to log N") {
  // Low-signal noise keeps the predictive nearly uniform, so the mean loss
  // over episodes should sit within 3 standard errors of log N.
  MlpEncoderParams params = init_encoder(21, 8, 6, 4);
  PriorParams priors = PriorParams::from_values(1.0, 1.0);
  const int episodes = 50;
  std::vector<double> losses;
  Rng rng(77);
  for (int e = 0; e < episodes; ++e)
    losses.push_back(episode_loss(params, priors, make_random_episode(rng, 5, 3, 3, 4, 0.05)).loss);
  double mean = 0.0;
  for (double l : losses) mean += l;
  mean /= episodes;
  double var = 0.0;
  for (double l : losses) var += (l - mean) * (l - mean);
  double se = std::sqrt(var / (episodes - 1)) / std::sqrt(static_cast<double>(episodes));
  CHECK(std::fabs(mean - std::log(5.0)) < 3.0 * se + 1e-9);
}

TEST_CASE("adamw_step implements decoupled decay and bias correction") {
  TrainConfig cfg;
  cfg.lr = 0.1;
  cfg.weight_decay = 0.5;
  MlpEncoderParams params = init_encoder(2, 4, 3, 2);
  PriorParams priors = PriorParams::from_values(1.0, 1.0);
  OptimizerState state = OptimizerState::zeros_like(params);

  SUBCASE("zero grads, zero decay: parameters unchanged") {
    TrainConfig nodecay = cfg;
    nodecay.weight_decay = 0.0;
    MlpEncoderParams before = params;
    PriorParams priors_before = priors;
    MetaGrads zero;
    zero.encoder = EncoderGrads::zeros_like(params);
    adamw_step(params, priors, zero, state, nodecay);
    CHECK(params.w1 == before.w1);
    CHECK(params.b1 == before.b1);
    CHECK(priors.raw_alpha0 == priors_before.raw_alpha0);
    CHECK(state.step == 1);
  }

  SUBCASE("zero grads with decay shrink weights, not biases or priors") {
    params.b1[0] = 0.7;
    MlpEncoderParams before = params;
    double ra_before = priors.raw_alpha0;
    MetaGrads zero;
    zero.encoder = EncoderGrads::zeros_like(params);
    adamw_step(params, priors, zero, state, cfg);
    for (std::size_t i = 0; i < params.w1.size(); ++i)
      CHECK(params.w1[i] == doctest::Approx(before.w1[i] * (1.0 - 0.1 * 0.5)).epsilon(1e-15));
    CHECK(params.b1[0] == 0.7);
    CHECK(priors.raw_alpha0 == ra_before);
  }

  SUBCASE("first step moves by lr * g/(|g|+eps) modulo decay") {
    TrainConfig nodecay = cfg;
    nodecay.weight_decay = 0.0;
    MetaGrads grads;
    grads.encoder = EncoderGrads::zeros_like(params);
    grads.encoder.w1[0] = 0.25;
    double before = params.w1[0];
    adamw_step(params, priors, grads, state, nodecay);
    double expected = before - nodecay.lr * 0.25 / (std::sqrt(0.25 * 0.25) + nodecay.eps);
    CHECK(params.w1[0] == doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("non-finite gradients are rejected") {
    MetaGrads grads;
    grads.encoder = EncoderGrads::zeros_like(params);
    grads.encoder.w2[1] = std::nan("");
    CHECK_THROWS_WITH_AS(adamw_step(params, priors, grads, state, cfg),
                         doctest::Contains("diverged"), std::runtime_error);
  }
}

TEST_CASE("meta_train honors steps=0 and is deterministic") {
  SyntheticTaskConfig scfg;
  scfg.n_way = 3;
  scfg.k_shot = 2;
  scfg.q_queries = 2;
  SyntheticTaskGen gen(scfg, 99);

  TrainConfig cfg;
  cfg.steps = 0;
  cfg.batch_episodes = 4;
  cfg.n_way = 3;
  cfg.k_shot = 2;
  cfg.q_queries = 2;
  cfg.lr = 1e-3;

  GemclModel init;
  init.encoder = init_encoder(7, 8, 4, scfg.input_dim);
  init.priors = PriorParams::from_values(1.0, 1.0);

  BatchComposition comp{{{"synthetic", 4}}};

  TrainResult zero = meta_train(gen, comp, init, cfg);
  CHECK(zero.log.empty());
  CHECK(zero.model.encoder.w1 == init.encoder.w1);
  CHECK(zero.model.priors.raw_alpha0 == init.priors.raw_alpha0);

  cfg.steps = 5;
  TrainResult a = meta_train(gen, comp, init, cfg);
  TrainResult b = meta_train(gen, comp, init, cfg);
  REQUIRE(a.log.size() == 5);
  for (int s = 0; s < 5; ++s) {
    CHECK(a.log[s].loss == b.log[s].loss);
    CHECK(a.log[s].query_accuracy == b.log[s].query_accuracy);
  }
  CHECK(a.model.encoder.w1 == b.model.encoder.w1);
  CHECK(a.model.encoder.w2 == b.model.encoder.w2);
  CHECK(a.model.priors.raw_alpha0 == b.model.priors.raw_alpha0);
  CHECK(a.model.priors.raw_beta0 == b.model.priors.raw_beta0);

  SUBCASE("thread count does not change the trajectory") {
    TrainConfig threaded = cfg;
    threaded.threads = 2;
    TrainResult c = meta_train(gen, comp, init, threaded);
    CHECK(c.model.encoder.w1 == a.model.encoder.w1);
    CHECK(c.log.back().loss == a.log.back().loss);
  }

  SUBCASE("priors stay positive throughout training") {
    TrainConfig aggressive = cfg;
    aggressive.steps = 25;
    aggressive.lr = 0.5;  // large steps push raw values around
    TrainResult r = meta_train(gen, comp, init, aggressive);
    CHECK(r.model.priors.alpha0() > 0.0);
    CHECK(r.model.priors.beta0() > 0.0);
  }

  SUBCASE("composition must sum to batch_episodes") {
    BatchComposition bad{{{"synthetic", 3}}};
    CHECK_THROWS_AS(meta_train(gen, bad, init, cfg), std::invalid_argument);
  }
}

TEST_CASE("digamma matches a finite-difference of lgamma") {
  for (double x : {0.3, 0.9, 1.5, 3.7, 12.0, 150.0}) {
    double h = 1e-6 * std::max(1.0, x);
    double fd = (std::lgamma(x + h) - std::lgamma(x - h)) / (2.0 * h);
    CHECK(digamma(x) == doctest::Approx(fd).epsilon(1e-6));
  }
}
