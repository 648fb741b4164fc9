#include "gemcl/encoder.hpp"

#include <cmath>
#include <stdexcept>

#include "gemcl/rng.hpp"

namespace gemcl {

std::vector<double> pool(const FeatureMatrix& features) {
  if (features.rows < 1 || features.cols < 1)
    throw std::invalid_argument("pool: empty feature matrix");
  const int t_len = features.rows;
  const int c_len = features.cols;
  std::vector<double> out(2 * c_len, 0.0);
  for (int c = 0; c < c_len; ++c) {
    double sum = 0.0;
    for (int t = 0; t < t_len; ++t) sum += features.at(t, c);
    double mean = sum / t_len;
    double ss = 0.0;
    for (int t = 0; t < t_len; ++t) {
      double dev = features.at(t, c) - mean;
      ss += dev * dev;
    }
    out[c] = mean;
    out[c_len + c] = std::sqrt(ss / t_len);
  }
  return out;
}

MlpEncoderParams init_encoder(std::uint64_t seed, int hidden, int out_dim, int n_coeffs) {
  if (hidden < 1 || out_dim < 1 || n_coeffs < 1)
    throw std::invalid_argument("init_encoder: dimensions must be positive");
  MlpEncoderParams p;
  p.in_dim = 2 * n_coeffs;
  p.hidden = hidden;
  p.out_dim = out_dim;
  Rng rng(mix_seed(seed, 0x656e636f64657221ULL));
  double s1 = 1.0 / std::sqrt(static_cast<double>(p.in_dim));
  double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  p.w1.resize(static_cast<std::size_t>(hidden) * p.in_dim);
  for (auto& w : p.w1) w = s1 * rng.normal();
  p.b1.assign(hidden, 0.0);
  p.w2.resize(static_cast<std::size_t>(out_dim) * hidden);
  for (auto& w : p.w2) w = s2 * rng.normal();
  p.b2.assign(out_dim, 0.0);
  return p;
}

std::vector<double> encode(const MlpEncoderParams& params, const FeatureMatrix& features,
                           EncoderTape* tape) {
  if (2 * features.cols != params.in_dim) throw std::invalid_argument("shape mismatch");
  std::vector<double> pooled = pool(features);

  std::vector<double> hidden(params.hidden);
  for (int h = 0; h < params.hidden; ++h) {
    double acc = params.b1[h];
    const double* row = &params.w1[static_cast<std::size_t>(h) * params.in_dim];
    for (int i = 0; i < params.in_dim; ++i) acc += row[i] * pooled[i];
    hidden[h] = std::tanh(acc);
  }

  std::vector<double> out(params.out_dim);
  for (int o = 0; o < params.out_dim; ++o) {
    double acc = params.b2[o];
    const double* row = &params.w2[static_cast<std::size_t>(o) * params.hidden];
    for (int h = 0; h < params.hidden; ++h) acc += row[h] * hidden[h];
    out[o] = acc;
  }

  if (tape) {
    tape->pooled = std::move(pooled);
    tape->hidden = std::move(hidden);
    tape->params = &params;
    tape->consumed = false;
  }
  return out;
}

std::vector<double> encode_backward(EncoderTape& tape, const std::vector<double>& grad_embedding,
                                    EncoderGrads& sink) {
  if (tape.consumed) throw std::logic_error("tape consumed");
  if (!tape.params) throw std::logic_error("encode_backward: tape without forward pass");
  const MlpEncoderParams& p = *tape.params;
  if (static_cast<int>(grad_embedding.size()) != p.out_dim)
    throw std::invalid_argument("shape mismatch");
  tape.consumed = true;

  // out = w2 * hidden + b2
  std::vector<double> grad_hidden(p.hidden, 0.0);
  for (int o = 0; o < p.out_dim; ++o) {
    double g = grad_embedding[o];
    sink.b2[o] += g;
    double* gw_row = &sink.w2[static_cast<std::size_t>(o) * p.hidden];
    const double* w_row = &p.w2[static_cast<std::size_t>(o) * p.hidden];
    for (int h = 0; h < p.hidden; ++h) {
      gw_row[h] += g * tape.hidden[h];
      grad_hidden[h] += g * w_row[h];
    }
  }

  // hidden = tanh(w1 * pooled + b1)
  std::vector<double> grad_pooled(p.in_dim, 0.0);
  for (int h = 0; h < p.hidden; ++h) {
    double gpre = grad_hidden[h] * (1.0 - tape.hidden[h] * tape.hidden[h]);
    sink.b1[h] += gpre;
    double* gw_row = &sink.w1[static_cast<std::size_t>(h) * p.in_dim];
    const double* w_row = &p.w1[static_cast<std::size_t>(h) * p.in_dim];
    for (int i = 0; i < p.in_dim; ++i) {
      gw_row[i] += gpre * tape.pooled[i];
      grad_pooled[i] += gpre * w_row[i];
    }
  }
  return grad_pooled;
}

std::vector<double> encode_identity(const FeatureMatrix& features) {
  if (features.rows != 1)
    throw std::invalid_argument("identity encoder expects a single-frame matrix");
  return std::vector<double>(features.data.begin(), features.data.end());
}

}  // namespace gemcl
