#pragma once

// Embedding function f: feature matrix -> R^d. The production encoder pools
// each coefficient over time (mean and population std) and runs the pooled
// vector through a one-hidden-layer tanh MLP. Forward passes record a tape
// holding the activations needed for an exact reverse pass. An identity
// variant passes a single-frame matrix through untouched, for tests that
// want to drive the Bayes head with known embeddings.

#include <cstdint>
#include <string>
#include <vector>

namespace gemcl {

struct FeatureMatrix {
  int rows = 0;  // T frames
  int cols = 0;  // C coefficients
  std::vector<double> data;  // row-major
  std::string sample_id;

  double& at(int t, int c) { return data[static_cast<std::size_t>(t) * cols + c]; }
  double at(int t, int c) const { return data[static_cast<std::size_t>(t) * cols + c]; }
};

// Concatenated per-coefficient mean and population std (divisor T) over
// frames. Order-free in the frames; a single frame yields zero std.
std::vector<double> pool(const FeatureMatrix& features);

struct MlpEncoderParams {
  int in_dim = 0;   // 2C pooled inputs
  int hidden = 0;   // H
  int out_dim = 0;  // d
  std::vector<double> w1;  // hidden x in_dim, row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // out_dim x hidden, row-major
  std::vector<double> b2;  // out_dim

  std::size_t n_params() const {
    return w1.size() + b1.size() + w2.size() + b2.size();
  }
};

// Gaussian weights scaled by 1/sqrt(fan_in), zero biases. in_dim = 2C.
MlpEncoderParams init_encoder(std::uint64_t seed, int hidden, int out_dim, int n_coeffs);

struct EncoderTape {
  std::vector<double> pooled;
  std::vector<double> hidden;  // tanh activations
  const MlpEncoderParams* params = nullptr;
  bool consumed = false;
};

// Embedding of one feature matrix. If tape is non-null it is filled with
// the activations for a later backward call; params must stay alive and
// unmodified until then.
std::vector<double> encode(const MlpEncoderParams& params, const FeatureMatrix& features,
                           EncoderTape* tape = nullptr);

struct EncoderGrads {
  std::vector<double> w1, b1, w2, b2;

  static EncoderGrads zeros_like(const MlpEncoderParams& p) {
    EncoderGrads g;
    g.w1.assign(p.w1.size(), 0.0);
    g.b1.assign(p.b1.size(), 0.0);
    g.w2.assign(p.w2.size(), 0.0);
    g.b2.assign(p.b2.size(), 0.0);
    return g;
  }
};

// Accumulates d<grad_embedding, embedding>/dparams into sink and returns the
// gradient with respect to the pooled input. Each tape may be consumed once.
std::vector<double> encode_backward(EncoderTape& tape, const std::vector<double>& grad_embedding,
                                    EncoderGrads& sink);

// Pass-through encoder for single-frame matrices that already hold embeddings.
std::vector<double> encode_identity(const FeatureMatrix& features);

}  // namespace gemcl
