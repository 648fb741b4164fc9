#pragma once

// MFCC front-end for 16 kHz waveforms. Pipeline per frame: slice, in-frame
// pre-emphasis, Hamming window, zero-padded power FFT, HTK-mel triangular
// filterbank, floored natural log, orthonormal DCT-II, first n_ceps
// coefficients (c0 included).

#include <string>
#include <vector>

#include "gemcl/encoder.hpp"

namespace gemcl {

struct Waveform {
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate = 16000;
};

struct MfccConfig {
  int frame_len = 400;    // 25 ms at 16 kHz
  int frame_shift = 160;  // 10 ms
  int n_mels = 40;
  int n_ceps = 13;  // c0..c12
  double preemphasis = 0.97;
  double fmin = 20.0;
  double fmax = 7600.0;
  double log_floor = 1e-10;
};

// T = 1 + floor((len - frame_len) / frame_shift) frames of n_ceps
// coefficients. Deterministic; all outputs finite for finite input.
FeatureMatrix mfcc(const Waveform& wave, const MfccConfig& config = {});

// Rounds every entry to 32-bit float precision. Applied when features enter
// the training/eval path so cached and freshly computed features agree
// bit-for-bit.
FeatureMatrix quantize_f32(FeatureMatrix features);

// Cache file: u32 T, u32 C header, then T*C little-endian float32, row-major.
void write_feature_cache(const std::string& path, const FeatureMatrix& features);
FeatureMatrix read_feature_cache(const std::string& path);

}  // namespace gemcl
