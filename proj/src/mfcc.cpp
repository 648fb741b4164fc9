#include "gemcl/mfcc.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "gemcl/fft.hpp"

namespace gemcl {

namespace {

constexpr double kPi = 3.14159265358979323846;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void validate(const MfccConfig& c) {
  if (c.frame_len <= c.frame_shift)
    throw std::invalid_argument("mfcc config: frame_len must exceed frame_shift");
  if (c.n_ceps > c.n_mels)
    throw std::invalid_argument("mfcc config: n_ceps must not exceed n_mels");
  if (!(c.fmin >= 0.0) || !(c.fmax > c.fmin))
    throw std::invalid_argument("mfcc config: need 0 <= fmin < fmax");
  if (!(c.log_floor > 0.0))
    throw std::invalid_argument("mfcc config: log_floor must be positive");
}

// Triangular filters, linear in Hz between mel-spaced corner frequencies.
std::vector<std::vector<double>> mel_filterbank(const MfccConfig& c, int sample_rate,
                                                std::size_t fft_size) {
  const std::size_t n_bins = fft_size / 2 + 1;
  double mel_lo = hz_to_mel(c.fmin);
  double mel_hi = hz_to_mel(c.fmax);
  std::vector<double> corners(c.n_mels + 2);
  for (int i = 0; i < c.n_mels + 2; ++i)
    corners[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (c.n_mels + 1));

  std::vector<std::vector<double>> bank(c.n_mels, std::vector<double>(n_bins, 0.0));
  for (int m = 0; m < c.n_mels; ++m) {
    double lo = corners[m], mid = corners[m + 1], hi = corners[m + 2];
    for (std::size_t k = 0; k < n_bins; ++k) {
      double f = static_cast<double>(k) * sample_rate / static_cast<double>(fft_size);
      double w = 0.0;
      if (f > lo && f < mid)
        w = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi)
        w = (hi - f) / (hi - mid);
      bank[m][k] = w;
    }
  }
  return bank;
}

}  // namespace

FeatureMatrix mfcc(const Waveform& wave, const MfccConfig& config) {
  validate(config);
  if (wave.sample_rate != 16000) throw std::invalid_argument("wrong sample rate");
  const std::size_t len = wave.samples.size();
  const std::size_t frame_len = static_cast<std::size_t>(config.frame_len);
  if (len < frame_len) throw std::invalid_argument("too-short waveform");

  const int n_frames = 1 + static_cast<int>((len - frame_len) / config.frame_shift);
  const std::size_t fft_size = next_pow2(frame_len);
  const std::size_t n_bins = fft_size / 2 + 1;

  std::vector<double> window(frame_len);
  for (std::size_t i = 0; i < frame_len; ++i)
    window[i] = 0.54 - 0.46 * std::cos(2.0 * kPi * i / (frame_len - 1));

  const auto bank = mel_filterbank(config, wave.sample_rate, fft_size);

  // Orthonormal DCT-II rows for the kept coefficients.
  std::vector<double> dct(static_cast<std::size_t>(config.n_ceps) * config.n_mels);
  for (int k = 0; k < config.n_ceps; ++k) {
    double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / config.n_mels);
    for (int m = 0; m < config.n_mels; ++m)
      dct[static_cast<std::size_t>(k) * config.n_mels + m] =
          scale * std::cos(kPi * (m + 0.5) * k / config.n_mels);
  }

  FeatureMatrix out;
  out.rows = n_frames;
  out.cols = config.n_ceps;
  out.data.resize(static_cast<std::size_t>(n_frames) * config.n_ceps);

  std::vector<std::complex<double>> buf(fft_size);
  std::vector<double> log_mel(config.n_mels);
  for (int t = 0; t < n_frames; ++t) {
    const double* frame = &wave.samples[static_cast<std::size_t>(t) * config.frame_shift];
    // In-frame pre-emphasis, so overlapping frames of a shifted signal are
    // reproduced exactly.
    buf[0] = window[0] * (frame[0] - config.preemphasis * frame[0]);
    for (std::size_t i = 1; i < frame_len; ++i)
      buf[i] = window[i] * (frame[i] - config.preemphasis * frame[i - 1]);
    for (std::size_t i = frame_len; i < fft_size; ++i) buf[i] = 0.0;

    fft_radix2(buf);

    for (int m = 0; m < config.n_mels; ++m) {
      double energy = 0.0;
      const auto& filt = bank[m];
      for (std::size_t k = 0; k < n_bins; ++k) {
        if (filt[k] == 0.0) continue;
        double re = buf[k].real(), im = buf[k].imag();
        energy += filt[k] * (re * re + im * im);
      }
      log_mel[m] = std::log(energy > config.log_floor ? energy : config.log_floor);
    }

    for (int k = 0; k < config.n_ceps; ++k) {
      double acc = 0.0;
      const double* row = &dct[static_cast<std::size_t>(k) * config.n_mels];
      for (int m = 0; m < config.n_mels; ++m) acc += row[m] * log_mel[m];
      out.at(t, k) = acc;
    }
  }
  return out;
}

FeatureMatrix quantize_f32(FeatureMatrix features) {
  for (double& x : features.data) x = static_cast<double>(static_cast<float>(x));
  return features;
}

void write_feature_cache(const std::string& path, const FeatureMatrix& features) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open feature cache for writing: " + path);
  std::uint32_t t = static_cast<std::uint32_t>(features.rows);
  std::uint32_t c = static_cast<std::uint32_t>(features.cols);
  out.write(reinterpret_cast<const char*>(&t), 4);
  out.write(reinterpret_cast<const char*>(&c), 4);
  for (double x : features.data) {
    float f = static_cast<float>(x);
    out.write(reinterpret_cast<const char*>(&f), 4);
  }
  if (!out) throw std::runtime_error("failed writing feature cache: " + path);
}

FeatureMatrix read_feature_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open feature cache: " + path);
  std::uint32_t t = 0, c = 0;
  in.read(reinterpret_cast<char*>(&t), 4);
  in.read(reinterpret_cast<char*>(&c), 4);
  if (!in || t == 0 || c == 0) throw std::runtime_error("malformed feature cache: " + path);
  FeatureMatrix out;
  out.rows = static_cast<int>(t);
  out.cols = static_cast<int>(c);
  out.data.resize(static_cast<std::size_t>(t) * c);
  for (double& x : out.data) {
    float f = 0.0f;
    in.read(reinterpret_cast<char*>(&f), 4);
    x = static_cast<double>(f);
  }
  if (!in) throw std::runtime_error("truncated feature cache: " + path);
  return out;
}

}  // namespace gemcl
