#include <cmath>
#include <complex>

#include <doctest.h>

#include "gemcl/fft.hpp"
#include "gemcl/mfcc.hpp"
#include "gemcl/rng.hpp"
#include "gemcl/wav.hpp"
#include "test_util.hpp"

using namespace gemcl;

namespace {

Waveform tone(double freq, int n_samples, double amp = 0.5, int rate = 16000) {
  Waveform w;
  w.sample_rate = rate;
  w.samples.resize(n_samples);
  for (int i = 0; i < n_samples; ++i)
    w.samples[i] = amp * std::sin(2.0 * 3.14159265358979323846 * freq * i / rate);
  return w;
}

}  // namespace

TEST_CASE("fft agrees with a naive DFT") {
  Rng rng(15);
  const std::size_t n = 64;
  std::vector<std::complex<double>> input(n);
  for (auto& x : input) x = {rng.normal(), 0.0};

  std::vector<std::complex<double>> fast = input;
  fft_radix2(fast);

  const double pi = 3.14159265358979323846;
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t)
      acc += input[t] * std::exp(std::complex<double>(0.0, -2.0 * pi * k * t / n));
    CHECK(std::abs(fast[k] - acc) < 1e-9);
  }

  std::vector<std::complex<double>> odd(6);
  CHECK_THROWS_AS(fft_radix2(odd), std::invalid_argument);
}

TEST_CASE("one second at 16 kHz yields exactly 98x13") {
  Waveform w = tone(440.0, 16000);
  FeatureMatrix f = mfcc(w);
  CHECK(f.rows == 98);
  CHECK(f.cols == 13);
  for (double x : f.data) CHECK(std::isfinite(x));

  SUBCASE("bit-identical across runs") {
    FeatureMatrix g = mfcc(w);
    CHECK(f.data == g.data);
  }
}

TEST_CASE("silence hits the log floor in every frame") {
  Waveform w;
  w.samples.assign(16000, 0.0);
  MfccConfig cfg;
  FeatureMatrix f = mfcc(w, cfg);
  // all mel energies clamp to the floor: c0 = sqrt(M) * log(floor), rest 0
  double c0 = std::sqrt(static_cast<double>(cfg.n_mels)) * std::log(cfg.log_floor);
  for (int t = 0; t < f.rows; ++t) {
    CHECK(f.at(t, 0) == doctest::Approx(c0).epsilon(1e-12));
    for (int c = 1; c < 13; ++c) CHECK(std::fabs(f.at(t, c)) < 1e-9);
  }
  // frames identical
  for (int t = 1; t < f.rows; ++t)
    for (int c = 0; c < 13; ++c) CHECK(f.at(t, c) == f.at(0, c));
}

TEST_CASE("scaling the waveform shifts c0 only") {
  Waveform w = tone(523.0, 16000, 0.3);
  Waveform w2 = w;
  for (double& s : w2.samples) s *= 2.0;
  MfccConfig cfg;
  FeatureMatrix a = mfcc(w, cfg);
  FeatureMatrix b = mfcc(w2, cfg);
  // power scales by 4 -> every log mel energy shifts by log 4 -> the DCT
  // moves c0 by sqrt(M) log 4 and the higher coefficients not at all
  double expected_shift = std::sqrt(static_cast<double>(cfg.n_mels)) * std::log(4.0);
  for (int t = 0; t < a.rows; ++t) {
    CHECK(std::fabs((b.at(t, 0) - a.at(t, 0)) - expected_shift) < 1e-8);
    for (int c = 1; c < 13; ++c) CHECK(std::fabs(b.at(t, c) - a.at(t, c)) < 1e-8);
  }
}

TEST_CASE("shifting the input by one frame shift moves frames by one") {
  Rng rng(8);
  Waveform w;
  w.samples.resize(16000 + 160);
  for (double& s : w.samples) s = 0.4 * rng.normal();

  Waveform shifted;
  shifted.samples.assign(w.samples.begin() + 160, w.samples.end());

  FeatureMatrix a = mfcc(w);
  FeatureMatrix b = mfcc(shifted);
  // frame t of the shifted signal covers the same samples as frame t+1 of
  // the original; pre-emphasis is in-frame so they match bit-exactly
  for (int t = 0; t < b.rows; ++t)
    for (int c = 0; c < 13; ++c) CHECK(b.at(t, c) == a.at(t + 1, c));
}

TEST_CASE("mfcc input validation") {
  Waveform wrong_rate = tone(440.0, 8000, 0.5, 8000);
  CHECK_THROWS_WITH_AS(mfcc(wrong_rate), doctest::Contains("wrong sample rate"),
                       std::invalid_argument);
  Waveform tiny = tone(440.0, 300);
  CHECK_THROWS_WITH_AS(mfcc(tiny), doctest::Contains("too-short"), std::invalid_argument);
  MfccConfig bad;
  bad.n_ceps = 50;
  CHECK_THROWS_AS(mfcc(tone(440.0, 16000), bad), std::invalid_argument);
}

TEST_CASE("feature cache round-trips the f32 quantization exactly") {
  testutil::TempDir tmp("cache");
  Waveform w = tone(700.0, 16000, 0.4);
  FeatureMatrix f = quantize_f32(mfcc(w));
  std::string path = tmp.path("feat.mfcc");
  write_feature_cache(path, f);
  FeatureMatrix g = read_feature_cache(path);
  CHECK(g.rows == f.rows);
  CHECK(g.cols == f.cols);
  CHECK(g.data == f.data);  // bit-exact after quantization

  CHECK_THROWS_AS(read_feature_cache(tmp.path("missing.mfcc")), std::runtime_error);
}

TEST_CASE("wav round trip and error paths") {
  testutil::TempDir tmp("wav");

  SUBCASE("synthetic silence round-trips with the right length") {
    Waveform w;
    w.samples.assign(16000, 0.0);
    std::string path = tmp.path("silence.wav");
    write_wav(path, w);
    Waveform r = read_audio(path);
    CHECK(r.samples.size() == 16000);
    CHECK(r.sample_rate == 16000);
    for (double s : r.samples) CHECK(s == 0.0);
  }

  SUBCASE("full-scale square wave stays within one LSB of +-1") {
    Waveform w;
    w.samples.resize(1600);
    for (std::size_t i = 0; i < w.samples.size(); ++i)
      w.samples[i] = (i / 100) % 2 == 0 ? 1.0 : -1.0;
    std::string path = tmp.path("square.wav");
    write_wav(path, w);
    Waveform r = read_audio(path);
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
      double expect = (i / 100) % 2 == 0 ? 1.0 : -1.0;
      CHECK(std::fabs(r.samples[i] - expect) <= 1.0 / 32768.0 + 1e-12);
    }
  }

  SUBCASE("stereo is rejected") {
    // hand-build a 2-channel header
    std::string path = tmp.path("stereo.wav");
    Waveform w;
    w.samples.assign(64, 0.25);
    write_wav(path, w);
    std::string bytes = testutil::read_text(path);
    bytes[22] = 2;  // channel count field
    testutil::write_text(path, bytes);
    CHECK_THROWS_WITH_AS(read_audio(path), doctest::Contains("mono required"),
                         std::runtime_error);
  }

  SUBCASE("missing and malformed files") {
    CHECK_THROWS_WITH_AS(read_audio(tmp.path("nope.wav")), doctest::Contains("missing file"),
                         std::runtime_error);
    std::string path = tmp.path("garbage.wav");
    testutil::write_text(path, "this is not audio");
    CHECK_THROWS_WITH_AS(read_audio(path), doctest::Contains("malformed header"),
                         std::runtime_error);
  }

  SUBCASE("non-16k rate errors unless resampling is requested") {
    Waveform w = tone(440.0, 8000, 0.5, 8000);
    std::string path = tmp.path("8k.wav");
    write_wav(path, w);
    CHECK_THROWS_WITH_AS(read_audio(path), doctest::Contains("unsupported sample rate"),
                         std::runtime_error);
    Waveform r = read_audio(path, /*allow_resample=*/true);
    CHECK(r.sample_rate == 16000);
    CHECK(r.samples.size() == 16000);
  }
}
